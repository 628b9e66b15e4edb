"""Windowed presentations of large-scale structures.

Every presentation lives on a finite window of lattice points (or bare indices for the
MaxULF and Finite kinds). Distances are lattice norms scaled by ``params['step']``; Group
presentations use the word length of the symmetric generating set. A set is bounded when
its diameter is at most the cutoff (its size for MaxULF, its distance from the excluded set
for LSXA), and every "for all scales" quantifier runs over the presentation's ladder.
"""

import itertools
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from config import Config
from .core_sets import (
    SubsetMask,
    UnionFind,
    array_to_mask,
    classes_of,
    count,
    full_mask,
    mask_of,
    mask_to_array,
    point_stars,
    points_of,
    star_family,
    star_set,
    u_components,
)
from .errors import InputError, PreconditionError, WindowMismatchError
from .models import Family, FiniteTopology, ScaleLadder, SpacePresentation, Window

logger = logging.getLogger(__name__)

TAU = Config.FLOAT_TOL
METRIC_KINDS = ('Metric', 'C0', 'Group', 'LSXA', 'HalfPlaneNonNormal')
DILATION_KINDS = ('Metric', 'HalfPlaneNonNormal')
DEFAULT_LADDERS = {'LSXA': [0.5], 'MaxULF': [2.0]}
CHUNK_CELLS = 1 << 22
BOUNDED_CACHE = 1 << 16


def generator_preset(name: str, dim: int) -> List[Tuple[int, ...]]:
    """Symmetric generating sets of Z^dim: 'standard' (unit vectors) or 'king' ({-1,0,1}^dim)"""
    if name == 'standard':
        return [tuple(sign if i == k else 0 for i in range(dim)) for k in range(dim) for sign in (1, -1)]
    if name == 'king':
        return [v for v in itertools.product((-1, 0, 1), repeat=dim) if any(v)]
    raise InputError(f"Unknown generator preset: {name}", {'known': ['standard', 'king']})


def _word_table(generators: np.ndarray, depth: int) -> Tuple[np.ndarray, int]:
    """Word lengths of all elements of length <= depth, in a box centred at the identity"""
    dim = generators.shape[1]
    reach = depth * max(int(np.abs(generators).max()), 1)
    table = np.full((2 * reach + 1,) * dim, np.inf)
    frontier = np.zeros((1, dim), dtype=np.int64)
    table[tuple(frontier[0] + reach)] = 0
    for length in range(1, depth + 1):
        candidates = np.unique((frontier[:, None, :] + generators[None, :, :]).reshape(-1, dim), axis=0)
        fresh = np.isinf(table[tuple((candidates + reach).T)])
        frontier = candidates[fresh]
        if not len(frontier):
            break
        table[tuple((frontier + reach).T)] = length
    return table, reach


class _Lattice:
    """Coordinates, index grid and distance kernel of a labelled window"""

    def __init__(self, p: SpacePresentation):
        self.coords = np.asarray(p.window.labels, dtype=np.int64).reshape(p.size, -1)
        self.n, self.dim = self.coords.shape
        self.lo = self.coords.min(axis=0)
        self.shape = self.coords.max(axis=0) - self.lo + 1
        self.grid = np.full(tuple(self.shape), -1, dtype=np.int64)
        self.grid[tuple((self.coords - self.lo).T)] = np.arange(self.n)
        self.step = float(p.params.get('step', 1.0))
        self.norm = 'word' if p.kind == 'Group' else p.params.get('norm', 'l1')
        if self.norm not in ('l1', 'linf', 'l2', 'word'):
            raise InputError(f"Unknown norm: {self.norm}")
        self._offsets: Dict[float, np.ndarray] = {}
        self._neighbors: Dict[float, np.ndarray] = {}
        self.table = None
        self.reach = 0
        if self.norm == 'word':
            self.generators = np.asarray(p.params['generators'], dtype=np.int64)
            radius = p.params.get('radius')
            if radius is None:
                radius = self._radius_covering_window()
            self.table, self.reach = _word_table(self.generators, 2 * int(radius))

    def _radius_covering_window(self) -> int:
        depth = 1
        while True:
            table, reach = _word_table(self.generators, depth)
            rel = self.coords + reach
            inside = np.all((rel >= 0) & (rel < table.shape[0]), axis=1)
            if inside.all() and np.isfinite(table[tuple(rel.T)]).all():
                return int(table[tuple(rel.T)].max())
            depth *= 2

    def lookup(self, points: np.ndarray) -> np.ndarray:
        """Window index of each lattice point, -1 outside the window"""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        rel = points - self.lo
        inside = np.all((rel >= 0) & (rel < self.shape), axis=1)
        result = np.full(len(points), -1, dtype=np.int64)
        result[inside] = self.grid[tuple(rel[inside].T)]
        return result

    def lengths(self, diffs: np.ndarray) -> np.ndarray:
        if self.norm == 'l1':
            return np.abs(diffs).sum(axis=-1) * self.step
        if self.norm == 'linf':
            return np.abs(diffs).max(axis=-1) * self.step
        if self.norm == 'l2':
            return np.sqrt((diffs.astype(float) ** 2).sum(axis=-1)) * self.step
        rel = diffs + self.reach
        inside = np.all((rel >= 0) & (rel < self.table.shape[0]), axis=-1)
        result = np.full(diffs.shape[:-1], np.inf)
        result[inside] = self.table[tuple(np.moveaxis(rel[inside], -1, 0))]
        return result

    def offsets(self, radius: float) -> np.ndarray:
        if radius not in self._offsets:
            if self.norm == 'word':
                candidates = np.argwhere(self.table <= radius + TAU) - self.reach
            else:
                k = int(np.floor(radius / self.step + TAU))
                axes = [np.arange(-k, k + 1)] * self.dim
                candidates = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, self.dim)
                candidates = candidates[self.lengths(candidates) <= radius + TAU]
            self._offsets[radius] = candidates
        return self._offsets[radius]

    def neighbors(self, radius: float) -> np.ndarray:
        """Row j holds the window index of x + offsets[j] for every point x"""
        if radius not in self._neighbors:
            offsets = self.offsets(radius)
            shifted = self.coords[None, :, :] + offsets[:, None, :]
            self._neighbors[radius] = self.lookup(shifted.reshape(-1, self.dim)).reshape(len(offsets), self.n)
        return self._neighbors[radius]

    def dilate(self, flags: np.ndarray, radius: float) -> np.ndarray:
        """Window points within radius of a flagged point"""
        out = flags.copy()
        for row in self.neighbors(radius):
            valid = row >= 0
            out[valid] |= flags[row[valid]]
        return out

    def distances_from(self, index: int) -> np.ndarray:
        return self.lengths(self.coords - self.coords[index])

    def pairwise(self, first: Sequence[int], second: Sequence[int]) -> np.ndarray:
        return self.lengths(self.coords[list(first)][:, None, :] - self.coords[list(second)][None, :, :])

    def dist_to_points(self, targets: Sequence[int]) -> np.ndarray:
        targets = np.asarray(targets, dtype=np.int64)
        if not len(targets):
            return np.full(self.n, np.inf)
        if self.dim == 1 and self.norm != 'word':
            line = np.sort(self.coords[targets, 0])
            pos = np.clip(np.searchsorted(line, self.coords[:, 0]), 1, len(line)) - 1
            below = np.abs(self.coords[:, 0] - line[pos])
            above = np.abs(self.coords[:, 0] - line[np.minimum(pos + 1, len(line) - 1)])
            return np.minimum(below, above) * self.step
        chunk = max(1, CHUNK_CELLS // (self.n * self.dim))
        result = np.full(self.n, np.inf)
        for start in range(0, len(targets), chunk):
            block = self.coords[targets[start:start + chunk]]
            result = np.minimum(result, self.lengths(self.coords[:, None, :] - block[None, :, :]).min(axis=1))
        return result


def _lattice(p: SpacePresentation) -> _Lattice:
    if not p.has_metric:
        raise PreconditionError(f"{p.kind} presentations carry no metric", {'kind': p.kind})
    if 'lattice' not in p._cache:
        p._cache['lattice'] = _Lattice(p)
    return p._cache['lattice']


def _check(p: SpacePresentation, mask: SubsetMask, what: str = 'subset') -> SubsetMask:
    return p.window.check_mask(mask, what)


# Window builders

def box_window(shape: Sequence[int], origin: Optional[Sequence[int]] = None) -> Window:
    origin = list(origin) if origin is not None else [0] * len(shape)
    ranges = [range(o, o + s) for o, s in zip(origin, shape)]
    labels = [tuple(point) for point in itertools.product(*ranges)]
    return Window(size=len(labels), labels=labels, shape={'shape': list(shape), 'origin': origin})


def wedge_window(y_max: int) -> Window:
    labels = [(x, y) for y in range(1, y_max + 1) for x in range(-y, y + 1)]
    return Window(size=len(labels), labels=labels, shape={'y_max': y_max})


def group_window(generators: Sequence[Sequence[int]], radius: int) -> Window:
    gens = np.asarray(generators, dtype=np.int64)
    table, reach = _word_table(gens, radius)
    cells = np.argwhere(table <= radius)
    lengths = table[tuple(cells.T)]
    labels = [tuple(int(c) for c in cell - reach) for cell in cells]
    order = sorted(range(len(labels)), key=lambda i: (lengths[i], labels[i]))
    return Window(size=len(labels), labels=[labels[i] for i in order], shape={'radius': radius})


# Presentation builders

def line_presentation(start: int, stop: int, cutoff: float = Config.DEFAULT_CUTOFF,
                      ladder: Sequence[float] = (1.0,), kind: str = 'Metric', **params) -> SpacePresentation:
    """Integer points start..stop (inclusive) of the real line"""
    window = box_window([stop - start + 1], [start])
    return SpacePresentation(kind=kind, window=window, cutoff=cutoff, ladder=list(ladder), params=params)


def grid_presentation(shape: Sequence[int], cutoff: float = Config.DEFAULT_CUTOFF,
                      ladder: Sequence[float] = (1.0,), kind: str = 'Metric',
                      origin: Optional[Sequence[int]] = None, **params) -> SpacePresentation:
    return SpacePresentation(kind=kind, window=box_window(shape, origin), cutoff=cutoff,
                             ladder=list(ladder), params=params)


def wedge_presentation(y_max: int = 200, cutoff: float = 40, ladder: Sequence[float] = (1.0, 2.0),
                       locality: int = 64) -> SpacePresentation:
    """The wedge -y <= x <= y, 0 < y <= y_max of Z^2 with the l1 metric"""
    return SpacePresentation(kind='HalfPlaneNonNormal', window=wedge_window(y_max), cutoff=cutoff,
                             ladder=list(ladder), params={'norm': 'l1', 'locality': locality, 'base': [0, 1]})


def group_presentation(generators: Union[str, Sequence[Sequence[int]]] = 'king', dim: int = 2,
                       radius: int = 32, cutoff: float = 20, ladder: Sequence[float] = (1.0,),
                       **params) -> SpacePresentation:
    """Word-metric ball of the given radius in Z^dim"""
    gens = generator_preset(generators, dim) if isinstance(generators, str) else [tuple(g) for g in generators]
    params = dict(params, generators=[list(g) for g in gens], radius=radius)
    return SpacePresentation(kind='Group', window=group_window(gens, radius), cutoff=cutoff,
                             ladder=list(ladder), params=params)


def lsxa_presentation(shape: Sequence[int], excluded: Sequence[Sequence[int]], cutoff: float,
                      step: float = 1.0, ladder: Sequence[float] = (0.5,), **params) -> SpacePresentation:
    """Uniform grid on a compact box with the excluded set A removed from the ls-structure"""
    params = dict(params, excluded=[list(a) for a in excluded], step=step)
    return SpacePresentation(kind='LSXA', window=box_window(shape), cutoff=cutoff,
                             ladder=list(ladder), params=params)


def maxulf_presentation(size: int, cutoff: float, ladder: Sequence[float] = (2.0,),
                        locality: Optional[int] = None) -> SpacePresentation:
    params = {} if locality is None else {'locality': locality}
    return SpacePresentation(kind='MaxULF', window=Window(size=size, shape={'size': size}), cutoff=cutoff,
                             ladder=list(ladder), params=params)


def finite_presentation(size: int, opens: Sequence[Sequence[int]], names: Optional[List[str]] = None) -> SpacePresentation:
    window = Window(size=size, names=names, shape={'size': size})
    return SpacePresentation(kind='Finite', window=window, cutoff=size, ladder=[1.0],
                             params={'opens': [list(o) for o in opens]})


def _window_from_dict(data: Dict[str, Any], kind: str, params: Dict[str, Any]) -> Window:
    if 'labels' in data:
        labels = [tuple(label) for label in data['labels']]
        return Window(size=len(labels), labels=labels, names=data.get('names'))
    if 'shape' in data:
        return box_window(data['shape'], data.get('origin'))
    if 'y_max' in data:
        return wedge_window(int(data['y_max']))
    if 'radius' in data:
        if kind != 'Group':
            raise InputError("radius windows are word balls of Group presentations")
        params.setdefault('radius', int(data['radius']))
        return group_window(params['generators'], int(data['radius']))
    if 'size' in data:
        return Window(size=int(data['size']), names=data.get('names'), shape={'size': int(data['size'])})
    raise InputError("window needs one of labels, shape, y_max, radius or size", {'window': data})


def presentation_from_dict(data: Dict[str, Any]) -> SpacePresentation:
    """Build a presentation from the JSON space format"""
    try:
        kind = data['kind']
        params = dict(data.get('params') or {})
        if kind == 'Group':
            generators = params.get('generators', 'standard')
            if isinstance(generators, str):
                generators = generator_preset(generators, int(params.get('dim', 2)))
            params['generators'] = [list(g) for g in generators]
        if kind == 'HalfPlaneNonNormal':
            params.setdefault('base', [0, 1])
            params.setdefault('norm', 'l1')
        window = _window_from_dict(dict(data.get('window') or {}), kind, params)
        cutoff = data.get('cutoff', window.size if kind == 'Finite' else Config.DEFAULT_CUTOFF)
        ladder = data.get('ladder') or DEFAULT_LADDERS.get(kind, [1.0])
        return SpacePresentation(kind=kind, window=window, cutoff=cutoff, ladder=ladder, params=params)
    except KeyError as e:
        raise InputError(f"Space description lacks field {e}", {'field': str(e)})
    except ValidationError as e:
        raise InputError("Invalid space description", {'errors': e.errors(include_url=False)})


def presentation_to_dict(p: SpacePresentation) -> Dict[str, Any]:
    if p.window.shape and 'size' not in p.window.shape:
        window: Dict[str, Any] = dict(p.window.shape)
    else:
        window = {'size': p.size}
        if p.window.labels is not None:
            window = {'labels': [list(label) for label in p.window.labels]}
        if p.window.names is not None:
            window['names'] = list(p.window.names)
    return {
        'kind': p.kind,
        'window': window,
        'cutoff': p.cutoff,
        'ladder': list(p.ladder),
        'params': dict(p.params),
    }


# Metric oracles

def distance(p: SpacePresentation, x: int, y: int) -> float:
    return float(_lattice(p).pairwise([x], [y])[0, 0])


def distances_from(p: SpacePresentation, x: int) -> np.ndarray:
    return _lattice(p).distances_from(x)


def dist_to_set(p: SpacePresentation, S: SubsetMask) -> np.ndarray:
    """d(x, S) for every window point; +inf when S is empty"""
    _check(p, S)
    return _lattice(p).dist_to_points(points_of(S, p.size))


def diameter(p: SpacePresentation, S: SubsetMask) -> float:
    _check(p, S)
    lat = _lattice(p)
    points = points_of(S, p.size)
    if len(points) < 2:
        return 0.0
    coords = lat.coords[points]
    if lat.norm == 'l1':
        signs = np.array(list(itertools.product((1, -1), repeat=lat.dim)))
        projections = coords @ signs.T
        return float((projections.max(axis=0) - projections.min(axis=0)).max() * lat.step)
    if lat.norm == 'linf':
        return float((coords.max(axis=0) - coords.min(axis=0)).max() * lat.step)
    chunk = max(1, CHUNK_CELLS // (len(points) * lat.dim))
    best = 0.0
    for start in range(0, len(points), chunk):
        best = max(best, float(lat.pairwise(points[start:start + chunk], points).max()))
    return best


def fits_in_ball(p: SpacePresentation, S: SubsetMask, radius: float) -> bool:
    """Some window point lies within radius of every point of S"""
    points = points_of(S, p.size)
    if len(points) < 2:
        return True
    if diameter(p, S) > 2 * radius + TAU:
        return False
    lat = _lattice(p)
    chunk = max(1, CHUNK_CELLS // (len(points) * lat.dim))
    for start in range(0, p.size, chunk):
        centers = list(range(start, min(start + chunk, p.size)))
        if lat.pairwise(points, centers).max(axis=0).min() <= radius + TAU:
            return True
    return False


def ball(p: SpacePresentation, x: int, radius: float) -> SubsetMask:
    return array_to_mask(distances_from(p, x) <= radius + TAU)


def metric_scale(p: SpacePresentation, R: float) -> Family:
    """Cover of the window by closed R-balls, one per point"""
    if not p.has_metric:
        raise PreconditionError(f"{p.kind} presentations carry no metric", {'kind': p.kind})
    if R <= 0:
        raise PreconditionError("ball radius must be positive", {'radius': R})
    lat = _lattice(p)
    if len(lat.offsets(R)) * p.size <= CHUNK_CELLS:
        neighbors = lat.neighbors(R)
        members = []
        for x in range(p.size):
            column = neighbors[:, x]
            members.append(mask_of(column[column >= 0]))
    else:
        members = [ball(p, x, R) for x in range(p.size)]
    return Family(members=members, size=p.size, tag=f"ball({R:g})")


def metric_star(p: SpacePresentation, B: SubsetMask, R: float, hops: int = 2) -> SubsetMask:
    """R-neighbourhood taken hops times; hops=2 is st(B, metric_scale(p, R))"""
    _check(p, B)
    if B == 0:
        return 0
    lat = _lattice(p)
    flags = mask_to_array(B, p.size)
    for _ in range(hops):
        flags = lat.dilate(flags, R)
    return array_to_mask(flags)


def coordinates(p: SpacePresentation) -> np.ndarray:
    """Lattice coordinates, one row per window point"""
    return _lattice(p).coords


def pair_distances(p: SpacePresentation, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """d(first[k], second[k]) for aligned index arrays"""
    lat = _lattice(p)
    return lat.lengths(lat.coords[np.asarray(first)] - lat.coords[np.asarray(second)])


def translate(p: SpacePresentation, S: SubsetMask, x: int) -> SubsetMask:
    """S + x clipped to the window"""
    _check(p, S)
    lat = _lattice(p)
    indices = lat.lookup(lat.coords[points_of(S, p.size)] + lat.coords[x])
    return mask_of(indices[indices >= 0])


def neighbour_pairs(p: SpacePresentation, R: float) -> Tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (x, y) of distinct window points with d(x, y) <= R"""
    neighbors = _lattice(p).neighbors(R)
    firsts, seconds = [], []
    for row in neighbors:
        valid = np.flatnonzero((row >= 0) & (row != np.arange(p.size)))
        firsts.append(valid)
        seconds.append(row[valid])
    return np.concatenate(firsts), np.concatenate(seconds)


def neighbourhood_extremes(p: SpacePresentation, values: np.ndarray, R: float,
                           hops: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Min and max of values over the hops-fold R-neighbourhood of every point"""
    neighbors = _lattice(p).neighbors(R)
    low = np.asarray(values, dtype=float)
    high = low.copy()
    for _ in range(hops):
        next_low, next_high = low.copy(), high.copy()
        for row in neighbors:
            valid = row >= 0
            next_low[valid] = np.minimum(next_low[valid], low[row[valid]])
            next_high[valid] = np.maximum(next_high[valid], high[row[valid]])
        low, high = next_low, next_high
    return low, high


def base_index(p: SpacePresentation) -> int:
    base = p.params.get('base')
    if base is None:
        if p.kind == 'Group':
            base = [0] * _lattice(p).dim
        else:
            return 0
    if isinstance(base, int):
        return base
    index = int(_lattice(p).lookup(np.asarray([base]))[0])
    if index < 0:
        raise InputError("basepoint is not a window point", {'base': base})
    return index


def _base_distances(p: SpacePresentation) -> np.ndarray:
    if 'base_distances' not in p._cache:
        p._cache['base_distances'] = distances_from(p, base_index(p))
    return p._cache['base_distances']


def excluded_mask(p: SpacePresentation) -> SubsetMask:
    """The set A of an LSXA presentation"""
    if p.kind != 'LSXA':
        raise PreconditionError("only LSXA presentations exclude a set", {'kind': p.kind})
    if 'excluded' not in p._cache:
        indices = _lattice(p).lookup(np.asarray(p.params['excluded']))
        if (indices < 0).any():
            raise InputError("excluded points lie outside the window")
        p._cache['excluded'] = mask_of(indices)
    return p._cache['excluded']


def wedge_diagonals(p: SpacePresentation) -> Tuple[SubsetMask, SubsetMask]:
    """A = {(x, x)} and B = {(-x, x)} for x > 0"""
    if p.kind != 'HalfPlaneNonNormal':
        raise PreconditionError("diagonals belong to the wedge presentation", {'kind': p.kind})
    coords = _lattice(p).coords
    positive = coords[:, 1] > 0
    A = array_to_mask(positive & (coords[:, 0] == coords[:, 1]))
    B = array_to_mask(positive & (coords[:, 0] == -coords[:, 1]))
    return A, B


# Ladders

def _c0_scale(p: SpacePresentation, R: float) -> Family:
    base = _base_distances(p)
    members = []
    for x in range(p.size):
        if base[x] + R <= p.cutoff / 2 + TAU:
            members.append(ball(p, x, R))
        else:
            members.append(1 << x)
    return Family(members=members, size=p.size, tag=f"c0ball({R:g})")


def _block_scale(p: SpacePresentation, k: float) -> Family:
    width = max(1, int(k))
    if width >= p.size:
        return Family(members=[full_mask(p.size)], size=p.size, tag=f"block({width})")
    block = full_mask(width)
    members = [block << i for i in range(p.size - width + 1)]
    return Family(members=members, size=p.size, tag=f"block({width})")


def _lsxa_scale(p: SpacePresentation, factor: float) -> Family:
    excluded = excluded_mask(p)
    to_excluded = dist_to_set(p, excluded)
    members = []
    for x in range(p.size):
        if (excluded >> x) & 1:
            continue
        members.append(ball(p, x, factor * to_excluded[x]))
    return Family(members=members, size=p.size, tag=f"lsxa({factor:g})")


def _scale_for(p: SpacePresentation, parameter: float) -> Family:
    if p.kind in ('Metric', 'HalfPlaneNonNormal'):
        return metric_scale(p, parameter)
    if p.kind == 'Group':
        family = metric_scale(p, parameter)
        return Family(members=family.members, size=p.size, tag=f"G(F_{parameter:g})")
    if p.kind == 'C0':
        return _c0_scale(p, parameter)
    if p.kind == 'MaxULF':
        return _block_scale(p, parameter)
    if p.kind == 'LSXA':
        return _lsxa_scale(p, parameter)
    return Family(members=[full_mask(p.size)], size=p.size, tag='whole')


def ladder_parameters(p: SpacePresentation) -> List[float]:
    if p.kind == 'Finite':
        return [1.0]
    return list(p.ladder) or DEFAULT_LADDERS.get(p.kind, [1.0])


def build_ladder(p: SpacePresentation) -> ScaleLadder:
    """Materialized scales of the presentation, one per ladder parameter"""
    if 'ladder' not in p._cache:
        parameters = ladder_parameters(p)
        scales = [_scale_for(p, t) for t in parameters]
        p._cache['ladder'] = ScaleLadder(scales=scales, parameters=parameters, tag=p.kind)
        logger.info("Built %s ladder with %d scales on %d points", p.kind, len(scales), p.size)
    return p._cache['ladder']


def ladder_family(p: SpacePresentation, index: int, doubled: bool = False) -> Family:
    """Ladder scale U, or st(U, U) when doubled"""
    key = ('ladder_family', index, doubled)
    if key not in p._cache:
        family = build_ladder(p).scales[index]
        p._cache[key] = star_family(family, family) if doubled else family
    return p._cache[key]


def ladder_star(p: SpacePresentation, index: int, B: SubsetMask, doubled: bool = False) -> SubsetMask:
    """st(B, U) for the index-th ladder scale U (st(U, U) when doubled)"""
    if p.kind in DILATION_KINDS:
        return metric_star(p, B, ladder_parameters(p)[index], hops=6 if doubled else 2)
    return star_set(B, ladder_family(p, index, doubled))


def ladder_length(p: SpacePresentation) -> int:
    return len(ladder_parameters(p))


# Boundedness

def anchor_ball(p: SpacePresentation) -> SubsetMask:
    """Ball of radius cutoff/2 about the basepoint, a bounded set of every metric kind"""
    if 'anchor' not in p._cache:
        if p.has_metric:
            p._cache['anchor'] = array_to_mask(_base_distances(p) <= p.cutoff / 2 + TAU)
        else:
            p._cache['anchor'] = mask_of(range(min(p.size, int(p.cutoff))))
    return p._cache['anchor']


def _far_from_excluded(p: SpacePresentation) -> SubsetMask:
    if 'far' not in p._cache:
        p._cache['far'] = array_to_mask(dist_to_set(p, excluded_mask(p)) > p.cutoff + TAU)
    return p._cache['far']


def coarse_components(p: SpacePresentation) -> List[SubsetMask]:
    """Components of the finest ladder scale, uncovered points as singletons"""
    if 'components' not in p._cache:
        if p.kind in ('Finite', 'LSXA', 'C0'):
            components = [full_mask(p.size)]
        elif p.kind in DILATION_KINDS:
            uf = UnionFind(p.size)
            for row in _lattice(p).neighbors(ladder_parameters(p)[0]):
                valid = np.flatnonzero(row >= 0)
                for x, y in zip(valid.tolist(), row[valid].tolist()):
                    uf.union(x, y)
            components = classes_of(uf)
        else:
            components = u_components(ladder_family(p, 0), p.window, require_cover=False)
        if len(components) > 1:
            logger.warning("Window of %s presentation splits into %d components at the finest scale",
                           p.kind, len(components))
        p._cache['components'] = components
    return p._cache['components']


def is_bounded(p: SpacePresentation, K: SubsetMask) -> bool:
    """Diameter (word length for groups) at most the cutoff; cardinality for MaxULF;
    distance above the cutoff from the excluded set for LSXA"""
    _check(p, K)
    if K == 0 or p.kind == 'Finite':
        return True
    if p.kind == 'MaxULF':
        return count(K) <= p.cutoff + TAU
    if p.kind == 'LSXA':
        return K & ~_far_from_excluded(p) == 0
    return count(K) < 2 or diameter(p, K) <= p.cutoff + TAU


def is_weakly_bounded(p: SpacePresentation, K: SubsetMask) -> bool:
    """Bounded within every coarse component"""
    _check(p, K)
    if K == 0:
        return True
    cache = p._cache.setdefault('weakly_bounded', {})
    if K not in cache:
        verdict = all(is_bounded(p, K & component) for component in coarse_components(p) if K & component)
        if len(cache) < BOUNDED_CACHE:
            cache[K] = verdict
        return verdict
    return cache[K]


# Topology

def topology(p: SpacePresentation) -> Optional[FiniteTopology]:
    """Finite topology from params['opens']; None means discrete"""
    if 'opens' not in p.params:
        return None
    if 'topology' not in p._cache:
        opens = [mask_of(points) for points in p.params['opens']]
        try:
            p._cache['topology'] = FiniteTopology(size=p.size, opens=opens)
        except ValidationError as e:
            raise InputError("Invalid finite topology", {'errors': e.errors(include_url=False)})
    return p._cache['topology']


def closure(p: SpacePresentation, S: SubsetMask) -> SubsetMask:
    _check(p, S)
    top = topology(p)
    return S if top is None else top.closure(S)


def interior(p: SpacePresentation, S: SubsetMask) -> SubsetMask:
    _check(p, S)
    top = topology(p)
    return S if top is None else top.interior(S)


# Scale membership

def ulf_bound(U: Family) -> int:
    """max over points x of card(st(x, U))"""
    stars = point_stars(U)
    return max([1] + [count(star) for star in stars.values()])


def _locality(p: SpacePresentation) -> float:
    return float(p.params.get('locality', p.cutoff))


def _largest_ladder_radius(p: SpacePresentation) -> Optional[float]:
    admissible = [R for R in ladder_parameters(p) if R <= p.cutoff + TAU]
    return max(admissible) if admissible else None


def _members_fit(p: SpacePresentation, U: Family, radius: Optional[float]) -> bool:
    for member in U.members:
        if count(member) < 2:
            continue
        if radius is None or not fits_in_ball(p, member, radius):
            return False
    return True


def _lsxa_is_scale(p: SpacePresentation, U: Family) -> bool:
    excluded = excluded_mask(p)
    if any(member & excluded for member in U.members):
        return False
    lat = _lattice(p)
    probe_radii = p.params.get('probe_radii') or [2 * p.cutoff, 4 * p.cutoff]
    for a in points_of(excluded, p.size):
        from_a = lat.distances_from(a)
        for rho in probe_radii:
            outer = array_to_mask(from_a <= rho + TAU)
            sigma = rho / 2
            found = sigma < lat.step
            while sigma >= lat.step - TAU and not found:
                inner = array_to_mask(from_a <= sigma + TAU)
                found = all(member & ~outer == 0 for member in U.members if member & inner)
                sigma /= 2
            if not found:
                logger.debug("LSXA scale test fails at excluded point %d, radius %g", a, rho)
                return False
    return True


def _halfplane_is_scale(p: SpacePresentation, U: Family) -> bool:
    if ulf_bound(U) > _locality(p):
        return False
    A, B = wedge_diagonals(p)
    for R in ladder_parameters(p):
        near = metric_star(p, A | B, R)
        for member in U.members:
            if count(member) >= 2 and member & near and not fits_in_ball(p, member, p.cutoff):
                return False
    return True


def is_scale(p: SpacePresentation, U: Family) -> bool:
    """Membership of U in the presented ls-structure at the window"""
    if U.size != p.size:
        raise WindowMismatchError("family and presentation differ in size", {'family': U.size, 'window': p.size})
    if p.kind in ('Metric', 'Group'):
        return _members_fit(p, U, _largest_ladder_radius(p))
    if p.kind == 'C0':
        if not _members_fit(p, U, max(ladder_parameters(p))):
            return False
        anchor = anchor_ball(p)
        for eps in p.params.get('eps_grid', Config.EPS_GRID):
            for member in U.members:
                if count(member) >= 2 and member & ~anchor and diameter(p, member) > eps + TAU:
                    return False
        return True
    if p.kind == 'MaxULF':
        return ulf_bound(U) <= _locality(p)
    if p.kind == 'LSXA':
        return _lsxa_is_scale(p, U)
    if p.kind == 'HalfPlaneNonNormal':
        return _halfplane_is_scale(p, U)
    return True


# Group and LSXA specific constructions

def group_star(E: SubsetMask, F: SubsetMask, p: SpacePresentation) -> SubsetMask:
    """E - F + F (written E F^-1 F) clipped to the window"""
    if p.kind != 'Group':
        raise PreconditionError("group_star needs a Group presentation", {'kind': p.kind})
    _check(p, E)
    _check(p, F)
    if E == 0 or F == 0:
        return 0
    lat = _lattice(p)
    e = lat.coords[points_of(E, p.size)]
    f = lat.coords[points_of(F, p.size)]
    translates = np.unique((e[:, None, :] - f[None, :, :]).reshape(-1, lat.dim), axis=0)
    products = np.unique((translates[:, None, :] + f[None, :, :]).reshape(-1, lat.dim), axis=0)
    indices = lat.lookup(products)
    return mask_of(indices[indices >= 0])


def translate_family(p: SpacePresentation, F: SubsetMask) -> Family:
    """{g + F clipped to the window : g in the window}"""
    if p.kind != 'Group':
        raise PreconditionError("translates need a Group presentation", {'kind': p.kind})
    lat = _lattice(p)
    f = lat.coords[points_of(F, p.size)]
    members = []
    for g in range(p.size):
        indices = lat.lookup(lat.coords[g] + f)
        members.append(mask_of(indices[indices >= 0]))
    return Family(members=members, size=p.size, tag='translates')


def group_interior(p: SpacePresentation, F: SubsetMask) -> SubsetMask:
    """Points x with x - F inside the window"""
    lat = _lattice(p)
    f = lat.coords[points_of(F, p.size)]
    shifted = lat.coords[:, None, :] - f[None, :, :]
    inside = (lat.lookup(shifted.reshape(-1, lat.dim)) >= 0).reshape(p.size, len(f))
    return array_to_mask(inside.all(axis=1))


def lsxa_default_scale(p: SpacePresentation) -> Family:
    """Balls B(x, d(x, A)/2) about the points outside A"""
    if p.kind != 'LSXA':
        raise PreconditionError("lsxa_default_scale needs an LSXA presentation", {'kind': p.kind})
    if excluded_mask(p) == full_mask(p.size):
        raise PreconditionError("the excluded set covers the window")
    return _lsxa_scale(p, 0.5)
