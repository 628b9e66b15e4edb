"""Ground-window combinatorics: subsets as int bitsets, families, stars and components."""

import logging
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .errors import CoverError, PreconditionError, WindowMismatchError
from .models import Family, Window

logger = logging.getLogger(__name__)

SubsetMask = int
ClosureOracle = Callable[[int], int]


def mask_of(points: Iterable[int]) -> SubsetMask:
    mask = 0
    for point in points:
        mask |= 1 << int(point)
    return mask


def full_mask(size: int) -> SubsetMask:
    return (1 << size) - 1


def complement(mask: SubsetMask, size: int) -> SubsetMask:
    return full_mask(size) & ~mask


def count(mask: SubsetMask) -> int:
    return bin(mask).count('1')


def lowest_point(mask: SubsetMask) -> int:
    """Index of the lowest member, -1 for the empty set"""
    return (mask & -mask).bit_length() - 1


def mask_to_array(mask: SubsetMask, size: int) -> np.ndarray:
    raw = mask.to_bytes((size + 7) // 8, 'little')
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder='little')
    return bits[:size].astype(bool)


def array_to_mask(flags: np.ndarray) -> SubsetMask:
    packed = np.packbits(np.asarray(flags, dtype=bool), bitorder='little')
    return int.from_bytes(packed.tobytes(), 'little')


def points_of(mask: SubsetMask, size: Optional[int] = None) -> List[int]:
    if mask == 0:
        return []
    if size is None:
        size = mask.bit_length()
    return [int(i) for i in np.flatnonzero(mask_to_array(mask, size))]


def _check_same_window(mask: SubsetMask, family: Family, what: str = 'subset') -> None:
    if mask < 0 or mask >> family.size:
        raise WindowMismatchError(
            f"{what} does not live on the family's window",
            {'family_size': family.size, 'bit_length': mask.bit_length()},
        )


def star_set(B: SubsetMask, U: Family) -> SubsetMask:
    """B together with every member of U that meets B"""
    _check_same_window(B, U)
    result = B
    if B:
        for member in U.members:
            if member & B:
                result |= member
    return result


def star_family(B: Family, U: Family) -> Family:
    if B.size != U.size:
        raise WindowMismatchError("families live on different windows", {'sizes': [B.size, U.size]})
    return Family(members=[star_set(member, U) for member in B.members], size=U.size, tag=f"st({B.tag},{U.tag})")


def point_stars(U: Family) -> Dict[int, SubsetMask]:
    """st({x}, U) for every covered point x; uncovered points have star {x}"""
    stars: Dict[int, SubsetMask] = {}
    for member in U.members:
        for x in points_of(member, U.size):
            stars[x] = stars.get(x, 1 << x) | member
    return stars


def refines(V: Family, U: Family) -> bool:
    """Every member of V with two or more points sits inside some member of U"""
    if V.size != U.size:
        raise WindowMismatchError("families live on different windows", {'sizes': [V.size, U.size]})
    for member in V.members:
        if count(member) < 2:
            continue
        if not any(member & ~container == 0 for container in U.members):
            return False
    return True


def is_cover(U: Family, window: Window, within: Optional[SubsetMask] = None) -> bool:
    target = window.full if within is None else within
    covered = 0
    for member in U.members:
        covered |= member
    return target & ~covered == 0


class UnionFind:
    """Disjoint sets over window points with path halving"""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.weight = [0] * n

    def find(self, x: int) -> int:
        i = x
        while i != self.parent[i]:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, x: int, y: int) -> None:
        i = self.find(x)
        j = self.find(y)
        if i == j:
            return
        if self.weight[i] < self.weight[j]:
            self.parent[i] = j
        elif self.weight[i] > self.weight[j]:
            self.parent[j] = i
        else:
            self.parent[j] = i
            self.weight[i] += 1


def u_components(U: Family, window: Window, require_cover: bool = True) -> List[SubsetMask]:
    """Classes of chain-connectivity through members of U, ordered by lowest point.

    Points outside every member become singleton classes when require_cover is False.
    """
    if U.size != window.size:
        raise WindowMismatchError("family and window differ in size", {'family': U.size, 'window': window.size})
    if require_cover and not is_cover(U, window):
        missing = complement(_union(U.members), window.size)
        raise CoverError("family does not cover the window", {'uncovered': points_of(missing, window.size)[:20]})

    uf = UnionFind(window.size)
    for member in U.members:
        points = points_of(member, window.size)
        for other in points[1:]:
            uf.union(points[0], other)
    return classes_of(uf)


def classes_of(uf: UnionFind) -> List[SubsetMask]:
    """Classes of a union-find structure as masks, ordered by lowest point"""
    size = len(uf.parent)
    classes: Dict[int, List[int]] = {}
    for x in range(size):
        classes.setdefault(uf.find(x), []).append(x)
    partition = []
    for points in classes.values():
        flags = np.zeros(size, dtype=bool)
        flags[points] = True
        partition.append(array_to_mask(flags))
    return sorted(partition, key=lowest_point)


def _union(masks: Iterable[SubsetMask]) -> SubsetMask:
    result = 0
    for mask in masks:
        result |= mask
    return result


def exhaustion(seed: SubsetMask, U: Family, steps: int, closure: ClosureOracle) -> List[SubsetMask]:
    """A_n = closure(B_n) with B_1 = seed and B_{n+1} = st(B_n, U)"""
    if steps < 1:
        raise PreconditionError("exhaustion needs at least one step", {'steps': steps})
    if seed == 0:
        raise PreconditionError("exhaustion needs a nonempty seed")
    _check_same_window(seed, U, 'seed')

    sequence = []
    current = seed
    for _ in range(steps):
        sequence.append(closure(current))
        current = star_set(current, U)
    return sequence


def coarse_skeleton(U: Family, window: Window) -> SubsetMask:
    """Greedy maximal Y (ascending index) such that no member of U holds two points of Y"""
    if not is_cover(U, window):
        raise CoverError("family does not cover the window")
    stars = point_stars(U)
    skeleton = 0
    blocked = 0
    for x in range(window.size):
        if (blocked >> x) & 1:
            continue
        skeleton |= 1 << x
        blocked |= stars.get(x, 1 << x)
    return skeleton


def skeleton_is_coarsely_surjective(Y: SubsetMask, U: Family, window: Window) -> bool:
    return star_set(Y, U) == window.full


def subset_table(ground: SubsetMask) -> List[SubsetMask]:
    """All subsets of ground; entry k holds the points whose compressed bits are set in k"""
    points = points_of(ground)
    table = [0] * (1 << len(points))
    for k in range(1, len(table)):
        low = (k & -k).bit_length() - 1
        table[k] = table[k & (k - 1)] | (1 << points[low])
    return table


def star_table(U: Family, ground: SubsetMask) -> List[SubsetMask]:
    """st(S, U) for every subset S of ground, indexed like subset_table"""
    _check_same_window(ground, U, 'ground set')
    points = points_of(ground, U.size)
    stars = point_stars(U)
    table = [0] * (1 << len(points))
    for k in range(1, len(table)):
        low = (k & -k).bit_length() - 1
        point = points[low]
        table[k] = table[k & (k - 1)] | stars.get(point, 1 << point)
    return table
