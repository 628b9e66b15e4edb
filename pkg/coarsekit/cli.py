"""Command line front door: load presentations, run a check or construction, write reports.

Exit codes: 0 success, 1 a verdict failed, 2 bad input or precondition, 3 construction failure.
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from pydantic import ValidationError

from config import Config
from . import spaces
from .constructions import build_dyadic, certify_urysohn, dyadic_to_pairs, function_from_family, tietze_extend
from .data_manager import DataManager
from .errors import CoarsekitError, ConstructionError, InputError
from .models import RunConfig, SpacePresentation
from .operators import check_axiom, operator_for
from .verification import check_coarsely_separated, check_slowly_oscillating, nonnormal_witness, wedge_candidates

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CONSTRUCTION = 0, 1, 2, 3
OPERATOR_KINDS = ['topological', 'coarse', 'hybrid', 'uniform']

PROCEDURES = {
    'axioms': 'neighbourhood operator axioms N0-N4 on all subset pairs',
    'urysohn': 'dyadic Urysohn construction from intermediate neighbourhoods',
    'tietze': 'Tietze extension by iterated Urysohn steps with 2/3 contraction',
    'separate': 'coarse separation: star intersections over the ladder',
    'soscheck': 'slow oscillation over the ladder and the eps grid',
    'nonnormal': 'oscillating pairs of a separating function on the half-plane wedge',
}


def _floats(raw: str) -> List[float]:
    try:
        return [float(item) for item in raw.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='coarsekit', description="Hybrid large-scale geometry on finite windows")
    parser.add_argument('command', choices=sorted(list(PROCEDURES) + ['check-config', 'gallery']))
    parser.add_argument('--space', help="space presentation JSON file")
    parser.add_argument('--subsets', help="named subsets JSON file")
    parser.add_argument('--function', help="function JSON or CSV file")
    parser.add_argument('--out', help="output directory")
    parser.add_argument('--operator', choices=OPERATOR_KINDS)
    parser.add_argument('--cutoff', type=float)
    parser.add_argument('--ladder', type=_floats)
    parser.add_argument('--depth', type=int)
    parser.add_argument('--tol', type=float)
    parser.add_argument('--grid-step', type=float)
    parser.add_argument('--eps-grid', type=_floats)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--candidate', help="built-in wedge candidate for nonnormal")
    parser.add_argument('--delta', type=float)
    parser.add_argument('--m-hint', type=int)
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        'out': args.out,
        'operator': args.operator,
        'cutoff': args.cutoff,
        'ladder': args.ladder,
        'depth': args.depth,
        'tol': args.tol,
        'grid_step': args.grid_step,
        'eps_grid': args.eps_grid,
        'seed': args.seed,
        'candidate': args.candidate,
        'delta': args.delta,
        'm_hint': args.m_hint,
    }
    fields = {key: value for key, value in overrides.items() if value is not None}
    try:
        return RunConfig(command=args.command, space=args.space, subsets=args.subsets,
                         function=args.function, **fields)
    except ValidationError as e:
        raise InputError("Invalid overrides", {'errors': e.errors(include_url=False)})


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise InputError(f"{flag} is required for this command")
    return value


def _load_space(rc: RunConfig, dm: DataManager) -> SpacePresentation:
    return dm.load_space(_require(rc.space, '--space'), rc.cutoff, rc.ladder)


def _subset(subsets: Dict[str, int], name: str) -> int:
    if name not in subsets:
        raise InputError(f"subset file lacks {name}", {'known': sorted(subsets)})
    return subsets[name]


def _envelope(rc: RunConfig, p: Optional[SpacePresentation] = None, **payload) -> Dict[str, Any]:
    report = {
        'procedure_ref': PROCEDURES.get(rc.command, rc.command),
        'command': rc.command,
        'settings': rc.settings(),
        'seed': rc.seed,
    }
    if p is not None:
        report['space'] = p.describe()
    report.update(payload)
    return report


# Commands

def cmd_axioms(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    kinds = [rc.operator] if rc.operator else OPERATOR_KINDS
    failed = False
    summary = {}
    for kind in kinds:
        op = operator_for(p, kind)
        for axiom in Config.AXIOMS:
            verdict = check_axiom(op, axiom, seed=rc.seed)
            dm.save_report(f"axioms_{kind}_{axiom}.json", _envelope(rc, p, operator=kind, verdict=verdict))
            summary[f"{kind}/{axiom}"] = verdict.verdict
            failed = failed or verdict.failed
    dm.save_report('axioms.json', _envelope(rc, p, verdicts=summary))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_urysohn(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    subsets = dm.load_subsets(_require(rc.subsets, '--subsets'), p)
    A, B = _subset(subsets, 'A'), _subset(subsets, 'B')
    op = operator_for(p, rc.operator or 'hybrid')
    family = build_dyadic(op, A, B, rc.depth)
    f = function_from_family(family)
    verdict = certify_urysohn(op, f, A, B, rc.depth, rc.grid_step)
    dm.save_function('urysohn.csv', f)
    dm.save_report('urysohn.json', _envelope(rc, p, operator=op.describe(), verdict=verdict,
                                             values=f.values, family=dyadic_to_pairs(family)))
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_tietze(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    subsets = dm.load_subsets(_require(rc.subsets, '--subsets'), p)
    A = _subset(subsets, 'A')
    f = dm.load_function(_require(rc.function, '--function'), p, domain=A)
    op = operator_for(p, rc.operator or 'hybrid')
    g, report = tietze_extend(op, A, f, rc.tol, depth=rc.depth)
    dm.save_function('g.csv', g)
    dm.save_report('tietze.json', _envelope(rc, p, operator=op.describe(), report=report, values=g.values))
    converged = report.max_error <= rc.tol
    continuous = report.continuity is None or report.continuity.passed
    return EXIT_OK if converged and continuous else EXIT_FAIL


def cmd_separate(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    subsets = dm.load_subsets(_require(rc.subsets, '--subsets'), p)
    report = check_coarsely_separated(p, _subset(subsets, 'A'), _subset(subsets, 'B'))
    dm.save_report('separate.json', _envelope(rc, p, report=report))
    return EXIT_OK if report.overall else EXIT_FAIL


def cmd_soscheck(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    f = dm.load_function(_require(rc.function, '--function'), p)
    reports = check_slowly_oscillating(p, f, rc.eps_grid)
    dm.save_report('soscheck.json', _envelope(rc, p, reports=reports))
    ref = PROCEDURES.get(rc.command, rc.command)
    dm.save_table('soscheck.csv', [
        {'procedure_ref': ref, 'scale_id': r.scale_id, 'scale_parameter': r.scale_parameter,
         'epsilon': r.epsilon, 'passed': r.passed, 'max_excess_diameter': r.max_excess_diameter}
        for r in reports
    ])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_nonnormal(rc: RunConfig, dm: DataManager) -> int:
    p = _load_space(rc, dm)
    if rc.function:
        f = dm.load_function(rc.function, p)
        source = rc.function
    else:
        candidates = wedge_candidates(p)
        name = rc.candidate or 'angular'
        if name not in candidates:
            raise InputError(f"Unknown candidate: {name}", {'known': sorted(candidates)})
        f = candidates[name]
        source = name
    family = nonnormal_witness(p, f, rc.m_hint, rc.delta)
    dm.save_report('nonnormal.json', _envelope(rc, p, candidate=source, family=family))
    ref = PROCEDURES.get(rc.command, rc.command)
    dm.save_table('nonnormal_pairs.csv', [
        {'procedure_ref': ref, 'row': row, 'z': z, 'w': w, 'gap': gap}
        for row, (z, w), gap in zip(family.rows, family.pairs, family.gaps)
    ])
    return EXIT_OK


def cmd_check_config(rc: RunConfig, dm: DataManager) -> int:
    status = Config.validate_config()
    for issue in status['issues']:
        print(f"issue: {issue}", file=sys.stderr)
    print(f"configuration {'valid' if status['valid'] else 'invalid'}; "
          f"exhaustive checks up to {status['exhaustive_window_limit']} points")
    return EXIT_OK if status['valid'] else EXIT_FAIL


def gallery() -> Dict[str, SpacePresentation]:
    return {
        'metric_z_line.json': spaces.line_presentation(0, 9, cutoff=9, ladder=[1.0]),
        'finite_nonnormal_topology.json': spaces.finite_presentation(
            3, [[], [0], [0, 1], [0, 2], [0, 1, 2]], names=['a', 'b', 'c']),
        'two_block_line.json': spaces.line_presentation(0, 200, cutoff=160, ladder=[1.0, 2.0, 4.0]),
        'halfplane_wedge.json': spaces.wedge_presentation(y_max=200, cutoff=40, ladder=[1.0, 2.0], locality=64),
    }


def cmd_gallery(rc: RunConfig, dm: DataManager) -> int:
    for name, p in gallery().items():
        dm.save_space(name, p)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, DataManager], int]] = {
    'axioms': cmd_axioms,
    'urysohn': cmd_urysohn,
    'tietze': cmd_tietze,
    'separate': cmd_separate,
    'soscheck': cmd_soscheck,
    'nonnormal': cmd_nonnormal,
    'check-config': cmd_check_config,
    'gallery': cmd_gallery,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level or Config().LOG_LEVEL,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        rc = run_config(args)
        dm = DataManager(rc.out)
        return COMMANDS[rc.command](rc, dm)
    except ConstructionError as e:
        logger.error("Construction failed: %s %s", e.message, e.details)
        print(f"construction failed: {e.message}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except CoarsekitError as e:
        logger.error("%s: %s %s", type(e).__name__, e.message, e.details)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
