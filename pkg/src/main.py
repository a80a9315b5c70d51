# src/main.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import argparse
from typing import List, Optional

import numpy as np
import pandas as pd

from config.config import DEFAULT_DIGITS, FIGURE_POINTS, K_MIN
from src.experiments import (alpha_sweep, bound_state_thresholds, figure_markers, report_k_max,
                             sawtooth_drops, scaling_check, sweep_frame, table1, table1_frame)
from util.dataset_formatter import FORMATS, DatasetFormatter
from util.log_utils import logger
from util.peak_finder import ResonanceRecord, resonance_report
from util.pole_finder import PoleSearchConfig, bound_states, find_poles
from util.scattering_core import PotentialWell, make_well, make_well_from_alpha, radius_profile, scan
from util.utils import DomainError, NumericalError, require

COMMANDS = ('scan', 'poles', 'bound-states', 'report', 'table1', 'sweep', 'scaling')


class UsageError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    """出错时抛出 UsageError 而不是直接退出，由 run() 统一转成退出码 2。"""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _well_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('well')
    group.add_argument('--a', type=float, help='well radius a')
    group.add_argument('--v0', type=float, help='well depth |V0|')
    group.add_argument('--alpha', type=float, help='strength alpha, v0 = alpha^2/(2a^2); needs --a')


def _output_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('output')
    group.add_argument('--format', default='csv', choices=FORMATS, help='dataset format (default csv)')
    group.add_argument('--output', default=None, help='output path (default standard output)')
    group.add_argument('--digits', type=int, default=DEFAULT_DIGITS, help='significant digits (default 8)')
    group.add_argument('--log-screen', action='store_true', help='echo log lines to stderr')


def _pole_arguments(parser: argparse.ArgumentParser, re_max: Optional[float]) -> None:
    group = parser.add_argument_group('pole search')
    group.add_argument('--re-max', type=float, default=re_max, help='upper bound of Re K')
    group.add_argument('--im-min', type=float, default=-2.0, help='lower bound of Im K (default -2)')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='sqwell', description='s-wave scattering from an attractive square well')
    subparsers = parser.add_subparsers(dest='command', metavar='{' + ','.join(COMMANDS) + '}', parser_class=_Parser)
    subparsers.required = True

    p = subparsers.add_parser('scan', help='scattering functions on an equidistant k grid')
    _well_arguments(p)
    p.add_argument('--kmin', type=float, default=0.01, help=f'lowest k (default 0.01, at least {K_MIN})')
    p.add_argument('--kmax', type=float, default=3.5, help='highest k (default 3.5)')
    p.add_argument('--n', type=int, default=FIGURE_POINTS, help=f'number of samples (default {FIGURE_POINTS})')
    p.add_argument('--radius', type=float, default=None, help='also evaluate phi, l, P at this radius r >= a')
    p.add_argument('--markers', default=None, help='write l-peak, sigma-peak and pole markers to this path')
    _pole_arguments(p, None)
    _output_arguments(p)

    p = subparsers.add_parser('poles', help='S-matrix poles in the lower half k-plane')
    _well_arguments(p)
    p.add_argument('--include-bound', action='store_true', help='also list bound-state poles')
    _pole_arguments(p, 4.0)
    _output_arguments(p)

    p = subparsers.add_parser('bound-states', help='bound states on the positive imaginary k-axis')
    _well_arguments(p)
    _output_arguments(p)

    p = subparsers.add_parser('report', help='resonance records up to --kmax')
    _well_arguments(p)
    p.add_argument('--kmax', type=float, default=None, help='scan limit (default just past the second sigma peak)')
    _pole_arguments(p, None)
    _output_arguments(p)

    p = subparsers.add_parser('table1', help='recompute the seven representative wells')
    _output_arguments(p)

    p = subparsers.add_parser('sweep', help='first maximum of l(k)/2a as a function of alpha')
    p.add_argument('--alpha-min', type=float, default=5.0)
    p.add_argument('--alpha-max', type=float, default=60.0)
    p.add_argument('--n', type=int, default=1101, help='number of alpha values (default 1101, step 0.05)')
    p.add_argument('--a', type=float, default=1.0, help='fixed radius (default 1)')
    _output_arguments(p)

    p = subparsers.add_parser('scaling', help='check the a -> f·a, v0 -> v0/f^2 scaling law')
    _well_arguments(p)
    p.add_argument('--factor', type=float, default=5.0, help='scale factor f (default 5)')
    _output_arguments(p)
    return parser


def well_from_args(args) -> PotentialWell:
    """--a 与 --v0，或 --a 与 --alpha，二者必居其一。"""
    if args.alpha is not None:
        if args.v0 is not None:
            raise UsageError("--v0 and --alpha are mutually exclusive")
        if args.a is None:
            raise UsageError("--alpha requires --a")
        builder, flags = (lambda: make_well_from_alpha(args.a, args.alpha)), '--a/--alpha'
    elif args.a is None or args.v0 is None:
        raise UsageError("a well needs --a and --v0 (or --a with --alpha)")
    else:
        builder, flags = (lambda: make_well(args.a, args.v0)), '--a/--v0'
    try:
        return builder()
    except DomainError as e:
        raise UsageError(f"{flags}: {e}") from e


def _check_range(args) -> None:
    require(args.kmin >= K_MIN, f"--kmin must be at least {K_MIN}, got {args.kmin}")
    require(args.kmax > args.kmin, f"--kmax={args.kmax} must exceed --kmin={args.kmin}")
    require(args.n >= 3, f"--n must be at least 3, got {args.n}")


def _pole_config(args, re_max: float, **kwargs) -> PoleSearchConfig:
    cfg = PoleSearchConfig(re_max=re_max if args.re_max is None else args.re_max, im_min=args.im_min, **kwargs)
    cfg.validate()
    return cfg


def cmd_scan(args) -> pd.DataFrame:
    well = well_from_args(args)
    _check_range(args)
    ks = np.linspace(args.kmin, args.kmax, args.n)
    frame = scan(well, ks)
    if args.radius is not None:
        extended = radius_profile(well, args.radius, ks)
        frame = pd.concat([frame, extended.drop(columns='k')], axis=1)
    if args.markers:
        markers = figure_markers(well, args.kmin, args.kmax, _pole_config(args, args.kmax))
        DatasetFormatter.write(DatasetFormatter.render(markers, args.format, args.digits), args.markers)
    return frame


def cmd_poles(args) -> pd.DataFrame:
    well = well_from_args(args)
    poles = find_poles(well, _pole_config(args, 4.0, include_bound=args.include_bound))
    return pd.DataFrame({
        'kind': [p.kind.value for p in poles],
        're': [p.value.real for p in poles],
        'im': [p.value.imag for p in poles],
        'modulus': [p.modulus for p in poles],
        'residual': [p.residual for p in poles],
    }, columns=['kind', 're', 'im', 'modulus', 'residual'])


def cmd_bound_states(args) -> pd.DataFrame:
    well = well_from_args(args)
    kappas = bound_states(well)
    return pd.DataFrame({
        'n': list(range(1, len(kappas) + 1)),
        'kappa': kappas,
        'energy': [-0.5 * kappa * kappa for kappa in kappas],
    }, columns=['n', 'kappa', 'energy'])


def cmd_report(args) -> pd.DataFrame:
    well = well_from_args(args)
    k_max = report_k_max(well) if args.kmax is None else args.kmax
    require(k_max > K_MIN, f"--kmax must exceed {K_MIN}, got {k_max}")
    records = resonance_report(well, k_max, pole_cfg=_pole_config(args, k_max))
    return pd.DataFrame([r.to_dict() for r in records], columns=list(ResonanceRecord.__dataclass_fields__))


def cmd_table1(args) -> pd.DataFrame:
    return table1_frame(table1())


def cmd_sweep(args) -> pd.DataFrame:
    points = alpha_sweep(args.alpha_min, args.alpha_max, args.n, args.a)
    drops = sawtooth_drops(points)
    thresholds = bound_state_thresholds(args.alpha_min, args.alpha_max)
    logger.log_info(f"【main】sawtooth drops at {[round(x, 4) for x in drops]}, "
                    f"thresholds at {[round(x, 4) for x in thresholds]}")
    return sweep_frame(points)


def cmd_scaling(args) -> pd.DataFrame:
    return scaling_check(well_from_args(args), args.factor).to_frame()


HANDLERS = {
    'scan': cmd_scan,
    'poles': cmd_poles,
    'bound-states': cmd_bound_states,
    'report': cmd_report,
    'table1': cmd_table1,
    'sweep': cmd_sweep,
    'scaling': cmd_scaling,
}


def run(argv: Optional[List[str]] = None) -> int:
    """执行一条命令，返回退出码：0 成功，2 参数错误，1 数值失败。"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(parser.format_usage() + str(e) + '\n')
        return 2
    except SystemExit as e:
        # --help
        return 0 if e.code in (0, None) else 2

    print_screen = logger.print_screen
    if args.log_screen:
        logger.print_screen = True
    try:
        frame = HANDLERS[args.command](args)
        DatasetFormatter.write(DatasetFormatter.render(frame, args.format, args.digits), args.output)
        logger.log_info(f"【main】{args.command} done")
        return 0
    except DomainError as e:
        sys.stderr.write(f"sqwell {args.command}: error: {e}\n")
        return 2
    except NumericalError as e:
        logger.log_exception()
        sys.stderr.write(f"sqwell {args.command}: numerical failure: {e}\n")
        return 1
    finally:
        logger.print_screen = print_screen


if __name__ == "__main__":
    sys.exit(run())
