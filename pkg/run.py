import argparse
import json
import logging
import os
import sys
import traceback
from logging.handlers import TimedRotatingFileHandler

import multiprocessing_logging
import numpy as np
import pandas as pd

import ris_utils
from models import ChannelSet, PriceVector, load_scenario_file
from pricing_game import PricingGame
from services import SCHEMES, OracleBudget, SweepPoint, SweepSpec, audit_table, emit_csv, emit_summary, \
    oracle_follower, write_plot_script
from sweep_manager import default_workers, run_sweep

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3
EXIT_AUDIT = 4

LOG_FORMAT = '[{asctime}.{msecs:.0f}] [{levelname:<7}] {name}: {message}'

logger = logging.getLogger('Runner')


def setup_logging(name: str, level: str):
    logger_ = logging.getLogger()
    logger_.setLevel(level)

    _format = logging.Formatter(LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S', style='{')

    # file handler
    if not os.path.exists('logs'):
        os.makedirs('logs')
    handler_f = TimedRotatingFileHandler(
        filename=f"logs/{name}.log",
        when="d",
        interval=1,
        backupCount=5,
        encoding="utf-8")

    # stdout handler (that only shows INFO and DEBUG)
    handler_c1 = logging.StreamHandler(stream=sys.stdout)
    handler_c1.setLevel(logging.DEBUG)
    handler_c1.addFilter(lambda msg: msg.levelno <= logging.INFO)

    # stderr handler (that only shows warnings and above)
    handler_c2 = logging.StreamHandler(stream=sys.stderr)
    handler_c2.setLevel(logging.WARNING)

    handler_f.setFormatter(_format)
    handler_c1.setFormatter(_format)
    handler_c2.setFormatter(_format)

    logger_.handlers = [handler_c1, handler_c2, handler_f]

    # worker processes log through the handlers above
    multiprocessing_logging.install_mp_handler()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Stackelberg pricing of RIS reflection resources.')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Scenario JSON file. Defaults are used when omitted.')
    common.add_argument('--set', dest='overrides', action='append', type=ris_utils.Override.convert,
                        metavar='KEY=VALUE', help='Override one scenario field (repeatable).')
    common.add_argument('--log-level', default='INFO', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    common.add_argument('--strict', action='store_true', help='Exit with 3 if any game did not converge.')

    subparsers = parser.add_subparsers(dest='command', required=True)

    run = subparsers.add_parser('run', parents=[common], help='Run a power or location sweep.')
    run.add_argument('--sweep', required=True, choices=('power', 'location'))
    run.add_argument('--scheme', dest='schemes', action='append',
                     help=f"Pricing scheme (repeatable). Defaults to all of: {', '.join(SCHEMES)}.")
    run.add_argument('--seeds', type=ris_utils.SeedRange.convert, default=list(range(10)),
                     help='Channel realizations, e.g. 0..9 or 1,4,7.')
    run.add_argument('--values', type=ris_utils.ValueList.convert, help='Comma separated sweep values.')
    run.add_argument('--out', default='results', help='Output directory.')
    run.add_argument('--audit', action='store_true', help='Recompute every U_bs from its serialized state.')
    run.add_argument('--workers', type=int, default=None, help='Worker processes (default: physical cores).')

    solve = subparsers.add_parser('solve', parents=[common], help='Solve one game on one channel realization.')
    solve.add_argument('--scheme', default='nonuniform')
    solve.add_argument('--seed', type=int, default=None)
    solve.add_argument('--out', default='results/report.json', help='Report JSON path.')
    solve.add_argument('--trace', help='Write the follower iteration trace to this CSV file.')
    solve.add_argument('--dump-channels', help='Save the channel realization to this .npz file.')
    solve.add_argument('--load-channels', help='Use the channel realization stored in this .npz file.')

    oracle = subparsers.add_parser('oracle', parents=[common], help='Compare the follower with the brute force.')
    oracle.add_argument('--seeds', type=ris_utils.SeedRange.convert, default=list(range(25)))
    oracle.add_argument('--restarts', type=int, default=8)
    oracle.add_argument('--out', default='tests/fixtures', help='Fixture directory.')

    return parser


def command_run(args, scenario) -> int:
    spec = SweepSpec(sweep=args.sweep,
                     values=list(args.values) if args.values else None,
                     schemes=args.schemes or list(SCHEMES),
                     seeds=list(args.seeds),
                     out_dir=args.out)
    spec.check_validity()

    table = run_sweep(spec, scenario, workers=args.workers or default_workers())

    emit_csv(table, spec.csv_path())
    emit_summary(table, spec.summary_path())
    logger.info(f'Plot script written to {write_plot_script(spec)}.')

    if args.audit:
        for (value, seed, scheme), report in table.reports.items():
            path = spec.report_path(SweepPoint(value, seed), scheme)
            write_json(report, path)
        audit_table(table, spec, scenario)

    not_converged = [row for row in table.rows if not row['converged']]
    if not_converged:
        logger.warning(f'{len(not_converged)} of {len(table.rows)} games did not converge.')
        if args.strict:
            return EXIT_NOT_CONVERGED

    return EXIT_OK


def write_json(data: dict, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2)
        f.write('\n')


def command_solve(args, scenario) -> int:
    channels = ChannelSet.load(args.load_channels) if args.load_channels else None

    game = PricingGame(scenario, seed=args.seed, channels=channels)
    if args.dump_channels:
        game.channels.save(args.dump_channels)
        logger.info(f'Channels saved to {args.dump_channels}.')

    report = game.solve(args.scheme)
    write_json({'scenario': scenario.to_dict(), 'seed': game.seed, 'report': report.to_dict()}, args.out)
    logger.info(f'Report written to {args.out}: U={report.bs_utility:.6g}, V={np.round(report.ris_utilities, 6)}, '
                f'SE accepted={report.se_check.accepted}.')

    if args.trace:
        pd.DataFrame(report.follower.trace_rows, columns=['iter', 'surrogate', 'power_used', 'max_alpha_gap']) \
            .to_csv(args.trace, index=False, float_format='%.17g', lineterminator='\n')

    if not report.converged and args.strict:
        return EXIT_NOT_CONVERGED

    return EXIT_OK


def command_oracle(args, scenario) -> int:
    budget = OracleBudget(restarts=args.restarts)

    for seed in args.seeds:
        budget.seed = seed
        game = PricingGame(scenario, seed=seed)
        prices = PriceVector.uniform(scenario.price_cap / 2, scenario.num_ris)

        solver_state = game.follower.purchase_decision(prices)
        solver_utility = game.follower.utility(solver_state, prices)
        result = oracle_follower(game.channels, prices, scenario, budget)

        fixture = {
            'source'        : 'oracle',
            'seed'          : seed,
            'scenario'      : scenario.to_dict(),
            'channels'      : game.channels.to_dict(),
            'prices'        : prices.q.tolist(),
            'solver_utility': solver_utility,
            'solver_psi'    : list(solver_state.phase_config.purchase_key),
            'oracle_utility': result.utility,
            'oracle_psi'    : list(result.psi),
            'budget'        : {'restarts': budget.restarts, 'max_iters': budget.max_iters,
                               'tolerance': budget.tolerance, 'seed': budget.seed},
        }
        write_json(fixture, os.path.join(args.out, f'oracle_seed{seed}.json'))
        logger.info(f'Seed {seed}: solver {solver_utility:.6g}, oracle {result.utility:.6g}.')

    return EXIT_OK


COMMANDS = {
    'run'   : command_run,
    'solve' : command_solve,
    'oracle': command_oracle,
}


def main(argv: list[str] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(f'ris_pricing_{args.command}', args.log_level)

    try:
        scenario = load_scenario_file(args.config, ris_utils.Override.to_dict(args.overrides))
        return COMMANDS[args.command](args, scenario)

    except Exception as error:
        if isinstance(error, (ris_utils.ConfigParseError, ris_utils.ValidationError)):
            logger.error(str(error))
            return EXIT_VALIDATION

        elif isinstance(error, ris_utils.SweepPointError):
            logger.error(f'Sweep aborted at {error.point}: {error.cause}')
            return EXIT_VALIDATION

        elif isinstance(error, ris_utils.AuditError):
            logger.error(str(error))
            return EXIT_AUDIT

        else:
            logger.error(f'Internal error: {error}\n{traceback.format_exc()}')
            return EXIT_INTERNAL


if __name__ == '__main__':
    sys.exit(main())
