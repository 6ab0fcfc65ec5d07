from __future__ import annotations

import logging
import multiprocessing
import os

import psutil
import setproctitle

from models import EquilibriumReport, Scenario
from pricing_game import PricingGame
from ris_utils import Timer
from services import SweepPoint, SweepSpec, SweepTable, scenario_for

manager_logger = logging.getLogger('Sweep Manager')


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or 1


def _init_worker(sweep: str):
    # set process title so that we can find it like in htop
    setproctitle.setproctitle(f'ris-pricing {sweep} worker #{os.getpid()}')


def run_point(scenario_data: dict, sweep: str, schemes: list[str], point: SweepPoint) -> list[EquilibriumReport]:
    """One (value, seed) pair: a single game solved under every scheme."""
    logger = logging.getLogger(f'Worker#{os.getpid()}')
    timer = Timer()

    scenario = scenario_for(Scenario(scenario_data), sweep, point.value)
    game = PricingGame(scenario, seed=point.seed)
    reports = game.solve_all(schemes)

    logger.info(f'{sweep}={point.value:g} seed={point.seed} done in {timer.passed_seconds_in_float_formatted}.')
    return reports


def _run_point_star(args) -> list[EquilibriumReport]:
    return run_point(*args)


class SweepManager:
    def __init__(self, spec: SweepSpec, base: Scenario, workers: int = None):
        self.spec = spec
        self.base = base
        self.workers = workers or default_workers()

    def check_points(self):
        """Every sweep value is validated before any work starts."""
        self.spec.check_validity()
        for value in self.spec.values:
            scenario_for(self.base, self.spec.sweep, value)

    def run(self) -> SweepTable:
        self.check_points()

        points = self.spec.points()
        jobs = [(self.base.to_dict(), self.spec.sweep, self.spec.schemes, point) for point in points]

        timer = Timer()
        manager_logger.info(f'Running {len(points)} points x {len(self.spec.schemes)} schemes '
                            f'on {self.workers} worker(s).')

        if self.workers == 1:
            results = [_run_point_star(job) for job in jobs]
        else:
            with multiprocessing.Pool(processes=self.workers, initializer=_init_worker,
                                      initargs=(self.spec.sweep,)) as pool:
                # imap keeps the order of the points regardless of which worker finishes first
                results = list(pool.imap(_run_point_star, jobs))

        table = SweepTable(self.spec.sweep, self.base.num_ris, self.spec.schemes)
        for point, reports in zip(points, results):
            for report in reports:
                table.add(point, report)

        memory = psutil.Process().memory_info().rss / 2 ** 20
        manager_logger.info(f'Sweep finished in {timer.passed_string} ({memory:.0f} MiB resident).')
        return table


def run_sweep(spec: SweepSpec, base: Scenario, workers: int = 1) -> SweepTable:
    return SweepManager(spec, base, workers).run()
