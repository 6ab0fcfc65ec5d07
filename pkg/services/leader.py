"""
Price setting of the RIS holders.

Every holder best-responds against the best response of the BS: a price grid over [0, q_max] is scanned
(the follower is re-solved at every trial price, which is cheap thanks to the purchase-set cache) and the best
bracket is refined by a golden-section search. The revenue of a holder jumps whenever the BS changes its purchase,
so nothing here relies on derivatives.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import optimize

from models import EquilibriumReport, FollowerState, PriceVector, SECheck
from ris_utils import Timer, ValidationError
from . import metrics
from ._base_service import BaseService
from .follower import FollowerService

__all__ = ['LeaderService', 'SCHEMES', 'SCHEME_ALIASES', 'resolve_scheme']

SCHEMES = ('nonuniform', 'uniform', 'random-nonuniform', 'random-uniform')
SCHEME_ALIASES = {
    'random'                : 'random-nonuniform',
    'non-uniform'           : 'nonuniform',
    'stackelberg-nonuniform': 'nonuniform',
    'stackelberg-uniform'   : 'uniform',
}

# relative improvement a deviation needs before the equilibrium is rejected
SE_ACCEPTANCE = 1e-3

RevenueFunction = Callable[[float], float]


def resolve_scheme(scheme: str) -> str:
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    if scheme not in SCHEMES:
        raise ValidationError('scheme', f"must be one of {', '.join(SCHEMES)}, got '{scheme}'")
    return scheme


class LeaderService(BaseService):
    LOGGER_NAME = 'Leader'

    def __init__(self, follower: FollowerService):
        super().__init__(follower.scenario)

        self.follower = follower
        self.channels = follower.channels

    @property
    def q_max(self) -> float:
        return self.scenario.price_cap

    def price_grid(self, size: int = None) -> np.ndarray:
        """Half linear, half geometric points of [0, q_max], both ends included."""
        size = size or self.scenario.price_grid_size
        if self.q_max <= 0:
            return np.zeros(1)

        linear = np.linspace(0.0, self.q_max, size // 2)
        geometric = np.geomspace(self.q_max * 1e-4, self.q_max, size - size // 2)
        return np.unique(np.concatenate(([0.0, self.q_max], linear, geometric)))

    # revenues seen by the leaders
    def follower_response(self, prices: PriceVector) -> FollowerState:
        return self.follower.purchase_decision(prices)

    def revenue(self, s: int, prices: PriceVector) -> float:
        state = self.follower_response(prices)
        return metrics.ris_utility(prices, state.phase_config, s, self.scenario)

    def total_revenue(self, prices: PriceVector) -> float:
        state = self.follower_response(prices)
        return float(np.sum(metrics.ris_utilities(prices, state.phase_config, self.scenario)))

    # one-dimensional price search
    @staticmethod
    def grid_search(revenue: RevenueFunction, grid: np.ndarray) -> tuple[int, float, float]:
        """Returns (index, price, revenue) of the grid maximum, the lowest price among ties."""
        values = np.array([revenue(float(q)) for q in grid])
        best = int(np.argmax(values))
        return best, float(grid[best]), float(values[best])

    def refine(self, revenue: RevenueFunction, grid: np.ndarray, best: int, value: float) -> tuple[float, float]:
        price = float(grid[best])
        if best == 0 or best == len(grid) - 1:
            return price, value

        bracket = (float(grid[best - 1]), price, float(grid[best + 1]))
        try:
            result = optimize.minimize_scalar(lambda q: -revenue(float(np.clip(q, 0.0, self.q_max))),
                                              bracket=bracket, method='golden', options={'maxiter': 40})
        except ValueError:
            # flat neighbourhood, the grid point already wins
            return price, value

        refined = float(np.clip(result.x, 0.0, self.q_max))
        refined_value = revenue(refined)
        if refined_value > value + 1e-12:
            return refined, refined_value

        return price, value

    def best_price(self, revenue: RevenueFunction) -> tuple[float, float]:
        grid = self.price_grid()
        best, price, value = self.grid_search(revenue, grid)
        return self.refine(revenue, grid, best, value)

    def price_best_response(self, s: int, current_prices: PriceVector) -> float:
        if not 0 <= s < self.scenario.num_ris:
            raise ValidationError('s', f'RIS index must lie within [0, {self.scenario.num_ris - 1}], got {s}')

        price, value = self.best_price(lambda q: self.revenue(s, current_prices.with_price(s, q)))
        self.logger.debug(f'RIS {s + 1} answers {current_prices} with q={price:.6g} (V={value:.6g}).')
        return price

    def uniform_best_price(self) -> float:
        price, _ = self.best_price(lambda q: self.total_revenue(PriceVector.uniform(q, self.scenario.num_ris)))
        return price

    # full games
    def stackelberg_solve(self, scheme: str = 'nonuniform') -> EquilibriumReport:
        scheme = resolve_scheme(scheme)
        if scheme.startswith('random'):
            raise ValidationError('scheme', 'random pricing is not a Stackelberg scheme, use random_pricing()')

        timer = Timer()
        num_ris = self.scenario.num_ris

        if scheme == 'uniform':
            prices = PriceVector.uniform(self.uniform_best_price(), num_ris)
            report = self.assemble_report(scheme, prices, rounds=1, converged=True, price_trace=[prices.q.tolist()])
        else:
            prices = PriceVector(np.full(num_ris, self.q_max / 2))
            tolerance = self.scenario.outer_tolerance * self.q_max
            price_trace = [prices.q.tolist()]

            rounds, converged = 0, False
            while rounds < self.scenario.max_outer_iters:
                rounds += 1
                previous = prices.q.copy()

                # holders move one after another, each seeing the latest prices
                for s in range(num_ris):
                    prices = prices.with_price(s, self.price_best_response(s, prices))

                price_trace.append(prices.q.tolist())
                change = float(np.max(np.abs(prices.q - previous))) if num_ris else 0.0
                self.logger.debug(f'Round {rounds}: prices={np.round(prices.q, 6).tolist()} change={change:.3g}')

                if change <= tolerance:
                    converged = True
                    break

            if not converged:
                self.logger.warning(f'Price competition did not settle in {rounds} rounds.')

            report = self.assemble_report(scheme, prices, rounds=rounds, converged=converged, price_trace=price_trace)

        self.logger.info(f'{scheme} game solved in {report.rounds} round(s) '
                         f'({timer.passed_seconds_in_float_formatted}): U={report.bs_utility:.6g}, '
                         f'q={np.round(report.prices.q, 6).tolist()}, psi={report.follower.phase_config.purchase_key}')
        return report

    def random_pricing(self, rng: np.random.Generator, scheme: str = 'random-nonuniform') -> EquilibriumReport:
        scheme = resolve_scheme(scheme)
        num_ris = self.scenario.num_ris

        if scheme == 'random-uniform':
            prices = PriceVector.uniform(rng.uniform(0.0, self.q_max), num_ris)
        else:
            prices = PriceVector(rng.uniform(0.0, self.q_max, size=num_ris))

        return self.assemble_report(scheme, prices, rounds=0, converged=True, price_trace=[prices.q.tolist()])

    def solve(self, scheme: str, rng: np.random.Generator = None) -> EquilibriumReport:
        scheme = resolve_scheme(scheme)
        if scheme.startswith('random'):
            if rng is None:
                raise ValidationError('rng', 'random pricing needs a seeded generator')
            return self.random_pricing(rng, scheme)

        return self.stackelberg_solve(scheme)

    def assemble_report(self, scheme: str, prices: PriceVector, rounds: int, converged: bool,
                        price_trace: list[list[float]]) -> EquilibriumReport:
        prices.check_validity(self.scenario.price_cap)
        state = self.follower_response(prices)

        # utilities are recomputed on the unscaled channels, never taken from the solver
        report = EquilibriumReport(
            scheme=scheme,
            prices=prices,
            follower=state,
            ris_utilities=metrics.ris_utilities(prices, state.phase_config, self.scenario),
            bs_utility=metrics.bs_utility(self.channels, state.phase_config, state.beamformers, prices,
                                          self.scenario),
            rounds=rounds,
            converged=converged,
            price_trace=price_trace,
        )
        report.se_check = self.verify_se(report)
        return report

    def verify_se(self, report: EquilibriumReport, grid_size: int = None, grid: np.ndarray = None) -> SECheck:
        """
        Largest gain any holder gets from a unilateral price change on the deviation grid.
        Under uniform pricing the shared price is the only strategy, checked against the total revenue.
        """
        if grid is None:
            grid = self.price_grid(grid_size or self.scenario.verify_grid_size)
        grid = np.unique(np.append(np.asarray(grid, dtype=float), report.prices.q))

        prices = report.prices
        if prices.scheme == 'uniform':
            current = float(np.sum(report.ris_utilities))
            best = max(self.total_revenue(PriceVector.uniform(q, self.scenario.num_ris)) for q in grid)
            deviations = [best - current]
            references = [current]
        else:
            deviations, references = [], []
            for s in range(self.scenario.num_ris):
                current = float(report.ris_utilities[s])
                best = max(self.revenue(s, prices.with_price(s, float(q))) for q in grid)
                deviations.append(best - current)
                references.append(current)

        accepted = all(d < SE_ACCEPTANCE * max(1.0, v) for d, v in zip(deviations, references))
        return SECheck(max_deviation=[float(d) for d in deviations], grid_size=int(grid.size), accepted=accepted)
