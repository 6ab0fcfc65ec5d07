"""
Brute-force reference solvers for tiny instances.

Nothing in here shares code with the fractional-programming follower: the oracle enumerates every purchase set
and runs projected gradient ascent on the exact utility from several random starts. It is slow on purpose and
refuses anything beyond a handful of antennas, users and elements.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from models import Beamformers, ChannelSet, PhaseConfig, PriceVector, Scenario
from ris_utils import OracleSizeError, ValidationError
from . import metrics
from .cache import LocalCache
from .follower import FollowerService

__all__ = ['OracleBudget', 'OracleResult', 'oracle_follower', 'oracle_leader_grid', 'ORACLE_LIMITS']

ORACLE_LIMITS = {'num_antennas': 2, 'num_users': 2, 'total_elements': 4}


@dataclass
class OracleBudget:
    grid_size: int = 512
    enumeration_cap: int = 12
    restarts: int = 8
    max_iters: int = 2000
    tolerance: float = 1e-10
    seed: int = 0

    def check_validity(self):
        for name in ('grid_size', 'enumeration_cap', 'restarts', 'max_iters'):
            if getattr(self, name) <= 0:
                raise ValidationError(name, 'must be positive')
        if self.enumeration_cap > 12:
            raise ValidationError('enumeration_cap', 'at most 12 RISs can be enumerated')
        if self.tolerance <= 0:
            raise ValidationError('tolerance', 'must be positive')


@dataclass
class OracleResult:
    utility: float
    psi: tuple[int, ...]
    beamformers: Beamformers
    phase_config: PhaseConfig
    restart: int

    def to_dict(self) -> dict:
        return {'utility': self.utility, 'psi': list(self.psi), 'restart': self.restart}


def check_oracle_size(scenario: Scenario, budget: OracleBudget):
    if scenario.num_antennas > ORACLE_LIMITS['num_antennas']:
        raise OracleSizeError('M', scenario.num_antennas, ORACLE_LIMITS['num_antennas'])
    if scenario.num_users > ORACLE_LIMITS['num_users']:
        raise OracleSizeError('K', scenario.num_users, ORACLE_LIMITS['num_users'])
    if scenario.total_elements > ORACLE_LIMITS['total_elements']:
        raise OracleSizeError('L', scenario.total_elements, ORACLE_LIMITS['total_elements'])
    if scenario.num_ris > budget.enumeration_cap:
        raise OracleSizeError('S', scenario.num_ris, budget.enumeration_cap)


class _ProjectedAscent:
    """Exact sum rate of one purchase set on unit-noise channels, with its Wirtinger gradients."""

    def __init__(self, channels: ChannelSet, psi: tuple[int, ...], p_max: float):
        self.p_max = p_max
        self.template = PhaseConfig.zero_phase(psi, channels.elements_per_ris)
        self.idx = np.flatnonzero(self.template.element_mask)

        self.h_direct = channels.h_direct.conj()
        self.g = channels.g_ris_user[:, self.idx]
        self.h_ris = channels.H_bs_ris[self.idx]

    def split(self, w: np.ndarray, x: np.ndarray):
        """s[k, i] = h_eff,k w_i together with the pieces that depend on x."""
        b = self.h_direct @ w.T
        a = self.g.conj()[:, None, :] * (w @ self.h_ris.T)[None, :, :]
        return a, b, b + a @ x

    def objective(self, w: np.ndarray, x: np.ndarray) -> float:
        _, _, s = self.split(w, x)
        gains = np.abs(s) ** 2
        total = gains.sum(axis=1) + 1.0
        return float(np.sum(np.log(total) - np.log(total - np.diag(gains))))

    def gradients(self, w: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b, s = self.split(w, x)
        gains = np.abs(s) ** 2
        total = gains.sum(axis=1) + 1.0
        interference = total - np.diag(gains)

        # coefficient of d|s_ki|^2 in the objective
        coefficient = 1 / total[:, None] - np.where(np.eye(len(total), dtype=bool), 0.0,
                                                    1 / interference[:, None])
        weighted = coefficient * s

        h_eff = self.h_direct + (self.g.conj() * x) @ self.h_ris
        grad_w = (h_eff.conj().T @ weighted).T
        grad_x = np.einsum('ki,kil->l', weighted, a.conj())
        return grad_w, grad_x

    def project_w(self, w: np.ndarray) -> np.ndarray:
        power = float(np.sum(np.abs(w) ** 2))
        return w * np.sqrt(self.p_max / power) if power > self.p_max else w

    @staticmethod
    def project_x(x: np.ndarray) -> np.ndarray:
        return np.exp(1j * np.angle(x))

    def _line_search(self, value: float, step: float, move):
        """Halves the step until the projected move improves the objective."""
        while step > 1e-16:
            candidate, candidate_value = move(step)
            if candidate_value > value:
                return candidate, candidate_value, step * 2
            step /= 2
        return None, value, step

    def run(self, w: np.ndarray, x: np.ndarray, budget: OracleBudget) -> tuple[float, np.ndarray, np.ndarray]:
        w, x = self.project_w(w), self.project_x(x)
        value = self.objective(w, x)
        step_w = step_x = 1.0

        for _ in range(budget.max_iters):
            previous = value
            grad_w, grad_x = self.gradients(w, x)

            def move_w(step, w=w, x=x):
                candidate = self.project_w(w + 2 * step * grad_w)
                return candidate, self.objective(candidate, x)

            new_w, value, step_w = self._line_search(value, step_w, move_w)
            if new_w is not None:
                w = new_w

            if x.size:
                def move_x(step, w=w, x=x):
                    candidate = self.project_x(x + 2 * step * grad_x)
                    return candidate, self.objective(w, candidate)

                new_x, value, step_x = self._line_search(value, step_x, move_x)
                if new_x is not None:
                    x = new_x

            if value - previous <= budget.tolerance * max(1.0, abs(previous)):
                break

        return value, w, x


def oracle_follower(channels: ChannelSet, prices: PriceVector, scenario: Scenario,
                    budget: OracleBudget = None, p_max: float = None) -> OracleResult:
    budget = budget or OracleBudget()
    budget.check_validity()
    check_oracle_size(scenario, budget)

    normalized = channels.normalized(scenario.noise_power)
    p_max = scenario.p_max if p_max is None else p_max
    m, k = scenario.num_antennas, scenario.num_users

    best: OracleResult | None = None
    for psi in itertools.product((0, 1), repeat=scenario.num_ris):
        ascent = _ProjectedAscent(normalized, psi, p_max)
        cost = metrics.purchase_cost(prices, np.array(psi, dtype=bool), scenario)

        for restart in range(budget.restarts):
            if restart == 0:
                # matched filter with an equal power split, zero phases
                phase_config = PhaseConfig.zero_phase(psi, channels.elements_per_ris)
                h_eff = metrics.effective_channels(normalized, phase_config)
                norms = np.linalg.norm(h_eff, axis=1, keepdims=True)
                w = np.divide(h_eff.conj(), norms, out=np.zeros_like(h_eff), where=norms > 0)
                w *= np.sqrt(p_max / k)
                x = np.ones(ascent.idx.size, dtype=complex)
            else:
                rng = np.random.default_rng(np.random.SeedSequence([budget.seed, restart, *psi]))
                w = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
                w *= np.sqrt(p_max) / np.linalg.norm(w)
                x = np.exp(1j * rng.uniform(0, 2 * np.pi, ascent.idx.size))

            rate, w, x = ascent.run(w, x, budget)
            utility = scenario.rate_scale * rate - cost

            # ties keep the earlier purchase set and restart
            if best is None or utility > best.utility:
                phi = np.ones(channels.total_elements, dtype=complex)
                phi[ascent.idx] = x
                best = OracleResult(utility=utility,
                                    psi=tuple(psi),
                                    beamformers=Beamformers(w),
                                    phase_config=PhaseConfig(psi, phi, channels.elements_per_ris),
                                    restart=restart)

    return best


def oracle_leader_grid(channels: ChannelSet, scenario: Scenario, grid: np.ndarray = None,
                       budget: OracleBudget = None) -> tuple[float, float]:
    """Dense scan of the uniform price, the follower fully re-solved at every point. Returns (price, revenue)."""
    budget = budget or OracleBudget()
    if grid is None:
        grid = np.linspace(0.0, scenario.price_cap, budget.grid_size) if scenario.price_cap > 0 else np.zeros(1)

    follower = FollowerService(scenario, channels, cache=LocalCache('oracle'))

    best_price, best_revenue = 0.0, -np.inf
    for q in np.asarray(grid, dtype=float):
        prices = PriceVector.uniform(q, scenario.num_ris)
        state = follower.purchase_decision(prices)
        revenue = float(np.sum(metrics.ris_utilities(prices, state.phase_config, scenario)))

        if revenue > best_revenue:
            best_price, best_revenue = float(q), revenue

    return best_price, best_revenue
