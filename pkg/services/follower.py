"""
Best response of the base station.

Given the prices, the BS picks the RISs it buys (psi), its transmit beamformers w and the phases phi of the
purchased elements. For a fixed psi the problem is solved by alternating optimization on the
Lagrangian-dual-transform surrogate of the sum rate:

    f(w, phi, alpha) = sum_k log(1 + alpha_k) - alpha_k + (1 + alpha_k) gamma_k / (1 + gamma_k)  -  cost(psi)

alpha is updated in closed form (alpha = gamma), w through the quadratic transform with auxiliary beta and the
power multiplier lambda0 found by bisection, phi through the quadratic transform with auxiliary theta followed by
a unit-modulus projection. Every step is a maximization of a tight minorizer, so the surrogate never decreases.

Each phase step inverts an L' x L' matrix, L' = sum_s psi_s L_s, which dominates the cost of an iteration.

All arithmetic runs on channels scaled to unit noise power; SINRs are identical to the unscaled ones.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy import optimize

from models import Beamformers, ChannelSet, FollowerState, PhaseConfig, PriceVector, Scenario
from ris_utils import SolverError, Timer
from . import metrics
from ._base_service import BaseService
from .cache import BaseCache, LocalCache

__all__ = ['FollowerService', 'RESTART_STREAM']

RESTART_STREAM = 4

# eigenvalues below this fraction of the largest one are treated as the null space
NULL_SPACE_TOL = 1e-12


class FollowerService(BaseService):
    LOGGER_NAME = 'Follower'

    def __init__(self, scenario: Scenario, channels: ChannelSet, p_max: float = None, cache: BaseCache = None):
        super().__init__(scenario)

        self.channels = channels
        self.normalized = channels.normalized(scenario.noise_power)
        self.p_max = scenario.p_max if p_max is None else float(p_max)

        self.cache: BaseCache = cache if cache is not None else LocalCache()
        self.solve_counter = 0

    # evaluation helpers
    def gammas(self, state: FollowerState) -> np.ndarray:
        return metrics.sinrs(self.normalized, state.phase_config, state.beamformers, 1.0)

    def rate(self, state: FollowerState) -> float:
        return self.scenario.rate_scale * float(np.sum(np.log1p(self.gammas(state))))

    def utility(self, state: FollowerState, prices: PriceVector) -> float:
        return self.rate(state) - metrics.purchase_cost(prices, state.psi, self.scenario)

    def surrogate_objective(self, state: FollowerState, prices: PriceVector) -> float:
        h_eff = metrics.effective_channels(self.normalized, state.phase_config)
        gains = np.abs(h_eff @ state.beamformers.w.T) ** 2

        # gamma / (1 + gamma) written without forming gamma
        ratio = np.diag(gains) / (gains.sum(axis=1) + 1.0)
        alpha = state.alpha

        rate_part = float(np.sum(np.log1p(alpha) - alpha + (1 + alpha) * ratio))
        return self.scenario.rate_scale * rate_part - metrics.purchase_cost(prices, state.psi, self.scenario)

    # initialization
    def matched_filter(self, phase_config: PhaseConfig) -> Beamformers:
        """w_k along h_eff,k^H, the power budget split equally among the users."""
        h_eff = metrics.effective_channels(self.normalized, phase_config)
        norms = np.linalg.norm(h_eff, axis=1)

        w = np.zeros_like(h_eff)
        active = norms > 0
        w[active] = h_eff[active].conj() / norms[active, None]

        return Beamformers(w * np.sqrt(self.p_max / self.scenario.num_users))

    def initial_state(self, psi, warm_start: FollowerState = None, phases: np.ndarray = None) -> FollowerState:
        k = self.scenario.num_users
        elements = self.scenario.elements_per_ris

        phase_config = PhaseConfig.zero_phase(psi, elements)
        if phases is not None:
            phase_config.phi = np.asarray(phases, dtype=complex).copy()
        elif warm_start is not None:
            # keep the tuned phases of RISs both solutions hold
            shared = phase_config.element_mask & warm_start.phase_config.element_mask
            phase_config.phi[shared] = warm_start.phase_config.phi[shared]

        if warm_start is not None:
            beamformers = warm_start.beamformers.copy()
            power = beamformers.power
            if power > self.p_max:
                beamformers.w *= np.sqrt(self.p_max / power)
        else:
            beamformers = self.matched_filter(phase_config)

        state = FollowerState(beamformers=beamformers,
                              phase_config=phase_config,
                              alpha=np.zeros(k),
                              beta=np.zeros(k, dtype=complex),
                              theta=np.zeros(k, dtype=complex),
                              phi_dual=np.zeros(self.scenario.num_ris))
        return self.update_alpha(state)

    # the three block updates
    def update_alpha(self, state: FollowerState) -> FollowerState:
        """Stationary point of the dual transform: alpha = gamma."""
        state.alpha = self.gammas(state)
        return state

    def update_beamformers(self, state: FollowerState) -> FollowerState:
        """Beamformer block: quadratic transform in w under the sum-power budget."""
        k = self.scenario.num_users

        if self.p_max <= 0:
            state.beamformers = Beamformers.zeros(k, self.scenario.num_antennas)
            state.beta = np.zeros(k, dtype=complex)
            state.lambda0 = 0.0
            return state

        h_eff = metrics.effective_channels(self.normalized, state.phase_config)
        w = state.beamformers.w
        weight = np.sqrt(1 + state.alpha)

        s = h_eff @ w.T
        denominator = np.sum(np.abs(s) ** 2, axis=1) + 1.0
        beta = weight * np.diag(s) / denominator
        state.beta = beta

        # w_k = (lambda0 I + sum_j |beta_j|^2 h_j^H h_j)^-1 sqrt(1 + alpha_k) beta_k h_k^H
        a = (h_eff.conj().T * np.abs(beta) ** 2) @ h_eff
        b = h_eff.conj().T * (weight * beta)

        eigenvalues, eigenvectors = np.linalg.eigh(a)
        y = eigenvectors.conj().T @ b
        row_power = np.sum(np.abs(y) ** 2, axis=1)

        if eigenvalues.max(initial=0.0) <= 0 or not np.any(row_power > 0):
            # nothing to gain from transmitting
            state.beamformers = Beamformers.zeros(k, self.scenario.num_antennas)
            state.lambda0 = 0.0
            return state

        keep = eigenvalues > NULL_SPACE_TOL * eigenvalues.max()
        d, row_power = eigenvalues[keep], row_power[keep]

        def power(lam: float) -> float:
            return float(np.sum(row_power / (d + lam) ** 2))

        if power(0.0) <= self.p_max:
            lambda0 = 0.0
        else:
            # power(hi) <= sum(row_power) / hi^2 == p_max, so [0, hi] brackets the root
            hi = float(np.sqrt(row_power.sum() / self.p_max))
            try:
                lambda0 = optimize.bisect(lambda lam: power(lam) - self.p_max, 0.0, hi,
                                          xtol=hi * 1e-13, maxiter=self.scenario.bisection_max_steps)
            except (RuntimeError, ValueError) as e:
                raise SolverError('Power multiplier bisection failed',
                                  diagnostics={'p_max': self.p_max, 'power_at_zero': power(0.0), 'hi': hi,
                                               'error': str(e)})

        w_new = (eigenvectors[:, keep] @ (y[keep] / (d + lambda0)[:, None])).T

        used = float(np.sum(np.abs(w_new) ** 2))
        if used > self.p_max:
            # bisection stops on either side of the root
            w_new *= np.sqrt(self.p_max / used)

        state.beamformers = Beamformers(w_new)
        state.lambda0 = float(lambda0)
        return state

    def update_phases(self, state: FollowerState) -> FollowerState:
        """Phase block: quadratic transform in phi, unit-modulus projection over purchased elements."""
        phase_config = state.phase_config
        if not phase_config.psi.any():
            return state

        idx = np.flatnonzero(phase_config.element_mask)
        w = state.beamformers.w
        weight = np.sqrt(1 + state.alpha)

        h_direct = self.normalized.h_direct.conj()
        g = self.normalized.g_ris_user[:, idx]
        h_ris = self.normalized.H_bs_ris[idx]

        # h_eff,k w_i = b[k, i] + a[k, i] . x   with x the purchased phases
        b = h_direct @ w.T
        hw = w @ h_ris.T
        a = g.conj()[:, None, :] * hw[None, :, :]

        x0 = phase_config.phi[idx]
        s = b + a @ x0
        denominator = np.sum(np.abs(s) ** 2, axis=1) + 1.0
        theta = weight * np.diag(s) / denominator
        state.theta = theta

        # surrogate in x: -x^H Q x + 2 Re{x^H v}
        theta_power = np.abs(theta) ** 2
        diagonal = np.arange(a.shape[0])
        q = np.einsum('k,kil,kim->lm', theta_power, a.conj(), a)
        v = (weight * theta)[:, None] * a[diagonal, diagonal].conj()
        v = v.sum(axis=0) - np.einsum('k,kil,ki->l', theta_power, a.conj(), b)

        def project(z: np.ndarray) -> np.ndarray:
            return np.exp(1j * np.angle(z))

        # projected unconstrained maximizer, then a majorization step that cannot decrease the surrogate
        unconstrained = np.linalg.lstsq(q, v, rcond=None)[0]
        top = float(np.linalg.eigvalsh(q)[-1]) if q.size else 0.0
        candidates = [x0, project(unconstrained), project(top * x0 - q @ x0 + v)]

        values = []
        for x in candidates:
            trial = phase_config.copy()
            trial.phi[idx] = x
            values.append(self._ratio_surrogate(state, trial))

        best = candidates[int(np.argmax(values))]

        phi = phase_config.phi.copy()
        phi[idx] = best / np.abs(best)
        state.phase_config = PhaseConfig(phase_config.psi, phi, phase_config.elements_per_ris)

        # multiplier estimate of the unit-modulus constraints, kept for diagnostics
        gradient = v - q @ best
        multipliers = np.zeros(phase_config.phi.size)
        multipliers[idx] = np.real(best.conj() * gradient)
        owner = np.asarray(self.scenario.element_owner)
        state.phi_dual = np.array([multipliers[owner == r].mean() if phase_config.psi[r] else 0.0
                                   for r in range(self.scenario.num_ris)])
        return state

    def _ratio_surrogate(self, state: FollowerState, phase_config: PhaseConfig) -> float:
        h_eff = metrics.effective_channels(self.normalized, phase_config)
        gains = np.abs(h_eff @ state.beamformers.w.T) ** 2
        ratio = np.diag(gains) / (gains.sum(axis=1) + 1.0)
        return float(np.sum((1 + state.alpha) * ratio))

    # solvers
    def solve_p1(self, prices: PriceVector, psi, warm_start: FollowerState = None,
                 phases: np.ndarray = None) -> FollowerState:
        """Alternating optimization for a fixed purchase set."""
        timer = Timer()
        tolerance = self.scenario.inner_tolerance

        state = self.initial_state(psi, warm_start=warm_start, phases=phases)
        previous = self.surrogate_objective(state, prices)
        state.trace = [previous]

        for iteration in range(1, self.scenario.max_inner_iters + 1):
            self.update_alpha(state)
            self.update_beamformers(state)
            self.update_phases(state)

            current = self.surrogate_objective(state, prices)
            gammas = self.gammas(state)

            state.trace.append(current)
            state.trace_rows.append({
                'iter'         : iteration,
                'surrogate'    : current,
                'power_used'   : state.beamformers.power,
                'max_alpha_gap': float(np.max(np.abs(state.alpha - gammas))),
            })
            state.iterations = iteration

            if abs(current - previous) <= tolerance * max(abs(previous), np.finfo(float).tiny):
                state.converged = True
                break

            previous = current

        # leave the transform tight so the surrogate equals the utility
        self.update_alpha(state)
        state.surrogate = self.surrogate_objective(state, prices)
        self.solve_counter += 1

        if not state.converged:
            self.logger.warning(f'Purchase set {state.phase_config.purchase_key} did not converge '
                                f'in {state.iterations} iterations.')

        self.logger.debug(f'Solved purchase set {state.phase_config.purchase_key} in {state.iterations} iterations '
                          f'({timer.passed_seconds_in_float_formatted}), surrogate={state.surrogate:.6g}')
        return state

    def solve_with_restarts(self, prices: PriceVector, psi, warm_start: FollowerState = None) -> FollowerState:
        best = self.solve_p1(prices, psi, warm_start=warm_start)

        key = tuple(int(x) for x in np.asarray(psi, dtype=bool))
        if self.scenario.follower_restarts and any(key):
            seed_sequence = np.random.SeedSequence([self.scenario.rng_seed, RESTART_STREAM, *key])
            for child in seed_sequence.spawn(self.scenario.follower_restarts):
                rng = np.random.default_rng(child)
                phases = np.exp(1j * rng.uniform(0, 2 * np.pi, self.scenario.total_elements))

                candidate = self.solve_p1(prices, psi, phases=phases)
                if candidate.surrogate > best.surrogate:
                    best = candidate

        return best

    def solve_for_purchase(self, psi, warm_start: FollowerState = None) -> FollowerState:
        """Price-independent solution for one purchase set, cached per channel realization."""
        key = tuple(int(x) for x in np.asarray(psi, dtype=bool))

        state = self.cache.get(key)
        if state is None:
            free = PriceVector.zeros(self.scenario.num_ris)
            state = self.solve_with_restarts(free, key, warm_start=warm_start)
            self.cache.set(key, state)

        return state

    def _priced(self, state: FollowerState, prices: PriceVector) -> FollowerState:
        """Moves a price-free cached solution to the given prices (a constant shift of the surrogate)."""
        cost = metrics.purchase_cost(prices, state.psi, self.scenario)
        state.trace = [f - cost for f in state.trace]
        for row in state.trace_rows:
            row['surrogate'] -= cost
        state.surrogate = self.surrogate_objective(state, prices)
        return state

    def _warm_start_for(self, key: tuple[int, ...]) -> FollowerState | None:
        """Best cached solution among the purchase sets that drop one RIS from `key`."""
        best, best_rate = None, -np.inf
        for s, bought in enumerate(key):
            if not bought:
                continue
            subset = key[:s] + (0,) + key[s + 1:]
            state = self.cache.get(subset)
            if state is not None:
                rate = self.rate(state)
                if rate > best_rate:
                    best, best_rate = state, rate
        return best

    def evaluate_purchase(self, key: tuple[int, ...], prices: PriceVector) -> tuple[float, FollowerState]:
        state = self.solve_for_purchase(key, warm_start=self._warm_start_for(key))
        return self.utility(state, prices), state

    @staticmethod
    def _preference(utility: float, key: tuple[int, ...]):
        # ties go toward buying more, then toward the lexicographically larger psi
        return round(utility, 12), sum(key), key

    def purchase_decision(self, prices: PriceVector) -> FollowerState:
        if self.scenario.num_ris <= self.scenario.exhaustive_cap:
            key, state = self._exhaustive_purchase(prices)
        else:
            key, state = self._greedy_purchase(prices)

        return self._priced(state, prices)

    def _exhaustive_purchase(self, prices: PriceVector) -> tuple[tuple[int, ...], FollowerState]:
        keys = sorted(itertools.product((0, 1), repeat=self.scenario.num_ris), key=lambda x: (sum(x), x))

        best_key, best_state, best_pref = None, None, None
        for key in keys:
            utility, state = self.evaluate_purchase(key, prices)
            preference = self._preference(utility, key)
            if best_pref is None or preference > best_pref:
                best_key, best_state, best_pref = key, state, preference

        return best_key, best_state

    def _greedy_purchase(self, prices: PriceVector) -> tuple[tuple[int, ...], FollowerState]:
        """Backward elimination from buying everything."""
        key = (1,) * self.scenario.num_ris

        # solve the chain top-down so every smaller set can warm start from its superset
        utility, state = self.evaluate_purchase_top_down(key, None, prices)

        while any(key):
            best = None
            for s in np.flatnonzero(key):
                candidate = key[:s] + (0,) + key[s + 1:]
                candidate_utility, candidate_state = self.evaluate_purchase_top_down(candidate, state, prices)
                preference = (round(candidate_utility, 12), candidate)
                if best is None or preference > best[0]:
                    best = (preference, candidate, candidate_utility, candidate_state)

            # strict improvement needed, so ties keep the larger purchase
            if best[2] > utility + 1e-12:
                _, key, utility, state = best
            else:
                break

        return key, state

    def evaluate_purchase_top_down(self, key: tuple[int, ...], parent: FollowerState | None,
                                   prices: PriceVector) -> tuple[float, FollowerState]:
        state = self.solve_for_purchase(key, warm_start=parent)
        return self.utility(state, prices), state

    def null_strategy(self, prices: PriceVector) -> FollowerState:
        """No RIS bought, matched filter with equal power split."""
        state = self.initial_state(np.zeros(self.scenario.num_ris, dtype=bool))
        state.surrogate = self.surrogate_objective(state, prices)
        return state
