from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ris_utils import StructuralError, ValidationError

__all__ = ['PriceVector', 'PhaseConfig', 'Beamformers', 'FollowerState', 'SECheck', 'EquilibriumReport',
           'PRICING_SCHEMES', 'REPORT_SCHEMA_VERSION', 'complex_to_pairs', 'pairs_to_complex']

PRICING_SCHEMES = ('uniform', 'nonuniform')
REPORT_SCHEMA_VERSION = 1


def complex_to_pairs(array: np.ndarray) -> list:
    """JSON has no complex numbers, so every entry becomes [re, im]."""
    array = np.asarray(array, dtype=complex)
    return np.stack((array.real, array.imag), axis=-1).tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    array = np.asarray(pairs, dtype=float)
    return array[..., 0] + 1j * array[..., 1]


class PriceVector:
    def __init__(self, q, scheme: str = 'nonuniform'):
        self.q = np.array(q, dtype=float).reshape(-1)
        self.scheme = scheme

        if scheme not in PRICING_SCHEMES:
            raise ValidationError('scheme', f"must be one of {', '.join(PRICING_SCHEMES)}")

    @classmethod
    def uniform(cls, price: float, num_ris: int) -> PriceVector:
        return cls(np.full(num_ris, float(price)), scheme='uniform')

    @classmethod
    def zeros(cls, num_ris: int, scheme: str = 'nonuniform') -> PriceVector:
        return cls(np.zeros(num_ris), scheme=scheme)

    def with_price(self, s: int, price: float) -> PriceVector:
        q = self.q.copy()
        q[s] = price
        return PriceVector(q, scheme=self.scheme)

    def check_validity(self, price_cap: float, tol: float = 1e-12):
        if np.any(self.q < -tol) or np.any(self.q > price_cap + tol):
            raise ValidationError('prices', f'every price must lie within [0, {price_cap}], got {self.q.tolist()}')
        if self.scheme == 'uniform' and self.q.size and np.ptp(self.q) > tol:
            raise ValidationError('prices', 'uniform pricing requires equal prices')

    def __len__(self):
        return self.q.size

    def __getitem__(self, item):
        return self.q[item]

    def __repr__(self):
        return f'<PriceVector {self.scheme} {np.round(self.q, 6).tolist()}>'


class PhaseConfig:
    """Purchase indicators psi (per RIS) and unit-modulus coefficients phi (per element)."""

    def __init__(self, psi, phi, elements_per_ris):
        self.psi = np.array(psi, dtype=bool).reshape(-1)
        self.phi = np.array(phi, dtype=complex).reshape(-1)
        self.elements_per_ris = tuple(int(n) for n in elements_per_ris)

        if self.psi.size != len(self.elements_per_ris):
            raise StructuralError(f'psi has {self.psi.size} entries for {len(self.elements_per_ris)} RISs.')
        if self.phi.size != sum(self.elements_per_ris):
            raise StructuralError(f'phi has {self.phi.size} entries for {sum(self.elements_per_ris)} elements.')

    @classmethod
    def idle(cls, elements_per_ris) -> PhaseConfig:
        return cls(np.zeros(len(elements_per_ris), dtype=bool), np.ones(sum(elements_per_ris)), elements_per_ris)

    @classmethod
    def zero_phase(cls, psi, elements_per_ris) -> PhaseConfig:
        return cls(psi, np.ones(sum(elements_per_ris)), elements_per_ris)

    @property
    def element_mask(self) -> np.ndarray:
        """True for the elements of purchased RISs."""
        return np.repeat(self.psi, self.elements_per_ris)

    @property
    def reflection(self) -> np.ndarray:
        """Diagonal of Phi. Idle RISs absorb, so their entries are zero."""
        return np.where(self.element_mask, self.phi, 0)

    @property
    def purchase_key(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.psi)

    def copy(self) -> PhaseConfig:
        return PhaseConfig(self.psi.copy(), self.phi.copy(), self.elements_per_ris)


class Beamformers:
    def __init__(self, w):
        # row k is w_k
        self.w = np.array(w, dtype=complex)
        if self.w.ndim != 2:
            raise StructuralError('Beamformers must be a K x M array.')

    @classmethod
    def zeros(cls, num_users: int, num_antennas: int) -> Beamformers:
        return cls(np.zeros((num_users, num_antennas), dtype=complex))

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))

    def copy(self) -> Beamformers:
        return Beamformers(self.w.copy())


@dataclass
class FollowerState:
    beamformers: Beamformers
    phase_config: PhaseConfig
    alpha: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    lambda0: float = 0.0
    phi_dual: np.ndarray = None
    iterations: int = 0
    converged: bool = False
    surrogate: float = 0.0
    trace: list[float] = field(default_factory=list)
    trace_rows: list[dict[str, float]] = field(default_factory=list)

    @property
    def psi(self) -> np.ndarray:
        return self.phase_config.psi

    def copy(self) -> FollowerState:
        return FollowerState(
            beamformers=self.beamformers.copy(),
            phase_config=self.phase_config.copy(),
            alpha=self.alpha.copy(),
            beta=self.beta.copy(),
            theta=self.theta.copy(),
            lambda0=self.lambda0,
            phi_dual=None if self.phi_dual is None else self.phi_dual.copy(),
            iterations=self.iterations,
            converged=self.converged,
            surrogate=self.surrogate,
            trace=list(self.trace),
            trace_rows=[dict(r) for r in self.trace_rows],
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            'w'         : complex_to_pairs(self.beamformers.w),
            'psi'       : self.phase_config.psi.astype(int).tolist(),
            'phi'       : complex_to_pairs(self.phase_config.phi),
            'alpha'     : self.alpha.tolist(),
            'lambda0'   : self.lambda0,
            'phi_dual'  : None if self.phi_dual is None else self.phi_dual.tolist(),
            'iterations': self.iterations,
            'converged' : self.converged,
            'surrogate' : self.surrogate,
            'trace'     : list(self.trace),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], elements_per_ris) -> FollowerState:
        w = pairs_to_complex(data['w'])
        k = w.shape[0]
        return cls(
            beamformers=Beamformers(w),
            phase_config=PhaseConfig(data['psi'], pairs_to_complex(data['phi']), elements_per_ris),
            alpha=np.asarray(data['alpha'], dtype=float),
            beta=np.zeros(k, dtype=complex),
            theta=np.zeros(k, dtype=complex),
            lambda0=data['lambda0'],
            phi_dual=None if data['phi_dual'] is None else np.asarray(data['phi_dual'], dtype=float),
            iterations=data['iterations'],
            converged=data['converged'],
            surrogate=data['surrogate'],
            trace=list(data['trace']),
        )


@dataclass
class SECheck:
    max_deviation: list[float]
    grid_size: int
    accepted: bool

    def to_dict(self) -> dict[str, Any]:
        return {'max_deviation': list(self.max_deviation), 'grid_size': self.grid_size, 'accepted': self.accepted}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SECheck:
        return cls(list(data['max_deviation']), data['grid_size'], data['accepted'])


@dataclass
class EquilibriumReport:
    scheme: str
    prices: PriceVector
    follower: FollowerState
    ris_utilities: np.ndarray
    bs_utility: float
    rounds: int
    converged: bool
    price_trace: list[list[float]] = field(default_factory=list)
    se_check: SECheck | None = None

    @property
    def psi(self) -> np.ndarray:
        return self.follower.psi

    def to_dict(self) -> dict[str, Any]:
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'scheme'        : self.scheme,
            'price_scheme'  : self.prices.scheme,
            'prices'        : self.prices.q.tolist(),
            'ris_utilities' : np.asarray(self.ris_utilities).tolist(),
            'bs_utility'    : self.bs_utility,
            'rounds'        : self.rounds,
            'converged'     : self.converged,
            'price_trace'   : [list(p) for p in self.price_trace],
            'se_check'      : None if self.se_check is None else self.se_check.to_dict(),
            'follower'      : self.follower.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], elements_per_ris) -> EquilibriumReport:
        if data.get('schema_version') != REPORT_SCHEMA_VERSION:
            raise ValidationError('schema_version', f"unsupported report version {data.get('schema_version')}")

        return cls(
            scheme=data['scheme'],
            prices=PriceVector(data['prices'], scheme=data['price_scheme']),
            follower=FollowerState.from_dict(data['follower'], elements_per_ris),
            ris_utilities=np.asarray(data['ris_utilities'], dtype=float),
            bs_utility=data['bs_utility'],
            rounds=data['rounds'],
            converged=data['converged'],
            price_trace=[list(p) for p in data['price_trace']],
            se_check=None if data['se_check'] is None else SECheck.from_dict(data['se_check']),
        )
