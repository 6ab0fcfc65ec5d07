from __future__ import annotations

import itertools

import numpy as np

from ris_utils import ValidationError
from .config import Scenario

__all__ = ['Geometry', 'place_diamond', 'sample_users', 'build_geometry', 'user_rng', 'USER_STREAM']

# stream id of the user-position generator, see services.channel_gen for the link streams
USER_STREAM = 0


class Geometry:
    """Resolved 2-D positions in meters."""

    def __init__(self, bs_position, ris_positions, user_positions):
        self.bs_position = np.asarray(bs_position, dtype=float).reshape(2)
        self.ris_positions = np.asarray(ris_positions, dtype=float).reshape(-1, 2)
        self.user_positions = np.asarray(user_positions, dtype=float).reshape(-1, 2)

    @property
    def num_ris(self) -> int:
        return self.ris_positions.shape[0]

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]

    def bs_user_distances(self) -> np.ndarray:
        return np.linalg.norm(self.user_positions - self.bs_position, axis=1)

    def bs_ris_distances(self) -> np.ndarray:
        return np.linalg.norm(self.ris_positions - self.bs_position, axis=1)

    def ris_user_distances(self) -> np.ndarray:
        """S x K matrix."""
        return np.linalg.norm(self.ris_positions[:, None, :] - self.user_positions[None, :, :], axis=2)

    def check_distinct_surfaces(self):
        """Only surfaces must be distinct. Links between collocated nodes are clamped to the 1 m reference."""
        for (a, p), (b, q) in itertools.combinations(enumerate(self.ris_positions), 2):
            if np.linalg.norm(p - q) <= 0:
                raise ValidationError('geometry',
                                      f'RIS {a + 1} and RIS {b + 1} are placed at the same point {tuple(p)}')

    def __repr__(self):
        return f'<Geometry S={self.num_ris} K={self.num_users}>'


def place_diamond(center, horizontal: float = 25.0, vertical: float = 50.0) -> list[tuple[float, float]]:
    """
    RIS 1..4 sit on the diamond corners counterclockwise from the top, RIS 5 on the intersection
    of the diagonals. Returns [top, left, bottom, right, center].
    """
    cx, cy = float(center[0]), float(center[1])
    half_h, half_v = horizontal / 2, vertical / 2

    return [
        (cx, cy + half_v),
        (cx - half_h, cy),
        (cx, cy - half_v),
        (cx + half_h, cy),
        (cx, cy),
    ]


def user_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, USER_STREAM]))


def sample_users(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """K points uniform over the area of the user disk."""
    k = scenario.num_users
    radius = scenario.user_cluster_radius

    # sqrt keeps the density uniform in area instead of in radius
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=k))
    angle = rng.uniform(0.0, 2 * np.pi, size=k)

    center = np.asarray(scenario.user_cluster_center, dtype=float)
    return center + np.column_stack((r * np.cos(angle), r * np.sin(angle)))


def build_geometry(scenario: Scenario, seed: int = None) -> Geometry:
    seed = scenario.rng_seed if seed is None else seed

    geometry = Geometry(bs_position=scenario.bs_position,
                        ris_positions=scenario.ris_positions,
                        user_positions=sample_users(scenario, user_rng(seed)))
    geometry.check_distinct_surfaces()

    return geometry
