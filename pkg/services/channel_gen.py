from __future__ import annotations

import numpy as np

from models import ChannelSet, Geometry, Scenario
from ._base_service import BaseService

__all__ = ['path_loss_db', 'linear_gain', 'link_rng', 'rayleigh', 'ChannelGenerator', 'generate',
           'DIRECT_STREAM', 'BS_RIS_STREAM', 'RIS_USER_STREAM']

# stream 0 belongs to the user positions (models.geometry.USER_STREAM)
DIRECT_STREAM = 1
BS_RIS_STREAM = 2
RIS_USER_STREAM = 3

REFERENCE_DISTANCE = 1.0


def path_loss_db(distance, exponent: float, ref_db: float):
    """Log-distance path loss. Distances below the 1 m reference are clamped to it."""
    distance = np.maximum(np.asarray(distance, dtype=float), REFERENCE_DISTANCE)
    loss = ref_db + 10 * exponent * np.log10(distance / REFERENCE_DISTANCE)
    return float(loss) if np.ndim(loss) == 0 else loss


def linear_gain(distance, exponent: float, ref_db: float):
    return 10 ** (-np.asarray(path_loss_db(distance, exponent, ref_db)) / 10)


def link_rng(seed: int, stream: int, *endpoints: int) -> np.random.Generator:
    """Independent generator per link, keyed by the link class and its endpoint indices."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream, *endpoints]))


def rayleigh(rng: np.random.Generator, size) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


class ChannelGenerator(BaseService):
    LOGGER_NAME = 'Channels'

    def generate(self, geometry: Geometry, seed: int = None) -> ChannelSet:
        scenario = self.scenario
        seed = scenario.rng_seed if seed is None else seed

        m, k = scenario.num_antennas, scenario.num_users
        ref_db = scenario.pathloss_ref_db

        # BS -> user
        direct_gain = linear_gain(geometry.bs_user_distances(), scenario.exponent_direct, ref_db)
        h_direct = np.empty((k, m), dtype=complex)
        for user in range(k):
            h_direct[user] = np.sqrt(direct_gain[user]) * rayleigh(link_rng(seed, DIRECT_STREAM, user), m)

        # BS -> RIS s, one L_s x M block each
        bs_ris_gain = linear_gain(geometry.bs_ris_distances(), scenario.exponent_ris, ref_db)
        blocks = []
        for s, n in enumerate(scenario.elements_per_ris):
            blocks.append(np.sqrt(bs_ris_gain[s]) * rayleigh(link_rng(seed, BS_RIS_STREAM, s), (n, m)))
        H_bs_ris = np.vstack(blocks)

        # RIS s -> user k
        ris_user_gain = linear_gain(geometry.ris_user_distances(), scenario.exponent_ris, ref_db)
        g_ris_user = np.empty((k, scenario.total_elements), dtype=complex)
        for s, block in enumerate(scenario.ris_slices):
            for user in range(k):
                fading = rayleigh(link_rng(seed, RIS_USER_STREAM, s, user), scenario.elements_per_ris[s])
                g_ris_user[user, block] = np.sqrt(ris_user_gain[s, user]) * fading

        channels = ChannelSet(h_direct, H_bs_ris, g_ris_user, scenario.elements_per_ris)
        self.logger.debug(f'Generated {channels} for seed {seed}.')

        return channels


def generate(scenario: Scenario, geometry: Geometry, seed: int = None) -> ChannelSet:
    return ChannelGenerator(scenario).generate(geometry, seed)
