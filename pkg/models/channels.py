from __future__ import annotations

import logging

import numpy as np

from ris_utils import ConfigParseError, StructuralError
from .strategies import complex_to_pairs, pairs_to_complex

__all__ = ['ChannelSet', 'CHANNEL_SCHEMA_VERSION']

CHANNEL_SCHEMA_VERSION = 1

logger = logging.getLogger('Channels')


class ChannelSet:
    """
    One realization of every link.

    h_direct    K x M   row k is h_{d,k} (BS -> user k)
    H_bs_ris    L x M   BS -> every RIS element, row blocks ordered by RIS index
    g_ris_user  K x L   row k is g_k (every RIS element -> user k)
    """

    def __init__(self, h_direct: np.ndarray, H_bs_ris: np.ndarray, g_ris_user: np.ndarray,
                 elements_per_ris: tuple[int, ...] | list[int]):
        self.h_direct = np.asarray(h_direct, dtype=complex)
        self.H_bs_ris = np.asarray(H_bs_ris, dtype=complex)
        self.g_ris_user = np.asarray(g_ris_user, dtype=complex)
        self.elements_per_ris = tuple(int(n) for n in elements_per_ris)

        self.check_dimensions()

    @property
    def num_users(self) -> int:
        return self.h_direct.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.h_direct.shape[1]

    @property
    def total_elements(self) -> int:
        return self.H_bs_ris.shape[0]

    def ris_block(self, s: int) -> slice:
        start = sum(self.elements_per_ris[:s])
        return slice(start, start + self.elements_per_ris[s])

    def check_dimensions(self):
        if self.h_direct.ndim != 2 or self.H_bs_ris.ndim != 2 or self.g_ris_user.ndim != 2:
            raise StructuralError('Channel arrays must be two-dimensional.')

        k, m = self.h_direct.shape
        if self.H_bs_ris.shape[1] != m:
            raise StructuralError(f'H_bs_ris has {self.H_bs_ris.shape[1]} columns, expected M={m}.')

        total = self.H_bs_ris.shape[0]
        if sum(self.elements_per_ris) != total:
            raise StructuralError(f'RIS blocks sum to {sum(self.elements_per_ris)} rows, H_bs_ris has {total}.')

        if self.g_ris_user.shape != (k, total):
            raise StructuralError(f'g_ris_user has shape {self.g_ris_user.shape}, expected {(k, total)}.')

        for name in ('h_direct', 'H_bs_ris', 'g_ris_user'):
            if not np.all(np.isfinite(getattr(self, name))):
                raise StructuralError(f'{name} holds non-finite entries.')

    def normalized(self, noise_power: float) -> ChannelSet:
        """Scales the user side by 1/sigma so that the noise power becomes 1. SINRs are unchanged."""
        scale = 1 / np.sqrt(noise_power)
        return ChannelSet(self.h_direct * scale, self.H_bs_ris, self.g_ris_user * scale, self.elements_per_ris)

    def to_dict(self) -> dict:
        return {
            'elements_per_ris': list(self.elements_per_ris),
            'h_direct'        : complex_to_pairs(self.h_direct),
            'H_bs_ris'        : complex_to_pairs(self.H_bs_ris),
            'g_ris_user'      : complex_to_pairs(self.g_ris_user),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ChannelSet:
        try:
            return cls(pairs_to_complex(data['h_direct']), pairs_to_complex(data['H_bs_ris']),
                       pairs_to_complex(data['g_ris_user']), tuple(data['elements_per_ris']))
        except KeyError as e:
            raise ConfigParseError('channels', f'missing {e}')

    def save(self, path: str):
        np.savez(path,
                 schema_version=np.array(CHANNEL_SCHEMA_VERSION),
                 elements_per_ris=np.array(self.elements_per_ris, dtype=int),
                 h_direct=self.h_direct,
                 H_bs_ris=self.H_bs_ris,
                 g_ris_user=self.g_ris_user)
        logger.info(f"Dumped channels to '{path}'.")

    @classmethod
    def load(cls, path: str) -> ChannelSet:
        try:
            with np.load(path) as data:
                version = int(data['schema_version'])
                if version != CHANNEL_SCHEMA_VERSION:
                    raise ConfigParseError('--load-channels', f'unsupported channel dump version {version}')

                return cls(data['h_direct'], data['H_bs_ris'], data['g_ris_user'],
                           tuple(data['elements_per_ris'].tolist()))
        except FileNotFoundError:
            raise ConfigParseError('--load-channels', f"file '{path}' could not be found")
        except KeyError as e:
            raise ConfigParseError('--load-channels', f'channel dump is missing {e}')

    def __eq__(self, other):
        if isinstance(other, ChannelSet):
            return (self.elements_per_ris == other.elements_per_ris
                    and np.array_equal(self.h_direct, other.h_direct)
                    and np.array_equal(self.H_bs_ris, other.H_bs_ris)
                    and np.array_equal(self.g_ris_user, other.g_ris_user))
        return NotImplemented

    def __repr__(self):
        return f'<ChannelSet M={self.num_antennas} K={self.num_users} L={list(self.elements_per_ris)}>'
