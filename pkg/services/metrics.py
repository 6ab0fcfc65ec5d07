"""Effective channels, SINRs and the utilities of both sides of the game."""
from __future__ import annotations

import numpy as np

from models import Beamformers, ChannelSet, PhaseConfig, PriceVector, Scenario
from ris_utils import StructuralError

__all__ = ['effective_channel', 'effective_channels', 'sinr', 'sinrs', 'sum_rate', 'purchase_cost',
           'bs_utility', 'ris_utility', 'ris_utilities']


def _check_phase_config(channels: ChannelSet, phase_config: PhaseConfig):
    if phase_config.elements_per_ris != channels.elements_per_ris:
        raise StructuralError(f'Phase configuration is laid out for {list(phase_config.elements_per_ris)} '
                              f'elements, channels for {list(channels.elements_per_ris)}.')


def effective_channels(channels: ChannelSet, phase_config: PhaseConfig) -> np.ndarray:
    """K x M matrix, row k is h_{d,k}^H + g_k^H Phi H."""
    _check_phase_config(channels, phase_config)

    direct = channels.h_direct.conj()
    if not phase_config.psi.any():
        return direct

    cascaded = (channels.g_ris_user.conj() * phase_config.reflection) @ channels.H_bs_ris
    return direct + cascaded


def effective_channel(channels: ChannelSet, phase_config: PhaseConfig, k: int) -> np.ndarray:
    return effective_channels(channels, phase_config)[k]


def _sinrs_from_channels(h_eff: np.ndarray, w: np.ndarray, noise_power: float) -> np.ndarray:
    if h_eff.shape != w.shape:
        raise StructuralError(f'Beamformers have shape {w.shape}, effective channels {h_eff.shape}.')

    # gains[k, i] = |h_eff,k w_i|^2
    gains = np.abs(h_eff @ w.T) ** 2
    signal = np.diag(gains).copy()
    interference = np.where(np.eye(gains.shape[0], dtype=bool), 0.0, gains).sum(axis=1)

    return signal / (interference + noise_power)


def sinrs(channels: ChannelSet, phase_config: PhaseConfig, beamformers: Beamformers,
          noise_power: float) -> np.ndarray:
    return _sinrs_from_channels(effective_channels(channels, phase_config), beamformers.w, noise_power)


def sinr(channels: ChannelSet, phase_config: PhaseConfig, beamformers: Beamformers, k: int,
         noise_power: float) -> float:
    h_k = effective_channel(channels, phase_config, k)
    gains = np.abs(beamformers.w @ h_k) ** 2

    interference = np.sum(np.delete(gains, k))
    return float(gains[k] / (interference + noise_power))


def sum_rate(gammas: np.ndarray, log_base: str = 'natural') -> float:
    rate = float(np.sum(np.log1p(gammas)))
    return rate if log_base == 'natural' else rate / np.log(2)


def purchase_cost(prices: PriceVector, psi: np.ndarray, scenario: Scenario) -> float:
    """delta * sum_s psi_s q_s L_s, only purchased RISs cost anything."""
    psi = np.asarray(psi, dtype=bool)
    return float(scenario.cost_weight * np.sum(prices.q[psi] * np.asarray(scenario.elements_per_ris)[psi]))


def bs_utility(channels: ChannelSet, phase_config: PhaseConfig, beamformers: Beamformers,
               prices: PriceVector, scenario: Scenario) -> float:
    gammas = sinrs(channels, phase_config, beamformers, scenario.noise_power)
    return sum_rate(gammas, scenario.log_base) - purchase_cost(prices, phase_config.psi, scenario)


def ris_utility(prices: PriceVector, phase_config: PhaseConfig, s: int, scenario: Scenario) -> float:
    """Revenue q_s L_s of RIS s, earned only when the BS bought it."""
    return float(phase_config.psi[s]) * float(prices.q[s]) * scenario.elements_per_ris[s]


def ris_utilities(prices: PriceVector, phase_config: PhaseConfig, scenario: Scenario) -> np.ndarray:
    return np.array([ris_utility(prices, phase_config, s, scenario) for s in range(scenario.num_ris)])
