"""Instance builders shared by the test suites."""
from __future__ import annotations

import glob
import json
import os
import unittest

import numpy as np

from models import ChannelSet, PriceVector, Scenario
from services import OracleBudget

SLOW = os.environ.get('RIS_PRICING_SLOW') == '1'

slow_test = unittest.skipUnless(SLOW, 'set RIS_PRICING_SLOW=1 to run the long suites')

# 30 dBm == 1 W, handy for hand computations
ONE_WATT_DBM = 30.0


def make_scenario(**fields) -> Scenario:
    return Scenario(fields)


def tiny_scenario(**fields) -> Scenario:
    """M=2, K=2, S=2, L_s=2: the largest total L the oracle accepts."""
    data = dict(num_antennas=2, num_users=2, num_ris=2, elements_per_ris=2)
    data.update(fields)
    return Scenario(data)


def small_scenario(**fields) -> Scenario:
    """M=4, K=4, S=2, L=8."""
    data = dict(num_antennas=4, num_users=4, num_ris=2, elements_per_ris=8)
    data.update(fields)
    return Scenario(data)


def unit_scenario(num_antennas: int = 1, num_users: int = 1, elements_per_ris=(1,), **fields) -> Scenario:
    """Scenario with 1 W of power and 1 W of noise, used with hand-built channels."""
    data = dict(num_antennas=num_antennas,
                num_users=num_users,
                num_ris=len(elements_per_ris),
                elements_per_ris=list(elements_per_ris),
                power_budget_dbm=ONE_WATT_DBM,
                noise_power_dbm=ONE_WATT_DBM,
                ris_layout='explicit',
                ris_positions=[[50.0, 10.0 * (s + 1)] for s in range(len(elements_per_ris))])
    data.update(fields)
    return Scenario(data)


def random_channels(scenario: Scenario, rng: np.random.Generator, scale: float = 1.0) -> ChannelSet:
    """Unit-variance channels (times `scale`) of the scenario's dimensions."""
    m, k, total = scenario.num_antennas, scenario.num_users, scenario.total_elements

    def cn(*shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    return ChannelSet(cn(k, m), cn(total, m), cn(k, total), scenario.elements_per_ris)


def scalar_channels(h_direct: complex, cascade_bs: complex, cascade_user: complex) -> ChannelSet:
    """M = K = L = 1."""
    return ChannelSet([[h_direct]], [[cascade_bs]], [[cascade_user]], (1,))


FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


class OracleFixture:
    """One checked-in follower instance with its certified optimum, in the format `run.py oracle` writes."""

    def __init__(self, path: str):
        with open(path, encoding='utf-8') as f:
            data = json.load(f)

        self.name = os.path.basename(path)
        self.source: str = data['source']
        self.scenario = Scenario(data['scenario'])
        self.channels = ChannelSet.from_dict(data['channels'])
        self.prices = PriceVector(data['prices'])
        self.oracle_utility: float = data['oracle_utility']
        self.oracle_psi = tuple(data['oracle_psi'])
        self.budget = OracleBudget(**data['budget'])

    def __repr__(self):
        return f'<OracleFixture {self.name}>'


def oracle_fixtures(directory: str = FIXTURES) -> list[OracleFixture]:
    return [OracleFixture(path) for path in sorted(glob.glob(os.path.join(directory, '*.json')))]
