from __future__ import annotations

import logging

import numpy as np

import models
from models import ChannelSet, EquilibriumReport, Geometry, Scenario
from ris_utils import StructuralError, Timer
from services import BaseCache, ChannelGenerator, FollowerService, LeaderService, LocalCache, resolve_scheme

# stream id of the random-pricing baseline, next to the geometry/channel/restart streams
RANDOM_PRICE_STREAM = 5


class PricingGame:
    """
    One channel realization of the RIS market: the BS (follower), the RIS holders (leaders)
    and everything they share. Every scheme solved on the same game sees the same channels and
    the same cache of follower solutions.
    """

    def __init__(self, scenario: Scenario, seed: int = None, channels: ChannelSet = None,
                 cache: BaseCache = None, p_max: float = None):
        self.scenario = scenario
        self.seed: int = scenario.rng_seed if seed is None else seed

        self.logger = logging.getLogger(f'{self}')

        self.geometry: Geometry = models.build_geometry(scenario, self.seed)
        self.channels: ChannelSet = channels if channels is not None else \
            ChannelGenerator(scenario).generate(self.geometry, self.seed)

        if self.channels.elements_per_ris != scenario.elements_per_ris:
            raise StructuralError(f'Loaded channels are laid out for {list(self.channels.elements_per_ris)} '
                                  f'elements, the scenario for {list(scenario.elements_per_ris)}.')

        self.cache: BaseCache = cache if cache is not None else LocalCache(f'follower seed={self.seed}')
        self.follower = FollowerService(scenario, self.channels, p_max=p_max, cache=self.cache)
        self.leader = LeaderService(self.follower)

    def random_rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, RANDOM_PRICE_STREAM]))

    def solve(self, scheme: str) -> EquilibriumReport:
        scheme = resolve_scheme(scheme)
        timer = Timer()

        # each random scheme draws from a fresh generator so it does not depend on what ran before
        report = self.leader.solve(scheme, rng=self.random_rng() if scheme.startswith('random') else None)

        self.logger.debug(f'{scheme} done in {timer.passed_seconds_in_float_formatted}, '
                          f'{self.follower.solve_counter} follower solves so far.')
        self.cache.log_stats()
        return report

    def solve_all(self, schemes: list[str]) -> list[EquilibriumReport]:
        return [self.solve(scheme) for scheme in schemes]

    def __str__(self):
        return f'Game#{self.seed}'

    def __repr__(self):
        return f'<PricingGame seed={self.seed} {self.scenario!r}>'
