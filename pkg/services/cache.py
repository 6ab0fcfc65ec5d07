from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from models import FollowerState

PurchaseKey = tuple[int, ...]


class BaseCache(ABC):
    def __init__(self, name: str):
        self.name = name
        self.hits = 0
        self.misses = 0

    @abstractmethod
    def get_keys(self) -> list[PurchaseKey]:
        pass

    @abstractmethod
    def get(self, key: PurchaseKey) -> FollowerState | None:
        pass

    @abstractmethod
    def set(self, key: PurchaseKey, value: FollowerState) -> None:
        pass

    def __len__(self):
        return len(self.get_keys())

    def log_stats(self):
        logging.getLogger('Cache').debug(f'{self.name}: {len(self)} entries, {self.hits} hits, {self.misses} misses.')


class LocalCache(BaseCache):
    """
    Follower solutions per purchase set. The optimized beamformers and phases for a fixed psi
    do not depend on the prices (they only shift the utility by the purchase cost),
    so one entry serves every price the leaders try on the same channel realization.
    """

    def __init__(self, name: str = 'follower'):
        super().__init__(name)

        self.cache: dict[PurchaseKey, FollowerState] = dict()

    def get_keys(self) -> list[PurchaseKey]:
        return list(self.cache.keys())

    def get(self, key: PurchaseKey) -> FollowerState | None:
        try:
            value = self.cache[key]
        except KeyError:
            self.misses += 1
            return None

        self.hits += 1
        return value.copy()

    def set(self, key: PurchaseKey, value: FollowerState) -> None:
        self.cache[key] = value.copy()
