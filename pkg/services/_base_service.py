from __future__ import annotations

import logging
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from models import Scenario


class BaseService:
    LOGGER_NAME = 'Service'

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.logger = logging.getLogger(self.LOGGER_NAME)
