from __future__ import annotations

import json
import logging
import math
from typing import Any

from ris_utils import ConfigParseError, ValidationError

__all__ = ['Scenario', 'load_scenario', 'load_scenario_file', 'dbm_to_watts', 'watts_to_dbm',
           'SCHEMA_VERSION', 'LOG_BASES']

SCHEMA_VERSION = 1
LOG_BASES = ('natural', 'base2')

logger = logging.getLogger('Config')


def dbm_to_watts(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def watts_to_dbm(watts: float) -> float:
    return 10 * math.log10(watts) + 30


class Scenario:
    """
    Static problem instance. Built from the JSON form of `config_example.json`;
    quantities configured in dBm are kept as configured and exposed linearly.

    Instances are read-only once validated; use `with_overrides` to derive a new one.
    """

    # field name -> accepted json types
    FIELDS: dict[str, tuple[type, ...]] = {
        'schema_version'     : (int,),
        'num_antennas'       : (int,),
        'num_users'          : (int,),
        'num_ris'            : (int,),
        'elements_per_ris'   : (int, list),
        'power_budget_dbm'   : (int, float),
        'noise_power_dbm'    : (int, float),
        'cost_weight'        : (int, float),
        'pathloss_ref_db'    : (int, float),
        'exponent_direct'    : (int, float),
        'exponent_ris'       : (int, float),
        'bs_position'        : (list,),
        'ris_layout'         : (str,),
        'diamond_center'     : (list,),
        'diamond_horizontal' : (int, float),
        'diamond_vertical'   : (int, float),
        'ris_positions'      : (list,),
        'user_cluster_center': (list,),
        'user_cluster_radius': (int, float),
        'rng_seed'           : (int,),
        'inner_tolerance'    : (int, float),
        'outer_tolerance'    : (int, float),
        'max_inner_iters'    : (int,),
        'max_outer_iters'    : (int,),
        'price_cap'          : (int, float),
        'log_base'           : (str,),
        'exhaustive_cap'     : (int,),
        'price_grid_size'    : (int,),
        'verify_grid_size'   : (int,),
        'follower_restarts'  : (int,),
        'bisection_max_steps': (int,),
    }

    def __init__(self, data: dict[str, Any]):
        self._frozen = False
        self.check_schema(data)

        self.schema_version: int = data.get('schema_version', SCHEMA_VERSION)

        # sizes
        self.num_antennas: int = data.get('num_antennas', 4)
        self.num_users: int = data.get('num_users', 4)
        self.num_ris: int = data.get('num_ris', 5)

        elements = data.get('elements_per_ris', 20)
        if isinstance(elements, int):
            elements = [elements] * self.num_ris
        self.elements_per_ris: tuple[int, ...] = tuple(elements)

        # physics
        self.power_budget_dbm: float = float(data.get('power_budget_dbm', 10.0))
        self.noise_power_dbm: float = float(data.get('noise_power_dbm', -100.0))
        self.cost_weight: float = float(data.get('cost_weight', 1.0))
        self.pathloss_ref_db: float = float(data.get('pathloss_ref_db', 30.0))
        self.exponent_direct: float = float(data.get('exponent_direct', 3.5))
        self.exponent_ris: float = float(data.get('exponent_ris', 2.0))

        # geometry
        self.bs_position: tuple[float, float] = self._point(data, 'bs_position', (0.0, 0.0))
        self.ris_layout: str = data.get('ris_layout', 'explicit' if 'ris_positions' in data else 'diamond')
        self.diamond_center: tuple[float, float] = self._point(data, 'diamond_center', (50.0, 0.0))
        self.diamond_horizontal: float = float(data.get('diamond_horizontal', 25.0))
        self.diamond_vertical: float = float(data.get('diamond_vertical', 50.0))
        self.explicit_ris_positions: tuple[tuple[float, float], ...] | None = None
        if 'ris_positions' in data:
            self.explicit_ris_positions = tuple(self._as_point('ris_positions', p) for p in data['ris_positions'])
        self.user_cluster_center: tuple[float, float] = self._point(data, 'user_cluster_center', (200.0, 0.0))
        self.user_cluster_radius: float = float(data.get('user_cluster_radius', 10.0))

        # solver
        self.rng_seed: int = data.get('rng_seed', 0)
        self.inner_tolerance: float = float(data.get('inner_tolerance', 1e-4))
        self.outer_tolerance: float = float(data.get('outer_tolerance', 1e-3))
        self.max_inner_iters: int = data.get('max_inner_iters', 200)
        self.max_outer_iters: int = data.get('max_outer_iters', 50)
        self.price_cap: float = float(data.get('price_cap', 1.0))
        self.log_base: str = data.get('log_base', 'natural')
        self.exhaustive_cap: int = data.get('exhaustive_cap', 5)
        self.price_grid_size: int = data.get('price_grid_size', 64)
        self.verify_grid_size: int = data.get('verify_grid_size', 64)
        self.follower_restarts: int = data.get('follower_restarts', 0)
        self.bisection_max_steps: int = data.get('bisection_max_steps', 200)

        self.check_validity()
        self._frozen = True

    def __setattr__(self, key, value):
        if getattr(self, '_frozen', False):
            raise AttributeError(f"Scenario is read-only, use with_overrides({key}=...) instead.")
        super().__setattr__(key, value)

    # linear views
    @property
    def p_max(self) -> float:
        return dbm_to_watts(self.power_budget_dbm)

    @property
    def noise_power(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)

    @property
    def total_elements(self) -> int:
        return sum(self.elements_per_ris)

    @property
    def ris_slices(self) -> list[slice]:
        """Row blocks of each RIS inside the stacked element axis."""
        offsets = [0]
        for n in self.elements_per_ris:
            offsets.append(offsets[-1] + n)
        return [slice(offsets[s], offsets[s + 1]) for s in range(self.num_ris)]

    @property
    def element_owner(self) -> list[int]:
        return [s for s, n in enumerate(self.elements_per_ris) for _ in range(n)]

    @property
    def rate_scale(self) -> float:
        """Multiplier turning natural-log rates into the configured base."""
        return 1.0 if self.log_base == 'natural' else 1 / math.log(2)

    @property
    def ris_positions(self) -> list[tuple[float, float]]:
        if self.ris_layout == 'explicit':
            return list(self.explicit_ris_positions)

        # local import, geometry imports this module
        from .geometry import place_diamond
        return place_diamond(self.diamond_center,
                             horizontal=self.diamond_horizontal,
                             vertical=self.diamond_vertical)[:self.num_ris]

    # parsing helpers
    def check_schema(self, data: dict[str, Any]):
        if not isinstance(data, dict):
            raise ConfigParseError('<root>', 'the config must be a JSON object')

        for key, value in data.items():
            if key not in self.FIELDS:
                raise ConfigParseError(key, 'unknown field')

            accepted = self.FIELDS[key]
            # bool is an int subclass but never a valid number here
            if isinstance(value, bool) or not isinstance(value, accepted):
                names = ' or '.join(t.__name__ for t in accepted)
                raise ConfigParseError(key, f'expected {names}, got {type(value).__name__}')

    @staticmethod
    def _as_point(field: str, value: Any) -> tuple[float, float]:
        if not isinstance(value, (list, tuple)) or len(value) != 2 \
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            raise ConfigParseError(field, f'expected a 2-D point [x, y], got {value!r}')
        return float(value[0]), float(value[1])

    def _point(self, data: dict[str, Any], field: str, default: tuple[float, float]) -> tuple[float, float]:
        if field not in data:
            return default
        return self._as_point(field, data[field])

    # validity checks
    def check_validity(self):
        self.check_schema_version_validity()
        self.check_count_validity()
        self.check_elements_validity()
        self.check_physics_validity()
        self.check_layout_validity()
        self.check_solver_validity()

    def check_schema_version_validity(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError('schema_version',
                                  f'unsupported version {self.schema_version} (supported: {SCHEMA_VERSION})')

    def check_count_validity(self):
        for field in ('num_antennas', 'num_users', 'num_ris'):
            if getattr(self, field) < 1:
                raise ValidationError(field, 'must be a positive count')

    def check_elements_validity(self):
        if len(self.elements_per_ris) != self.num_ris:
            raise ValidationError('elements_per_ris',
                                  f'expected {self.num_ris} entries, got {len(self.elements_per_ris)}')

        for n in self.elements_per_ris:
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ValidationError('elements_per_ris', f'element counts must be positive integers, got {n!r}')

    def check_physics_validity(self):
        for field in ('power_budget_dbm', 'noise_power_dbm'):
            if not math.isfinite(getattr(self, field)):
                raise ValidationError(field, 'must be finite')

        if self.cost_weight < 0:
            raise ValidationError('cost_weight', 'must be >= 0')

        if self.user_cluster_radius < 0:
            raise ValidationError('user_cluster_radius', 'must be >= 0')

        if self.price_cap < 0:
            raise ValidationError('price_cap', 'must be >= 0')

    def check_layout_validity(self):
        if self.ris_layout not in ('diamond', 'explicit'):
            raise ValidationError('ris_layout', "must be 'diamond' or 'explicit'")

        if self.ris_layout == 'explicit':
            if self.explicit_ris_positions is None:
                raise ValidationError('ris_positions', "required when ris_layout is 'explicit'")
            if len(self.explicit_ris_positions) != self.num_ris:
                raise ValidationError('ris_positions',
                                      f'expected {self.num_ris} positions, got {len(self.explicit_ris_positions)}')
        elif self.num_ris > 5:
            raise ValidationError('num_ris', 'the diamond layout holds at most 5 RISs, use explicit ris_positions')

        if self.diamond_horizontal <= 0 or self.diamond_vertical <= 0:
            raise ValidationError('diamond_horizontal', 'diamond diagonals must be positive')

    def check_solver_validity(self):
        for field in ('inner_tolerance', 'outer_tolerance'):
            if not getattr(self, field) > 0:
                raise ValidationError(field, 'must be > 0')

        for field in ('max_inner_iters', 'max_outer_iters', 'price_grid_size', 'verify_grid_size',
                      'bisection_max_steps'):
            if getattr(self, field) < 1:
                raise ValidationError(field, 'must be a positive integer')

        if self.price_grid_size < 2 or self.verify_grid_size < 2:
            raise ValidationError('price_grid_size', 'price grids need at least 2 points')

        if not 0 <= self.exhaustive_cap <= 12:
            raise ValidationError('exhaustive_cap', 'must be within 0..12')

        if self.follower_restarts < 0:
            raise ValidationError('follower_restarts', 'must be >= 0')

        if self.log_base not in LOG_BASES:
            raise ValidationError('log_base', f"must be one of {', '.join(LOG_BASES)}")

    # serialization
    def to_dict(self) -> dict[str, Any]:
        data = {
            'schema_version'     : self.schema_version,
            'num_antennas'       : self.num_antennas,
            'num_users'          : self.num_users,
            'num_ris'            : self.num_ris,
            'elements_per_ris'   : list(self.elements_per_ris),
            'power_budget_dbm'   : self.power_budget_dbm,
            'noise_power_dbm'    : self.noise_power_dbm,
            'cost_weight'        : self.cost_weight,
            'pathloss_ref_db'    : self.pathloss_ref_db,
            'exponent_direct'    : self.exponent_direct,
            'exponent_ris'       : self.exponent_ris,
            'bs_position'        : list(self.bs_position),
            'ris_layout'         : self.ris_layout,
            'diamond_center'     : list(self.diamond_center),
            'diamond_horizontal' : self.diamond_horizontal,
            'diamond_vertical'   : self.diamond_vertical,
            'user_cluster_center': list(self.user_cluster_center),
            'user_cluster_radius': self.user_cluster_radius,
            'rng_seed'           : self.rng_seed,
            'inner_tolerance'    : self.inner_tolerance,
            'outer_tolerance'    : self.outer_tolerance,
            'max_inner_iters'    : self.max_inner_iters,
            'max_outer_iters'    : self.max_outer_iters,
            'price_cap'          : self.price_cap,
            'log_base'           : self.log_base,
            'exhaustive_cap'     : self.exhaustive_cap,
            'price_grid_size'    : self.price_grid_size,
            'verify_grid_size'   : self.verify_grid_size,
            'follower_restarts'  : self.follower_restarts,
            'bisection_max_steps': self.bisection_max_steps,
        }
        if self.explicit_ris_positions is not None:
            data['ris_positions'] = [list(p) for p in self.explicit_ris_positions]
        return data

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def with_overrides(self, **fields) -> Scenario:
        data = self.to_dict()
        # a new element count must not be shadowed by the old list
        if 'num_ris' in fields and 'elements_per_ris' not in fields:
            per_ris = set(self.elements_per_ris)
            data['elements_per_ris'] = per_ris.pop() if len(per_ris) == 1 else data['elements_per_ris']
        data.update(fields)
        return Scenario(data)

    def __eq__(self, other):
        if isinstance(other, Scenario):
            return self.to_dict() == other.to_dict()
        return NotImplemented

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    def __repr__(self):
        return (f'<Scenario M={self.num_antennas} K={self.num_users} S={self.num_ris} '
                f'L={list(self.elements_per_ris)} p_max={self.power_budget_dbm}dBm>')


def load_scenario(config_text: str) -> Scenario:
    try:
        data = json.loads(config_text) if config_text.strip() else dict()
    except json.JSONDecodeError as e:
        raise ConfigParseError('<root>', f'invalid JSON at line {e.lineno} column {e.colno}: {e.msg}')

    return Scenario(data)


def load_scenario_file(path: str | None, overrides: dict[str, Any] = None) -> Scenario:
    """Reads a scenario file (or the defaults when `path` is None) and applies CLI overrides."""
    data = dict()

    if path is not None:
        try:
            with open(path, encoding='utf-8') as f:
                text = f.read()
        except FileNotFoundError:
            raise ConfigParseError('--config', f"file '{path}' could not be found")

        try:
            data = json.loads(text) if text.strip() else dict()
        except json.JSONDecodeError as e:
            raise ConfigParseError('<root>', f"invalid JSON in '{path}' at line {e.lineno}: {e.msg}")

        if not isinstance(data, dict):
            raise ConfigParseError('<root>', 'the config must be a JSON object')

    if overrides:
        logger.debug(f"Applying overrides: {overrides}")
        data.update(overrides)

    return Scenario(data)
