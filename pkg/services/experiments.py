"""
Sweep bookkeeping: which points to run, how their results are laid out and how they are written.
Running the points lives in `sweep_manager.py`.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from models import EquilibriumReport, Scenario, build_geometry
from ris_utils import AuditError, SweepPointError, ValidationError, csv_schema, plots
from . import metrics
from .channel_gen import ChannelGenerator
from .leader import SCHEMES, resolve_scheme

__all__ = ['SweepSpec', 'SweepPoint', 'SweepTable', 'SWEEPS', 'DEFAULT_VALUES', 'VALUE_RANGES',
           'scenario_for', 'make_row', 'emit_csv', 'emit_summary', 'write_plot_script', 'audit_table']

logger = logging.getLogger('Experiments')

# sweep name -> scenario field it moves
SWEEPS = {
    'power'   : 'power_budget_dbm',
    'location': 'diamond_center',
}

VALUE_RANGES = {
    'power'   : (-20.0, 30.0),
    'location': (12.5, 200.0),
}

DEFAULT_VALUES = {
    'power'   : [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
    'location': np.linspace(12.5, 200.0, 8).tolist(),
}

AUDIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SweepPoint:
    value: float
    seed: int


@dataclass
class SweepSpec:
    sweep: str
    values: list[float] = None
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    out_dir: str = 'results'

    def __post_init__(self):
        if self.values is None and self.sweep in DEFAULT_VALUES:
            self.values = list(DEFAULT_VALUES[self.sweep])

    def check_validity(self):
        if self.sweep not in SWEEPS:
            raise ValidationError('sweep', f"must be one of {', '.join(SWEEPS)}, got '{self.sweep}'")
        if not self.values:
            raise ValidationError('values', 'at least one sweep value is required')
        if not self.seeds:
            raise ValidationError('seeds', 'at least one seed is required')
        if not self.schemes:
            raise ValidationError('schemes', 'at least one scheme is required')

        self.schemes = [resolve_scheme(s) for s in self.schemes]

        low, high = VALUE_RANGES[self.sweep]
        for value in self.values:
            if not low <= value <= high:
                raise SweepPointError({'sweep': self.sweep, 'value': value},
                                      ValidationError(SWEEPS[self.sweep], f'must lie within [{low}, {high}]'))

    def points(self) -> list[SweepPoint]:
        """Every (value, seed) pair in output order."""
        return [SweepPoint(float(value), int(seed)) for value in self.values for seed in self.seeds]

    def csv_path(self) -> str:
        return os.path.join(self.out_dir, f'{self.sweep}.csv')

    def summary_path(self) -> str:
        return os.path.join(self.out_dir, f'{self.sweep}_summary.csv')

    def report_path(self, point: SweepPoint, scheme: str) -> str:
        return os.path.join(self.out_dir, 'reports', f'{self.sweep}_{point.value:g}_{point.seed}_{scheme}.json')


def scenario_for(base: Scenario, sweep: str, value: float) -> Scenario:
    """The base scenario with the swept field set to `value`. Validation errors name the point."""
    try:
        if sweep == 'power':
            return base.with_overrides(power_budget_dbm=float(value))
        else:
            if base.ris_layout != 'diamond':
                raise ValidationError('ris_layout', 'the location sweep moves the diamond layout')
            return base.with_overrides(diamond_center=[float(value), base.diamond_center[1]])
    except ValidationError as e:
        raise SweepPointError({'sweep': sweep, 'value': value}, e)


def per_ris_columns(num_ris: int) -> list[str]:
    return [template.format(s=s) for template in csv_schema.per_ris for s in range(1, num_ris + 1)]


def make_row(sweep: str, point: SweepPoint, report: EquilibriumReport) -> dict[str, Any]:
    row = {
        'sweep'    : sweep,
        'value'    : point.value,
        'scheme'   : report.scheme,
        'seed'     : point.seed,
        'U_bs'     : float(report.bs_utility),
        'rounds'   : report.rounds,
        'converged': bool(report.converged),
    }

    for s, v in enumerate(report.ris_utilities, 1):
        row[f'V_{s}'] = float(v)
    for s, q in enumerate(report.prices.q, 1):
        row[f'q_{s}'] = float(q)
    for s, bought in enumerate(report.psi, 1):
        row[f'psi_{s}'] = int(bought)

    return row


class SweepTable:
    def __init__(self, sweep: str, num_ris: int, schemes: list[str]):
        self.sweep = sweep
        self.num_ris = num_ris
        self.schemes = list(schemes)

        self.rows: list[dict[str, Any]] = []
        # (value, seed, scheme) -> serialized report
        self.reports: dict[tuple[float, int, str], dict[str, Any]] = dict()

    @property
    def columns(self) -> list[str]:
        return list(csv_schema.fixed_columns) + per_ris_columns(self.num_ris)

    @property
    def metric_columns(self) -> list[str]:
        return ['U_bs'] + [f'V_{s}' for s in range(1, self.num_ris + 1)] + \
            [f'q_{s}' for s in range(1, self.num_ris + 1)]

    def add(self, point: SweepPoint, report: EquilibriumReport):
        self.rows.append(make_row(self.sweep, point, report))
        self.reports[(point.value, point.seed, report.scheme)] = report.to_dict()

    def __len__(self):
        return len(self.rows)

    def _ordered_groups(self):
        values = list(dict.fromkeys(row['value'] for row in self.rows))
        for value in values:
            for scheme in self.schemes:
                group = [row for row in self.rows if row['value'] == value and row['scheme'] == scheme]
                if group:
                    yield value, scheme, group

    def to_frame(self) -> pd.DataFrame:
        """Data rows grouped by (value, scheme), each group followed by its mean row."""
        records = []
        for value, scheme, group in self._ordered_groups():
            records.extend(group)

            frame = pd.DataFrame(group)
            aggregate = {
                'sweep'    : self.sweep,
                'value'    : value,
                'scheme'   : scheme,
                'seed'     : csv_schema.aggregate_seed,
                'U_bs'     : frame['U_bs'].mean(),
                'rounds'   : frame['rounds'].mean(),
                'converged': bool(frame['converged'].all()),
            }
            for column in per_ris_columns(self.num_ris):
                aggregate[column] = frame[column].mean()
            records.append(aggregate)

        return pd.DataFrame.from_records(records, columns=self.columns)

    def summary_frame(self) -> pd.DataFrame:
        """Mean and standard error over seeds per (value, scheme)."""
        records = []
        for value, scheme, group in self._ordered_groups():
            frame = pd.DataFrame(group)
            record = {'sweep': self.sweep, 'value': value, 'scheme': scheme, 'n': len(frame)}
            for column in self.metric_columns:
                record[f'{column}_mean'] = frame[column].mean()
                record[f'{column}_stderr'] = frame[column].sem() if len(frame) > 1 else 0.0
            records.append(record)

        columns = ['sweep', 'value', 'scheme', 'n'] + \
            [f'{c}_{stat}' for c in self.metric_columns for stat in ('mean', 'stderr')]
        return pd.DataFrame.from_records(records, columns=columns)

    def mean_curve(self, scheme: str, column: str) -> pd.Series:
        frame = pd.DataFrame([row for row in self.rows if row['scheme'] == scheme])
        return frame.groupby('value', sort=False)[column].mean()


def _write_frame(frame: pd.DataFrame, path: str):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, float_format=csv_schema.float_format, encoding='utf-8', lineterminator='\n')
    except OSError as e:
        raise OSError(e.errno, f'Could not write {path}: {e.strerror}', path) from e

    logger.info(f'Wrote {len(frame)} rows to {path}.')


def emit_csv(table: SweepTable, path: str):
    _write_frame(table.to_frame(), path)


def emit_summary(table: SweepTable, path: str):
    _write_frame(table.summary_frame(), path)


PLOT_TEMPLATE = '''"""Plots {csv_name}. Needs pandas and matplotlib."""
import os

import matplotlib.pyplot as plt
import pandas as pd

LABELS = {labels}
SCHEMES = {schemes}

HERE = os.path.dirname(os.path.abspath(__file__))

frame = pd.read_csv(os.path.join(HERE, {csv_name!r}))
frame = frame[frame['seed'].astype(str) == {aggregate!r}].copy()
frame['q_mean'] = frame[[c for c in frame.columns if c.startswith('q_')]].mean(axis=1)

panels = LABELS['panels']
fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)

for ax, panel in zip(axes[0], panels):
    for scheme, label in SCHEMES.items():
        curve = frame[frame['scheme'] == scheme]
        if not curve.empty:
            ax.plot(curve['value'], curve[panel['column']], marker='o', label=label)
    ax.set_title(panel['title'])
    ax.set_xlabel(LABELS['x_label'])
    ax.set_ylabel(panel['y_label'])
    ax.grid(True)

axes[0][0].legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png_name!r}), dpi=150)
'''


def write_plot_script(spec: SweepSpec) -> str:
    path = os.path.join(spec.out_dir, f'plot_{spec.sweep}.py')
    schemes = {s: plots.schemes[s] for s in spec.schemes}

    script = PLOT_TEMPLATE.format(csv_name=os.path.basename(spec.csv_path()),
                                  png_name=f'{spec.sweep}.png',
                                  labels=json.dumps(plots.json[spec.sweep], indent=4),
                                  schemes=json.dumps(schemes, indent=4),
                                  aggregate=csv_schema.aggregate_seed)

    os.makedirs(spec.out_dir, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(script)

    return path


def audit_table(table: SweepTable, spec: SweepSpec, base: Scenario):
    """
    Recomputes U_bs of every data row from its serialized report on regenerated channels.
    Raises AuditError on the first row that disagrees.
    """
    checked = 0
    for row in table.rows:
        report_data = json.loads(json.dumps(table.reports[(row['value'], row['seed'], row['scheme'])]))

        scenario = scenario_for(base, spec.sweep, row['value'])
        channels = ChannelGenerator(scenario).generate(build_geometry(scenario, row['seed']), row['seed'])
        report = EquilibriumReport.from_dict(report_data, scenario.elements_per_ris)

        recomputed = metrics.bs_utility(channels, report.follower.phase_config, report.follower.beamformers,
                                        report.prices, scenario)
        if not math.isclose(recomputed, row['U_bs'], rel_tol=AUDIT_TOLERANCE, abs_tol=AUDIT_TOLERANCE):
            raise AuditError(row, recomputed)
        checked += 1

    logger.info(f'Audit passed for {checked} rows.')
