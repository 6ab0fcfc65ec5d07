import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

import run
from models import Scenario
from pricing_game import PricingGame
from ris_utils import AuditError, SweepPointError, ValidationError
from services import SweepPoint, SweepSpec, SweepTable, audit_table, emit_csv, emit_summary, scenario_for, \
    write_plot_script
from services.experiments import per_ris_columns
from sweep_manager import run_sweep
from tests.helpers import slow_test

# small enough to run a few games per test
FAST = {'num_antennas': 2, 'num_users': 2, 'num_ris': 2, 'elements_per_ris': 4,
        'price_grid_size': 16, 'verify_grid_size': 16, 'max_outer_iters': 5}


class TestSweepSpec(unittest.TestCase):

    def test_defaults(self) -> None:
        spec = SweepSpec('power')

        self.assertEqual([-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0], spec.values)
        self.assertEqual(list(range(10)), spec.seeds)
        self.assertEqual(4, len(spec.schemes))
        self.assertEqual(os.path.join('results', 'power.csv'), spec.csv_path())
        self.assertEqual(os.path.join('results', 'power_summary.csv'), spec.summary_path())

    def test_points_in_output_order(self) -> None:
        spec = SweepSpec('power', values=[0, 10], seeds=[3, 1])
        self.assertEqual([SweepPoint(0.0, 3), SweepPoint(0.0, 1), SweepPoint(10.0, 3), SweepPoint(10.0, 1)],
                         spec.points())

    def test_validity(self) -> None:
        spec = SweepSpec('power', values=[0], schemes=['random', 'stackelberg-uniform'])
        spec.check_validity()
        self.assertEqual(['random-nonuniform', 'uniform'], spec.schemes)

        with self.assertRaises(ValidationError):
            SweepSpec('frequency', values=[1]).check_validity()
        with self.assertRaises(ValidationError):
            SweepSpec('power', values=[0], seeds=[]).check_validity()

        with self.assertRaises(SweepPointError) as context:
            SweepSpec('power', values=[0, 45]).check_validity()
        self.assertEqual(45, context.exception.point['value'])

    def test_scenario_for(self) -> None:
        base = Scenario({})

        self.assertEqual(-5.0, scenario_for(base, 'power', -5).power_budget_dbm)
        moved = scenario_for(base, 'location', 120)
        self.assertEqual((120.0, 0.0), moved.diamond_center)
        self.assertEqual((120.0, 25.0), moved.ris_positions[0])

        explicit = Scenario({'num_ris': 1, 'ris_positions': [[30, 30]]})
        with self.assertRaises(SweepPointError):
            scenario_for(explicit, 'location', 50)

    def test_every_default_location_builds(self) -> None:
        base = Scenario({})

        for value in SweepSpec('location').values:
            with self.subTest(value=value):
                game = PricingGame(scenario_for(base, 'location', value), seed=0)
                self.assertTrue(np.all(np.isfinite(game.channels.H_bs_ris)))
                self.assertTrue(np.all(np.isfinite(game.channels.g_ris_user)))


class TestSweepTable(unittest.TestCase):

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.base = Scenario(FAST)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def spec(self, **fields) -> SweepSpec:
        data = dict(sweep='power', values=[10.0], schemes=['uniform', 'random-nonuniform'], seeds=[0],
                    out_dir=self.directory.name)
        data.update(fields)
        return SweepSpec(**data)

    def test_columns(self) -> None:
        table = SweepTable('power', 3, ['uniform'])

        self.assertEqual(7 + 3 * 3, len(table.columns))
        self.assertEqual(['V_1', 'V_2', 'q_1', 'q_2', 'psi_1', 'psi_2'], per_ris_columns(2))

    def test_empty_table_is_header_only(self) -> None:
        path = os.path.join(self.directory.name, 'empty.csv')
        emit_csv(SweepTable('power', 2, ['uniform']), path)

        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertEqual(1, len(lines))
        self.assertEqual('sweep,value,scheme,seed,U_bs,rounds,converged,V_1,V_2,q_1,q_2,psi_1,psi_2', lines[0])

    def test_single_point(self) -> None:
        spec = self.spec()
        spec.check_validity()
        table = run_sweep(spec, self.base)

        frame = table.to_frame()
        self.assertEqual(4, len(frame))
        self.assertEqual(['0', 'mean', '0', 'mean'], [str(s) for s in frame['seed']])
        self.assertEqual(['uniform', 'uniform', 'random-nonuniform', 'random-nonuniform'], list(frame['scheme']))
        self.assertEqual(frame['U_bs'][0], frame['U_bs'][1])

        summary = table.summary_frame()
        self.assertEqual([1, 1], list(summary['n']))
        self.assertEqual([0.0, 0.0], list(summary['U_bs_stderr']))

    def test_csv_is_deterministic(self) -> None:
        spec = self.spec(seeds=[0, 1])
        spec.check_validity()

        contents = []
        for _ in range(2):
            emit_csv(run_sweep(spec, self.base), spec.csv_path())
            with open(spec.csv_path(), 'rb') as f:
                contents.append(f.read())

        self.assertEqual(contents[0], contents[1])

    def test_summary(self) -> None:
        spec = self.spec(seeds=[0, 1])
        spec.check_validity()
        table = run_sweep(spec, self.base)
        emit_summary(table, spec.summary_path())

        summary = pd.read_csv(spec.summary_path())
        data = pd.DataFrame(table.rows)
        uniform = data[data['scheme'] == 'uniform']['U_bs']

        row = summary[summary['scheme'] == 'uniform'].iloc[0]
        self.assertEqual(2, row['n'])
        self.assertAlmostEqual(uniform.mean(), row['U_bs_mean'], places=12)
        self.assertAlmostEqual(uniform.sem(), row['U_bs_stderr'], places=12)

    def test_plot_script(self) -> None:
        spec = self.spec()
        path = write_plot_script(spec)

        with open(path, encoding='utf-8') as f:
            script = f.read()
        self.assertIn("'power.csv'", script)
        compile(script, path, 'exec')

    def test_audit(self) -> None:
        spec = self.spec()
        spec.check_validity()
        table = run_sweep(spec, self.base)

        audit_table(table, spec, self.base)

        table.rows[0]['U_bs'] += 1e-6
        with self.assertRaises(AuditError):
            audit_table(table, spec, self.base)


class TestCommandLine(unittest.TestCase):

    def setUp(self) -> None:
        self.cwd = os.getcwd()
        self.directory = tempfile.TemporaryDirectory()
        os.chdir(self.directory.name)

        with open('scenario.json', 'w', encoding='utf-8') as f:
            json.dump(FAST, f)

    def tearDown(self) -> None:
        os.chdir(self.cwd)
        self.directory.cleanup()

    def test_solve(self) -> None:
        code = run.main(['solve', '--config', 'scenario.json', '--scheme', 'uniform', '--seed', '2',
                         '--out', 'report.json', '--trace', 'trace.csv', '--dump-channels', 'channels.npz'])
        self.assertEqual(run.EXIT_OK, code)

        with open('report.json', encoding='utf-8') as f:
            data = json.load(f)
        self.assertEqual(2, data['seed'])
        self.assertEqual('uniform', data['report']['scheme'])
        self.assertTrue(os.path.exists('trace.csv'))

        # the dumped realization gives the same game
        code = run.main(['solve', '--config', 'scenario.json', '--scheme', 'uniform', '--seed', '2',
                         '--out', 'again.json', '--load-channels', 'channels.npz'])
        self.assertEqual(run.EXIT_OK, code)
        with open('again.json', encoding='utf-8') as f:
            self.assertEqual(data['report']['bs_utility'], json.load(f)['report']['bs_utility'])

    def test_run_with_audit(self) -> None:
        code = run.main(['run', '--config', 'scenario.json', '--sweep', 'power', '--values', '0',
                         '--seeds', '0..1', '--scheme', 'random', '--out', 'out', '--audit', '--workers', '1'])
        self.assertEqual(run.EXIT_OK, code)

        for name in ('power.csv', 'power_summary.csv', 'plot_power.py'):
            self.assertTrue(os.path.exists(os.path.join('out', name)), msg=name)
        self.assertEqual(2, len(os.listdir(os.path.join('out', 'reports'))))

    def test_location_sweep_from_the_bs(self) -> None:
        code = run.main(['run', '--config', 'scenario.json', '--sweep', 'location', '--values', '12.5',
                         '--seeds', '0', '--scheme', 'uniform', '--out', 'out', '--workers', '1'])
        self.assertEqual(run.EXIT_OK, code)

        frame = pd.read_csv(os.path.join('out', 'location.csv'))
        self.assertEqual([12.5, 12.5], list(frame['value']))

    def test_validation_errors(self) -> None:
        self.assertEqual(run.EXIT_VALIDATION, run.main(['solve', '--set', 'num_userz=3']))
        self.assertEqual(run.EXIT_VALIDATION, run.main(['solve', '--set', 'num_users=0']))
        self.assertEqual(run.EXIT_VALIDATION, run.main(['solve', '--config', 'missing.json']))
        self.assertEqual(run.EXIT_VALIDATION, run.main(['run', '--config', 'scenario.json', '--sweep', 'power',
                                                        '--values', '0,99', '--workers', '1']))

    def test_bad_arguments(self) -> None:
        with self.assertRaises(SystemExit):
            run.main(['run', '--sweep', 'frequency'])
        with self.assertRaises(SystemExit):
            run.main(['run', '--sweep', 'power', '--seeds', '5..1'])


@slow_test
class TestParallelSweep(unittest.TestCase):

    def test_workers_do_not_change_results(self) -> None:
        with tempfile.TemporaryDirectory() as directory:
            spec = SweepSpec('location', values=[25.0, 100.0], schemes=['uniform', 'random-uniform'],
                             seeds=[0, 1, 2], out_dir=directory)
            spec.check_validity()
            base = Scenario(FAST)

            sequential = run_sweep(spec, base, workers=1).to_frame()
            parallel = run_sweep(spec, base, workers=2).to_frame()

            pd.testing.assert_frame_equal(sequential, parallel)


if __name__ == '__main__':
    unittest.main()
