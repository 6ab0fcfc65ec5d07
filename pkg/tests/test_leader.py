import json
import unittest

import numpy as np
import numpy.testing as npt

from models import ChannelSet, EquilibriumReport, PriceVector, Scenario
from pricing_game import PricingGame
from ris_utils import StructuralError, ValidationError
from services import FollowerService, LeaderService, metrics, resolve_scheme
from tests.helpers import random_channels, slow_test, small_scenario


def leader_for(seed: int, **fields) -> LeaderService:
    fields.setdefault('price_cap', 0.1)
    scenario = small_scenario(power_budget_dbm=30.0, noise_power_dbm=30.0, **fields)
    channels = random_channels(scenario, np.random.default_rng(seed))
    return LeaderService(FollowerService(scenario, channels))


class TestSchemes(unittest.TestCase):

    def test_aliases(self) -> None:
        self.assertEqual('random-nonuniform', resolve_scheme('random'))
        self.assertEqual('nonuniform', resolve_scheme('stackelberg-nonuniform'))
        self.assertEqual('uniform', resolve_scheme('stackelberg-uniform'))
        self.assertEqual('random-uniform', resolve_scheme('random-uniform'))

    def test_unknown(self) -> None:
        with self.assertRaises(ValidationError):
            resolve_scheme('auction')

    def test_random_needs_generator(self) -> None:
        leader = leader_for(0)
        with self.assertRaises(ValidationError):
            leader.solve('random-uniform')
        with self.assertRaises(ValidationError):
            leader.stackelberg_solve('random')


class TestPriceSearch(unittest.TestCase):

    def setUp(self) -> None:
        self.leader = leader_for(0)

    def test_grid(self) -> None:
        grid = self.leader.price_grid()

        self.assertEqual(0.0, grid[0])
        self.assertEqual(0.1, grid[-1])
        self.assertTrue(np.all(np.diff(grid) > 0))
        self.assertLessEqual(grid.size, 66)
        self.assertAlmostEqual(1e-5, grid[grid > 0].min())

    def test_zero_cap_grid(self) -> None:
        npt.assert_array_equal([0.0], leader_for(0, price_cap=0).price_grid())

    def test_ties_take_lowest_price(self) -> None:
        grid = np.linspace(0, 1, 11)
        self.assertEqual((0, 0.0, 3.0), LeaderService.grid_search(lambda q: 3.0, grid))

        index, price, value = LeaderService.grid_search(lambda q: min(q, 0.5), grid)
        self.assertEqual(5, index)
        self.assertAlmostEqual(0.5, price)

    def test_refine(self) -> None:
        grid = np.linspace(0, 0.1, 11)

        def revenue(q):
            return -(q - 0.0333) ** 2

        best, _, value = LeaderService.grid_search(revenue, grid)
        price, refined = self.leader.refine(revenue, grid, best, value)

        self.assertAlmostEqual(0.0333, price, delta=1e-5)
        self.assertGreater(refined, value)

    def test_refine_skips_edges(self) -> None:
        grid = np.linspace(0, 0.1, 11)
        self.assertEqual((0.1, 0.1), self.leader.refine(lambda q: q, grid, 10, 0.1))

    def test_bad_ris_index(self) -> None:
        with self.assertRaises(ValidationError):
            self.leader.price_best_response(2, PriceVector([0.05, 0.05]))

    def test_revenue_only_when_bought(self) -> None:
        leader = leader_for(1, cost_weight=1e6)
        self.assertEqual(0.0, leader.revenue(0, PriceVector([0.05, 0.05])))
        self.assertEqual(0.0, leader.total_revenue(PriceVector([0.05, 0.05])))


class TestStackelberg(unittest.TestCase):

    def test_free_holders_charge_the_cap(self) -> None:
        """Without cost in the BS utility every surface is always bought."""
        report = leader_for(2, cost_weight=0.0).stackelberg_solve('nonuniform')

        npt.assert_allclose([0.1, 0.1], report.prices.q)
        npt.assert_array_equal([1, 1], report.psi.astype(int))
        npt.assert_allclose([0.8, 0.8], report.ris_utilities)
        self.assertTrue(report.converged)
        self.assertEqual(2, report.rounds)

    def test_unreachable_surface_earns_nothing(self) -> None:
        scenario = small_scenario(num_ris=1, power_budget_dbm=30.0, noise_power_dbm=30.0,
                                  inner_tolerance=1e-11, max_inner_iters=3000)
        channels = random_channels(scenario, np.random.default_rng(3))
        dark = ChannelSet(channels.h_direct, np.zeros_like(channels.H_bs_ris), channels.g_ris_user,
                          channels.elements_per_ris)
        leader = LeaderService(FollowerService(scenario, dark))

        self.assertEqual(0.0, leader.price_best_response(0, PriceVector([0.05])))

    def test_report_is_consistent(self) -> None:
        leader = leader_for(4)
        report = leader.stackelberg_solve('nonuniform')
        state = report.follower

        self.assertEqual('nonuniform', report.scheme)
        self.assertTrue(np.all((report.prices.q >= 0) & (report.prices.q <= 0.1)))
        npt.assert_allclose(report.prices.q * 8 * report.psi, report.ris_utilities)
        self.assertAlmostEqual(leader.follower.utility(state, report.prices), report.bs_utility, places=9)
        self.assertEqual(len(report.price_trace), report.rounds + 1)
        self.assertIsNotNone(report.se_check)
        self.assertEqual(2, len(report.se_check.max_deviation))

    def test_uniform(self) -> None:
        report = leader_for(5).stackelberg_solve('uniform')

        self.assertEqual('uniform', report.prices.scheme)
        self.assertEqual(report.prices.q[0], report.prices.q[1])
        self.assertEqual(1, report.rounds)
        self.assertEqual(1, len(report.se_check.max_deviation))

    def test_deviation_grows_with_grid(self) -> None:
        leader = leader_for(6)
        report = leader.stackelberg_solve('nonuniform')

        coarse = leader.price_grid(16)
        fine = np.union1d(coarse, leader.price_grid(128))

        small = leader.verify_se(report, grid=coarse)
        large = leader.verify_se(report, grid=fine)
        for a, b in zip(small.max_deviation, large.max_deviation):
            self.assertGreaterEqual(b, a)

        # the current prices are always on the deviation grid
        for deviation in small.max_deviation:
            self.assertGreaterEqual(deviation, -1e-12)

    def test_zero_cap(self) -> None:
        leader = leader_for(7, price_cap=0)

        for scheme in ('nonuniform', 'uniform'):
            report = leader.stackelberg_solve(scheme)
            with self.subTest(scheme=scheme):
                npt.assert_array_equal([0.0, 0.0], report.prices.q)
                npt.assert_array_equal([0.0, 0.0], report.ris_utilities)
                self.assertTrue(report.se_check.accepted)

        report = leader.random_pricing(np.random.default_rng(0))
        npt.assert_array_equal([0.0, 0.0], report.prices.q)

    def test_report_rejects_prices_off_the_range(self) -> None:
        leader = leader_for(9)

        for q in ([0.05, 0.2], [-0.01, 0.05]):
            with self.subTest(q=q), self.assertRaises(ValidationError):
                leader.assemble_report('nonuniform', PriceVector(q), rounds=0, converged=True, price_trace=[])
        with self.assertRaises(ValidationError):
            leader.assemble_report('uniform', PriceVector([0.01, 0.02], scheme='uniform'), rounds=0,
                                   converged=True, price_trace=[])

    def test_report_dict(self) -> None:
        leader = leader_for(8)
        report = leader.stackelberg_solve('uniform')

        data = json.loads(json.dumps(report.to_dict()))
        loaded = EquilibriumReport.from_dict(data, leader.scenario.elements_per_ris)

        npt.assert_array_equal(report.prices.q, loaded.prices.q)
        npt.assert_array_equal(report.follower.beamformers.w, loaded.follower.beamformers.w)
        npt.assert_array_equal(report.follower.phase_config.phi, loaded.follower.phase_config.phi)
        self.assertEqual(report.bs_utility, loaded.bs_utility)
        self.assertEqual(report.se_check, loaded.se_check)

        data['schema_version'] = 99
        with self.assertRaises(ValidationError):
            EquilibriumReport.from_dict(data, leader.scenario.elements_per_ris)


class TestPricingGame(unittest.TestCase):

    def setUp(self) -> None:
        self.scenario = Scenario({'num_ris': 2, 'elements_per_ris': 8})

    def test_random_pricing_is_reproducible(self) -> None:
        first = PricingGame(self.scenario, seed=3).solve('random-nonuniform')
        second = PricingGame(self.scenario, seed=3).solve('random')

        npt.assert_array_equal(first.prices.q, second.prices.q)
        self.assertTrue(np.all((first.prices.q >= 0) & (first.prices.q <= self.scenario.price_cap)))
        self.assertEqual(0, first.rounds)

        other = PricingGame(self.scenario, seed=4).solve('random-nonuniform')
        self.assertFalse(np.array_equal(first.prices.q, other.prices.q))

    def test_random_uniform_shares_one_price(self) -> None:
        report = PricingGame(self.scenario, seed=3).solve('random-uniform')
        self.assertEqual(report.prices.q[0], report.prices.q[1])

    def test_order_of_schemes_does_not_matter(self) -> None:
        alone = PricingGame(self.scenario, seed=5).solve('random-nonuniform')
        after = PricingGame(self.scenario, seed=5).solve_all(['uniform', 'random-nonuniform'])[1]

        npt.assert_array_equal(alone.prices.q, after.prices.q)
        self.assertEqual(alone.bs_utility, after.bs_utility)

    def test_reported_utility_uses_raw_channels(self) -> None:
        game = PricingGame(self.scenario, seed=6)
        report = game.solve('uniform')
        state = report.follower

        expected = metrics.bs_utility(game.channels, state.phase_config, state.beamformers, report.prices,
                                      self.scenario)
        self.assertEqual(expected, report.bs_utility)

    def test_layout_mismatch(self) -> None:
        channels = PricingGame(self.scenario, seed=0).channels
        with self.assertRaises(StructuralError):
            PricingGame(self.scenario.with_overrides(elements_per_ris=4), seed=0, channels=channels)


@slow_test
class TestLeaderAcceptance(unittest.TestCase):

    def test_equilibrium_on_default_scenario(self) -> None:
        scenario = Scenario({})

        accepted = 0
        for seed in range(10):
            report = PricingGame(scenario, seed=seed).solve('nonuniform')
            with self.subTest(seed=seed):
                self.assertTrue(report.converged)
                self.assertLessEqual(report.rounds, 50)
            accepted += report.se_check.accepted

        self.assertGreaterEqual(accepted, 9)


if __name__ == '__main__':
    unittest.main()
