import math
from io import StringIO

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase
from scipy import stats
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from core.exceptions import DomainError

from .channels import PauliChannel1, PauliChannel2, ThermalParams, unitary_superoperator
from .services import (
    UNBOUNDED,
    ChannelService,
    OutcomeKind,
    OutcomeSampler,
    RateService,
    RusParams,
)

CZ = np.diag([1, 1, 1, -1]).astype(complex)


def random_density_matrix(rng, dim):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = raw @ raw.conj().T
    return rho / np.trace(rho)


def apply_superoperator(superoperator, rho):
    dim = rho.shape[0]
    return (superoperator @ rho.reshape(-1)).reshape(dim, dim)


class TrialRateTests(SimpleTestCase):
    def test_examples(self):
        for (eta_a, eta_b), expected in (
            ((1.0, 1.0), (0.5, 0.5, 0.0)),
            ((0.0, 0.4), (0.0, 0.0, 1.0)),
            ((0.9, 0.9), (0.405, 0.405, 0.19)),
        ):
            with self.subTest(eta_a=eta_a, eta_b=eta_b):
                rates = RateService.trial_rates(eta_a, eta_b)
                np.testing.assert_allclose(
                    (rates.p_s, rates.p_r, rates.p_f), expected, atol=1e-15
                )

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            RateService.trial_rates(1.1, 0.5)
        with self.assertRaises(DomainError):
            RateService.rus_success_prob(0.9, 0.9, 0)
        with self.assertRaises(DomainError):
            RateService.hrus_rates(0.9, 0.9, 2, 0)


class GateRateTests(SimpleTestCase):
    def test_unbounded_limits(self):
        self.assertEqual(RateService.rus_success_prob(1.0, 1.0, UNBOUNDED), 1.0)
        self.assertEqual(RateService.rus_failure_prob(1.0, 1.0, UNBOUNDED), 0.0)
        self.assertEqual(RateService.rus_abort_prob(1.0, 1.0, UNBOUNDED), 0.0)
        eta = 0.8
        self.assertAlmostEqual(
            RateService.rus_success_prob(0.8, 1.0, UNBOUNDED), eta / (2 - eta), places=14
        )
        self.assertAlmostEqual(
            RateService.rus_failure_prob(0.8, 1.0, UNBOUNDED),
            (2 - 2 * eta) / (2 - eta),
            places=14,
        )

    def test_perfect_transmission_three_trials(self):
        rates = RateService.rus_rates(1.0, 1.0, 3)
        self.assertAlmostEqual(rates.P_f + rates.P_a, 0.125, places=15)

    def test_rates_sum_to_one_on_grid(self):
        for eta in np.linspace(0.0, 1.0, 11):
            for k in range(1, 21):
                rates = RateService.rus_rates(eta, eta, k)
                total = rates.P_s + rates.P_f + rates.P_a
                self.assertAlmostEqual(total, 1.0, delta=1e-12)
                for value in (rates.P_s, rates.P_f, rates.P_a):
                    self.assertTrue(0.0 <= value <= 1.0)

    def test_success_monotone_in_budget_and_transmission(self):
        etas = np.linspace(0.0, 1.0, 11)
        for eta in etas:
            values = [RateService.rus_success_prob(eta, 0.9, k) for k in range(1, 21)]
            self.assertTrue(all(b >= a for a, b in zip(values, values[1:])))
        for k in (1, 3, 8):
            values = [RateService.rus_success_prob(eta, 0.7, k) for eta in etas]
            self.assertTrue(all(b >= a for a, b in zip(values, values[1:])))

    def test_hybrid_with_one_photon_is_rus(self):
        for eta in np.linspace(0.0, 1.0, 11):
            for k in (*range(1, 21), UNBOUNDED):
                self.assertEqual(
                    RateService.hrus_rates(eta, eta, k, 1), RateService.rus_rates(eta, eta, k)
                )

    def test_hybrid_perfect_transmission(self):
        rates = RateService.hrus_rates(1.0, 1.0, 1, 2)
        self.assertEqual((rates.P_s, rates.P_f, rates.P_a), (0.75, 0.0, 0.25))

    def test_hybrid_sums_to_one(self):
        for n in range(1, 6):
            for k in (1, 2, 5, 20):
                rates = RateService.hrus_rates(0.93, 0.97, k, n)
                self.assertAlmostEqual(rates.P_s + rates.P_f + rates.P_a, 1.0, delta=1e-12)


class OutcomeSamplerTests(SimpleTestCase):
    def test_perfect_transmission_never_fails(self):
        rng = np.random.default_rng(3)
        params = RusParams(1.0, 1.0, k=5)
        outcomes = [OutcomeSampler.sample_gate_outcome(params, rng) for _ in range(2000)]
        self.assertNotIn(OutcomeKind.FAILURE, [o.kind for o in outcomes])
        for outcome in outcomes:
            self.assertTrue(1 <= outcome.trials_used <= 5)
            if outcome.kind == OutcomeKind.ABORT:
                self.assertEqual(outcome.trials_used, 5)

    def test_single_trial_success_frequency(self):
        rng = np.random.default_rng(11)
        params = RusParams(1.0, 1.0, k=1)
        shots = 100_000
        kinds, trials = OutcomeSampler.sample_gate_outcomes(params, rng, shots)
        successes = np.count_nonzero(kinds == OutcomeKind.SUCCESS)
        sigma = math.sqrt(shots * 0.25)
        self.assertLess(abs(successes - shots / 2), 3 * sigma)
        self.assertTrue(np.all(trials == 1))

    def test_direct_sampler_matches_closed_form(self):
        rng = np.random.default_rng(5)
        params = RusParams(0.95, 0.95, k=8)
        shots = 20_000
        kinds = [OutcomeSampler.sample_gate_outcome(params, rng).kind for _ in range(shots)]
        expected = RateService.gate_rates(params).P_s
        observed = kinds.count(OutcomeKind.SUCCESS) / shots
        sigma = math.sqrt(expected * (1 - expected) / shots)
        self.assertLess(abs(observed - expected), 4 * sigma)

    def test_chi_square_against_closed_forms(self):
        grid = [
            RusParams(0.9, 0.9, k=6),
            RusParams(0.95, 0.95, k=8),
            RusParams(0.7, 0.9, k=3),
            RusParams(0.98, 0.98, k=2, n=3),
            RusParams(0.99, 0.97, k=4, n=2),
        ]
        shots = 1_000_000
        for index, params in enumerate(grid):
            with self.subTest(params=params):
                rng = np.random.default_rng([17, index])
                kinds, trials = OutcomeSampler.sample_gate_outcomes(params, rng, shots)
                observed = np.bincount(kinds, minlength=3)
                rates = RateService.gate_rates(params)
                expected = np.array([rates.P_s, rates.P_f, rates.P_a]) * shots
                mask = expected > 0
                _, p_value = stats.chisquare(observed[mask], expected[mask])
                self.assertGreater(p_value, 0.001)
                self.assertTrue(np.all(trials[kinds == OutcomeKind.ABORT] == params.k))


class PauliChannelTests(SimpleTestCase):
    def test_failure_channel_uniform_and_idempotent(self):
        failure = ChannelService.failure_channel()
        for label in ("II", "ZI", "IZ", "ZZ"):
            self.assertEqual(failure.as_mapping()[label], 0.25)
        self.assertTrue(failure.compose(failure).isclose(failure))

    def test_success_channel_limits(self):
        self.assertEqual(ChannelService.success_channel(0.0).as_mapping()["II"], 1.0)
        self.assertTrue(
            ChannelService.success_channel(1.0).isclose(ChannelService.failure_channel())
        )
        with self.assertRaises(DomainError):
            ChannelService.success_channel(1.5)

    def test_failure_absorbs_cz(self):
        failure = ChannelService.failure_channel()
        self.assertEqual(failure.conjugated_by_cz(), failure)
        after_cz = failure.superoperator() @ unitary_superoperator(CZ)
        np.testing.assert_allclose(after_cz, failure.superoperator(), atol=1e-12)

    def test_cz_conjugation_of_x(self):
        channel = PauliChannel2({"XI": 1.0})
        self.assertEqual(channel.conjugated_by_cz().as_mapping()["XZ"], 1.0)

    def test_distribution_checked(self):
        with self.assertRaises(DomainError):
            PauliChannel1(0.5, 0.2, 0.2, 0.2)
        with self.assertRaises(DomainError):
            PauliChannel2({"QQ": 1.0})


class DecoherenceChannelTests(SimpleTestCase):
    def test_zero_duration_is_identity(self):
        self.assertTrue(ChannelService.decoherence_channel(0.0).is_identity)

    def test_pure_dephasing_quarter(self):
        channel = ChannelService.decoherence_channel(math.log(2.0))
        self.assertAlmostEqual(channel.p_Z, 0.25, places=15)
        self.assertEqual((channel.p_X, channel.p_Y), (0.0, 0.0))

    def test_semigroup(self):
        for t1, t2, ratio in ((0.01, 0.02, 0.0), (0.1, 0.3, 0.5), (0.05, 0.05, 1.9)):
            with self.subTest(t1=t1, t2=t2):
                first = ChannelService.decoherence_channel(t1, t1 * ratio)
                second = ChannelService.decoherence_channel(t2, t2 * ratio)
                joint = ChannelService.decoherence_channel(t1 + t2, (t1 + t2) * ratio)
                np.testing.assert_allclose(
                    first.compose(second).probabilities, joint.probabilities, atol=1e-12
                )

    def test_t2_above_twice_t1_rejected(self):
        with self.assertRaises(DomainError):
            ChannelService.decoherence_channel(0.1, 0.5)

    def test_matches_lindblad_integration(self):
        rng = np.random.default_rng(2)
        gamma, gamma_star, t = 0.3, 0.2, 1.7
        # Equal up and down rates: the n_th >> 1 regime.
        params = ThermalParams(gamma_0=gamma / 1e9, gamma_star=gamma_star, n_th=1e9)
        generator = ChannelService.lindblad_generator(params)
        rho = random_density_matrix(rng, 2)
        solution = solve_ivp(
            lambda _, y: generator @ y,
            (0.0, t),
            rho.reshape(-1),
            method="DOP853",
            rtol=1e-12,
            atol=1e-13,
        )
        integrated = solution.y[:, -1].reshape(2, 2)
        channel = ChannelService.decoherence_channel(
            t * (gamma + gamma_star), t * 2 * gamma
        )
        np.testing.assert_allclose(
            apply_superoperator(channel.superoperator(), rho), integrated, atol=1e-8
        )


class ThermalChannelTests(SimpleTestCase):
    def test_zero_time_identity(self):
        channel = ChannelService.thermal_channel(0.0, ThermalParams(1.0, 0.5, 0.3))
        np.testing.assert_allclose(channel, np.eye(4), atol=1e-15)

    def test_matches_generator_exponential(self):
        for params in (ThermalParams(1.0, 0.5, 0.3), ThermalParams(0.2, 0.0, 4.0)):
            for t in (0.1, 1.0, 5.0):
                with self.subTest(params=params, t=t):
                    np.testing.assert_allclose(
                        ChannelService.thermal_channel(t, params),
                        expm(ChannelService.lindblad_generator(params) * t),
                        atol=1e-12,
                    )

    def test_trace_preserving_and_positive(self):
        params = ThermalParams(0.7, 0.1, 1.5)
        channel = ChannelService.thermal_channel(0.8, params)
        # Choi matrix from the row-major superoperator.
        choi = channel.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
        self.assertGreater(np.linalg.eigvalsh(choi).min(), -1e-12)
        rho = random_density_matrix(np.random.default_rng(0), 2)
        self.assertAlmostEqual(np.trace(apply_superoperator(channel, rho)).real, 1.0)

    def test_zero_temperature_fixed_point(self):
        channel = ChannelService.thermal_channel(200.0, ThermalParams(1.0, 0.0, 0.0))
        rho = random_density_matrix(np.random.default_rng(1), 2)
        np.testing.assert_allclose(
            apply_superoperator(channel, rho), np.diag([0.0, 1.0]), atol=1e-12
        )

    def test_high_temperature_reduces_to_pauli_channel(self):
        n_th, gamma_0, gamma_star, t = 1e6, 1e-6, 0.05, 2.0
        params = ThermalParams(gamma_0, gamma_star, n_th)
        gamma = gamma_0 * n_th
        pauli = ChannelService.decoherence_channel(t * (gamma + gamma_star), 2 * gamma * t)
        np.testing.assert_allclose(
            ChannelService.thermal_channel(t, params), pauli.superoperator(), atol=1e-5
        )


class RatesCommandTests(SimpleTestCase):
    def test_three_trials_at_perfect_transmission(self):
        out = StringIO()
        call_command("rates", "--eta", "1", "--k", "3", stdout=out)
        self.assertIn("0.125", out.getvalue())

    def test_hybrid_table(self):
        out = StringIO()
        call_command("rates", "--eta", "0.98", "--k", "1,2,inf", "--n", "1,2", stdout=out)
        lines = out.getvalue().strip().splitlines()
        self.assertEqual(len(lines), 2 + 6)
