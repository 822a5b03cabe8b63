from io import StringIO

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import DomainError, OpticsError
from noise.channels import PauliChannel2, unitary_superoperator
from noise.services import ChannelService

from .fock import Interferometer, JointState, emit
from .services import CZ, LOSS, SUCCESS_PATTERNS, OpticsService


def random_pure_state(rng, dim):
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vector / np.linalg.norm(vector)


def apply_superoperator(superoperator, rho):
    return (superoperator @ rho.reshape(-1)).reshape(rho.shape)


def choi_eigenvalues(superoperator):
    dim = int(round(np.sqrt(superoperator.shape[0])))
    choi = (
        superoperator.reshape(dim, dim, dim, dim)
        .transpose(0, 2, 1, 3)
        .reshape(dim * dim, dim * dim)
    )
    return np.linalg.eigvalsh((choi + choi.conj().T) / 2)


class InterferometerTests(SimpleTestCase):
    def test_rus_unitary_entries(self):
        matrix = OpticsService.rus_unitary().matrix
        np.testing.assert_allclose(matrix @ matrix.conj().T, np.eye(4), atol=1e-12)
        self.assertEqual(matrix[0, 0], 0.5)
        self.assertEqual(matrix[2, 2], -0.5j)

    def test_rejects_non_unitary(self):
        with self.assertRaises(OpticsError):
            Interferometer(np.ones((4, 4)))


class EmissionTests(SimpleTestCase):
    def test_spin_zero_emits_into_first_rail(self):
        state = emit(JointState.from_spins([1, 0, 0, 0]), "a")
        [((spin, occupation), amplitude)] = state.amplitudes.items()
        self.assertEqual((spin, occupation[0], occupation[1]), (0, 1, 0))
        self.assertEqual(amplitude, 1)

    def test_plus_state_is_entangled(self):
        plus = np.kron([1, 1], [1, 0]) / np.sqrt(2)
        state = emit(JointState.from_spins(plus), "a")
        self.assertEqual(len(state.amplitudes), 2)
        for (spin, occupation), amplitude in state.amplitudes.items():
            self.assertAlmostEqual(amplitude, 1 / np.sqrt(2))
            self.assertEqual(occupation[spin >> 1], 1)

    def test_tracing_photon_dephases_spin(self):
        vector = random_pure_state(np.random.default_rng(4), 4)
        rho = np.outer(vector, vector.conj())
        reduced = emit(JointState.from_spins(vector), "a").reduced_spin_density()
        dephase_a = PauliChannel2({"II": 0.5, "ZI": 0.5}).superoperator()
        np.testing.assert_allclose(reduced, apply_superoperator(dephase_a, rho), atol=1e-12)

    def test_occupied_modes_rejected(self):
        state = emit(JointState.from_spins([1, 0, 0, 0]), "a")
        with self.assertRaises(OpticsError):
            emit(state, "a")


class DetectionDistributionTests(SimpleTestCase):
    def test_mixed_spins_perfect_transmission(self):
        distribution = OpticsService.detection_distribution(1.0, 1.0)
        listed = [(0, 2), (1, 3), (0, 3), (1, 2), (0, 0), (1, 1), (2, 2), (3, 3)]
        for pattern in listed:
            self.assertAlmostEqual(distribution[pattern].probability, 1 / 8, places=12)
        self.assertNotIn((0, 1), distribution)
        self.assertNotIn((2, 3), distribution)
        self.assertNotIn(LOSS, distribution)

    def test_total_loss_is_failure_channel(self):
        distribution = OpticsService.detection_distribution(0.0, 0.0)
        self.assertEqual(list(distribution), [LOSS])
        self.assertAlmostEqual(distribution[LOSS].probability, 1.0, places=12)
        np.testing.assert_allclose(
            distribution[LOSS].channel,
            ChannelService.failure_channel().superoperator(),
            atol=1e-12,
        )

    def test_corrected_success_is_cz(self):
        outcome = OpticsService.detection_distribution()[(0, 2)]
        correction = np.kron(np.diag([1, 1j]), np.diag([1, -1j]))
        corrected = unitary_superoperator(correction) @ outcome.channel
        rng = np.random.default_rng(8)
        for _ in range(10):
            vector = random_pure_state(rng, 4)
            rho = np.outer(vector, vector.conj())
            np.testing.assert_allclose(
                apply_superoperator(corrected, rho), CZ @ rho @ CZ, atol=1e-10
            )

    def test_probabilities_sum_to_one(self):
        for eta in (0.0, 0.3, 0.7, 1.0):
            for D in (0.0, 0.5, 1.0):
                with self.subTest(eta=eta, D=D):
                    distribution = OpticsService.detection_distribution(eta, eta, D=D)
                    total = sum(outcome.probability for outcome in distribution.values())
                    self.assertAlmostEqual(total, 1.0, places=12)

    def test_conditional_channels_are_cptp(self):
        for eta, D in ((0.3, 0.0), (0.7, 0.5), (1.0, 1.0)):
            for pattern, outcome in OpticsService.detection_distribution(eta, 0.9, D=D).items():
                with self.subTest(eta=eta, D=D, pattern=pattern):
                    self.assertGreater(choi_eigenvalues(outcome.channel).min(), -1e-10)
                    rho = np.eye(4) / 4
                    self.assertAlmostEqual(
                        np.trace(apply_superoperator(outcome.channel, rho)).real, 1.0, places=10
                    )

    def test_single_loss_erases_like_double_loss(self):
        for eta_a, eta_b in ((0.5, 0.5), (0.3, 0.8), (0.9, 2 / 3)):
            with self.subTest(eta_a=eta_a, eta_b=eta_b):
                np.testing.assert_allclose(
                    OpticsService.lost_photon_channel(eta_a, eta_b, lost=1),
                    OpticsService.lost_photon_channel(eta_a, eta_b, lost=2),
                    atol=1e-10,
                )

    def test_success_probability_per_trial(self):
        for eta_a in np.linspace(0.2, 1.0, 5):
            for eta_b in np.linspace(0.2, 1.0, 5):
                distribution = OpticsService.detection_distribution(eta_a, eta_b)
                success = sum(distribution[p].probability for p in SUCCESS_PATTERNS)
                self.assertAlmostEqual(success, eta_a * eta_b / 2, places=12)

    def test_pure_input_probabilities(self):
        vector = random_pure_state(np.random.default_rng(12), 4)
        distribution = OpticsService.detection_distribution(
            0.8, 0.9, spins=np.outer(vector, vector.conj())
        )
        total = sum(outcome.probability for outcome in distribution.values())
        self.assertAlmostEqual(total, 1.0, places=12)

    def test_bad_transmission(self):
        with self.assertRaises(DomainError):
            OpticsService.detection_distribution(1.2, 1.0)


class OutcomeTableTests(SimpleTestCase):
    def test_perfect_transmission_table(self):
        report = OpticsService.verify_table1(1.0, 1.0, tolerance=1e-10)
        self.assertEqual(len(report.rows), 11)
        self.assertTrue(report.passed, report.rows)
        self.assertLess(report.max_deviation, 1e-10)

    def test_lossy_table(self):
        report = OpticsService.verify_table1(0.7, 0.9, tolerance=1e-10)
        self.assertTrue(report.passed, report.rows)
        loss_row = next(row for row in report.rows if row.pattern == LOSS)
        self.assertAlmostEqual(loss_row.probability, 1 - 0.63, places=12)

    def test_repeat_pattern_corrected_to_identity(self):
        outcome = OpticsService.detection_distribution()[(2, 2)]
        corrected = unitary_superoperator(np.diag([1, -1, -1, 1]).astype(complex)) @ outcome.channel
        np.testing.assert_allclose(corrected, np.eye(16), atol=1e-10)


class DistinguishabilityTests(SimpleTestCase):
    def test_matches_closed_form(self):
        for D in (0.0, 0.3, 1.0):
            with self.subTest(D=D):
                report = OpticsService.verify_distinguishability(D, tolerance=1e-10)
                self.assertTrue(report.passed, report.rows)

    def test_indistinguishable_is_cz(self):
        for _, corrected in OpticsService.distinguishability_distribution(0.0).values():
            np.testing.assert_allclose(corrected, unitary_superoperator(CZ), atol=1e-10)

    def test_fully_distinguishable_mixture(self):
        _, corrected = OpticsService.distinguishability_distribution(1.0)[(0, 2)]
        correction = np.kron(np.diag([1, 1j]), np.diag([1, -1j]))
        expected = 0.5 * (
            unitary_superoperator(correction @ np.diag([1, 1, -1, -1]))
            + unitary_superoperator(correction @ np.diag([1, -1, 1, -1]))
        )
        np.testing.assert_allclose(corrected, expected, atol=1e-10)

    def test_diagonal_action_matches_success_channel(self):
        for D in (0.1, 0.4):
            _, corrected = OpticsService.distinguishability_distribution(D)[(0, 2)]
            approximate = ChannelService.success_channel(D).superoperator() @ unitary_superoperator(CZ)
            for basis in range(4):
                rho = np.zeros((4, 4), dtype=complex)
                rho[basis, basis] = 1
                np.testing.assert_allclose(
                    apply_superoperator(corrected, rho),
                    apply_superoperator(approximate, rho),
                    atol=1e-12,
                )

    def test_full_dephasing_approximation_dominates(self):
        rng = np.random.default_rng(20)
        D = 0.3
        _, exact = OpticsService.distinguishability_distribution(D)[(0, 2)]
        approximate = ChannelService.success_channel(D).superoperator() @ unitary_superoperator(CZ)
        off_diagonal = ~np.eye(4, dtype=bool)
        for _ in range(20):
            vector = random_pure_state(rng, 4)
            rho = np.outer(vector, vector.conj())
            exact_out = apply_superoperator(exact, rho)
            approx_out = apply_superoperator(approximate, rho)
            np.testing.assert_allclose(np.diag(exact_out), np.diag(approx_out), atol=1e-12)
            self.assertTrue(
                np.all(
                    np.abs(approx_out[off_diagonal]) <= np.abs(exact_out[off_diagonal]) + 1e-12
                )
            )

    def test_domain(self):
        with self.assertRaises(DomainError):
            OpticsService.distinguishability_distribution(1.5)


class TableauTests(SimpleTestCase):
    def test_all_transformations_hold(self):
        report = OpticsService.tableau_check(tolerance=1e-10)
        self.assertTrue(report.passed, [r for r in report.rows if r.deviation > 1e-10])
        names = {row.pattern for row in report.rows}
        self.assertIn("emission |0>: +ZI", names)
        self.assertIn("(2,2) corrected XI", names)
        self.assertIn("(0,2) corrected XI", names)


class VerifyOpticsCommandTests(SimpleTestCase):
    def test_exits_cleanly(self):
        out = StringIO()
        call_command("verify_optics", stdout=out)
        self.assertIn("max deviation", out.getvalue())

    def test_tight_tolerance_fails(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("verify_optics", "--tolerance", "-1", stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
