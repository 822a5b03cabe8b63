import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import DomainError
from core.serializers import NoiseSectionSerializer
from core.services import RunConfigService, SeedService
from decoding.graphs import LogicalErrorEstimate

from .services import (
    EstimatorService,
    SurfaceService,
    ThresholdService,
    TradeoffService,
)
from .sweeps import (
    CURVE_COLUMNS,
    Border,
    FtSurfaceSpec,
    SweepSpec,
    ThresholdEstimate,
    triangle_side,
)

HUGE = 10**9
A, B, C = 0.1024, 0.02348, 0.02220


def power_law_errors(x, distance, threshold, shots=HUGE, scale=0.1):
    return int(round(scale * (x / threshold) ** ((distance + 1) / 2) * shots))


def power_law_evaluator(threshold):
    def evaluator(circuit, shots, seed, workers=None):
        return LogicalErrorEstimate(
            power_law_errors(circuit.noise.p_F, circuit.distance, threshold), HUGE
        )

    return evaluator


def plane_evaluator(level):
    def evaluator(circuit, shots, seed, workers=None):
        noise = circuit.noise
        position = noise.p_F / A + noise.t_rus_over_T2 / B + noise.D / C
        return LogicalErrorEstimate(power_law_errors(position, circuit.distance, level), HUGE)

    return evaluator


def noise_section(**values):
    serializer = NoiseSectionSerializer(data=values)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data


class CrossingEstimatorTests(SimpleTestCase):
    values = np.linspace(0.06, 0.14, 9)

    def curves(self, values, threshold):
        return [
            ([power_law_errors(x, d, threshold) for x in values], [HUGE] * len(values))
            for d in (3, 5)
        ]

    def test_recovers_known_crossing(self):
        small, large = self.curves(self.values, 0.1)
        crossing = EstimatorService.pair_crossing(self.values, *small, *large)
        self.assertAlmostEqual(crossing, 0.1, delta=1e-4)

    def test_scale_equivariance(self):
        small, large = self.curves(self.values, 0.1)
        base = EstimatorService.pair_crossing(self.values, *small, *large)
        scaled = EstimatorService.pair_crossing(self.values * 7.0, *small, *large)
        self.assertAlmostEqual(scaled, 7.0 * base, delta=1e-9 * scaled + 1e-12)

    def test_no_crossing_in_range(self):
        small, large = self.curves(self.values, 0.2)
        self.assertIsNone(EstimatorService.pair_crossing(self.values, *small, *large))

    def test_bootstrap_interval_contains_crossing(self):
        shots = 20000
        small = (
            [power_law_errors(x, 3, 0.1, shots) for x in self.values],
            [shots] * len(self.values),
        )
        large = (
            [power_law_errors(x, 5, 0.1, shots) for x in self.values],
            [shots] * len(self.values),
        )
        crossing, low, high = EstimatorService.bootstrap_crossing(
            self.values, small, large, SeedService.generator(1), resamples=100
        )
        self.assertLess(low, crossing)
        self.assertLess(crossing, high)
        self.assertLess(low, 0.1)
        self.assertGreater(high, 0.1)

    def test_pooled_weighting(self):
        pooled = EstimatorService.pooled(
            [
                ThresholdEstimate((3, 5), 0.10, 0.09, 0.11),
                ThresholdEstimate((5, 7), 0.11, 0.109, 0.111),
            ]
        )
        self.assertEqual(pooled.distances, (3, 5, 7))
        self.assertGreater(pooled.crossing, 0.109)
        self.assertLess(pooled.ci_low, pooled.crossing)
        missing = EstimatorService.pooled([ThresholdEstimate((3, 5))])
        self.assertFalse(missing.found)
        self.assertEqual(missing.as_dict()["status"], "no crossing in range")


class ThresholdScanTests(SimpleTestCase):
    def test_synthetic_scan(self):
        spec = SweepSpec("p_F", tuple(np.linspace(0.06, 0.14, 9)), (3, 5, 7), shots=HUGE, seed=3)
        scan = ThresholdService.threshold_scan(
            spec, noise_section(), evaluator=power_law_evaluator(0.1)
        )
        self.assertEqual(list(scan.curves.columns), CURVE_COLUMNS)
        self.assertEqual(len(scan.curves), 27)
        self.assertEqual([pair.distances for pair in scan.pairs], [(3, 5), (5, 7)])
        self.assertAlmostEqual(scan.pooled.crossing, 0.1, delta=2e-3)
        self.assertTrue(all(pair.found for pair in scan.pairs))

    def test_sweep_spec_validation(self):
        with self.assertRaises(DomainError):
            SweepSpec("p_F", (0.2, 0.1), (3, 5), 10, 0)
        with self.assertRaises(DomainError):
            SweepSpec("p_F", (0.1, 0.2), (3,), 10, 0)
        with self.assertRaises(DomainError):
            SweepSpec("p_F", (0.1, 0.2), (3, 4), 10, 0)
        with self.assertRaises(DomainError):
            SweepSpec("q", (0.1, 0.2), (3, 5), 10, 0)

    def test_sweep_spec_from_config(self):
        config = RunConfigService.resolve(
            overrides={"sweep": {"axis": "D", "points": 4}, "code": {"distances": [5, 3]}}
        )
        spec = ThresholdService.sweep_spec(config)
        self.assertEqual(spec.distances, (3, 5))
        np.testing.assert_allclose(spec.values, [0.015, 0.02, 0.025, 0.03])

    def test_noise_at(self):
        section = noise_section(p_F=0.1, D=0.02)
        self.assertAlmostEqual(ThresholdService.noise_at("w", 0.5, section).p_F, 0.05)
        self.assertAlmostEqual(ThresholdService.noise_at("w", 0.5, section).D, 0.01)
        self.assertAlmostEqual(ThresholdService.noise_at("D", 0.03, section).D, 0.03)
        self.assertAlmostEqual(
            ThresholdService.noise_at("t_rus_over_T2", 0.02, section).t_rus_over_T2, 0.02
        )
        lossy = ThresholdService.noise_at("epsilon", 0.0, noise_section(k=4))
        self.assertAlmostEqual(lossy.p_F, 1 / 16)


class FtSurfaceTests(SimpleTestCase):
    def test_triangle_side(self):
        self.assertEqual(triangle_side(120), 14)
        self.assertEqual(triangle_side(3), 1)
        with self.assertRaises(DomainError):
            triangle_side(7)

    def test_directions_lie_on_plane(self):
        spec = FtSurfaceSpec((A, B, C), points=120)
        directions = spec.directions()
        self.assertEqual(len(directions), 120)
        np.testing.assert_allclose(directions[0], (A, 0.0, 0.0))
        for p, t, D in directions:
            self.assertAlmostEqual(p / A + t / B + D / C, 1.0)

    def test_spec_validation(self):
        with self.assertRaises(DomainError):
            FtSurfaceSpec((A, B, 0.0))
        with self.assertRaises(DomainError):
            FtSurfaceSpec((A, B, C), w_min=1.0, w_max=0.9)

    def test_surface_of_synthetic_plane(self):
        spec = FtSurfaceSpec((A, B, C), points=3, distances=(3, 5))
        surface = SurfaceService.ft_surface(spec, HUGE, seed=1, evaluator=plane_evaluator(0.93))
        self.assertEqual(len(surface.points), 3)
        for point in surface.points:
            with self.subTest(direction=point.direction):
                self.assertTrue(point.bracketed)
                self.assertFalse(point.at_endpoint)
                self.assertAlmostEqual(point.w_th, 0.93, delta=2e-3)
        border = SurfaceService.border_from_surface(surface)
        self.assertAlmostEqual(border.root, surface.points[0].w_th * A)
        self.assertEqual(set(surface.scan["distance"]), {3, 5})

    def test_unbracketed_direction(self):
        spec = FtSurfaceSpec((A, B, C), points=3, distances=(3, 5))
        surface = SurfaceService.ft_surface(spec, HUGE, seed=1, evaluator=plane_evaluator(0.5))
        self.assertTrue(all(not point.bracketed for point in surface.points))
        self.assertTrue(all(point.w_th == 0.85 and point.at_endpoint for point in surface.points))


class BorderTests(SimpleTestCase):
    def test_line(self):
        border = Border.line(A, B)
        self.assertAlmostEqual(border(0.0), B)
        self.assertAlmostEqual(border(A / 2), B / 2)
        self.assertEqual(border(A), 0.0)
        self.assertEqual(border(0.3), 0.0)
        self.assertEqual(border.root, A)

    def test_from_points_is_monotone(self):
        points = [
            (0.0, 0.024, 0.0),
            (0.03, 0.018, 0.0),
            (0.05, 0.019, 0.0),
            (0.08, 0.006, 0.0),
            (0.1, 0.0, 0.0),
            (0.05, 0.005, 0.01),
        ]
        border = Border.from_points(points)
        self.assertEqual(border.p_values, (0.0, 0.03, 0.05, 0.08, 0.1))
        self.assertEqual(border.t_values[2], 0.018)
        grid = np.linspace(0.0, 0.12, 61)
        values = border(grid)
        self.assertTrue(np.all(np.diff(values) <= 1e-15))
        self.assertTrue(np.all(values >= 0))

    def test_surface_must_reach_axis(self):
        with self.assertRaises(DomainError):
            Border.from_points([(0.0, 0.02, 0.0), (0.05, 0.01, 0.0)])

    def test_load_border(self):
        payload = {
            "points": [
                {"boundary": [0.0, B, 0.0]},
                {"boundary": [A, 0.0, 0.0]},
                {"boundary": [0.0, 0.0, C]},
            ]
        }
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "surface.json"
            path.write_text(json.dumps(payload))
            border = SurfaceService.load_border(path)
        self.assertAlmostEqual(border(A / 2), B / 2)
        with self.assertRaises(DomainError):
            SurfaceService.load_border("/nonexistent/surface.json")


class TradeoffTests(SimpleTestCase):
    border = Border.line(A, B)
    losses = np.linspace(0.0, 0.03, 31)

    def test_small_budgets_have_no_area(self):
        curve = TradeoffService.loss_coherence_tradeoff([1, 2, 3], self.losses, self.border)
        self.assertTrue((curve.curves["t_trial_max"] == 0).all())
        self.assertTrue(curve.envelope["k_opt"].isna().all())

    def test_zero_loss_values(self):
        curve = TradeoffService.loss_coherence_tradeoff([4, 5, 6, 7], [0.0], self.border)
        expected = {4: 0.002287, 5: 0.003263, 6: 0.003316, 7: 0.003098}
        for k, value in expected.items():
            with self.subTest(k=k):
                row = curve.curve(1, k)
                self.assertAlmostEqual(float(row["t_trial_max"].iloc[0]), value, delta=2e-6)
        self.assertEqual(int(curve.envelope_for(1)["k_opt"].iloc[0]), 6)

    def test_envelope_dominates(self):
        k_values = list(range(1, 21))
        curve = TradeoffService.loss_coherence_tradeoff(k_values, self.losses, self.border)
        envelope = curve.envelope_for(1)["t_trial_max"].to_numpy()
        for k in k_values:
            with self.subTest(k=k):
                values = curve.curve(1, k)["t_trial_max"].to_numpy()
                self.assertTrue(np.all(envelope >= values))
        six = curve.curve(1, 6)["t_trial_max"].to_numpy()
        five = curve.curve(1, 5)["t_trial_max"].to_numpy()
        for index in (0, 10, 20):
            self.assertGreaterEqual(six[index], five[index])

    def test_intercepts(self):
        k_values = list(range(1, 21))
        self.assertAlmostEqual(TradeoffService.loss_intercept([20], self.border), 0.02735, delta=1e-3)
        t_max, k_opt = TradeoffService.coherence_intercept(k_values, self.border)
        self.assertAlmostEqual(t_max, 0.003316, delta=2e-6)
        self.assertEqual(k_opt, 6)
        self.assertEqual(TradeoffService.coherence_intercept([1, 2, 3], self.border), (0.0, None))

    def test_hybrid_curves(self):
        k_values = list(range(1, 21))
        curve = TradeoffService.hrus_tradeoff([1, 2], k_values, self.losses, self.border)
        rus = TradeoffService.loss_coherence_tradeoff(k_values, self.losses, self.border)
        np.testing.assert_allclose(
            curve.envelope_for(1)["t_trial_max"].to_numpy(),
            rus.envelope_for(1)["t_trial_max"].to_numpy(),
        )
        self.assertEqual(float(curve.curve(2, 1)["t_trial_max"].iloc[0]), 0.0)
        self.assertAlmostEqual(float(curve.curve(2, 1)["p_F"].iloc[0]), 0.25)
        two = TradeoffService.coherence_intercept(k_values, self.border, n=2)[0]
        self.assertGreater(two, TradeoffService.coherence_intercept(k_values, self.border)[0])
        self.assertAlmostEqual(two, 0.00663, delta=5e-5)
        self.assertLess(
            TradeoffService.loss_intercept(k_values, self.border, n=2),
            TradeoffService.loss_intercept(k_values, self.border, n=1),
        )


class TradeoffCommandTests(SimpleTestCase):
    def test_line_border(self):
        with tempfile.TemporaryDirectory() as directory:
            csv = Path(directory) / "tradeoff.csv"
            stdout, stderr = StringIO(), StringIO()
            call_command(
                "tradeoff",
                "--k-values", "4,5,6",
                "--loss-points", "11",
                "--csv", str(csv),
                stdout=stdout,
                stderr=stderr,
            )
            header = csv.read_text().splitlines()[0]
        self.assertEqual(header, "n,k,epsilon,p_F,t_trial_max")
        payload = json.loads(stdout.getvalue())
        self.assertEqual(payload["command"], "tradeoff")
        self.assertEqual(payload["intercepts"]["1"]["k_at_zero_loss"], 6)
        self.assertEqual(len(payload["envelope"]), 11)

    def test_surface_border_requires_file(self):
        with self.assertRaises(CommandError) as raised:
            call_command("tradeoff", "--border", "surface", stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, 1)

    def test_hrus_tradeoff(self):
        stdout = StringIO()
        call_command(
            "hrus_tradeoff",
            "--k-values", "1,2,3,4",
            "--n-values", "1,2",
            "--loss-points", "5",
            stdout=stdout,
            stderr=StringIO(),
        )
        payload = json.loads(stdout.getvalue())
        self.assertEqual(set(payload["intercepts"]), {"1", "2"})
        self.assertEqual(payload["config"]["tradeoff"]["n_values"], [1, 2])


class ThresholdCommandTests(SimpleTestCase):
    def test_reruns_are_byte_identical(self):
        with tempfile.TemporaryDirectory() as directory:
            outputs = []
            for run in range(2):
                csv = Path(directory) / f"run{run}.csv"
                call_command(
                    "threshold",
                    "--axis", "p_F",
                    "--distances", "3,5",
                    "--values", "0.05,0.15",
                    "--shots", "100",
                    "--seed", "1",
                    "--workers", "1",
                    "--csv", str(csv),
                    "--json", str(Path(directory) / f"run{run}.json"),
                    stdout=StringIO(),
                    stderr=StringIO(),
                )
                outputs.append(csv.read_bytes())
            summary = json.loads((Path(directory) / "run0.json").read_text())
        self.assertEqual(outputs[0], outputs[1])
        self.assertTrue(outputs[0].startswith(b"axis_value,distance,shots,logical_errors,p_L,stderr\n"))
        self.assertEqual(summary["config"]["seed"], 1)
        self.assertEqual(summary["config"]["sweep"]["values"], [0.05, 0.15])

    def test_echoed_config_reproduces_herald_blind_run(self):
        flags = ["--distances", "3,5", "--values", "0.08,0.15", "--shots", "400", "--seed", "2"]
        with tempfile.TemporaryDirectory() as directory:
            root = Path(directory)
            call_command(
                "threshold",
                *flags,
                "--no-heralds",
                "--workers", "1",
                "--csv", str(root / "blind.csv"),
                "--json", str(root / "blind.json"),
                stdout=StringIO(),
                stderr=StringIO(),
            )
            echo = json.loads((root / "blind.json").read_text())["config"]
            (root / "echo.json").write_text(json.dumps(echo))
            call_command(
                "threshold",
                "--config", str(root / "echo.json"),
                "--csv", str(root / "rerun.csv"),
                "--json", str(root / "rerun.json"),
                stdout=StringIO(),
                stderr=StringIO(),
            )
            call_command(
                "threshold",
                *flags,
                "--workers", "1",
                "--csv", str(root / "heralded.csv"),
                "--json", str(root / "heralded.json"),
                stdout=StringIO(),
                stderr=StringIO(),
            )
            blind = (root / "blind.csv").read_bytes()
            rerun = (root / "rerun.csv").read_bytes()
            heralded = (root / "heralded.csv").read_bytes()
        self.assertFalse(echo["sweep"]["heralds"])
        self.assertEqual(rerun, blind)
        self.assertNotEqual(heralded, blind)

    def test_heralds_default_on(self):
        config = RunConfigService.resolve()
        self.assertTrue(config["sweep"]["heralds"])
        config = RunConfigService.resolve(overrides={"sweep": {"heralds": False}})
        self.assertFalse(RunConfigService.echo(config)["sweep"]["heralds"])

    def test_invalid_shots_is_validation_error(self):
        with self.assertRaises(CommandError) as raised:
            call_command("threshold", "--shots", "0", stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, 1)
