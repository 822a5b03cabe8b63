import dataclasses

from django.test import SimpleTestCase

from codes.graphs import CheckKind, TannerGraph
from codes.services import CodeService
from core.exceptions import CircuitError, CodeConstructionError, DomainError

from .operations import (
    CircuitNoise,
    Detector,
    Hadamard,
    HadamardYZ,
    MeasureZ,
    PauliNoise1,
    PauliNoise2,
    RusCZ,
)
from .services import CircuitService


class CzScheduleTests(SimpleTestCase):
    def test_four_disjoint_layers_cover_every_edge(self):
        for d in (3, 5, 7):
            with self.subTest(d=d):
                graph = CodeService.build_rotated_surface_code(d).graph
                layers = CircuitService.cz_schedule(graph)
                self.assertEqual([layer.index for layer in layers], [1, 2, 3, 4])
                self.assertTrue(all(layer.is_disjoint for layer in layers))
                scheduled = sorted(edge for layer in layers for edge in layer.edges)
                self.assertEqual(scheduled, sorted(graph.edges))

    def test_bulk_check_touches_each_layer_once(self):
        graph = CodeService.build_rotated_surface_code(5).graph
        layers = CircuitService.cz_schedule(graph)
        for check, _ in graph.check_vertices:
            if graph.degree(check) != 4:
                continue
            with self.subTest(check=check):
                per_layer = [sum(1 for _, c, _ in layer.edges if c == check) for layer in layers]
                self.assertEqual(per_layer, [1, 1, 1, 1])

    def test_missing_coordinates_rejected(self):
        graph = TannerGraph((0, 1), ((2, CheckKind.Z),), ((0, 2, "Z"), (1, 2, "Z")))
        with self.assertRaises(CircuitError):
            CircuitService.cz_schedule(graph)

    def test_ambiguous_direction_rejected(self):
        graph = TannerGraph(
            (0,),
            ((1, CheckKind.Z),),
            ((0, 1, "Z"),),
            coords={0: (1, 3), 1: (0, 0)},
        )
        with self.assertRaises(CircuitError):
            CircuitService.cz_schedule(graph)


class SyndromeCircuitTests(SimpleTestCase):
    def test_detector_and_herald_counts(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=3)
        self.assertEqual(circuit.detector_count, 24)
        self.assertEqual(circuit.herald_count, 3 * 24)
        self.assertEqual(circuit.measurement_count, 3 * 8 + 9)
        self.assertEqual(len(circuit.observable), 3)

    def test_round_zero_detectors_only_of_basis_kind(self):
        for basis in ("Z", "X"):
            with self.subTest(basis=basis):
                circuit = CircuitService.build_memory_experiment(3, basis=basis, rounds=2)
                first = [det for det in circuit.detectors if det.coords[-1] == 0]
                self.assertEqual(len(first), 4)
                self.assertEqual({det.kind for det in first}, {basis})

    def test_every_rus_gate_is_followed_by_its_noise(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=0.05))
        for position, op in enumerate(circuit.ops):
            if isinstance(op, RusCZ):
                following = circuit.ops[position + 1]
                self.assertIsInstance(following, PauliNoise2)
                self.assertEqual(following.site, op.site)
                self.assertEqual(following.qubits, (op.data, op.check))
        self.assertEqual(set(circuit.herald_probabilities.values()), {0.05})

    def test_x_edges_change_basis_on_data(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1)
        for position, op in enumerate(circuit.ops):
            if isinstance(op, RusCZ) and op.pauli == "X":
                self.assertEqual(circuit.ops[position - 1], Hadamard(op.data))
                self.assertEqual(circuit.ops[position + 2], Hadamard(op.data))

    def test_decoherence_sites_only_when_noisy(self):
        quiet = CircuitService.build_memory_experiment(3, rounds=1)
        self.assertFalse(any(isinstance(op, PauliNoise1) for op in quiet.ops))
        noisy = CircuitService.build_memory_experiment(
            3, rounds=1, noise=CircuitNoise(t_rus_over_T2=0.02)
        )
        idle = [op for op in noisy.ops if isinstance(op, PauliNoise1)]
        self.assertEqual(len(idle), 4 * 17)

    def test_rejects_bad_inputs(self):
        code = CodeService.build_rotated_surface_code(3)
        with self.assertRaises(CircuitError):
            CircuitService.build_syndrome_circuit(code.graph, code.logicals, basis="Y")
        with self.assertRaises(DomainError):
            CircuitService.build_syndrome_circuit(code.graph, code.logicals, rounds=0)
        mixed = TannerGraph(
            (0, 1),
            ((2, CheckKind.MIXED),),
            ((0, 2, "X"), (1, 2, "Z")),
            coords={0: (1, 1), 1: (1, 3), 2: (0, 2)},
        )
        with self.assertRaises(CodeConstructionError):
            CircuitService.build_syndrome_circuit(mixed, code.logicals)

    def test_text_dump(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=0.1, D=0.01))
        lines = circuit.to_text().splitlines()
        self.assertTrue(lines[0].startswith("# spoqc circuit d=3 basis=Z rounds=1"))
        self.assertEqual(len(lines), len(circuit.ops) + 1)
        self.assertIn("RUSCZ", circuit.to_text())
        self.assertTrue(lines[-1].startswith("OBSERVABLE rec="))
        self.assertTrue(any(line.startswith("NOISE2") and "site=0" in line for line in lines))


class CircuitNoiseTests(SimpleTestCase):
    def test_loss_maps_to_failure(self):
        noise = CircuitNoise.from_loss(0.0, k=3, t_trial_over_T2=0.001)
        self.assertAlmostEqual(noise.p_F, 0.125)
        self.assertAlmostEqual(noise.t_rus_over_T2, 0.003)

    def test_unbounded_budget_with_trial_time_rejected(self):
        with self.assertRaises(DomainError):
            CircuitNoise.from_loss(0.01, t_trial_over_T2=0.001)

    def test_scaled(self):
        noise = CircuitNoise(p_F=0.1, D=0.02, t_rus_over_T2=0.02).scaled(0.5)
        self.assertAlmostEqual(noise.p_F, 0.05)
        self.assertAlmostEqual(noise.D, 0.01)
        self.assertAlmostEqual(noise.t_rus_over_T2, 0.01)

    def test_out_of_range(self):
        with self.assertRaises(DomainError):
            CircuitNoise(p_F=1.5)
        with self.assertRaises(DomainError):
            CircuitNoise(t_rus_over_T2=-0.1)


class ValidateCircuitTests(SimpleTestCase):
    def test_built_circuits_are_deterministic(self):
        for d, basis in ((3, "Z"), (3, "X"), (5, "Z")):
            with self.subTest(d=d, basis=basis):
                circuit = CircuitService.build_memory_experiment(d, basis=basis, rounds=2)
                report = CircuitService.validate_circuit(circuit)
                self.assertTrue(report.passed, report.issues)

    def test_missing_check_hadamard_is_flagged(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2)
        checks = {op.check for op in circuit.ops if isinstance(op, RusCZ)}
        first_gate = next(i for i, op in enumerate(circuit.ops) if isinstance(op, RusCZ))
        ops = tuple(
            op
            for i, op in enumerate(circuit.ops)
            if not (i < first_gate and isinstance(op, Hadamard) and op.qubit in checks)
        )
        broken = dataclasses.replace(circuit, ops=ops)
        report = CircuitService.validate_circuit(broken)
        self.assertFalse(report.passed)
        self.assertTrue(any("not deterministic" in issue for issue in report.issues))

    def test_record_order_is_checked(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1)
        ops = list(circuit.ops)
        first = next(i for i, op in enumerate(ops) if isinstance(op, MeasureZ))
        ops[first] = MeasureZ(ops[first].qubit, 5)
        report = CircuitService.validate_circuit(dataclasses.replace(circuit, ops=tuple(ops)))
        self.assertFalse(report.passed)
        self.assertTrue(any("out of order" in issue for issue in report.issues))

    def test_detector_on_future_record(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1)
        ops = (Detector((0,), (0, 0, 0), "Z"),) + circuit.ops
        issues = CircuitService.structural_issues(dataclasses.replace(circuit, ops=ops))
        self.assertTrue(any("unmeasured" in issue for issue in issues))

    def test_y_edges_use_yz_basis_change(self):
        op = HadamardYZ(3)
        self.assertEqual(op.to_text(), "H_YZ 3")
