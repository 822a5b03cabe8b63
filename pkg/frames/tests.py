import itertools
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase
from scipy.stats import chi2

from circuits.operations import (
    CircuitNoise,
    Detector,
    Hadamard,
    HadamardYZ,
    HeraldSite,
    MeasureZ,
    ObservableInclude,
    PauliNoise1,
    PauliNoise2,
    ResetZ,
    RusCZ,
    SyndromeCircuit,
)
from circuits.services import CircuitService
from core.exceptions import DomainError
from core.services import SeedService
from noise.channels import PauliChannel1, PauliChannel2
from noise.services import ChannelService

from .engine import FrameSimulator
from .records import PauliFrame
from .services import BLOCK_SHOTS, FrameService


def propagate_single(circuit, position, qubit, pauli):
    """Detector and observable flips of one Pauli injected after op ``position``."""
    frame = PauliFrame.from_paulis(circuit.qubit_count, {qubit: pauli})
    flips = [False] * circuit.measurement_count
    for op in circuit.ops[position + 1 :]:
        if isinstance(op, MeasureZ):
            flips[op.record] = frame.measurement_flip(op.qubit)
        elif not isinstance(op, (Detector, ObservableInclude, PauliNoise1, PauliNoise2)):
            frame = FrameService.propagate(frame, op)
    detectors = [bool(sum(flips[r] for r in det.records) % 2) for det in circuit.detectors]
    observable = bool(sum(flips[r] for r in circuit.observable) % 2)
    return detectors, observable


class PropagationTests(SimpleTestCase):
    def test_hadamard_twice_is_identity(self):
        frame = PauliFrame.from_paulis(2, {0: "X", 1: "Y"})
        once = FrameService.propagate(frame, Hadamard(0))
        self.assertEqual(once, PauliFrame.from_paulis(2, {0: "Z", 1: "Y"}))
        self.assertEqual(FrameService.propagate(once, Hadamard(0)), frame)

    def test_yz_basis_change(self):
        for before, after in (("X", "X"), ("Y", "Z"), ("Z", "Y")):
            with self.subTest(before=before):
                frame = FrameService.propagate(PauliFrame.from_paulis(1, {0: before}), HadamardYZ(0))
                self.assertEqual(frame, PauliFrame.from_paulis(1, {0: after}))

    def test_cz_conjugation(self):
        gate = RusCZ(0, 1, "Z", 0)
        frame = FrameService.propagate(PauliFrame.from_paulis(2, {0: "X"}), gate)
        self.assertEqual(frame, PauliFrame.from_paulis(2, {0: "X", 1: "Z"}))
        self.assertEqual(
            FrameService.propagate(frame, gate), PauliFrame.from_paulis(2, {0: "X"})
        )

    def test_measurement_flip(self):
        self.assertTrue(PauliFrame.from_paulis(1, {0: "Y"}).measurement_flip(0))
        self.assertFalse(PauliFrame.from_paulis(1, {0: "Z"}).measurement_flip(0))

    def test_noise_op_is_not_propagated(self):
        with self.assertRaises(DomainError):
            FrameService.propagate(PauliFrame.identity(1), PauliNoise1(0, PauliChannel1.identity()))

    def test_engine_matches_single_frame_propagation(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2)
        simulator = FrameSimulator(circuit)
        rng = SeedService.generator(7)
        gates = [i for i, op in enumerate(circuit.ops) if isinstance(op, (RusCZ, PauliNoise2))]
        positions = rng.choice(gates, size=12, replace=False)
        for position in positions:
            qubit = int(rng.integers(circuit.qubit_count))
            pauli = "XYZ"[int(rng.integers(3))]
            with self.subTest(position=int(position), qubit=qubit, pauli=pauli):
                detectors, observable, _ = simulator.run(
                    shots=1, injections={int(position): [(0, qubit, pauli)]}, noisy=False
                )
                expected_detectors, expected_observable = propagate_single(
                    circuit, int(position), qubit, pauli
                )
                self.assertEqual(detectors[0].tolist(), expected_detectors)
                self.assertEqual(bool(observable[0]), expected_observable)

    def test_injections_are_linear(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2)
        simulator = FrameSimulator(circuit)
        first = {40: [(0, 4, "X")]}
        second = {90: [(0, 10, "Z")]}
        both = {40: [(0, 4, "X")], 90: [(0, 10, "Z")]}
        a, obs_a, _ = simulator.run(shots=1, injections=first, noisy=False)
        b, obs_b, _ = simulator.run(shots=1, injections=second, noisy=False)
        c, obs_c, _ = simulator.run(shots=1, injections=both, noisy=False)
        np.testing.assert_array_equal(c, a ^ b)
        np.testing.assert_array_equal(obs_c, obs_a ^ obs_b)

    def test_single_data_error_is_graph_like(self):
        circuit = CircuitService.build_memory_experiment(5, rounds=3)
        simulator = FrameSimulator(circuit)
        kinds = np.array([det.kind for det in circuit.detectors])
        first_gate = next(i for i, op in enumerate(circuit.ops) if isinstance(op, RusCZ))
        faults = [(q, p) for q in range(25) for p in "XZ"]
        injections = {first_gate: [(column, q, p) for column, (q, p) in enumerate(faults)]}
        detectors, _, _ = simulator.run(shots=50, injections=injections, noisy=False)
        for row in detectors:
            for kind in ("X", "Z"):
                self.assertLessEqual(np.count_nonzero(row & (kinds == kind)), 2)


class SamplingTests(SimpleTestCase):
    def test_noiseless_circuit_gives_zero_records(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=3)
        batch = FrameService.sample_batch(circuit, 300, master_seed=1, workers=1)
        self.assertEqual(len(batch), 300)
        self.assertFalse(batch.detectors.any())
        self.assertFalse(batch.observables.any())
        self.assertFalse(batch.heralds.any())

    def test_certain_failure_fires_every_herald(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=1.0))
        batch = FrameService.sample_batch(circuit, 64, master_seed=2, workers=1)
        self.assertTrue(batch.heralds.all())
        self.assertTrue(batch.detectors.any())

    def test_herald_frequency(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=0.3))
        batch = FrameService.sample_batch(circuit, 2000, master_seed=3, workers=1)
        fraction = batch.heralds.mean()
        sigma = np.sqrt(0.3 * 0.7 / batch.heralds.size)
        self.assertLess(abs(fraction - 0.3), 5 * sigma)

    def test_records_do_not_depend_on_batch_size(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2, noise=CircuitNoise(p_F=0.1, D=0.02))
        small = FrameService.sample_batch(circuit, 10, master_seed=5, workers=1)
        large = FrameService.sample_batch(circuit, BLOCK_SHOTS + 10, master_seed=5, workers=1)
        np.testing.assert_array_equal(small.detectors, large.detectors[:10])
        np.testing.assert_array_equal(small.heralds, large.heralds[:10])
        other = FrameService.sample_batch(circuit, 10, master_seed=6, workers=1)
        self.assertFalse(np.array_equal(small.heralds, other.heralds))

    def test_workers_do_not_change_records(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=0.1))
        serial = FrameService.sample_batch(circuit, 2 * BLOCK_SHOTS + 5, master_seed=9, workers=1)
        parallel = FrameService.sample_batch(circuit, 2 * BLOCK_SHOTS + 5, master_seed=9, workers=2)
        np.testing.assert_array_equal(serial.detectors, parallel.detectors)
        np.testing.assert_array_equal(serial.observables, parallel.observables)

    def test_sample_shot(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1, noise=CircuitNoise(p_F=0.2))
        record = FrameService.sample_shot(circuit, SeedService.generator(11))
        self.assertEqual(record.detector_bits.shape, (circuit.detector_count,))
        self.assertEqual(record.heralds.shape, (circuit.herald_count,))

    def test_rejects_nonpositive_shots(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=1)
        with self.assertRaises(DomainError):
            FrameService.sample_batch(circuit, 0, master_seed=0)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
HADAMARD_PAIR = np.kron(HADAMARD, HADAMARD)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
# Two-sided 5 sigma tail.
SIGNIFICANCE = 5.7e-7


def conjugate(rho, unitary):
    return unitary @ rho @ unitary.conj().T


def evolve(rho, superoperator):
    return (superoperator @ rho.reshape(-1)).reshape(rho.shape)


def product_channel(first, second):
    """Independent single-qubit channels on the two qubits of a pair."""
    return PauliChannel2(
        {
            a + b: p * q
            for a, p in first.as_mapping().items()
            for b, q in second.as_mapping().items()
        }
    )


def two_gate_circuit(first, second, idle, p_first, p_second):
    """|++>, two heralded CZs, idling, then both qubits read out in the X basis."""
    ops = (
        ResetZ(0),
        ResetZ(1),
        Hadamard(0),
        Hadamard(1),
        RusCZ(0, 1, "Z", 0),
        PauliNoise2((0, 1), first, site=0),
        RusCZ(0, 1, "Z", 1),
        PauliNoise2((0, 1), second, site=1),
        PauliNoise1(0, idle),
        PauliNoise1(1, idle),
        Hadamard(0),
        Hadamard(1),
        MeasureZ(0, 0),
        MeasureZ(1, 1),
        Detector((0,), (0, 0, 0), "X"),
        Detector((1,), (1, 0, 0), "X"),
        ObservableInclude((0, 1)),
    )
    return SyndromeCircuit(
        ops,
        qubit_count=2,
        rounds=1,
        basis="X",
        herald_sites=(HeraldSite(0, p_first), HeraldSite(1, p_second)),
        observable=(0, 1),
    )


def two_gate_distribution(first, second, idle, p_first, p_second):
    """Exact probabilities of ``(herald_0, herald_1, m_0, m_1)`` from density matrices."""
    failure = ChannelService.failure_channel().superoperator()
    idle_pair = product_channel(idle, idle).superoperator()
    start = np.zeros((4, 4), dtype=complex)
    start[0, 0] = 1.0
    start = conjugate(start, HADAMARD_PAIR)
    table = {}
    for fired_first, fired_second in itertools.product((0, 1), repeat=2):
        rho = conjugate(start, CZ)
        rho = evolve(rho, failure if fired_first else first.superoperator())
        rho = conjugate(rho, CZ)
        rho = evolve(rho, failure if fired_second else second.superoperator())
        rho = evolve(rho, idle_pair)
        rho = conjugate(rho, HADAMARD_PAIR)
        weight = (p_first if fired_first else 1 - p_first) * (
            p_second if fired_second else 1 - p_second
        )
        for m_first, m_second in itertools.product((0, 1), repeat=2):
            index = 2 * m_first + m_second
            table[(fired_first, fired_second, m_first, m_second)] = weight * rho[index, index].real
    return table


class DensityMatrixReferenceTests(SimpleTestCase):
    SHOTS = 40_000

    def test_joint_distribution_of_two_gate_toy(self):
        first = PauliChannel2({"II": 0.6, "XI": 0.1, "IY": 0.1, "ZX": 0.1, "YZ": 0.1})
        second = ChannelService.success_channel(0.2)
        idle = ChannelService.decoherence_channel(0.2, 0.3)
        table = two_gate_distribution(first, second, idle, 0.3, 0.2)
        self.assertAlmostEqual(sum(table.values()), 1.0, places=12)

        circuit = two_gate_circuit(first, second, idle, 0.3, 0.2)
        batch = FrameService.sample_batch(circuit, self.SHOTS, master_seed=21, workers=1)
        outcomes = np.column_stack([batch.heralds, batch.detectors]).astype(int)
        observed = np.bincount(outcomes @ np.array([8, 4, 2, 1]), minlength=16)
        expected = self.SHOTS * np.array(
            [table[key] for key in itertools.product((0, 1), repeat=4)]
        )
        possible = expected > 1e-9
        self.assertEqual(observed[~possible].sum(), 0)
        statistic = (((observed - expected) ** 2)[possible] / expected[possible]).sum()
        self.assertGreater(chi2.sf(statistic, possible.sum() - 1), SIGNIFICANCE)
        np.testing.assert_array_equal(
            batch.observables, batch.detectors[:, 0] ^ batch.detectors[:, 1]
        )

    def test_pure_decoherence_marginals(self):
        durations = (0.05, 0.3, 0.3)
        plus_state = (True, True, False)
        ops = [ResetZ(q) for q in range(3)] + [Hadamard(0), Hadamard(1)]
        ops += [
            PauliNoise1(q, ChannelService.decoherence_channel(t)) for q, t in enumerate(durations)
        ]
        ops += [Hadamard(0), Hadamard(1)] + [MeasureZ(q, q) for q in range(3)]
        ops += [Detector((q,), (q, 0, 0), "X" if plus_state[q] else "Z") for q in range(3)]
        circuit = SyndromeCircuit(
            tuple(ops), qubit_count=3, rounds=1, basis="X", herald_sites=(), observable=()
        )
        batch = FrameService.sample_batch(circuit, self.SHOTS, master_seed=22, workers=1)
        frequencies = batch.detectors.mean(axis=0)

        for qubit, (t, plus) in enumerate(zip(durations, plus_state)):
            rho = np.array([[1, 0], [0, 0]], dtype=complex)
            if plus:
                rho = conjugate(rho, HADAMARD)
            rho = evolve(rho, ChannelService.decoherence_channel(t).superoperator())
            if plus:
                rho = conjugate(rho, HADAMARD)
            p = rho[1, 1].real
            with self.subTest(qubit=qubit):
                if plus:
                    self.assertAlmostEqual(p, -math.expm1(-t) / 2, places=12)
                    sigma = math.sqrt(p * (1 - p) / self.SHOTS)
                    self.assertLess(abs(frequencies[qubit] - p), 5 * sigma)
                else:
                    self.assertAlmostEqual(p, 0.0, places=12)
                    self.assertEqual(frequencies[qubit], 0.0)


class DumpTests(SimpleTestCase):
    def test_dump_reads_back(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2, noise=CircuitNoise(p_F=0.2))
        batch = FrameService.sample_batch(circuit, 37, master_seed=4, workers=1)
        with tempfile.TemporaryDirectory() as directory:
            path = FrameService.write_dump(batch, Path(directory) / "shots.bin")
            payload = path.read_bytes()
            self.assertEqual(payload[:4], b"SPQC")
            width = (batch.detector_count + 1 + batch.herald_count + 7) // 8
            self.assertEqual(len(payload), 4 + 12 + 37 * width)
            loaded = FrameService.read_dump(path)
        np.testing.assert_array_equal(loaded.detectors, batch.detectors)
        np.testing.assert_array_equal(loaded.observables, batch.observables)
        np.testing.assert_array_equal(loaded.heralds, batch.heralds)

    def test_foreign_file_rejected(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "other.bin"
            path.write_bytes(b"NOPE" + bytes(12))
            with self.assertRaises(DomainError):
                FrameService.read_dump(path)


class SampleCommandTests(SimpleTestCase):
    def test_writes_dump_and_summary(self):
        with tempfile.TemporaryDirectory() as directory:
            dump = Path(directory) / "shots.bin"
            circuit_text = Path(directory) / "circuit.txt"
            stdout, stderr = StringIO(), StringIO()
            call_command(
                "sample",
                "--distance", "3",
                "--shots", "50",
                "--seed", "1",
                "--p-F", "0.1",
                "--workers", "1",
                "--dump", str(dump),
                "--circuit", str(circuit_text),
                stdout=stdout,
                stderr=stderr,
            )
            self.assertEqual(len(FrameService.read_dump(dump)), 50)
            self.assertTrue(circuit_text.read_text().startswith("# spoqc circuit d=3"))
        self.assertIn('"command": "sample"', stdout.getvalue())
        self.assertIn("50 shots", stderr.getvalue())
