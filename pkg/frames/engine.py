"""
Vectorized Pauli-frame propagation.

A frame is a pair of boolean arrays ``x`` and ``z`` of shape
``(qubit_count, columns)``; every column is an independent shot (or, for
error-model derivation, an independent injected fault). Detector and
observable values are flips relative to the noiseless reference, which is
all-zero for a valid circuit.
"""

from dataclasses import dataclass

import numpy as np

from circuits.operations import (
    Detector,
    Hadamard,
    HadamardYZ,
    MeasureZ,
    ObservableInclude,
    PauliNoise1,
    PauliNoise2,
    ResetZ,
    RusCZ,
)
from noise.channels import PAULI_BITS, TWO_QUBIT_LABELS
from noise.services import ChannelService

# (x_a, z_a, x_b, z_b) of every two-qubit label, in canonical order.
TWO_QUBIT_BITS = np.array(
    [PAULI_BITS[label[0]] + PAULI_BITS[label[1]] for label in TWO_QUBIT_LABELS], dtype=bool
)
FAILURE_CUMULATIVE = np.cumsum([p for _, p in ChannelService.failure_channel().probabilities])

_MERGEABLE = (ResetZ, Hadamard, HadamardYZ, MeasureZ, PauliNoise1)


@dataclass(frozen=True)
class Instruction:
    """One vectorized step: an op kind applied to an array of qubits."""

    kind: type
    qubits: np.ndarray
    ops: tuple
    first: int
    last: int


def _draw_categorical(cumulative, uniforms):
    """Indices of a categorical distribution given its cumulative sums."""
    return np.minimum(
        np.searchsorted(cumulative, uniforms, side="right"), len(cumulative) - 1
    )


class FrameSimulator:
    """
    Compiled program of a SyndromeCircuit.

    Consecutive single-qubit ops of the same kind on distinct qubits (and,
    for noise, the same channel) are merged into one instruction.
    """

    def __init__(self, circuit):
        self.circuit = circuit
        self.instructions = self._compile(circuit.ops)
        self.site_index = {site.site: index for index, site in enumerate(circuit.herald_sites)}
        self.p_F = np.array([site.p_F for site in circuit.herald_sites], dtype=float)
        records = [detector.records for detector in circuit.detectors]
        width = max((len(r) for r in records), default=1)
        padding = circuit.measurement_count
        self.detector_records = np.full((len(records), width), padding, dtype=np.intp)
        for row, detector_records in enumerate(records):
            self.detector_records[row, : len(detector_records)] = detector_records
        self.observable_records = np.asarray(circuit.observable, dtype=np.intp)

    @staticmethod
    def _compile(ops):
        instructions = []
        group = []

        def flush():
            if group:
                first, op = group[0]
                instructions.append(
                    Instruction(
                        type(op),
                        np.array([o.qubit for _, o in group], dtype=np.intp),
                        tuple(o for _, o in group),
                        first,
                        group[-1][0],
                    )
                )
                group.clear()

        for position, op in enumerate(ops):
            if isinstance(op, (Detector, ObservableInclude)):
                continue
            if isinstance(op, _MERGEABLE):
                if group:
                    head = group[0][1]
                    same = type(head) is type(op) and all(o.qubit != op.qubit for _, o in group)
                    if same and isinstance(op, PauliNoise1):
                        same = op.channel == head.channel
                    if not same:
                        flush()
                group.append((position, op))
                continue
            flush()
            qubits = np.array(op.qubits if isinstance(op, (RusCZ, PauliNoise2)) else (), dtype=np.intp)
            instructions.append(Instruction(type(op), qubits, (op,), position, position))
        flush()
        return instructions

    def run(self, rng=None, shots=1, injections=None, noisy=True):
        """
        Propagate frames through the circuit.

        Args:
            rng: numpy Generator; required when ``noisy``
            shots: Number of columns
            injections: Optional ``{op_position: [(column, qubit, pauli), ...]}``
                applied right after the op at that position
            noisy: Sample the circuit's noise; ``False`` propagates the
                injections only

        Returns:
            tuple: ``(detectors, observable, heralds)`` boolean arrays of
            shapes ``(shots, detector_count)``, ``(shots,)`` and
            ``(shots, herald_count)``
        """
        circuit = self.circuit
        x = np.zeros((circuit.qubit_count, shots), dtype=bool)
        z = np.zeros((circuit.qubit_count, shots), dtype=bool)
        # One spare zero row pads ragged detector record lists.
        flips = np.zeros((circuit.measurement_count + 1, shots), dtype=bool)
        heralds = np.zeros((shots, circuit.herald_count), dtype=bool)
        pending = sorted((injections or {}).items())
        cursor = 0

        for instruction in self.instructions:
            kind, qubits = instruction.kind, instruction.qubits
            if kind is ResetZ:
                x[qubits] = False
                z[qubits] = False
            elif kind is Hadamard:
                x[qubits], z[qubits] = z[qubits], x[qubits]
            elif kind is HadamardYZ:
                x[qubits] ^= z[qubits]
            elif kind is MeasureZ:
                flips[[op.record for op in instruction.ops]] = x[qubits]
            elif kind is RusCZ:
                a, b = qubits
                z[a] ^= x[b]
                z[b] ^= x[a]
            elif kind is PauliNoise1 and noisy:
                channel = instruction.ops[0].channel
                cumulative = np.cumsum(channel.probabilities)
                draws = _draw_categorical(cumulative, rng.random((len(qubits), shots)))
                x[qubits] ^= (draws == 1) | (draws == 2)
                z[qubits] ^= (draws == 2) | (draws == 3)
            elif kind is PauliNoise2 and noisy:
                self._apply_noise2(instruction.ops[0], qubits, x, z, heralds, rng, shots)

            while cursor < len(pending) and pending[cursor][0] <= instruction.last:
                for column, qubit, pauli in pending[cursor][1]:
                    bit_x, bit_z = PAULI_BITS[pauli]
                    x[qubit, column] ^= bool(bit_x)
                    z[qubit, column] ^= bool(bit_z)
                cursor += 1

        detectors = np.bitwise_xor.reduce(flips[self.detector_records], axis=1).T
        if len(self.observable_records):
            observable = np.bitwise_xor.reduce(flips[self.observable_records], axis=0)
        else:
            observable = np.zeros(shots, dtype=bool)
        return detectors, observable, heralds

    def _apply_noise2(self, op, qubits, x, z, heralds, rng, shots):
        a, b = qubits
        if op.site is None:
            fired = np.zeros(shots, dtype=bool)
        else:
            column = self.site_index[op.site]
            p_F = self.p_F[column]
            if p_F >= 1.0:
                fired = np.ones(shots, dtype=bool)
            elif p_F > 0.0:
                fired = rng.random(shots) < p_F
            else:
                fired = np.zeros(shots, dtype=bool)
            heralds[:, column] = fired
        success = np.cumsum([p for _, p in op.channel.probabilities])
        if success[0] >= 1.0 and not fired.any():
            return
        uniforms = rng.random(shots)
        labels = np.where(
            fired,
            _draw_categorical(FAILURE_CUMULATIVE, uniforms),
            _draw_categorical(success, uniforms),
        )
        bits = TWO_QUBIT_BITS[labels]
        x[a] ^= bits[:, 0]
        z[a] ^= bits[:, 1]
        x[b] ^= bits[:, 2]
        z[b] ^= bits[:, 3]
