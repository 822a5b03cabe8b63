"""Pauli frames and sampled shot records."""

from dataclasses import dataclass

import numpy as np

from core.exceptions import DomainError
from noise.channels import PAULI_BITS


@dataclass(frozen=True)
class PauliFrame:
    """Accumulated Pauli error of one shot as X and Z bit masks."""

    x_mask: np.ndarray
    z_mask: np.ndarray

    def __post_init__(self):
        x_mask = np.asarray(self.x_mask, dtype=bool)
        z_mask = np.asarray(self.z_mask, dtype=bool)
        if x_mask.shape != z_mask.shape or x_mask.ndim != 1:
            raise DomainError("Frame masks must be bit vectors of equal length")
        object.__setattr__(self, "x_mask", x_mask)
        object.__setattr__(self, "z_mask", z_mask)

    @classmethod
    def identity(cls, qubit_count):
        return cls(np.zeros(qubit_count, dtype=bool), np.zeros(qubit_count, dtype=bool))

    @classmethod
    def from_paulis(cls, qubit_count, paulis):
        """Frame of a ``{qubit: "X" | "Y" | "Z"}`` operator."""
        frame = cls.identity(qubit_count)
        for qubit, pauli in paulis.items():
            bit_x, bit_z = PAULI_BITS[pauli]
            frame.x_mask[qubit] ^= bool(bit_x)
            frame.z_mask[qubit] ^= bool(bit_z)
        return frame

    @property
    def qubit_count(self):
        return len(self.x_mask)

    def __eq__(self, other):
        return (
            isinstance(other, PauliFrame)
            and np.array_equal(self.x_mask, other.x_mask)
            and np.array_equal(self.z_mask, other.z_mask)
        )

    def measurement_flip(self, qubit):
        """Whether a Z measurement of ``qubit`` is flipped by this frame."""
        return bool(self.x_mask[qubit])


@dataclass(frozen=True)
class ShotRecord:
    detector_bits: np.ndarray
    observable_bit: bool
    heralds: np.ndarray


@dataclass(frozen=True)
class ShotBatch:
    """
    Records of consecutive shots as boolean arrays.

    ``detectors`` has shape ``(shots, detector_count)``, ``observables``
    ``(shots,)`` and ``heralds`` ``(shots, herald_count)``; a herald bit is 1
    when the gate failed or aborted.
    """

    detectors: np.ndarray
    observables: np.ndarray
    heralds: np.ndarray

    def __len__(self):
        return len(self.observables)

    def __getitem__(self, index):
        return ShotRecord(
            self.detectors[index], bool(self.observables[index]), self.heralds[index]
        )

    def __iter__(self):
        return (self[index] for index in range(len(self)))

    @property
    def detector_count(self):
        return self.detectors.shape[1]

    @property
    def herald_count(self):
        return self.heralds.shape[1]

    def packed_rows(self):
        """One row of little-endian packed bits per shot: detectors, observable, heralds."""
        bits = np.concatenate(
            [self.detectors, self.observables[:, None], self.heralds], axis=1
        )
        return np.packbits(bits, axis=1, bitorder="little")
