"""Pauli channels and the thermal qubit model."""

import itertools
from dataclasses import dataclass

import numpy as np

from core.exceptions import DomainError

SUM_TOLERANCE = 1e-12

PAULI_LABELS = ("I", "X", "Y", "Z")
TWO_QUBIT_LABELS = tuple(a + b for a, b in itertools.product(PAULI_LABELS, repeat=2))

# (x, z) symplectic bits of each single-qubit Pauli.
PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
BITS_PAULI = {bits: label for label, bits in PAULI_BITS.items()}

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_product(first, second):
    """Product of two Pauli labels (any length) up to phase."""
    return "".join(
        BITS_PAULI[(PAULI_BITS[a][0] ^ PAULI_BITS[b][0], PAULI_BITS[a][1] ^ PAULI_BITS[b][1])]
        for a, b in zip(first, second)
    )


def pauli_matrix(label):
    """Dense matrix of a Pauli string, first character most significant."""
    matrix = np.eye(1, dtype=complex)
    for char in label:
        matrix = np.kron(matrix, PAULI_MATRICES[char])
    return matrix


def unitary_superoperator(unitary):
    """Row-major vectorized superoperator ``U (x) conj(U)`` of ``rho -> U rho U^dag``."""
    return np.kron(unitary, unitary.conj())


def _check_distribution(probabilities, name):
    values = np.asarray(probabilities, dtype=float)
    if np.any(values < -SUM_TOLERANCE) or np.any(values > 1 + SUM_TOLERANCE):
        raise DomainError(f"{name} probabilities must lie in [0, 1]")
    if abs(values.sum() - 1.0) > SUM_TOLERANCE:
        raise DomainError(f"{name} probabilities sum to {values.sum()!r}, not 1")


@dataclass(frozen=True)
class PauliChannel1:
    """Single-qubit Pauli channel."""

    p_I: float
    p_X: float
    p_Y: float
    p_Z: float

    def __post_init__(self):
        _check_distribution(self.probabilities, "PauliChannel1")

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_mapping(cls, mapping):
        return cls(*(mapping.get(label, 0.0) for label in PAULI_LABELS))

    @property
    def probabilities(self):
        return np.array([self.p_I, self.p_X, self.p_Y, self.p_Z])

    def as_mapping(self):
        return dict(zip(PAULI_LABELS, self.probabilities.tolist()))

    @property
    def is_identity(self):
        return self.p_I >= 1.0 - SUM_TOLERANCE

    def compose(self, other):
        """Channel applying ``other`` after ``self``."""
        result = dict.fromkeys(PAULI_LABELS, 0.0)
        for first, p in self.as_mapping().items():
            for second, q in other.as_mapping().items():
                result[pauli_product(first, second)] += p * q
        return PauliChannel1.from_mapping(result)

    def superoperator(self):
        return sum(
            p * unitary_superoperator(PAULI_MATRICES[label])
            for label, p in self.as_mapping().items()
        )


@dataclass(frozen=True)
class PauliChannel2:
    """
    Two-qubit Pauli channel.

    ``probabilities`` maps two-character labels such as ``"ZI"`` (Z on the
    first qubit) to probabilities; missing labels have probability 0.
    """

    probabilities: tuple

    def __init__(self, probabilities):
        mapping = dict(probabilities)
        unknown = set(mapping) - set(TWO_QUBIT_LABELS)
        if unknown:
            raise DomainError(f"Unknown two-qubit Pauli labels {sorted(unknown)}")
        object.__setattr__(
            self,
            "probabilities",
            tuple((label, float(mapping.get(label, 0.0))) for label in TWO_QUBIT_LABELS),
        )
        _check_distribution([p for _, p in self.probabilities], "PauliChannel2")

    def as_mapping(self):
        return dict(self.probabilities)

    def support(self):
        """Labels with nonzero probability, in canonical order."""
        return [(label, p) for label, p in self.probabilities if p > 0.0]

    def compose(self, other):
        """Channel applying ``other`` after ``self``."""
        result = dict.fromkeys(TWO_QUBIT_LABELS, 0.0)
        for first, p in self.support():
            for second, q in other.support():
                result[pauli_product(first, second)] += p * q
        return PauliChannel2(result)

    def conjugated_by_cz(self):
        """Distribution of ``CZ P CZ`` for ``P`` drawn from this channel."""
        result = dict.fromkeys(TWO_QUBIT_LABELS, 0.0)
        for label, p in self.support():
            (xa, za), (xb, zb) = PAULI_BITS[label[0]], PAULI_BITS[label[1]]
            image = BITS_PAULI[(xa, za ^ xb)] + BITS_PAULI[(xb, zb ^ xa)]
            result[image] += p
        return PauliChannel2(result)

    def superoperator(self):
        return sum(
            p * unitary_superoperator(pauli_matrix(label)) for label, p in self.support()
        )

    def isclose(self, other, atol=SUM_TOLERANCE):
        return all(
            abs(p - q) <= atol
            for (_, p), (_, q) in zip(self.probabilities, other.probabilities)
        )


@dataclass(frozen=True)
class ThermalParams:
    """
    Two-level spin coupled to a thermal bath.

    The upper level is ``|0>`` and the lower level ``|1>``; the bath excites
    at ``gamma_up = gamma_0 * n_th`` and relaxes at ``gamma_down = gamma_0 *
    (n_th + 1)``. ``gamma_star`` is the pure dephasing rate.
    """

    gamma_0: float
    gamma_star: float
    n_th: float

    def __post_init__(self):
        if min(self.gamma_0, self.gamma_star, self.n_th) < 0:
            raise DomainError("Thermal rates and occupation must be nonnegative")

    @property
    def gamma_up(self):
        return self.gamma_0 * self.n_th

    @property
    def gamma_down(self):
        return self.gamma_0 * (self.n_th + 1.0)

    @property
    def relaxation_rate(self):
        return self.gamma_up + self.gamma_down

    @property
    def coherence_rate(self):
        return self.relaxation_rate / 2.0 + self.gamma_star
