"""
Fock-space states of two spins and their emitted photons.

Modes are numbered ``spatial + 4 * label`` for the four interferometer
rails and the two internal photon labels, followed by one environment mode
per system mode (``ENV_OFFSET + mode``) that collects lost photons.
"""

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import OpticsError

SPATIAL_MODES = 4
LABELS = 2
SYSTEM_MODES = SPATIAL_MODES * LABELS
ENV_OFFSET = SYSTEM_MODES
TOTAL_MODES = 2 * SYSTEM_MODES
NORM_TOLERANCE = 1e-12

# First dual-rail mode of each emitter.
EMITTER_RAILS = {"a": 0, "b": 2}
# Bit of the two-spin label ``2 * s_a + s_b`` owned by each emitter.
EMITTER_SHIFT = {"a": 1, "b": 0}


def mode_index(spatial, label=0):
    return spatial + SPATIAL_MODES * label


def vacuum():
    return (0,) * TOTAL_MODES


@dataclass
class JointState:
    """
    Superposition of two-spin basis labels and photon occupations.

    ``amplitudes`` maps ``(spin_label, occupation)`` to a complex amplitude
    where ``spin_label = 2 * s_a + s_b`` and ``occupation`` is a tuple over
    all modes.
    """

    amplitudes: dict = field(default_factory=dict)

    @classmethod
    def from_spins(cls, spin_vector):
        """Photon vacuum with the two spins in ``spin_vector`` (length 4)."""
        vector = np.asarray(spin_vector, dtype=complex)
        if vector.shape != (4,):
            raise OpticsError("A two-spin state has four amplitudes")
        state = cls({(s, vacuum()): a for s, a in enumerate(vector) if a != 0})
        state.check_norm()
        return state

    @property
    def norm(self):
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def check_norm(self):
        if abs(self.norm - 1.0) > NORM_TOLERANCE:
            raise OpticsError(f"State norm {self.norm!r} differs from 1")

    def reduced_spin_density(self):
        """Two-spin density matrix with every photonic mode traced out."""
        by_occupation = defaultdict(lambda: np.zeros(4, dtype=complex))
        for (spin, occupation), amplitude in self.amplitudes.items():
            by_occupation[occupation][spin] += amplitude
        rho = np.zeros((4, 4), dtype=complex)
        for vector in by_occupation.values():
            rho += np.outer(vector, vector.conj())
        return rho

    def pruned(self, tolerance=1e-15):
        return JointState(
            {key: a for key, a in self.amplitudes.items() if abs(a) > tolerance}
        )


def emit(state, emitter, label_amplitudes=(1.0, 0.0)):
    """
    Apply the emission operator of one spin.

    Spin basis state ``s`` of ``emitter`` creates a photon in the ``s``-th
    rail of its dual-rail pair, in the internal state given by
    ``label_amplitudes``.

    Raises:
        OpticsError: If the emitter's rails already hold a photon
    """
    if emitter not in EMITTER_RAILS:
        raise OpticsError(f"Unknown emitter {emitter!r}")
    base, shift = EMITTER_RAILS[emitter], EMITTER_SHIFT[emitter]
    rails = [mode_index(base + rail, label) for rail in (0, 1) for label in range(LABELS)]
    result = defaultdict(complex)
    for (spin, occupation), amplitude in state.amplitudes.items():
        if any(occupation[m] or occupation[ENV_OFFSET + m] for m in rails):
            raise OpticsError(f"Emission modes of spin {emitter} are occupied")
        rail = (spin >> shift) & 1
        for label, label_amplitude in enumerate(label_amplitudes):
            if label_amplitude == 0:
                continue
            target = mode_index(base + rail, label)
            new = list(occupation)
            new[target] += 1
            result[(spin, tuple(new))] += amplitude * label_amplitude * math.sqrt(new[target])
    return JointState(dict(result))


def transform(state, transfer):
    """
    Apply a linear map of creation operators, ``a_in^dag -> sum_out T[out, in] a_out^dag``.

    Each Fock term ``prod (a^dag)^n / sqrt(n!)`` is expanded photon by
    photon and re-normalized with ``sqrt(prod c!)`` on the output counts.
    """
    result = defaultdict(complex)
    for (spin, occupation), amplitude in state.amplitudes.items():
        photons = [mode for mode, count in enumerate(occupation) for _ in range(count)]
        inverse = 1.0 / math.sqrt(math.prod(math.factorial(n) for n in occupation))
        choices = [np.flatnonzero(transfer[:, mode]) for mode in photons]
        for outputs in itertools.product(*choices):
            weight = amplitude * inverse
            for mode, out in zip(photons, outputs):
                weight *= transfer[out, mode]
            counts = [0] * TOTAL_MODES
            for out in outputs:
                counts[out] += 1
            weight *= math.sqrt(math.prod(math.factorial(c) for c in counts))
            result[(spin, tuple(counts))] += weight
    return JointState(dict(result)).pruned()


@dataclass(frozen=True)
class Interferometer:
    """Unitary acting identically on the four spatial rails of each photon label."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (SPATIAL_MODES, SPATIAL_MODES):
            raise OpticsError("The interferometer acts on four modes")
        if not np.allclose(matrix @ matrix.conj().T, np.eye(SPATIAL_MODES), atol=NORM_TOLERANCE):
            raise OpticsError("Interferometer matrix is not unitary")
        object.__setattr__(self, "matrix", matrix)

    def transfer(self):
        transfer = np.eye(TOTAL_MODES, dtype=complex)
        for label in range(LABELS):
            block = slice(SPATIAL_MODES * label, SPATIAL_MODES * (label + 1))
            transfer[block, block] = self.matrix
        return transfer

    def apply(self, state):
        return transform(state, self.transfer())


def loss_transfer(eta_a, eta_b):
    """Beamsplitter to the environment on every rail, before the interferometer."""
    transfer = np.eye(TOTAL_MODES, dtype=complex)
    for emitter, eta in (("a", eta_a), ("b", eta_b)):
        for rail in (0, 1):
            for label in range(LABELS):
                mode = mode_index(EMITTER_RAILS[emitter] + rail, label)
                transfer[mode, mode] = math.sqrt(eta)
                transfer[ENV_OFFSET + mode, mode] = math.sqrt(1.0 - eta)
    return transfer


def detected_pattern(occupation):
    """
    Detection pattern seen by label-blind photon-number-resolving detectors.

    Returns ``(k, l)`` with ``k <= l`` when both photons reach detectors,
    ``None`` when a photon was lost.
    """
    counts = [
        sum(occupation[mode_index(spatial, label)] for label in range(LABELS))
        for spatial in range(SPATIAL_MODES)
    ]
    if sum(counts) != 2:
        return None
    return tuple(spatial for spatial, count in enumerate(counts) for _ in range(count))
