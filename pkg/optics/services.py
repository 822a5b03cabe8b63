import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from core.exceptions import DomainError
from noise.channels import pauli_matrix, unitary_superoperator
from noise.services import ChannelService

from .fock import (
    ENV_OFFSET,
    Interferometer,
    JointState,
    detected_pattern,
    emit,
    loss_transfer,
    transform,
)

logger = logging.getLogger(__name__)

LOSS = "F"

S_GATE = np.diag([1.0, 1j])
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

CORRECTIONS = {
    "Id": np.eye(4, dtype=complex),
    "SaSb†": np.kron(S_GATE, S_GATE.conj()),
    "Sa†Sb": np.kron(S_GATE.conj(), S_GATE),
    "ZaZb": pauli_matrix("ZZ"),
}

SUCCESS_PATTERNS = ((0, 2), (1, 3), (0, 3), (1, 2))


@dataclass(frozen=True)
class OutcomeColumn:
    pattern: object
    probability: str
    correction: str
    gate: str


# Probabilities are in units of eta_a * eta_b / 8, except the loss class.
OUTCOME_TABLE = (
    OutcomeColumn((0, 2), "1/8", "SaSb†", "CZ"),
    OutcomeColumn((1, 3), "1/8", "SaSb†", "CZ"),
    OutcomeColumn((0, 3), "1/8", "Sa†Sb", "CZ"),
    OutcomeColumn((1, 2), "1/8", "Sa†Sb", "CZ"),
    OutcomeColumn((0, 0), "1/8", "Id", "Id"),
    OutcomeColumn((1, 1), "1/8", "Id", "Id"),
    OutcomeColumn((0, 1), "0", "Id", "Id"),
    OutcomeColumn((2, 2), "1/8", "ZaZb", "Id"),
    OutcomeColumn((3, 3), "1/8", "ZaZb", "Id"),
    OutcomeColumn((2, 3), "0", "ZaZb", "Id"),
    OutcomeColumn(LOSS, "1-eta", "Id", "C_RUS,f"),
)


def pattern_name(pattern):
    return LOSS if pattern == LOSS else f"({pattern[0]},{pattern[1]})"


@dataclass(frozen=True)
class PatternOutcome:
    """
    One detection class.

    ``channel`` is the row-major superoperator conditioned on the pattern,
    normalized by its probability for maximally mixed spins.
    """

    probability: float
    channel: np.ndarray
    kraus: tuple = ()


@dataclass(frozen=True)
class OutcomeRow:
    pattern: str
    probability: float
    expected_probability: float
    correction: str
    gate: str
    deviation: float


@dataclass(frozen=True)
class OracleReport:
    rows: tuple
    tolerance: float
    issues: tuple = field(default=())

    @property
    def max_deviation(self):
        return max((row.deviation for row in self.rows), default=0.0)

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance and not self.issues


@dataclass(frozen=True)
class TableauCheck:
    name: str
    deviation: float


def _superoperator(kraus):
    return sum(np.kron(k, k.conj()) for k in kraus)


def _gate_channel(gate):
    if gate == "CZ":
        return unitary_superoperator(CZ)
    if gate == "Id":
        return np.eye(16, dtype=complex)
    return ChannelService.failure_channel().superoperator()


def _conjugate(unitary, operator):
    return unitary @ operator @ unitary.conj().T


class OpticsService:
    """Service class for the Fock-space oracle of the RUS interferometer."""

    @staticmethod
    def rus_unitary():
        """Return the four-mode RUS interferometer."""
        return Interferometer(
            0.5
            * np.array(
                [
                    [1, 1, 1, 1],
                    [1, 1, -1, -1],
                    [1, -1, -1j, 1j],
                    [1, -1, 1j, -1j],
                ],
                dtype=complex,
            )
        )

    @staticmethod
    def emit(state, spin, label_amplitudes=(1.0, 0.0)):
        """Emit a dual-rail photon from spin ``"a"`` or ``"b"``."""
        return emit(state, spin, label_amplitudes)

    @staticmethod
    def photon_label(D):
        """Internal state of a photon with distinguishability ``D`` to the reference."""
        if not 0.0 <= D <= 1.0:
            raise DomainError(f"Distinguishability must lie in [0, 1], got {D!r}")
        return (math.sqrt(1.0 - D), math.sqrt(D))

    @staticmethod
    def branches(eta_a=1.0, eta_b=1.0, D=0.0, interferometer=None):
        """
        Final photon occupations of one RUS trial and their spin amplitudes.

        Each spin basis state emits one photon per spin, loses it to the
        environment with probability ``1 - eta``, passes the interferometer
        and reaches the detectors.

        Returns:
            dict: ``{occupation: length-4 amplitude vector over spin labels}``
        """
        for name, eta in (("eta_a", eta_a), ("eta_b", eta_b)):
            if not 0.0 <= eta <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {eta!r}")
        interferometer = interferometer or OpticsService.rus_unitary()
        label_b = OpticsService.photon_label(D)
        loss = loss_transfer(eta_a, eta_b)
        branches = defaultdict(lambda: np.zeros(4, dtype=complex))
        for spin in range(4):
            state = JointState.from_spins(np.eye(4)[spin])
            state = emit(emit(state, "a"), "b", label_b)
            state = interferometer.apply(transform(state, loss))
            for (_, occupation), amplitude in state.amplitudes.items():
                branches[occupation][spin] += amplitude
        return dict(branches)

    @staticmethod
    def kraus_operators(eta_a=1.0, eta_b=1.0, D=0.0, interferometer=None):
        """
        Diagonal Kraus operators of one RUS trial, grouped by detection class.

        Every distinct final occupation (labels and environment included) is
        an unobserved branch, hence one Kraus operator.

        Returns:
            dict: ``{pattern or LOSS: [4x4 Kraus operators]}``
        """
        branches = OpticsService.branches(eta_a, eta_b, D, interferometer)
        grouped = defaultdict(list)
        for occupation in sorted(branches):
            pattern = detected_pattern(occupation) or LOSS
            grouped[pattern].append(np.diag(branches[occupation]))
        return dict(grouped)

    @staticmethod
    def detection_distribution(eta_a=1.0, eta_b=1.0, spins=None, D=0.0):
        """
        Probabilities and conditional spin channels of every detection class.

        Args:
            eta_a: Transmission of photon a
            eta_b: Transmission of photon b
            spins: Optional 4x4 two-spin density matrix (default maximally mixed)
            D: Distinguishability of photon b against photon a

        Returns:
            dict: ``{pattern or LOSS: PatternOutcome}``
        """
        rho = np.eye(4, dtype=complex) / 4 if spins is None else np.asarray(spins)
        distribution = {}
        for pattern, kraus in OpticsService.kraus_operators(eta_a, eta_b, D).items():
            superoperator = _superoperator(kraus)
            mixed = sum(np.trace(k.conj().T @ k).real for k in kraus) / 4.0
            probability = sum(np.trace(k @ rho @ k.conj().T).real for k in kraus)
            channel = superoperator / mixed if mixed > 0 else superoperator
            distribution[pattern] = PatternOutcome(probability, channel, tuple(kraus))
        return distribution

    @staticmethod
    def verify_table1(eta_a=1.0, eta_b=1.0, tolerance=None):
        """
        Compare the oracle against every detection-pattern column.

        Returns:
            OracleReport: Per-column probability and channel deviations
        """
        tolerance = settings.SPOQC["OPTICS_TOLERANCE"] if tolerance is None else tolerance
        distribution = OpticsService.detection_distribution(eta_a, eta_b)
        eta = eta_a * eta_b
        rows, issues = [], []
        total = sum(outcome.probability for outcome in distribution.values())
        if abs(total - 1.0) > tolerance:
            issues.append(f"pattern probabilities sum to {total!r}")
        for column in OUTCOME_TABLE:
            expected = {"1/8": eta / 8.0, "0": 0.0, "1-eta": 1.0 - eta}[column.probability]
            outcome = distribution.get(column.pattern)
            probability = outcome.probability if outcome else 0.0
            deviation = abs(probability - expected)
            if expected > 0:
                if outcome is None:
                    issues.append(f"pattern {pattern_name(column.pattern)} never occurs")
                else:
                    corrected = unitary_superoperator(CORRECTIONS[column.correction]) @ outcome.channel
                    deviation = max(
                        deviation, np.abs(corrected - _gate_channel(column.gate)).max()
                    )
            rows.append(
                OutcomeRow(
                    pattern_name(column.pattern),
                    probability,
                    expected,
                    column.correction,
                    column.gate,
                    float(deviation),
                )
            )
        unexpected = set(distribution) - {column.pattern for column in OUTCOME_TABLE}
        for pattern in sorted(unexpected, key=str):
            if distribution[pattern].probability > tolerance:
                issues.append(f"unexpected pattern {pattern_name(pattern)}")
        report = OracleReport(tuple(rows), tolerance, tuple(issues))
        logger.debug("Table check at eta=(%g, %g): max deviation %.3g", eta_a, eta_b, report.max_deviation)
        return report

    @staticmethod
    def lost_photon_channel(eta_a, eta_b, lost=1):
        """
        Normalized spin channel of the trials that lose exactly ``lost`` photons.

        The channel is aggregated over which detector clicked, as the loss
        class is heralded without its detector record.
        """
        kraus = [
            np.diag(amplitudes)
            for occupation, amplitudes in OpticsService.branches(eta_a, eta_b).items()
            if sum(occupation[ENV_OFFSET:]) == lost
        ]
        if not kraus:
            raise DomainError(f"No trial loses exactly {lost} photons at these transmissions")
        weight = sum(np.trace(k.conj().T @ k).real for k in kraus) / 4.0
        return _superoperator(kraus) / weight

    @staticmethod
    def expected_distinguishability_channel(D, correction="SaSb†"):
        """
        Corrected success channel for partially distinguishable photons.

        ``(1 - D) CZ rho CZ + D/2 C (Z_a rho Z_a + Z_b rho Z_b) C^dag`` with
        ``C`` the pattern's correction.
        """
        c = CORRECTIONS[correction]
        return (1.0 - D) * unitary_superoperator(CZ) + (D / 2.0) * (
            unitary_superoperator(c @ pauli_matrix("ZI"))
            + unitary_superoperator(c @ pauli_matrix("IZ"))
        )

    @staticmethod
    def distinguishability_distribution(D):
        """
        Corrected conditional channels of the success patterns at distinguishability D.

        Returns:
            dict: ``{pattern: (probability, corrected superoperator)}``
        """
        distribution = OpticsService.detection_distribution(D=D)
        result = {}
        for column in OUTCOME_TABLE[:4]:
            outcome = distribution[column.pattern]
            corrected = unitary_superoperator(CORRECTIONS[column.correction]) @ outcome.channel
            result[column.pattern] = (outcome.probability, corrected)
        return result

    @staticmethod
    def verify_distinguishability(D, tolerance=None):
        """Compare the oracle's success channels with the closed-form mixture."""
        tolerance = settings.SPOQC["OPTICS_TOLERANCE"] if tolerance is None else tolerance
        distribution = OpticsService.distinguishability_distribution(D)
        rows = []
        for column in OUTCOME_TABLE[:4]:
            probability, corrected = distribution[column.pattern]
            expected = OpticsService.expected_distinguishability_channel(D, column.correction)
            deviation = max(abs(probability - 1.0 / 8.0), np.abs(corrected - expected).max())
            rows.append(
                OutcomeRow(
                    pattern_name(column.pattern),
                    probability,
                    1.0 / 8.0,
                    column.correction,
                    f"C_D(D={D:g})",
                    float(deviation),
                )
            )
        return OracleReport(tuple(rows), tolerance)

    @staticmethod
    def tableau_check(tolerance=None):
        """
        Check the stabilizer-tableau behaviour of emission, repeat and success outcomes.

        Returns:
            OracleReport: One row per checked transformation
        """
        tolerance = settings.SPOQC["OPTICS_TOLERANCE"] if tolerance is None else tolerance
        checks = []

        # Emission: a single spin and its dual-rail photon as two qubits.
        for name, spin_state, stabilizers in (
            ("emission |0>", [1, 0], {"ZI": 1, "ZZ": 1}),
            ("emission |+>", [1, 1], {"XX": 1, "ZZ": 1}),
        ):
            vector = np.kron(np.asarray(spin_state, dtype=complex), [1, 0])
            vector /= np.linalg.norm(vector)
            state = emit(JointState.from_spins(vector), "a")
            pair = np.zeros(4, dtype=complex)
            for (spin, occupation), amplitude in state.amplitudes.items():
                photon = 0 if occupation[0] else 1
                pair[2 * (spin >> 1) + photon] += amplitude
            for label, sign in stabilizers.items():
                value = np.vdot(pair, pauli_matrix(label) @ pair).real
                checks.append(TableauCheck(f"{name}: +{label}", abs(value - sign)))

        kraus = OpticsService.kraus_operators()
        generators = ("XI", "IX", "ZI", "IZ")
        expectations = {
            # Repeat outcomes: sign (-1)^m1 on both X generators.
            (0, 0): (0, {"XI": ("XI", 1), "IX": ("IX", 1)}),
            (1, 1): (0, {"XI": ("XI", 1), "IX": ("IX", 1)}),
            (2, 2): (1, {"XI": ("XI", -1), "IX": ("IX", -1)}),
            (3, 3): (1, {"XI": ("XI", -1), "IX": ("IX", -1)}),
            # Success outcomes before correction, m2 = 0 and m2 = 1.
            (0, 2): (0, {"XI": ("YZ", -1), "IX": ("ZY", 1)}),
            (1, 3): (0, {"XI": ("YZ", -1), "IX": ("ZY", 1)}),
            (0, 3): (1, {"XI": ("YZ", 1), "IX": ("ZY", -1)}),
            (1, 2): (1, {"XI": ("YZ", 1), "IX": ("ZY", -1)}),
        }
        cz_images = {"XI": ("XZ", 1), "IX": ("ZX", 1), "ZI": ("ZI", 1), "IZ": ("IZ", 1)}
        for pattern, (bit, raw) in expectations.items():
            (operator,) = kraus[pattern]
            unitary = operator / np.abs(operator[0, 0])
            name = pattern_name(pattern)
            for generator in generators:
                image, sign = raw.get(generator, (generator, 1))
                deviation = np.abs(
                    _conjugate(unitary, pauli_matrix(generator)) - sign * pauli_matrix(image)
                ).max()
                checks.append(TableauCheck(f"{name} raw {generator}", deviation))
            if pattern in SUCCESS_PATTERNS:
                correction = CORRECTIONS["SaSb†" if bit == 0 else "Sa†Sb"]
                targets = cz_images
            else:
                correction = CORRECTIONS["ZaZb" if bit else "Id"]
                targets = {g: (g, 1) for g in generators}
            corrected = correction @ unitary
            for generator in generators:
                image, sign = targets[generator]
                deviation = np.abs(
                    _conjugate(corrected, pauli_matrix(generator)) - sign * pauli_matrix(image)
                ).max()
                checks.append(TableauCheck(f"{name} corrected {generator}", deviation))

        rows = tuple(
            OutcomeRow(check.name, 0.0, 0.0, "", "", float(check.deviation)) for check in checks
        )
        return OracleReport(rows, tolerance)
