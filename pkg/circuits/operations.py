"""
Operations of a compiled syndrome circuit and the circuit container.

Every operation renders to one line of the debugging text format::

    R 9
    H 9
    NOISE1 4 X=0.001 Z=0.002
    RUSCZ 0 9 X site=0
    NOISE2 0 9 ZI=0.0025 IZ=0.0025 ZZ=0.0025 site=0
    M 9 rec=0
    DETECTOR rec=0 coords=2,4,0 kind=Z
    OBSERVABLE rec=17,20,23

Record indices count measurements in program order from 0.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

from django.db import models

from core.exceptions import DomainError
from noise.channels import PauliChannel1, PauliChannel2
from noise.services import UNBOUNDED, ChannelService, RateService


class Basis(models.TextChoices):
    Z = "Z", "Z basis"
    X = "X", "X basis"


def _probabilities_text(mapping):
    return " ".join(f"{label}={p:.6g}" for label, p in mapping.items() if p > 0.0)


def _records_text(records):
    return ",".join(str(record) for record in records)


@dataclass(frozen=True)
class ResetZ:
    qubit: int

    def to_text(self):
        return f"R {self.qubit}"


@dataclass(frozen=True)
class Hadamard:
    qubit: int

    def to_text(self):
        return f"H {self.qubit}"


@dataclass(frozen=True)
class HadamardYZ:
    """Basis change exchanging Y and Z, used around Y-labelled Tanner edges."""

    qubit: int

    def to_text(self):
        return f"H_YZ {self.qubit}"


@dataclass(frozen=True)
class RusCZ:
    data: int
    check: int
    pauli: str
    site: int

    @property
    def qubits(self):
        return (self.data, self.check)

    def to_text(self):
        return f"RUSCZ {self.data} {self.check} {self.pauli} site={self.site}"


@dataclass(frozen=True)
class PauliNoise1:
    qubit: int
    channel: PauliChannel1

    def to_text(self):
        mapping = self.channel.as_mapping()
        mapping.pop("I")
        return f"NOISE1 {self.qubit} {_probabilities_text(mapping)}".rstrip()


@dataclass(frozen=True)
class PauliNoise2:
    """
    Two-qubit Pauli channel on ``(data, check)``.

    When ``site`` is set the channel is the success case of that RUS gate;
    a heralded failure at the site replaces it by full dephasing.
    """

    qubits: tuple
    channel: PauliChannel2
    site: int = None

    def to_text(self):
        mapping = self.channel.as_mapping()
        mapping.pop("II")
        line = f"NOISE2 {self.qubits[0]} {self.qubits[1]} {_probabilities_text(mapping)}".rstrip()
        return line if self.site is None else f"{line} site={self.site}"


@dataclass(frozen=True)
class MeasureZ:
    qubit: int
    record: int

    def to_text(self):
        return f"M {self.qubit} rec={self.record}"


@dataclass(frozen=True)
class Detector:
    """Parity of measurement records; ``kind`` is the type of the check it belongs to."""

    records: tuple
    coords: tuple
    kind: str

    def to_text(self):
        coords = ",".join(str(c) for c in self.coords)
        return f"DETECTOR rec={_records_text(self.records)} coords={coords} kind={self.kind}"


@dataclass(frozen=True)
class ObservableInclude:
    records: tuple

    def to_text(self):
        return f"OBSERVABLE rec={_records_text(self.records)}"


@dataclass(frozen=True)
class ScheduleLayer:
    index: int
    edges: tuple

    @property
    def qubits(self):
        return [q for data, check, _ in self.edges for q in (data, check)]

    @property
    def is_disjoint(self):
        qubits = self.qubits
        return len(set(qubits)) == len(qubits)


@dataclass(frozen=True)
class HeraldSite:
    site: int
    p_F: float


@dataclass(frozen=True)
class CircuitNoise:
    """
    Noise parameters of a memory experiment.

    ``p_F`` is the heralded failure (or abort) probability of each RUS gate,
    ``D`` the photon distinguishability and ``t_rus_over_T2`` the RUS gate
    duration over T2. ``t_rus_over_T1`` is 0 for T1 = inf.
    """

    p_F: float = 0.0
    D: float = 0.0
    t_rus_over_T2: float = 0.0
    t_rus_over_T1: float = 0.0

    def __post_init__(self):
        for name in ("p_F", "D"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if self.t_rus_over_T2 < 0 or self.t_rus_over_T1 < 0:
            raise DomainError("Gate durations must be nonnegative")

    @staticmethod
    def gate_duration(k, t_trial_over_T2):
        """Gate duration ``k * t_trial`` over T2."""
        if t_trial_over_T2 == 0:
            return 0.0
        if k == UNBOUNDED:
            raise DomainError("An unbounded trial budget has no finite gate duration")
        return k * t_trial_over_T2

    @classmethod
    def from_loss(cls, epsilon, k=UNBOUNDED, n=1, D=0.0, t_trial_over_T2=0.0, t_rus_over_T1=0.0):
        """
        Map single-photon loss through the (hybrid) RUS rate formulas.

        The gate fails or aborts with ``P_f + P_a`` and lasts ``k`` trials.

        Raises:
            DomainError: When an unbounded budget is combined with a finite trial time
        """
        if not 0.0 <= epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {epsilon!r}")
        eta = 1.0 - epsilon
        p_fail = RateService.hrus_rates(eta, eta, k, n).p_fail
        return cls(
            p_F=min(max(p_fail, 0.0), 1.0),
            D=D,
            t_rus_over_T2=cls.gate_duration(k, t_trial_over_T2),
            t_rus_over_T1=t_rus_over_T1,
        )

    @classmethod
    def from_config(cls, section):
        """Build the noise from a validated ``noise`` configuration section."""
        if section.get("epsilon") is not None:
            noise = cls.from_loss(
                section["epsilon"],
                k=section["k"],
                n=section["n"],
                D=section["D"],
                t_trial_over_T2=section["t_trial_over_T2"],
                t_rus_over_T1=section["t_rus_over_T1"],
            )
            p_F = noise.p_F
        else:
            p_F = section.get("p_F") or 0.0
        duration = section.get("t_rus_over_T2")
        if duration is None:
            duration = cls.gate_duration(section["k"], section["t_trial_over_T2"])
        return cls(
            p_F=p_F,
            D=section["D"],
            t_rus_over_T2=duration,
            t_rus_over_T1=section["t_rus_over_T1"],
        )

    def scaled(self, w):
        """Every noise strength multiplied by ``w``."""
        return CircuitNoise(
            p_F=self.p_F * w,
            D=self.D * w,
            t_rus_over_T2=self.t_rus_over_T2 * w,
            t_rus_over_T1=self.t_rus_over_T1 * w,
        )

    def decoherence_channel(self):
        return ChannelService.decoherence_channel(self.t_rus_over_T2, self.t_rus_over_T1)

    def success_channel(self):
        return ChannelService.success_channel(self.D)

    @property
    def is_noiseless(self):
        return self.p_F == 0 and self.D == 0 and self.t_rus_over_T2 == 0 and self.t_rus_over_T1 == 0


@dataclass(frozen=True)
class SyndromeCircuit:
    """
    A compiled memory experiment.

    Qubit identifiers are the Tanner graph vertex identifiers. ``layers``
    holds the four CZ layers of one round; ``observable`` the measurement
    records whose parity is the logical outcome.
    """

    ops: tuple
    qubit_count: int
    rounds: int
    basis: str
    herald_sites: tuple
    observable: tuple
    layers: tuple = ()
    distance: int = 0
    noise: CircuitNoise = field(default_factory=CircuitNoise)

    @cached_property
    def detectors(self):
        return tuple(op for op in self.ops if isinstance(op, Detector))

    @property
    def detector_count(self):
        return len(self.detectors)

    @property
    def herald_count(self):
        return len(self.herald_sites)

    @cached_property
    def measurement_count(self):
        return sum(1 for op in self.ops if isinstance(op, MeasureZ))

    @cached_property
    def herald_probabilities(self):
        return {site.site: site.p_F for site in self.herald_sites}

    def detectors_of_kind(self, kind):
        """Detector indices belonging to checks of ``kind``."""
        return [index for index, det in enumerate(self.detectors) if det.kind == kind]

    def to_text(self):
        header = (
            f"# spoqc circuit d={self.distance} basis={self.basis} rounds={self.rounds} "
            f"qubits={self.qubit_count} heralds={self.herald_count} "
            f"p_F={self.noise.p_F:.6g} D={self.noise.D:.6g} "
            f"t_rus_over_T2={self.noise.t_rus_over_T2:.6g}"
        )
        if not math.isclose(self.noise.t_rus_over_T1, 0.0):
            header += f" t_rus_over_T1={self.noise.t_rus_over_T1:.6g}"
        return "\n".join([header, *(op.to_text() for op in self.ops)]) + "\n"
