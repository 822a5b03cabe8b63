"""Value types for Tanner graphs, code parameters and hardware layouts."""

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property

from django.db import models

from core.exceptions import CodeConstructionError, DomainError


class CheckKind(models.TextChoices):
    """Stabilizer check types."""

    X = "X", "X-type"
    Z = "Z", "Z-type"
    MIXED = "mixed", "Mixed"


class Pauli(models.TextChoices):
    """Pauli labels carried by Tanner graph edges."""

    X = "X", "Pauli X"
    Y = "Y", "Pauli Y"
    Z = "Z", "Pauli Z"


@dataclass(frozen=True)
class TannerGraph:
    """
    Bipartite data/check graph with Pauli-labelled edges.

    Vertex identifiers are dense integers, data vertices first. ``coords``
    maps a vertex to its planar ``(row, column)`` position when the graph
    is geometric.
    """

    data_vertices: tuple
    check_vertices: tuple
    edges: tuple
    coords: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        # Labels are stored as plain strings so they hash like their values.
        object.__setattr__(self, "data_vertices", tuple(int(v) for v in self.data_vertices))
        object.__setattr__(
            self,
            "check_vertices",
            tuple((int(c), str(kind)) for c, kind in self.check_vertices),
        )
        object.__setattr__(
            self, "edges", tuple((int(d), int(c), str(p)) for d, c, p in self.edges)
        )
        object.__setattr__(
            self, "coords", {int(v): tuple(xy) for v, xy in self.coords.items()}
        )
        data = set(self.data_vertices)
        checks = {check for check, _ in self.check_vertices}
        if len(data) != len(self.data_vertices) or len(checks) != len(
            self.check_vertices
        ):
            raise CodeConstructionError("Duplicate vertex identifiers")
        if data & checks:
            raise CodeConstructionError("A vertex cannot be both data and check")
        seen = set()
        for data_id, check_id, pauli in self.edges:
            if data_id not in data or check_id not in checks:
                raise CodeConstructionError(
                    f"Edge ({data_id}, {check_id}) does not join a data and a check vertex"
                )
            if (data_id, check_id) in seen:
                raise CodeConstructionError(
                    f"Duplicate edge ({data_id}, {check_id})"
                )
            if pauli not in Pauli.values:
                raise CodeConstructionError(f"Unknown Pauli label {pauli!r}")
            seen.add((data_id, check_id))
        for check_id, kind in self.check_vertices:
            if kind not in CheckKind.values:
                raise CodeConstructionError(f"Unknown check kind {kind!r}")
            if kind == CheckKind.MIXED:
                continue
            labels = {pauli for _, pauli in self.check_support(check_id)}
            if labels - {kind}:
                raise CodeConstructionError(
                    f"{kind}-type check {check_id} carries {sorted(labels)} edges"
                )

    @cached_property
    def _incidence(self):
        incidence = defaultdict(list)
        for data_id, check_id, pauli in self.edges:
            incidence[data_id].append((check_id, pauli))
            incidence[check_id].append((data_id, pauli))
        return incidence

    @cached_property
    def check_kinds(self):
        return dict(self.check_vertices)

    def check_support(self, check_id):
        """Return ``[(data_id, pauli), ...]`` for a check, in edge order."""
        return list(self._incidence.get(check_id, ()))

    def degree(self, vertex):
        return len(self._incidence.get(vertex, ()))

    def stabilizer(self, check_id):
        """Return the check operator as ``{data_id: pauli}``."""
        return {data_id: pauli for data_id, pauli in self.check_support(check_id)}

    def checks_of_kind(self, kind):
        return [check for check, check_kind in self.check_vertices if check_kind == kind]

    @property
    def is_css(self):
        return all(kind != CheckKind.MIXED for _, kind in self.check_vertices) and all(
            pauli != Pauli.Y for _, _, pauli in self.edges
        )

    def to_json(self):
        """Return the documented JSON form of the graph."""
        payload = {
            "data": list(self.data_vertices),
            "checks": [{"id": check, "kind": kind} for check, kind in self.check_vertices],
            "edges": [[data, check, pauli] for data, check, pauli in self.edges],
        }
        if self.coords:
            payload["coords"] = {
                str(vertex): list(position) for vertex, position in sorted(self.coords.items())
            }
        return payload


def paulis_commute(first, second):
    """Return True when two ``{qubit: pauli}`` operators commute."""
    clashes = sum(
        1
        for qubit, pauli in first.items()
        if qubit in second and second[qubit] != pauli
    )
    return clashes % 2 == 0


@dataclass(frozen=True)
class CodeParams:
    """``[[n, k, d]]`` parameters of a stabilizer code."""

    n: int
    k: int
    d: int

    def __post_init__(self):
        if not (self.n >= self.k >= 1):
            raise DomainError(f"Need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.d < 1:
            raise DomainError(f"Distance must be positive, got {self.d}")


@dataclass(frozen=True)
class LogicalOperators:
    z_support: frozenset
    x_support: frozenset

    def as_paulis(self):
        return (
            {qubit: Pauli.Z for qubit in self.z_support},
            {qubit: Pauli.X for qubit in self.x_support},
        )


@dataclass(frozen=True)
class SurfaceCode:
    """A built rotated surface code: graph, parameters and logicals."""

    graph: TannerGraph
    params: CodeParams
    logicals: LogicalOperators


@dataclass(frozen=True)
class LdpcReport:
    """Outcome of an LDPC/CSS sanity check on a Tanner graph."""

    max_degree: int
    over_degree: tuple = ()
    non_css_checks: tuple = ()
    disconnected_data: tuple = ()

    @property
    def passed(self):
        return not (self.over_degree or self.non_css_checks or self.disconnected_data)

    @property
    def issues(self):
        issues = [
            f"vertex {vertex} has degree {degree} > {self.max_degree}"
            for vertex, degree in self.over_degree
        ]
        issues += [f"check {check} is not CSS" for check in self.non_css_checks]
        issues += [f"data vertex {data} has no check" for data in self.disconnected_data]
        return issues


@dataclass(frozen=True)
class LayoutParams:
    """
    Hardware layout parameters of a module arrangement.

    ``module_volume`` is the spatial footprint V of one qubit module,
    ``attenuation_length`` the channel attenuation length, ``dimension`` the
    number of spatial dimensions used by the arrangement, ``qubit_count`` the
    number of qubits N and ``trials`` the RUS trial budget k.
    """

    module_volume: float
    attenuation_length: float
    dimension: int
    qubit_count: int
    trials: int

    def __post_init__(self):
        for name in ("module_volume", "attenuation_length", "dimension", "qubit_count", "trials"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.dimension > 3:
            raise DomainError("A spatial arrangement has at most 3 dimensions")


@dataclass(frozen=True)
class LayoutOverhead:
    loss_estimate: float
    latency_estimate: float

    def within_loss_budget(self, loss_threshold):
        """True when the estimated link loss stays below ``loss_threshold``."""
        return self.loss_estimate < loss_threshold
