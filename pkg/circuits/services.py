import logging
from collections import defaultdict
from dataclasses import dataclass

import stim

from codes.graphs import CheckKind, Pauli
from codes.services import CodeService
from core.exceptions import CircuitError, CodeConstructionError, DomainError

from .operations import (
    Basis,
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
    ScheduleLayer,
    SyndromeCircuit,
)

logger = logging.getLogger(__name__)

# Position of the data qubit relative to its check, rows growing downwards.
DIRECTIONS = {(-1, -1): "NW", (-1, 1): "NE", (1, -1): "SW", (1, 1): "SE"}

SCHEDULE_ORDER = {
    CheckKind.X: ("SW", "NW", "SE", "NE"),
    CheckKind.Z: ("SW", "SE", "NW", "NE"),
}

BASIS_CHANGE = {Pauli.X: Hadamard, Pauli.Y: HadamardYZ, Pauli.Z: None}

DETERMINISM_RUNS = 8


@dataclass(frozen=True)
class CircuitReport:
    issues: tuple = ()

    @property
    def passed(self):
        return not self.issues


class CircuitService:
    """Service class for compiling and checking syndrome circuits."""

    @staticmethod
    def cz_schedule(graph):
        """
        Split the Tanner edges of a planar CSS code into four CZ layers.

        Each edge is labelled NW/NE/SW/SE by the data position relative to
        its check. X-type checks run SW, NW, SE, NE and Z-type checks SW,
        SE, NW, NE.

        Args:
            graph: TannerGraph with planar coordinates on every vertex

        Returns:
            tuple: Four ScheduleLayer, indices 1 to 4

        Raises:
            CircuitError: If an edge direction is ambiguous or a layer
                touches a qubit twice
        """
        kinds = graph.check_kinds
        layers = defaultdict(list)
        for data, check, pauli in graph.edges:
            if data not in graph.coords or check not in graph.coords:
                raise CircuitError(f"Edge ({data}, {check}) has no planar coordinates")
            (dr, dc), (cr, cc) = graph.coords[data], graph.coords[check]
            direction = DIRECTIONS.get((dr - cr, dc - cc))
            if direction is None:
                raise CircuitError(
                    f"Edge ({data}, {check}) has ambiguous direction {(dr - cr, dc - cc)}"
                )
            order = SCHEDULE_ORDER.get(kinds[check])
            if order is None:
                raise CircuitError(f"No CZ order for {kinds[check]}-type check {check}")
            layers[order.index(direction) + 1].append((data, check, pauli))

        schedule = tuple(
            ScheduleLayer(index, tuple(sorted(layers[index], key=lambda e: (e[1], e[0]))))
            for index in range(1, 5)
        )
        for layer in schedule:
            if not layer.is_disjoint:
                raise CircuitError(f"CZ layer {layer.index} acts twice on a qubit")
        return schedule

    @staticmethod
    def build_syndrome_circuit(graph, logicals, basis=Basis.Z, rounds=1, noise=None, distance=0):
        """
        Compile a memory experiment for a planar CSS Tanner graph.

        Each round resets and Hadamards the checks, runs the four CZ layers
        (every layer preceded by idle decoherence on all qubits) and measures
        the checks after a closing Hadamard. Data edges of Pauli type X are
        compiled as ``H; RUS CZ; H`` on the data qubit. Every RUS CZ is a
        herald site followed by its success-case noise.

        Args:
            graph: CSS TannerGraph with coordinates
            logicals: LogicalOperators; the observable is the logical of ``basis``
            basis: Basis.Z or Basis.X
            rounds: Number of syndrome rounds
            noise: CircuitNoise, noiseless by default
            distance: Code distance, recorded on the circuit

        Returns:
            SyndromeCircuit

        Raises:
            CodeConstructionError: If the graph is not CSS
            CircuitError: On an unknown basis
        """
        if basis not in Basis.values:
            raise CircuitError(f"Unknown basis {basis!r}")
        if not graph.is_css:
            raise CodeConstructionError("Memory experiments require a CSS Tanner graph")
        if isinstance(rounds, bool) or not isinstance(rounds, int) or rounds < 1:
            raise DomainError(f"rounds must be a positive integer, got {rounds!r}")
        basis = str(basis)
        noise = noise or CircuitNoise()
        layers = CircuitService.cz_schedule(graph)
        idle = noise.decoherence_channel()
        idle = None if idle.is_identity else idle
        success = noise.success_channel()

        data = list(graph.data_vertices)
        checks = [check for check, _ in graph.check_vertices]
        kinds = graph.check_kinds
        qubits = sorted(data + checks)

        ops = []
        herald_sites = []
        record = 0

        def measure(qubit):
            nonlocal record
            ops.append(MeasureZ(qubit, record))
            record += 1
            return record - 1

        def detector_coords(check, round_index):
            return (*graph.coords.get(check, (check, 0)), round_index)

        ops.extend(ResetZ(q) for q in data)
        if basis == Basis.X:
            ops.extend(Hadamard(q) for q in data)

        previous = {}
        for round_index in range(rounds):
            ops.extend(ResetZ(c) for c in checks)
            ops.extend(Hadamard(c) for c in checks)
            for layer in layers:
                if idle is not None:
                    ops.extend(PauliNoise1(q, idle) for q in qubits)
                for data_qubit, check, pauli in layer.edges:
                    site = len(herald_sites)
                    change = BASIS_CHANGE[pauli]
                    if change is not None:
                        ops.append(change(data_qubit))
                    ops.append(RusCZ(data_qubit, check, pauli, site))
                    ops.append(PauliNoise2((data_qubit, check), success, site))
                    if change is not None:
                        ops.append(change(data_qubit))
                    herald_sites.append(HeraldSite(site, noise.p_F))
            ops.extend(Hadamard(c) for c in checks)
            current = {c: measure(c) for c in checks}
            for c in checks:
                coords = detector_coords(c, round_index)
                if round_index == 0:
                    if kinds[c] == basis:
                        ops.append(Detector((current[c],), coords, kinds[c]))
                else:
                    ops.append(Detector((previous[c], current[c]), coords, kinds[c]))
            previous = current

        if basis == Basis.X:
            ops.extend(Hadamard(q) for q in data)
        data_records = {q: measure(q) for q in data}
        for c in checks:
            if kinds[c] != basis:
                continue
            support = sorted(data_records[q] for q, _ in graph.check_support(c))
            ops.append(Detector((previous[c], *support), detector_coords(c, rounds), kinds[c]))
        z_support, x_support = logicals.z_support, logicals.x_support
        observable = tuple(
            sorted(data_records[q] for q in (z_support if basis == Basis.Z else x_support))
        )
        ops.append(ObservableInclude(observable))

        circuit = SyndromeCircuit(
            ops=tuple(ops),
            qubit_count=max(qubits) + 1,
            rounds=rounds,
            basis=basis,
            herald_sites=tuple(herald_sites),
            observable=observable,
            layers=layers,
            distance=distance,
            noise=noise,
        )
        logger.debug(
            "Compiled d=%s basis=%s rounds=%d: %d ops, %d detectors, %d herald sites",
            distance,
            basis,
            rounds,
            len(ops),
            circuit.detector_count,
            circuit.herald_count,
        )
        return circuit

    @staticmethod
    def build_memory_experiment(distance, basis=Basis.Z, rounds=None, noise=None):
        """
        Compile the rotated surface code memory experiment of distance ``d``.

        Args:
            distance: Odd code distance
            basis: Basis.Z or Basis.X
            rounds: Syndrome rounds, ``d`` by default
            noise: CircuitNoise

        Returns:
            SyndromeCircuit
        """
        code = CodeService.build_rotated_surface_code(distance)
        return CircuitService.build_syndrome_circuit(
            code.graph,
            code.logicals,
            basis=basis,
            rounds=distance if rounds is None else rounds,
            noise=noise,
            distance=distance,
        )

    @staticmethod
    def structural_issues(circuit):
        """Record ordering, herald uniqueness and layer problems of a circuit."""
        issues = []
        measured = 0
        sites = []
        for position, op in enumerate(circuit.ops):
            if isinstance(op, MeasureZ):
                if op.record != measured:
                    issues.append(f"op {position}: record {op.record} out of order (expected {measured})")
                measured += 1
            elif isinstance(op, (Detector, ObservableInclude)):
                bad = [r for r in op.records if not 0 <= r < measured]
                if bad:
                    issues.append(f"op {position}: references unmeasured records {bad}")
            elif isinstance(op, RusCZ):
                sites.append(op.site)
        if len(set(sites)) != len(sites):
            issues.append("herald site ids are not unique")
        if sorted(sites) != sorted(site.site for site in circuit.herald_sites):
            issues.append("herald sites do not match the RUS gates")
        if len(circuit.layers) != 4:
            issues.append(f"{len(circuit.layers)} CZ layers per round, expected 4")
        for layer in circuit.layers:
            if not layer.is_disjoint:
                issues.append(f"CZ layer {layer.index} is not vertex-disjoint")
        return issues

    @staticmethod
    def noiseless_records(circuit, seed):
        """
        Measurement record of one noiseless run on a stabilizer tableau.

        Random measurement outcomes are drawn from ``seed``.
        """
        simulator = stim.TableauSimulator(seed=seed)
        records = []
        for op in circuit.ops:
            if isinstance(op, ResetZ):
                simulator.reset_z(op.qubit)
            elif isinstance(op, Hadamard):
                simulator.h(op.qubit)
            elif isinstance(op, HadamardYZ):
                simulator.h_yz(op.qubit)
            elif isinstance(op, RusCZ):
                simulator.cz(op.data, op.check)
            elif isinstance(op, MeasureZ):
                records.append(simulator.measure(op.qubit))
        return records

    @staticmethod
    def validate_circuit(circuit, runs=DETERMINISM_RUNS, seed=0):
        """
        Check a circuit's structure and the determinism of its detectors.

        Several noiseless runs with different random measurement outcomes
        must give every detector and the observable parity 0.

        Returns:
            CircuitReport: Never raises; ``report.passed`` tells the outcome
        """
        issues = CircuitService.structural_issues(circuit)
        if any("record" in issue for issue in issues):
            return CircuitReport(tuple(issues))

        flagged = set()
        observable_flagged = False
        for run in range(runs):
            records = CircuitService.noiseless_records(circuit, seed + run)
            for index, detector in enumerate(circuit.detectors):
                if sum(records[r] for r in detector.records) % 2:
                    flagged.add(index)
            if sum(records[r] for r in circuit.observable) % 2:
                observable_flagged = True
        issues += [
            f"detector {index} {circuit.detectors[index].coords} is not deterministic"
            for index in sorted(flagged)
        ]
        if observable_flagged:
            issues.append("observable is not deterministic")
        return CircuitReport(tuple(issues))
