import logging
import math
from collections import defaultdict
from functools import reduce

import networkx as nx
import numpy as np

from circuits.operations import PauliNoise1, PauliNoise2
from core.exceptions import DecoderError, DomainError
from core.services import WorkerPoolService
from frames.engine import FrameSimulator
from frames.services import BLOCK_SHOTS, FrameService

from .graphs import (
    BOUNDARY,
    DecodeResult,
    ErrorMechanism,
    HeraldedGraphView,
    LogicalErrorEstimate,
    MatchingEdge,
    MatchingGraph,
    edge_key,
    xor_combine,
)

logger = logging.getLogger(__name__)

# Heralded failure dephases each qubit independently with probability 1/2.
HERALDED_LABELS = (("ZI", 0.5), ("IZ", 0.5))


def _decode_block(job):
    circuit, graph, family, seed, block, count, use_heralds = job
    batch = FrameService.block_batch(circuit, seed, block)
    mask = np.zeros(circuit.detector_count, dtype=bool)
    mask[list(family)] = True
    errors = 0
    for index in range(count):
        bits = batch.detectors[index] & mask
        if bits.any():
            view = (
                DecoderService.apply_heralds(graph, batch.heralds[index])
                if use_heralds
                else graph
            )
            predicted = DecoderService.mwpm_decode(view, bits).flip
        else:
            predicted = False
        errors += int(predicted != bool(batch.observables[index]))
    return errors


class DecoderService:
    """Service class for detector error models and matching decoders."""

    @staticmethod
    def derive_error_model(circuit):
        """
        Propagate every nontrivial Pauli outcome of every noise site.

        Heralded sites contribute their failure dephasing (``Z`` on each
        qubit at ``p = 1/2``) tagged with the herald site, on top of the
        success-case outcomes.

        Args:
            circuit: SyndromeCircuit

        Returns:
            list: ErrorMechanism in circuit order

        Raises:
            DecoderError: If a mechanism flips more than two detectors of
                one check type
        """
        entries = []
        for position, op in enumerate(circuit.ops):
            if isinstance(op, PauliNoise1):
                for label, p in op.channel.as_mapping().items():
                    if label != "I" and p > 0:
                        entries.append((position, label, (op.qubit,), p, None))
            elif isinstance(op, PauliNoise2):
                for label, p in op.channel.support():
                    if label != "II":
                        entries.append((position, label, op.qubits, p, None))
                if op.site is not None and circuit.herald_probabilities.get(op.site, 0.0) > 0:
                    for label, p in HERALDED_LABELS:
                        entries.append((position, label, op.qubits, p, op.site))
        if not entries:
            return []

        injections = defaultdict(list)
        for column, (position, label, qubits, _, _) in enumerate(entries):
            for qubit, pauli in zip(qubits, label):
                if pauli != "I":
                    injections[position].append((column, qubit, pauli))
        detectors, observable, _ = FrameSimulator(circuit).run(
            shots=len(entries), injections=injections, noisy=False
        )

        kinds = np.array([detector.kind for detector in circuit.detectors])
        mechanisms = []
        for column, (position, label, qubits, p, herald) in enumerate(entries):
            flipped = np.flatnonzero(detectors[column])
            for kind in set(kinds[flipped]):
                if np.count_nonzero(kinds[flipped] == kind) > 2:
                    raise DecoderError(
                        f"{label} at op {position} flips {len(flipped)} detectors: not graph-like"
                    )
            mechanisms.append(
                ErrorMechanism(
                    site=position,
                    label=label,
                    qubits=tuple(qubits),
                    probability=p,
                    detectors=frozenset(int(d) for d in flipped),
                    flip=bool(observable[column]),
                    herald=herald,
                )
            )
        logger.debug("Derived %d error mechanisms", len(mechanisms))
        return mechanisms

    @staticmethod
    def decoding_detectors(circuit):
        """Detectors of the family that protects the measured observable."""
        return set(circuit.detectors_of_kind(circuit.basis))

    @staticmethod
    def build_base_graph(mechanisms, detectors=None, fold_heralds=None):
        """
        Merge unheralded mechanisms into a matching graph.

        Args:
            mechanisms: ErrorMechanism list
            detectors: Optional detector ids to keep (one decoding family);
                signatures are restricted to them
            fold_heralds: Optional ``{site: p_F}``; heralded mechanisms are
                then added at their a-priori probability ``p * p_F`` instead
                of being kept for per-shot overlays

        Returns:
            MatchingGraph

        Raises:
            DecoderError: If a restricted signature has more than two detectors
        """
        groups = defaultdict(lambda: defaultdict(float))
        constituents = defaultdict(list)
        heralded = defaultdict(list)
        for index, mechanism in enumerate(mechanisms):
            signature = mechanism.detectors
            if detectors is not None:
                signature = signature & detectors
            if not signature:
                if mechanism.flip:
                    logger.warning(
                        "%s at op %d flips the observable without any detector",
                        mechanism.label,
                        mechanism.site,
                    )
                continue
            if len(signature) > 2:
                raise DecoderError(
                    f"{mechanism.label} at op {mechanism.site} is not graph-like: {sorted(signature)}"
                )
            key = edge_key(signature)
            probability = mechanism.probability
            if mechanism.herald is not None:
                if fold_heralds is None:
                    heralded[mechanism.herald].append((key, mechanism.flip))
                    continue
                probability *= fold_heralds.get(mechanism.herald, 0.0)
                if probability <= 0:
                    continue
            groups[key][mechanism.flip] = xor_combine(groups[key][mechanism.flip], probability)
            constituents[key].append(index)

        edges = {}
        for key, by_flip in groups.items():
            # Conflicting flips keep the more probable one.
            flip = max(sorted(by_flip), key=lambda f: by_flip[f])
            probability = reduce(xor_combine, by_flip.values(), 0.0)
            edges[key] = MatchingEdge(probability, flip, tuple(constituents[key]))
        return MatchingGraph(
            edges=edges,
            heralded={site: tuple(dict.fromkeys(items)) for site, items in heralded.items()},
        )

    @staticmethod
    def apply_heralds(base, heralds):
        """
        Overlay the edges of fired heralds at ``p = 1/2`` (weight 0).

        Args:
            base: MatchingGraph
            heralds: Bit vector over herald sites

        Returns:
            HeraldedGraphView
        """
        overlay = {}
        fired = [int(site) for site in np.flatnonzero(heralds)]
        for site in fired:
            for key, flip in base.heralded.get(site, ()):
                overlay[key] = flip
        if fired:
            logger.debug("Heralds fired at %s: %d edges set to weight 0", fired, len(overlay))
        return HeraldedGraphView(base, overlay)

    @staticmethod
    def mwpm_decode(graph, detector_bits):
        """
        Exact minimum-weight perfect matching of the flagged detectors.

        Flagged detectors and one boundary copy each form a complete graph
        whose costs are shortest-path distances; boundary copies pair with
        each other at no cost.

        Args:
            graph: MatchingGraph or HeraldedGraphView
            detector_bits: Bit vector over detector ids

        Returns:
            DecodeResult: XOR of the flips along every matched path

        Raises:
            DecoderError: If no perfect matching exists
        """
        view = graph if isinstance(graph, HeraldedGraphView) else HeraldedGraphView(graph)
        flagged = [int(d) for d in np.flatnonzero(detector_bits)]
        if not flagged:
            return DecodeResult(False, 0.0)
        network = view.base.network
        weight = view.weight_function()

        def path_flip(path):
            return reduce(
                lambda acc, pair: acc ^ bool(view.flip(network[pair[0]][pair[1]]["key"])),
                zip(path, path[1:]),
                False,
            )

        if BOUNDARY in network:
            boundary_distance, boundary_paths = nx.single_source_dijkstra(
                network, BOUNDARY, weight=weight
            )
        else:
            boundary_distance, boundary_paths = {}, {}
        reach = [boundary_distance.get(f, math.inf) for f in flagged]
        radius = max(reach)

        count = len(flagged)
        candidates = nx.Graph()
        candidates.add_nodes_from(range(2 * count))
        paths = {}
        for i, source in enumerate(flagged):
            if source in boundary_distance:
                candidates.add_edge(i, count + i, weight=boundary_distance[source])
                paths[(i, count + i)] = boundary_paths[source]
            if source not in network:
                continue
            cutoff = None if math.isinf(radius) else reach[i] + radius
            distance, found = nx.single_source_dijkstra(
                network, source, cutoff=cutoff, weight=weight
            )
            for j in range(i + 1, count):
                if flagged[j] in distance:
                    candidates.add_edge(i, j, weight=distance[flagged[j]])
                    paths[(i, j)] = found[flagged[j]]
        for i in range(count):
            for j in range(i + 1, count):
                candidates.add_edge(count + i, count + j, weight=0.0)

        matching = nx.min_weight_matching(candidates)
        if len(matching) != count:
            raise DecoderError(f"No perfect matching for flagged detectors {flagged}")

        flip = False
        total = 0.0
        matches = []
        for u, v in sorted(tuple(sorted(pair)) for pair in matching):
            if u >= count:
                continue
            total += candidates[u][v]["weight"]
            flip ^= path_flip(paths[(u, v)])
            matches.append((flagged[u], BOUNDARY if v >= count else flagged[v]))
        logger.debug("Matched %s with weight %.4g, flip %d", matches, total, flip)
        return DecodeResult(flip, total, tuple(matches))

    @staticmethod
    def logical_error_rate(circuit, shots, seed, workers=None, use_heralds=True):
        """
        Sample and decode ``shots`` shots of a memory experiment.

        Args:
            circuit: SyndromeCircuit
            shots: Number of shots, at least 1
            seed: Master seed; the shots are those of ``sample_batch``
            workers: Worker processes for the shot blocks
            use_heralds: Decode with per-shot herald overlays, or fold the
                heralded mechanisms into the graph at ``p_F / 2``

        Returns:
            LogicalErrorEstimate
        """
        if shots < 1:
            raise DomainError(f"shots must be positive, got {shots!r}")
        family = DecoderService.decoding_detectors(circuit)
        graph = DecoderService.matching_graph_for(circuit, use_heralds)
        blocks = math.ceil(shots / BLOCK_SHOTS)
        jobs = [
            (
                circuit,
                graph,
                sorted(family),
                seed,
                block,
                min(BLOCK_SHOTS, shots - block * BLOCK_SHOTS),
                use_heralds,
            )
            for block in range(blocks)
        ]
        errors = sum(WorkerPoolService.map_ordered(_decode_block, jobs, workers))
        estimate = LogicalErrorEstimate(errors, shots)
        logger.info(
            "d=%s: %d logical errors in %d shots (p_L=%.4g)",
            circuit.distance,
            errors,
            shots,
            estimate.p_L,
        )
        return estimate

    @staticmethod
    def matching_graph_for(circuit, use_heralds=True):
        """Base matching graph of a circuit's decoding family."""
        return DecoderService.build_base_graph(
            DecoderService.derive_error_model(circuit),
            DecoderService.decoding_detectors(circuit),
            fold_heralds=None if use_heralds else circuit.herald_probabilities,
        )
