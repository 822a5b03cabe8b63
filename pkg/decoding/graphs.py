"""Error mechanisms, matching graphs and their per-shot herald overlays."""

import math
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx

BOUNDARY = -1


def edge_weight(probability):
    """Matching weight ``ln((1 - p) / p)``, 0 from ``p = 1/2`` upwards."""
    if probability >= 0.5:
        return 0.0
    return math.log((1.0 - probability) / probability)


def xor_combine(first, second):
    """Probability that exactly one of two independent events happens."""
    return first * (1.0 - second) + second * (1.0 - first)


def edge_key(detectors):
    """Matching-graph edge of a one- or two-detector signature."""
    nodes = sorted(detectors)
    if len(nodes) == 1:
        return (nodes[0], BOUNDARY)
    return (nodes[0], nodes[1])


@dataclass(frozen=True)
class ErrorMechanism:
    """
    One Pauli outcome of one noise site, propagated to the end of the circuit.

    ``site`` is the position of the noise op in the circuit, ``herald`` the
    herald site whose failure channel produces the outcome (``None`` for
    unheralded noise).
    """

    site: int
    label: str
    qubits: tuple
    probability: float
    detectors: frozenset
    flip: bool
    herald: int = None


@dataclass(frozen=True)
class MatchingEdge:
    probability: float
    flip: bool
    mechanisms: tuple = ()

    @property
    def weight(self):
        return edge_weight(self.probability)


@dataclass(frozen=True)
class MatchingGraph:
    """
    Detector graph of one CSS decoding family.

    ``edges`` maps ``(u, v)`` (``v`` may be BOUNDARY) to a MatchingEdge;
    ``heralded`` maps a herald site to the ``(key, flip)`` edges its failure
    channel produces, which are not part of the base graph.
    """

    edges: dict
    heralded: dict = field(default_factory=dict)

    @cached_property
    def network(self):
        """
        networkx view of every base and heralded edge.

        Edges that only heralds produce carry weight ``None`` and stay
        hidden until a herald fires.
        """
        graph = nx.Graph()
        for key in sorted(self.edges):
            edge = self.edges[key]
            graph.add_edge(*key, key=key, weight=edge.weight, flip=edge.flip)
        for site in sorted(self.heralded):
            for key, flip in self.heralded[site]:
                if not graph.has_edge(*key):
                    graph.add_edge(*key, key=key, weight=None, flip=flip)
        return graph

    def to_json(self):
        """Return the documented JSON form of the graph."""
        return {
            "boundary": BOUNDARY,
            "edges": [
                {
                    "u": u,
                    "v": v,
                    "p": edge.probability,
                    "weight": edge.weight,
                    "flip": int(edge.flip),
                    "mechanisms": list(edge.mechanisms),
                }
                for (u, v), edge in sorted(self.edges.items())
            ],
            "heralds": {
                str(site): [[u, v, int(flip)] for (u, v), flip in edges]
                for site, edges in sorted(self.heralded.items())
            },
        }


@dataclass(frozen=True)
class HeraldedGraphView:
    """
    A base graph with the edges of fired heralds set to ``p = 1/2``.

    ``overlay`` maps an edge key to the flip of its heralded mechanism.
    """

    base: MatchingGraph
    overlay: dict = field(default_factory=dict)

    def probability(self, key):
        if key in self.overlay:
            return 0.5
        edge = self.base.edges.get(key)
        return edge.probability if edge else 0.0

    def weight(self, key):
        if key in self.overlay:
            return 0.0
        edge = self.base.edges.get(key)
        return edge.weight if edge else None

    def flip(self, key):
        if key in self.overlay:
            return self.overlay[key]
        return self.base.edges[key].flip

    def weight_function(self):
        overlay = self.overlay

        def weight(u, v, data):
            if data["key"] in overlay:
                return 0.0
            return data["weight"]

        return weight


@dataclass(frozen=True)
class DecodeResult:
    flip: bool
    weight: float
    matches: tuple = ()


@dataclass(frozen=True)
class LogicalErrorEstimate:
    errors: int
    shots: int

    @property
    def p_L(self):
        return self.errors / self.shots

    @property
    def stderr(self):
        return math.sqrt(self.p_L * (1.0 - self.p_L) / self.shots)
