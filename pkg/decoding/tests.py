import itertools
import math

import networkx as nx
import numpy as np
from django.test import SimpleTestCase

from circuits.operations import CircuitNoise
from circuits.services import CircuitService
from core.exceptions import DecoderError
from core.services import SeedService

from .graphs import (
    BOUNDARY,
    ErrorMechanism,
    MatchingEdge,
    MatchingGraph,
    edge_key,
    edge_weight,
    xor_combine,
)
from .services import DecoderService


def mechanism(detectors, p, flip=False, herald=None, site=0):
    return ErrorMechanism(site, "Z", (0,), p, frozenset(detectors), flip, herald)


def brute_force_weight(network, flagged):
    """Minimum total path weight pairing ``flagged`` with each other or the boundary."""
    distance = {
        node: nx.single_source_dijkstra_path_length(network, node, weight="weight")
        for node in flagged
    }

    def best(remaining):
        if not remaining:
            return 0.0
        first, rest = remaining[0], remaining[1:]
        options = [distance[first].get(BOUNDARY, math.inf) + best(rest)]
        for index, other in enumerate(rest):
            options.append(
                distance[first].get(other, math.inf) + best(rest[:index] + rest[index + 1 :])
            )
        return min(options)

    return best(tuple(flagged))


def random_graph(rng, nodes=12):
    edges = {}
    for u in range(nodes - 1):
        edges[(u, u + 1)] = MatchingEdge(float(rng.uniform(0.01, 0.3)), bool(rng.integers(2)))
    for u, v in itertools.combinations(range(nodes), 2):
        if (u, v) not in edges and rng.random() < 0.15:
            edges[(u, v)] = MatchingEdge(float(rng.uniform(0.01, 0.3)), bool(rng.integers(2)))
    for u in rng.choice(nodes, size=3, replace=False):
        edges[(int(u), BOUNDARY)] = MatchingEdge(float(rng.uniform(0.01, 0.3)), bool(rng.integers(2)))
    return MatchingGraph(edges)


class WeightTests(SimpleTestCase):
    def test_edge_weight(self):
        self.assertAlmostEqual(edge_weight(0.1), math.log(9))
        self.assertEqual(edge_weight(0.5), 0.0)
        self.assertEqual(edge_weight(0.8), 0.0)
        self.assertGreater(edge_weight(0.01), edge_weight(0.1))

    def test_xor_combine(self):
        self.assertEqual(xor_combine(0.2, 0.0), 0.2)
        self.assertAlmostEqual(xor_combine(0.5, 0.3), 0.5)
        self.assertAlmostEqual(xor_combine(0.1, 0.1), 0.18)

    def test_edge_key(self):
        self.assertEqual(edge_key({4}), (4, BOUNDARY))
        self.assertEqual(edge_key({7, 2}), (2, 7))


class BaseGraphTests(SimpleTestCase):
    def test_same_signature_merges(self):
        graph = DecoderService.build_base_graph([mechanism({0, 1}, 0.1), mechanism({1, 0}, 0.1)])
        self.assertEqual(list(graph.edges), [(0, 1)])
        self.assertAlmostEqual(graph.edges[(0, 1)].probability, 0.18)
        self.assertEqual(graph.edges[(0, 1)].mechanisms, (0, 1))

    def test_flip_conflict_keeps_more_probable(self):
        graph = DecoderService.build_base_graph(
            [mechanism({3}, 0.02, flip=False), mechanism({3}, 0.05, flip=True)]
        )
        edge = graph.edges[(3, BOUNDARY)]
        self.assertTrue(edge.flip)
        self.assertAlmostEqual(edge.probability, xor_combine(0.02, 0.05))

    def test_not_graph_like(self):
        with self.assertRaises(DecoderError):
            DecoderService.build_base_graph([mechanism({0, 1, 2}, 0.1)])

    def test_restriction_to_family(self):
        graph = DecoderService.build_base_graph(
            [mechanism({0, 5}, 0.1), mechanism({5, 6}, 0.1)], detectors={0, 1}
        )
        self.assertEqual(list(graph.edges), [(0, BOUNDARY)])

    def test_heralded_mechanisms_are_kept_apart(self):
        mechanisms = [mechanism({0, 1}, 0.01), mechanism({1, 2}, 0.5, flip=True, herald=4)]
        graph = DecoderService.build_base_graph(mechanisms)
        self.assertEqual(list(graph.edges), [(0, 1)])
        self.assertEqual(graph.heralded, {4: (((1, 2), True),)})
        self.assertIsNone(graph.network[1][2]["weight"])

        folded = DecoderService.build_base_graph(mechanisms, fold_heralds={4: 0.1})
        self.assertAlmostEqual(folded.edges[(1, 2)].probability, 0.05)
        self.assertEqual(folded.heralded, {})

    def test_apply_heralds(self):
        graph = DecoderService.build_base_graph(
            [mechanism({0, 1}, 0.01), mechanism({0, 1}, 0.5, flip=True, herald=0)]
        )
        quiet = DecoderService.apply_heralds(graph, np.array([False]))
        self.assertAlmostEqual(quiet.weight((0, 1)), edge_weight(0.01))
        fired = DecoderService.apply_heralds(graph, np.array([True]))
        self.assertEqual(fired.weight((0, 1)), 0.0)
        self.assertEqual(fired.probability((0, 1)), 0.5)
        self.assertTrue(fired.flip((0, 1)))

    def test_json_form(self):
        graph = DecoderService.build_base_graph(
            [mechanism({0}, 0.1, flip=True), mechanism({0, 1}, 0.5, herald=2)]
        )
        payload = graph.to_json()
        self.assertEqual(payload["boundary"], BOUNDARY)
        self.assertEqual(payload["edges"][0]["u"], 0)
        self.assertEqual(payload["edges"][0]["flip"], 1)
        self.assertEqual(payload["heralds"], {"2": [[0, 1, 0]]})


class MatchingTests(SimpleTestCase):
    def test_pair_through_edge(self):
        graph = MatchingGraph(
            {
                (0, 1): MatchingEdge(0.1, True),
                (0, BOUNDARY): MatchingEdge(0.01, False),
                (1, BOUNDARY): MatchingEdge(0.01, False),
            }
        )
        result = DecoderService.mwpm_decode(graph, np.array([True, True]))
        self.assertTrue(result.flip)
        self.assertEqual(result.matches, ((0, 1),))
        self.assertAlmostEqual(result.weight, math.log(9))

    def test_boundary_when_cheaper(self):
        graph = MatchingGraph(
            {
                (0, 1): MatchingEdge(0.001, False),
                (0, BOUNDARY): MatchingEdge(0.2, True),
                (1, BOUNDARY): MatchingEdge(0.2, False),
            }
        )
        result = DecoderService.mwpm_decode(graph, np.array([True, True]))
        self.assertEqual(result.matches, ((0, BOUNDARY), (1, BOUNDARY)))
        self.assertTrue(result.flip)

    def test_herald_makes_path_free(self):
        graph = DecoderService.build_base_graph(
            [
                mechanism({0, 1}, 0.001),
                mechanism({0}, 0.1),
                mechanism({1}, 0.1),
                mechanism({0, 1}, 0.5, flip=True, herald=0),
            ]
        )
        bits = np.array([True, True])
        self.assertFalse(DecoderService.mwpm_decode(graph, bits).flip)
        view = DecoderService.apply_heralds(graph, np.array([True]))
        result = DecoderService.mwpm_decode(view, bits)
        self.assertEqual(result.weight, 0.0)
        self.assertTrue(result.flip)

    def test_no_flagged_detectors(self):
        result = DecoderService.mwpm_decode(MatchingGraph({}), np.zeros(3, dtype=bool))
        self.assertFalse(result.flip)
        self.assertEqual(result.weight, 0.0)

    def test_odd_component_without_boundary(self):
        graph = MatchingGraph({(0, 1): MatchingEdge(0.1, False)})
        with self.assertRaises(DecoderError):
            DecoderService.mwpm_decode(graph, np.array([True, False]))

    def test_matches_brute_force(self):
        rng = SeedService.generator(2024)
        for trial in range(200):
            graph = random_graph(rng)
            count = int(rng.integers(1, 9))
            flagged = sorted(int(d) for d in rng.choice(12, size=count, replace=False))
            bits = np.zeros(12, dtype=bool)
            bits[flagged] = True
            with self.subTest(trial=trial):
                result = DecoderService.mwpm_decode(graph, bits)
                self.assertAlmostEqual(
                    result.weight, brute_force_weight(graph.network, flagged), places=9
                )


class ErrorModelTests(SimpleTestCase):
    def test_mechanisms_are_graph_like(self):
        circuit = CircuitService.build_memory_experiment(
            3, rounds=2, noise=CircuitNoise(p_F=0.05, D=0.01, t_rus_over_T2=0.01)
        )
        mechanisms = DecoderService.derive_error_model(circuit)
        kinds = [det.kind for det in circuit.detectors]
        self.assertTrue(any(m.herald is not None for m in mechanisms))
        for m in mechanisms:
            for kind in ("X", "Z"):
                self.assertLessEqual(sum(1 for d in m.detectors if kinds[d] == kind), 2)

    def test_noiseless_circuit_has_no_mechanisms(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2)
        self.assertEqual(DecoderService.derive_error_model(circuit), [])

    def test_no_herald_mechanisms_without_failures(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=2, noise=CircuitNoise(D=0.02))
        mechanisms = DecoderService.derive_error_model(circuit)
        self.assertTrue(mechanisms)
        self.assertTrue(all(m.herald is None for m in mechanisms))

    def test_graph_spans_decoding_family(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=3, noise=CircuitNoise(p_F=0.05))
        graph = DecoderService.matching_graph_for(circuit)
        family = DecoderService.decoding_detectors(circuit)
        nodes = set(graph.network.nodes) - {BOUNDARY}
        self.assertEqual(nodes, family)
        self.assertEqual(len(family), 16)


class LogicalErrorRateTests(SimpleTestCase):
    def test_noiseless_has_no_logical_errors(self):
        circuit = CircuitService.build_memory_experiment(3, rounds=3)
        estimate = DecoderService.logical_error_rate(circuit, 200, seed=1, workers=1)
        self.assertEqual(estimate.errors, 0)
        self.assertEqual(estimate.p_L, 0.0)

    def test_single_shot_failures_are_corrected(self):
        circuit = CircuitService.build_memory_experiment(5, rounds=5, noise=CircuitNoise(p_F=0.002))
        estimate = DecoderService.logical_error_rate(circuit, 500, seed=2, workers=1)
        self.assertLess(estimate.p_L, 0.01)

    def test_rate_grows_with_failure_probability(self):
        low = DecoderService.logical_error_rate(
            CircuitService.build_memory_experiment(3, noise=CircuitNoise(p_F=0.02)),
            1500,
            seed=3,
            workers=1,
        )
        high = DecoderService.logical_error_rate(
            CircuitService.build_memory_experiment(3, noise=CircuitNoise(p_F=0.2)),
            1500,
            seed=3,
            workers=1,
        )
        self.assertLess(low.p_L, high.p_L)
        self.assertGreater(high.stderr, 0.0)

    def test_heralds_help(self):
        circuit = CircuitService.build_memory_experiment(3, noise=CircuitNoise(p_F=0.08))
        heralded = DecoderService.logical_error_rate(circuit, 3000, seed=4, workers=1)
        blind = DecoderService.logical_error_rate(circuit, 3000, seed=4, workers=1, use_heralds=False)
        self.assertLess(heralded.errors, blind.errors)

    def test_x_basis_memory(self):
        circuit = CircuitService.build_memory_experiment(3, basis="X", noise=CircuitNoise(p_F=0.01))
        estimate = DecoderService.logical_error_rate(circuit, 500, seed=5, workers=1)
        self.assertLess(estimate.p_L, 0.05)
