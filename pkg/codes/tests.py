import json
import math
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import CodeConstructionError, DomainError

from .graphs import CheckKind, LayoutParams, TannerGraph
from .serializers import LayoutParamsSerializer, TannerGraphSerializer
from .services import CodeService


class RotatedSurfaceCodeTests(SimpleTestCase):
    def test_distance_three_counts(self):
        code = CodeService.build_rotated_surface_code(3)
        graph = code.graph
        self.assertEqual(len(graph.data_vertices), 9)
        self.assertEqual(len(graph.checks_of_kind(CheckKind.X)), 4)
        self.assertEqual(len(graph.checks_of_kind(CheckKind.Z)), 4)
        self.assertEqual((code.params.n, code.params.k, code.params.d), (9, 1, 3))
        self.assertEqual(max(CodeService.router_fanout(graph).values()), 4)

    def test_distance_five_counts(self):
        graph = CodeService.build_rotated_surface_code(5).graph
        self.assertEqual(len(graph.data_vertices), 25)
        self.assertEqual(len(graph.check_vertices), 24)
        self.assertTrue(all(v <= 4 for v in CodeService.router_fanout(graph).values()))

    def test_check_weights_and_edge_count(self):
        for d in (3, 5, 7):
            with self.subTest(d=d):
                graph = CodeService.build_rotated_surface_code(d).graph
                weights = sorted(graph.degree(c) for c, _ in graph.check_vertices)
                self.assertEqual(set(weights), {2, 4})
                self.assertEqual(weights.count(2), 2 * (d - 1))
                self.assertEqual(len(graph.edges), 4 * d * (d - 1))

    def test_rejects_bad_distances(self):
        for d in (1, 2, 4, 0, -3):
            with self.subTest(d=d), self.assertRaises(CodeConstructionError):
                CodeService.build_rotated_surface_code(d)

    def test_logical_supports(self):
        for d in (3, 5, 7, 9, 11, 13):
            with self.subTest(d=d):
                code = CodeService.build_rotated_surface_code(d)
                z_support, x_support = code.logicals.z_support, code.logicals.x_support
                self.assertEqual(len(z_support), d)
                self.assertEqual(len(x_support), d)
                self.assertEqual(len(z_support & x_support), 1)

    def test_stabilizers_commute_and_pass_ldpc(self):
        for d in (3, 5, 7, 9, 11, 13):
            with self.subTest(d=d):
                code = CodeService.build_rotated_surface_code(d)
                self.assertTrue(CodeService.validate_ldpc(code.graph, 4).passed)
                self.assertEqual(
                    CodeService.commutation_violations(code.graph, code.logicals), []
                )

    def test_corner_and_bulk_fanout(self):
        graph = CodeService.build_rotated_surface_code(3).graph
        fanout = CodeService.router_fanout(graph)
        corners = {0, 2, 6, 8}
        self.assertEqual({fanout[q] for q in corners}, {2})
        self.assertEqual(fanout[4], 4)


class LdpcValidationTests(SimpleTestCase):
    def test_empty_graph_passes(self):
        self.assertTrue(CodeService.validate_ldpc(TannerGraph((), (), ()), 4).passed)

    def test_over_degree_check_is_listed(self):
        graph = TannerGraph(
            tuple(range(5)),
            ((5, CheckKind.Z),),
            tuple((q, 5, "Z") for q in range(5)),
        )
        report = CodeService.validate_ldpc(graph, 4)
        self.assertFalse(report.passed)
        self.assertEqual(report.over_degree, ((5, 5),))

    def test_disconnected_data_and_mixed_check(self):
        graph = TannerGraph((0, 1, 2), ((3, CheckKind.MIXED),), ((0, 3, "X"), (1, 3, "Y")))
        report = CodeService.validate_ldpc(graph, 4)
        self.assertEqual(report.non_css_checks, (3,))
        self.assertEqual(report.disconnected_data, (2,))

    def test_graph_invariants_enforced(self):
        with self.assertRaises(CodeConstructionError):
            TannerGraph((0,), ((1, "Z"),), ((0, 1, "Z"), (0, 1, "Z")))
        with self.assertRaises(CodeConstructionError):
            TannerGraph((0,), ((1, "Z"),), ((0, 1, "X"),))
        with self.assertRaises(CodeConstructionError):
            TannerGraph((0, 1), ((2, "Z"),), ((0, 1, "Z"),))


class CssSubgraphTests(SimpleTestCase):
    def test_partition_of_rotated_code(self):
        graph = CodeService.build_rotated_surface_code(3).graph
        g_x, g_z = CodeService.css_subgraphs(graph)
        self.assertEqual(len(g_x.check_vertices), 4)
        self.assertEqual(len(g_z.check_vertices), 4)
        self.assertEqual(len(g_x.edges) + len(g_z.edges), len(graph.edges))
        self.assertEqual(set(g_x.edges) | set(g_z.edges), set(graph.edges))
        self.assertEqual(g_x.data_vertices, graph.data_vertices)

    def test_y_edge_rejected(self):
        graph = TannerGraph((0,), ((1, CheckKind.MIXED),), ((0, 1, "Y"),))
        with self.assertRaises(CodeConstructionError):
            CodeService.css_subgraphs(graph)

    def test_only_z_checks(self):
        graph = TannerGraph((0, 1), ((2, CheckKind.Z),), ((0, 2, "Z"), (1, 2, "Z")))
        g_x, g_z = CodeService.css_subgraphs(graph)
        self.assertEqual(g_x.check_vertices, ())
        self.assertEqual(len(g_z.edges), 2)

    def test_isolated_vertex_fanout(self):
        self.assertEqual(CodeService.router_fanout(TannerGraph((0,), (), ())), {0: 0})


class LayoutOverheadTests(SimpleTestCase):
    def test_infinite_attenuation_length(self):
        overhead = CodeService.layout_overhead(LayoutParams(1.0, math.inf, 2, 100, 4))
        self.assertEqual(overhead.loss_estimate, 0.0)

    def test_single_module_loss(self):
        overhead = CodeService.layout_overhead(LayoutParams(8.0, 2.0, 3, 1, 1))
        self.assertAlmostEqual(overhead.loss_estimate, 1 - math.exp(-1), places=12)
        self.assertTrue(overhead.within_loss_budget(0.7))
        self.assertFalse(overhead.within_loss_budget(0.5))

    def test_latency_linear_in_trials(self):
        one = CodeService.layout_overhead(LayoutParams(1.0, 10.0, 2, 64, 3))
        two = CodeService.layout_overhead(LayoutParams(1.0, 10.0, 2, 64, 6))
        self.assertAlmostEqual(two.latency_estimate, 2 * one.latency_estimate)

    def test_nonpositive_parameters_rejected(self):
        for kwargs in (
            dict(module_volume=0.0, attenuation_length=1.0, dimension=2, qubit_count=1, trials=1),
            dict(module_volume=1.0, attenuation_length=1.0, dimension=4, qubit_count=1, trials=1),
            dict(module_volume=1.0, attenuation_length=1.0, dimension=2, qubit_count=1, trials=0),
        ):
            with self.subTest(**kwargs), self.assertRaises(DomainError):
                LayoutParams(**kwargs)


class TannerGraphJsonTests(SimpleTestCase):
    def test_json_form_loads_back(self):
        graph = CodeService.build_rotated_surface_code(3).graph
        payload = json.loads(json.dumps(graph.to_json()))
        serializer = TannerGraphSerializer(data=payload)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        loaded = serializer.save()
        self.assertEqual(loaded, graph)
        self.assertEqual(loaded.coords, graph.coords)

    def test_invalid_label_rejected(self):
        payload = {"data": [0], "checks": [{"id": 1, "kind": "Z"}], "edges": [[0, 1, "W"]]}
        self.assertFalse(TannerGraphSerializer(data=payload).is_valid())


class CodeCommandTests(SimpleTestCase):
    def test_builds_and_prints_graph(self):
        out, err = StringIO(), StringIO()
        call_command("code", "--distance", "3", stdout=out, stderr=err)
        result = json.loads(out.getvalue())
        self.assertTrue(result["validation"]["passed"])
        self.assertEqual(result["params"], {"n": 9, "k": 1, "d": 3})
        self.assertIn("valid", err.getvalue())

    def test_layout_overhead_of_built_code(self):
        out = StringIO()
        call_command(
            "code",
            "--distance", "3",
            "--module-volume", "8",
            "--attenuation-length", "2",
            "--dimension", "3",
            "--trials", "2",
            "--loss-threshold", "0.7",
            stdout=out,
            stderr=StringIO(),
        )
        layout = json.loads(out.getvalue())["layout"]
        span = 17 ** (1 / 3)
        self.assertEqual(layout["qubit_count"], 17)
        self.assertAlmostEqual(layout["loss_estimate"], 1 - math.exp(-span), places=12)
        self.assertAlmostEqual(layout["latency_estimate"], 2 * span, places=12)
        self.assertFalse(layout["within_loss_budget"])

    def test_layout_needs_valid_parameters(self):
        for flags in (
            ["--module-volume", "1", "--dimension", "4", "--attenuation-length", "1"],
            ["--module-volume", "1"],
            ["--module-volume", "0", "--attenuation-length", "1"],
        ):
            with self.subTest(flags=flags), self.assertRaises(CommandError) as ctx:
                call_command("code", "--distance", "3", *flags, stdout=StringIO(), stderr=StringIO())
            self.assertEqual(ctx.exception.returncode, 1)

    def test_layout_serializer(self):
        serializer = LayoutParamsSerializer(
            data={
                "module_volume": 1.0,
                "attenuation_length": 10.0,
                "dimension": 2,
                "qubit_count": 64,
                "trials": 3,
            }
        )
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save(), LayoutParams(1.0, 10.0, 2, 64, 3))

    def test_even_distance_is_validation_error(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("code", "--distance", "4", stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)
