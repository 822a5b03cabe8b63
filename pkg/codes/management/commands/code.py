import json
from pathlib import Path

from rest_framework import serializers

from core.commands import SpoqcCommand
from core.services import OutputService

from ...serializers import LayoutParamsSerializer, TannerGraphSerializer
from ...services import CodeService


class Command(SpoqcCommand):
    help = "Build or load a Tanner graph, validate it and write its JSON form."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--distance", type=int, help="Rotated surface code distance")
        parser.add_argument("--input", help="Tanner graph JSON file to validate")
        parser.add_argument("--max-degree", type=int, default=4)
        parser.add_argument("--output", help="Write the graph JSON here")
        layout = parser.add_argument_group("module layout")
        layout.add_argument("--module-volume", type=float, help="Footprint V of one qubit module")
        layout.add_argument("--attenuation-length", type=float, help="Channel attenuation length")
        layout.add_argument("--dimension", type=int, default=2, help="Spatial dimensions used")
        layout.add_argument("--qubit-count", type=int, help="Qubits N (default: graph vertices)")
        layout.add_argument("--trials", type=int, default=1, help="RUS trial budget k")
        layout.add_argument(
            "--loss-threshold", type=float, help="Report whether link loss stays below this"
        )

    def overrides(self, options):
        distance = options.get("distance")
        return {"code": {"distances": [distance] if distance else None}}

    def run(self, config, options):
        if options.get("input"):
            try:
                payload = json.loads(Path(options["input"]).read_text())
            except (OSError, ValueError) as exc:
                raise serializers.ValidationError(f"Cannot read graph: {exc}")
            serializer = TannerGraphSerializer(data=payload)
            serializer.is_valid(raise_exception=True)
            graph, logicals, params = serializer.save(), None, None
        else:
            code = CodeService.build_rotated_surface_code(config["code"]["distances"][0])
            graph, logicals, params = code.graph, code.logicals, code.params

        report = CodeService.validate_ldpc(graph, options["max_degree"])
        fanout = CodeService.router_fanout(graph)
        violations = CodeService.commutation_violations(graph, logicals)
        result = {
            "graph": graph.to_json(),
            "validation": {
                "passed": report.passed and not violations,
                "issues": report.issues
                + [f"{a} anticommutes with {b}" for a, b in violations],
                "max_fanout": max(fanout.values(), default=0),
            },
        }
        if params is not None:
            result["params"] = {"n": params.n, "k": params.k, "d": params.d}
            result["logicals"] = {
                "z_support": sorted(logicals.z_support),
                "x_support": sorted(logicals.x_support),
            }

        if options.get("module_volume") is not None:
            result["layout"] = self.layout(graph, options)

        self.stderr.write(
            f"{len(graph.data_vertices)} data, {len(graph.check_vertices)} checks, "
            f"{len(graph.edges)} edges, max fanout {result['validation']['max_fanout']}: "
            + ("valid" if result["validation"]["passed"] else "INVALID")
        )
        if options.get("output"):
            OutputService.write_json(result, options["output"])
        else:
            self.emit_json(result)
        if not result["validation"]["passed"]:
            raise serializers.ValidationError(result["validation"]["issues"])

    def layout(self, graph, options):
        serializer = LayoutParamsSerializer(
            data={
                "module_volume": options["module_volume"],
                "attenuation_length": options.get("attenuation_length"),
                "dimension": options["dimension"],
                "qubit_count": options.get("qubit_count")
                or len(graph.data_vertices) + len(graph.check_vertices),
                "trials": options["trials"],
            }
        )
        serializer.is_valid(raise_exception=True)
        overhead = CodeService.layout_overhead(serializer.save())
        layout = {
            **serializer.data,
            "loss_estimate": overhead.loss_estimate,
            "latency_estimate": overhead.latency_estimate,
        }
        threshold = options.get("loss_threshold")
        if threshold is not None:
            layout["loss_threshold"] = threshold
            layout["within_loss_budget"] = overhead.within_loss_budget(threshold)
        return layout
