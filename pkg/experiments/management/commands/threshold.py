from core.commands import SpoqcCommand, parse_float_list
from core.services import OutputService
from decoding.services import DecoderService

from ...services import ThresholdService


def herald_blind_evaluator(circuit, shots, seed, workers=None):
    return DecoderService.logical_error_rate(circuit, shots, seed, workers=workers, use_heralds=False)


class Command(SpoqcCommand):
    help = "Sweep one noise axis over several distances and locate the threshold crossing."

    sampling = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_code_arguments(parser)
        self.add_noise_arguments(parser)
        parser.add_argument(
            "--axis", choices=["p_F", "t_rus_over_T2", "D", "epsilon", "w"], help="Swept axis"
        )
        parser.add_argument("--min", type=float, help="Smallest axis value")
        parser.add_argument("--max", type=float, help="Largest axis value")
        parser.add_argument("--points", type=int, help="Number of sweep points")
        parser.add_argument("--values", type=parse_float_list, help="Explicit axis values")
        parser.add_argument(
            "--no-heralds",
            action="store_true",
            help="Decode without per-shot herald information",
        )
        self.add_output_arguments(parser)

    def overrides(self, options):
        return {
            **super().overrides(options),
            "code": self.code_overrides(options),
            "noise": self.noise_overrides(options),
            "sweep": {
                "axis": options.get("axis"),
                "min": options.get("min"),
                "max": options.get("max"),
                "points": options.get("points"),
                "values": options.get("values"),
                "heralds": False if options.get("no_heralds") else None,
            },
            "output": self.output_overrides(options),
        }

    def run(self, config, options):
        spec = ThresholdService.sweep_spec(config)
        scan = ThresholdService.threshold_scan(
            spec,
            config["noise"],
            workers=config["workers"],
            evaluator=None if config["sweep"]["heralds"] else herald_blind_evaluator,
        )
        output = config["output"]
        if output["csv"]:
            OutputService.write_csv(scan.curves, output["csv"])
        for pair in scan.pairs:
            self.stderr.write(f"d={pair.distances}: {pair.as_dict()['status']} {pair.crossing}")
        self.emit_json(
            self.summary(
                config,
                axis=scan.axis,
                values=list(spec.values),
                pairs=[pair.as_dict() for pair in scan.pairs],
                threshold=scan.pooled.as_dict(),
                curves=scan.curves.to_dict(orient="records"),
            ),
            output["json"],
        )
