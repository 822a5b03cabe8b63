from core.commands import SpoqcCommand, parse_int_list
from core.exceptions import DomainError
from core.services import OutputService

from ...services import SurfaceService
from ...sweeps import FtSurfaceSpec


class Command(SpoqcCommand):
    help = "Scan the fault-tolerance surface in the (p_F, t_rus/T2, D) octant."

    sampling = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--points", type=int, help="Tessellation points (triangular number)")
        parser.add_argument("--w-min", type=float)
        parser.add_argument("--w-max", type=float)
        parser.add_argument("--w-steps", type=int, help="Equally spaced w values per direction")
        parser.add_argument("--distances", type=parse_int_list, help="Two distances, e.g. 9,11")
        parser.add_argument("--basis", choices=["Z", "X"])
        self.add_output_arguments(parser)

    def overrides(self, options):
        return {
            **super().overrides(options),
            "code": {"basis": options.get("basis")},
            "ft_surface": {
                "points": options.get("points"),
                "w_min": options.get("w_min"),
                "w_max": options.get("w_max"),
                "w_steps": options.get("w_steps"),
                "distances": options.get("distances"),
            },
            "output": self.output_overrides(options),
        }

    def run(self, config, options):
        section = config["ft_surface"]
        thresholds = section["thresholds"]
        spec = FtSurfaceSpec(
            thresholds=(thresholds["p_F"], thresholds["t_rus_over_T2"], thresholds["D"]),
            points=section["points"],
            w_min=section["w_min"],
            w_max=section["w_max"],
            w_steps=section["w_steps"],
            distances=tuple(section["distances"]),
        )
        surface = SurfaceService.ft_surface(
            spec,
            config["shots"],
            config["seed"],
            basis=config["code"]["basis"],
            workers=config["workers"],
        )
        output = config["output"]
        if output["csv"]:
            OutputService.write_csv(surface.scan, output["csv"])
        unbracketed = [point.index for point in surface.points if not point.bracketed]
        if unbracketed:
            self.stderr.write(f"Not bracketed by the w range: {unbracketed}")
        try:
            border = SurfaceService.border_from_surface(surface).as_dict()
        except DomainError as exc:
            self.stderr.write(f"No border at D = 0: {exc}")
            border = None
        self.emit_json(
            self.summary(
                config,
                points=[point.as_dict() for point in surface.points],
                unbracketed=unbracketed,
                border=border,
            ),
            output["json"],
        )
