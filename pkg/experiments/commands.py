"""Shared surface of the trade-off commands."""

import numpy as np

from core.commands import SpoqcCommand, parse_int_list
from core.services import OutputService

from .services import SurfaceService, TradeoffService


class TradeoffCommand(SpoqcCommand):
    """Trade-off command over a loss grid and a border ``t_th(p_F)``."""

    photon_counts = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--k-values", type=parse_int_list, help="Trial budgets, e.g. 1,2,3")
        if self.photon_counts:
            parser.add_argument("--n-values", type=parse_int_list, help="Photons per trial")
        parser.add_argument("--loss-min", type=float)
        parser.add_argument("--loss-max", type=float)
        parser.add_argument("--loss-points", type=int)
        parser.add_argument("--border", choices=["line", "surface"])
        parser.add_argument("--surface", help="ft_surface JSON output for a surface border")
        self.add_output_arguments(parser)

    def overrides(self, options):
        return {
            "tradeoff": {
                "k_values": options.get("k_values"),
                "n_values": options.get("n_values"),
                "loss_min": options.get("loss_min"),
                "loss_max": options.get("loss_max"),
                "loss_points": options.get("loss_points"),
                "border": options.get("border"),
                "surface": options.get("surface"),
            },
            "output": self.output_overrides(options),
        }

    def border(self, config):
        section = config["tradeoff"]
        if section["border"] == "surface":
            return SurfaceService.load_border(section["surface"])
        return SurfaceService.line_border(config["ft_surface"]["thresholds"])

    def compute(self, section, losses, border):
        raise NotImplementedError("subclasses of TradeoffCommand must provide a compute() method")

    def run(self, config, options):
        section = config["tradeoff"]
        losses = np.linspace(section["loss_min"], section["loss_max"], section["loss_points"])
        border = self.border(config)
        curve = self.compute(section, losses, border)
        intercepts = TradeoffService.summary(curve, section["k_values"])
        output = config["output"]
        if output["csv"]:
            OutputService.write_csv(curve.curves, output["csv"])
        for n, values in intercepts.items():
            self.stderr.write(
                f"n={n}: loss intercept {values['loss_intercept']:.4%}, "
                f"t_trial intercept {values['t_trial_intercept']:.4%} of T2 "
                f"(k={values['k_at_zero_loss']})"
            )
        self.emit_json(
            self.summary(
                config,
                border=border.as_dict(),
                intercepts=intercepts,
                envelope=curve.envelope.astype(object)
                .where(curve.envelope.notna(), None)
                .to_dict(orient="records"),
            ),
            output["json"],
        )
