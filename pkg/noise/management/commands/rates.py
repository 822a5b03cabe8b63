import math

from core.commands import SpoqcCommand, parse_int_list
from core.serializers import TrialBudgetField

from ...services import RateService

COLUMNS = ("n", "k", "P_s", "P_f", "P_a", "P_f+P_a")


def parse_budgets(text):
    field = TrialBudgetField()
    return [field.run_validation(item.strip()) for item in text.split(",") if item.strip()]


class Command(SpoqcCommand):
    help = "Print total success, failure and abort rates of RUS and hybrid RUS gates."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--eta", type=float, help="Transmission of both photons")
        parser.add_argument("--eta-a", type=float)
        parser.add_argument("--eta-b", type=float)
        parser.add_argument("--k", help="Trial budgets, e.g. 1,2,3 or inf")
        parser.add_argument("--n", help="Photons per trial, e.g. 1,2,3")
        parser.add_argument("--output", help="Write the table as JSON here")

    def overrides(self, options):
        epsilon = None if options.get("eta") is None else 1.0 - options["eta"]
        return {"noise": {"epsilon": epsilon}}

    def run(self, config, options):
        noise = config["noise"]
        default_eta = 1.0 - (noise["epsilon"] or 0.0)
        eta_a = options["eta_a"] if options.get("eta_a") is not None else default_eta
        eta_b = options["eta_b"] if options.get("eta_b") is not None else default_eta
        budgets = parse_budgets(options["k"]) if options.get("k") else [noise["k"]]
        photons = parse_int_list(options["n"]) if options.get("n") else [noise["n"]]

        rows = []
        for n in photons:
            for k in budgets:
                rates = RateService.hrus_rates(eta_a, eta_b, k, n)
                rows.append(
                    {
                        "n": n,
                        "k": "inf" if math.isinf(k) else k,
                        "P_s": rates.P_s,
                        "P_f": rates.P_f,
                        "P_a": rates.P_a,
                        "P_f+P_a": rates.p_fail,
                    }
                )

        self.stdout.write(f"eta_a={eta_a:g} eta_b={eta_b:g}")
        self.stdout.write("".join(f"{name:>12}" for name in COLUMNS))
        for row in rows:
            self.stdout.write(
                f"{row['n']:>12}{str(row['k']):>12}"
                + "".join(f"{row[name]:>12.6g}" for name in COLUMNS[2:])
            )
        if options.get("output"):
            self.emit_json(
                self.summary(config, eta_a=eta_a, eta_b=eta_b, rows=rows),
                options["output"],
            )
