from dataclasses import asdict

from core.commands import SpoqcCommand, parse_float_list
from core.exceptions import OpticsError

from ...services import OpticsService


class Command(SpoqcCommand):
    help = (
        "Derive the RUS detection table, the tableau transformations and the "
        "distinguishability channel from the Fock-space oracle."
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--eta-a", type=float, default=1.0)
        parser.add_argument("--eta-b", type=float, default=1.0)
        parser.add_argument(
            "--distinguishability",
            default="0,0.3,1",
            help="Comma-separated D values to check",
        )
        parser.add_argument("--tolerance", type=float)
        parser.add_argument("--output", help="Write the reports as JSON here")

    def write_rows(self, title, report):
        self.stdout.write(title)
        self.stdout.write(
            f"{'pattern':<24}{'probability':>14}{'expected':>14}  {'correction':<8}{'gate':<14}{'deviation':>11}"
        )
        for row in report.rows:
            self.stdout.write(
                f"{row.pattern:<24}{row.probability:>14.10f}{row.expected_probability:>14.10f}"
                f"  {row.correction:<8}{row.gate:<14}{row.deviation:>11.2e}"
            )
        for issue in report.issues:
            self.stdout.write(f"  ! {issue}")

    def run(self, config, options):
        tolerance = options.get("tolerance")
        reports = {
            "table": OpticsService.verify_table1(options["eta_a"], options["eta_b"], tolerance),
            "tableau": OpticsService.tableau_check(tolerance),
        }
        for D in parse_float_list(options["distinguishability"]):
            reports[f"distinguishability D={D:g}"] = OpticsService.verify_distinguishability(
                D, tolerance
            )

        for name, report in reports.items():
            self.write_rows(name, report)
        worst = max(report.max_deviation for report in reports.values())
        self.stdout.write(f"max deviation {worst:.3e}")

        if options.get("output"):
            self.emit_json(
                self.summary(
                    config,
                    max_deviation=worst,
                    reports={
                        name: {
                            "passed": report.passed,
                            "issues": list(report.issues),
                            "rows": [asdict(row) for row in report.rows],
                        }
                        for name, report in reports.items()
                    },
                ),
                options["output"],
            )
        failed = [name for name, report in reports.items() if not report.passed]
        if failed:
            raise OpticsError(f"Oracle deviation above tolerance in: {', '.join(failed)}")
