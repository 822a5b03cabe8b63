"""Base class shared by every simulator management command."""

import logging
import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from .exceptions import SpoqcError
from .services import OutputService, RunConfigService

logger = logging.getLogger(__name__)

VERBOSITY_LEVELS = {0: logging.WARNING, 2: logging.DEBUG, 3: logging.DEBUG}


def parse_int_list(text):
    """Parse ``"3,5,7"`` into ``[3, 5, 7]``."""
    return [int(item) for item in text.split(",") if item.strip()]


def parse_float_list(text):
    return [float(item) for item in text.split(",") if item.strip()]


class SpoqcCommand(BaseCommand):
    """
    Management command with run-config loading and exit-code mapping.

    Subclasses implement ``overrides(options)`` (flag values as a nested
    config mapping) and ``run(config, options)``. Validation problems exit
    with status 1, simulation errors with status 2.
    """

    requires_system_checks = []
    requires_migrations_checks = False
    sampling = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(1, f"{parser.prog}: error: {message}\n")
            raise CommandError(f"Error: {message}", returncode=1)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        parser.add_argument("--config", help="YAML or JSON run configuration file")
        if self.sampling:
            parser.add_argument("--seed", type=int, help="Master seed")
            parser.add_argument("--shots", type=int, help="Shots per sweep point")
            parser.add_argument(
                "--workers",
                type=int,
                help="Worker processes (default: SPOQC_WORKERS or all cores)",
            )

    def overrides(self, options):
        if not self.sampling:
            return {}
        return {
            "seed": options.get("seed"),
            "shots": options.get("shots"),
            "workers": options.get("workers"),
        }

    def run(self, config, options):
        raise NotImplementedError("subclasses of SpoqcCommand must provide a run() method")

    def configure_logging(self, verbosity):
        level = VERBOSITY_LEVELS.get(verbosity)
        if level is None:
            return
        for name in settings.LOGGING.get("loggers", {}):
            logging.getLogger(name).setLevel(level)

    def handle(self, *args, **options):
        self.configure_logging(options.get("verbosity", 1))
        try:
            config = RunConfigService.resolve(
                options.get("config"), self.overrides(options), command=self.command_name
            )
            return self.run(config, options)
        except serializers.ValidationError as exc:
            raise CommandError(f"Invalid configuration: {exc.detail}", returncode=1)
        except SpoqcError as exc:
            logger.debug("Simulation error", exc_info=True)
            raise CommandError(str(exc), returncode=2)
        except CommandError:
            raise
        except Exception as exc:
            logger.exception("Unexpected failure in %s", self.command_name)
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=2)

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def summary(self, config, **results):
        """Assemble the JSON summary common to every experiment output."""
        return {
            "command": self.command_name,
            "seed": config["seed"],
            "git_describe": OutputService.git_describe(),
            "config": RunConfigService.echo(config),
            **results,
        }

    def emit_json(self, payload, path=None):
        """Write ``payload`` to ``path`` or print it to stdout."""
        if path:
            OutputService.write_json(payload, path)
        else:
            self.stdout.write(OutputService.render_json(payload).decode(), ending="")

    def add_code_arguments(self, parser):
        parser.add_argument("--distances", type=parse_int_list, help="Odd distances, e.g. 3,5,7")
        parser.add_argument("--rounds", type=int, help="Syndrome rounds (default: d)")
        parser.add_argument("--basis", choices=["Z", "X"], help="Memory basis")

    def add_noise_arguments(self, parser):
        parser.add_argument("--p-F", dest="p_F", type=float, help="RUS gate failure probability")
        parser.add_argument("--epsilon", type=float, help="Single-photon loss")
        parser.add_argument("--k", help="Trial budget (integer or inf)")
        parser.add_argument("--n", type=int, help="Photons per trial")
        parser.add_argument("--D", dest="D", type=float, help="Photon distinguishability")
        parser.add_argument("--t-trial", dest="t_trial_over_T2", type=float, help="Trial time over T2")
        parser.add_argument("--t-rus", dest="t_rus_over_T2", type=float, help="Gate duration over T2")
        parser.add_argument("--t-rus-T1", dest="t_rus_over_T1", type=float, help="Gate duration over T1")

    def add_output_arguments(self, parser):
        parser.add_argument("--csv", help="Write the CSV table here")
        parser.add_argument("--json", help="Write the JSON summary here (default: stdout)")

    @staticmethod
    def code_overrides(options):
        return {
            "distances": options.get("distances"),
            "rounds": options.get("rounds"),
            "basis": options.get("basis"),
        }

    @staticmethod
    def noise_overrides(options):
        keys = ("p_F", "epsilon", "k", "n", "D", "t_trial_over_T2", "t_rus_over_T2", "t_rus_over_T1")
        return {key: options.get(key) for key in keys}

    @staticmethod
    def output_overrides(options):
        return {"csv": options.get("csv"), "json": options.get("json")}
