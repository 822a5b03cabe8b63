import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from rest_framework import serializers

from manage import main

from .commands import parse_float_list, parse_int_list
from .exceptions import CircuitError, CodeConstructionError, DomainError, SpoqcError
from .serializers import NoiseSectionSerializer, TrialBudgetField
from .services import OutputService, RunConfigService, SeedService, WorkerPoolService, to_builtin


def square(value):
    return value * value


class SeedServiceTests(SimpleTestCase):
    def test_derived_seeds_are_stable_and_distinct(self):
        self.assertEqual(SeedService.derive_seed(1, 3, 0), SeedService.derive_seed(1, 3, 0))
        self.assertNotEqual(SeedService.derive_seed(1, 3, 0), SeedService.derive_seed(1, 3, 1))
        self.assertNotEqual(SeedService.derive_seed(1, 3), SeedService.derive_seed(2, 3))
        self.assertGreaterEqual(SeedService.derive_seed(0), 0)

    def test_generator_streams(self):
        first = SeedService.generator(5, 0).random(4)
        np.testing.assert_array_equal(first, SeedService.generator(5, 0).random(4))
        self.assertFalse(np.array_equal(first, SeedService.generator(5, 1).random(4)))


class WorkerPoolServiceTests(SimpleTestCase):
    def test_serial_and_parallel_agree(self):
        items = list(range(7))
        self.assertEqual(WorkerPoolService.map_ordered(square, items, workers=1), [i * i for i in items])
        self.assertEqual(WorkerPoolService.map_ordered(square, items, workers=3), [i * i for i in items])

    def test_empty_input(self):
        self.assertEqual(WorkerPoolService.map_ordered(square, [], workers=4), [])


class OutputServiceTests(SimpleTestCase):
    def test_json_is_plain_and_stable(self):
        payload = {"a": np.float64(0.5), "b": np.arange(3), "c": math.inf, "d": (np.bool_(True),)}
        self.assertEqual(to_builtin(payload), {"a": 0.5, "b": [0, 1, 2], "c": None, "d": [True]})
        rendered = OutputService.render_json(payload)
        self.assertTrue(rendered.endswith(b"\n"))
        self.assertEqual(json.loads(rendered), {"a": 0.5, "b": [0, 1, 2], "c": None, "d": [True]})

    def test_csv_float_format(self):
        frame = pd.DataFrame([(0.1, 3, 1 / 3)], columns=["x", "d", "p"])
        with tempfile.TemporaryDirectory() as directory:
            path = OutputService.write_csv(frame, Path(directory) / "nested" / "out.csv")
            self.assertEqual(path.read_text(), "x,d,p\n0.1,3,0.3333333333\n")


class RunConfigServiceTests(SimpleTestCase):
    def test_defaults_are_filled(self):
        config = RunConfigService.resolve()
        self.assertEqual(config["code"]["distances"], [3, 5, 7])
        self.assertEqual(config["noise"]["k"], 1)
        self.assertEqual(config["sweep"]["axis"], "p_F")
        self.assertEqual(config["seed"], 0)

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "run.yaml"
            path.write_text("seed: 4\nnoise:\n  p_F: 0.08\n  D: 0.01\ncode:\n  distances: [3, 5]\n")
            config = RunConfigService.resolve(path, {"noise": {"D": 0.02, "p_F": None}, "seed": None})
        self.assertEqual(config["seed"], 4)
        self.assertEqual(config["noise"]["p_F"], 0.08)
        self.assertEqual(config["noise"]["D"], 0.02)
        self.assertEqual(config["code"]["distances"], [3, 5])

    def test_echo_round_trips(self):
        config = RunConfigService.resolve(overrides={"noise": {"k": "inf", "epsilon": 0.01}})
        echo = RunConfigService.echo(config)
        self.assertEqual(echo["noise"]["k"], "inf")
        self.assertEqual(RunConfigService.resolve(overrides=echo)["noise"]["k"], math.inf)

    def test_invalid_files(self):
        with tempfile.TemporaryDirectory() as directory:
            listing = Path(directory) / "list.yaml"
            listing.write_text("- 1\n- 2\n")
            broken = Path(directory) / "broken.yaml"
            broken.write_text("noise: [\n")
            for path in (listing, broken, Path(directory) / "missing.yaml"):
                with self.subTest(path=path.name), self.assertRaises(serializers.ValidationError):
                    RunConfigService.resolve(path)

    def test_merge_skips_unset_values(self):
        merged = RunConfigService.merge({"a": 1, "b": {"c": 2}}, {"a": None, "b": {"c": 3, "d": None}})
        self.assertEqual(merged, {"a": 1, "b": {"c": 3}})


class SerializerTests(SimpleTestCase):
    def test_trial_budget_field(self):
        field = TrialBudgetField()
        self.assertEqual(field.run_validation("inf"), math.inf)
        self.assertEqual(field.run_validation("7"), 7)
        for bad in ("0", "-1", 2.5, True, "many"):
            with self.subTest(value=bad), self.assertRaises(serializers.ValidationError):
                field.run_validation(bad)

    def test_failure_given_once(self):
        serializer = NoiseSectionSerializer(data={"p_F": 0.1, "epsilon": 0.01})
        self.assertFalse(serializer.is_valid())
        self.assertFalse(NoiseSectionSerializer(data={"p_F": 1.5}).is_valid())

    def test_list_parsers(self):
        self.assertEqual(parse_int_list("3, 5,7,"), [3, 5, 7])
        self.assertEqual(parse_float_list("0.1,0.2"), [0.1, 0.2])


class ExceptionTests(SimpleTestCase):
    def test_hierarchy(self):
        self.assertTrue(issubclass(CodeConstructionError, DomainError))
        self.assertTrue(issubclass(DomainError, ValueError))
        self.assertTrue(issubclass(CircuitError, SpoqcError))
        self.assertFalse(issubclass(CircuitError, DomainError))


class ExitCodeTests(SimpleTestCase):
    def test_validation_error_is_one(self):
        with self.assertRaises(CommandError) as raised:
            call_command("rates", "--k", "0", stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, 1)

    def test_runtime_error_is_two(self):
        with self.assertRaises(CommandError) as raised:
            call_command("rates", "--eta-a", "1.5", stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, 2)

    def test_main_returns_exit_codes(self):
        with tempfile.TemporaryDirectory() as directory:
            output = Path(directory) / "rates.json"
            self.assertEqual(
                main(["manage.py", "rates", "--eta", "1", "--k", "3", "--output", str(output)]), 0
            )
            payload = json.loads(output.read_text())
        self.assertAlmostEqual(payload["rows"][0]["P_f+P_a"], 0.125)
        self.assertEqual(main(["manage.py", "rates", "--no-such-flag"]), 1)
        self.assertEqual(main(["manage.py", "rates", "--eta-b", "-0.5"]), 2)
