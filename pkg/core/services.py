import logging
import subprocess
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml
from django.conf import settings
from rest_framework import serializers
from rest_framework.renderers import JSONRenderer

from .serializers import RunConfigSerializer

logger = logging.getLogger(__name__)


class SeedService:
    """Service class for deterministic random streams."""

    @staticmethod
    def derive_seed(master_seed, *keys):
        """
        Derive an independent integer seed from a master seed and a key path.

        Args:
            master_seed: Non-negative integer seed given by the user
            keys: Non-negative integers identifying the sub-stream (distance,
                sweep point index, ...)

        Returns:
            int: A 63-bit seed that depends only on the arguments
        """
        state = np.random.SeedSequence([int(master_seed), *map(int, keys)])
        return int(state.generate_state(1, np.uint64)[0] >> np.uint64(1))

    @staticmethod
    def generator(seed, *keys):
        """Return a counter-based Philox generator for ``(seed, *keys)``."""
        sequence = np.random.SeedSequence([int(seed), *map(int, keys)])
        return np.random.Generator(np.random.Philox(sequence))


class WorkerPoolService:
    """Service class for order-preserving parallel maps."""

    @staticmethod
    def default_workers():
        return max(1, int(settings.SPOQC["WORKERS"]))

    @staticmethod
    def map_ordered(func, items, workers=None):
        """
        Apply ``func`` to every item, possibly in worker processes.

        Results come back in input order regardless of completion order, so
        callers merge deterministically by index.

        Args:
            func: Picklable top-level callable
            items: Iterable of picklable arguments
            workers: Process count; ``None`` uses the configured default

        Returns:
            list: ``[func(item) for item in items]``
        """
        items = list(items)
        if workers is None:
            workers = WorkerPoolService.default_workers()
        workers = min(int(workers), len(items))
        if workers <= 1:
            return [func(item) for item in items]
        logger.debug("Dispatching %d jobs to %d workers", len(items), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))


def to_builtin(value):
    """Recursively convert numpy scalars/arrays and tuples into JSON types."""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class OutputService:
    """Service class for writing experiment artefacts."""

    @staticmethod
    def render_json(data):
        """Render ``data`` as indented JSON bytes with a trailing newline."""
        rendered = JSONRenderer().render(
            to_builtin(data), renderer_context={"indent": 2}
        )
        return rendered + b"\n"

    @staticmethod
    def write_json(data, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(OutputService.render_json(data))
        logger.info("Wrote %s", path)
        return path

    @staticmethod
    def write_csv(frame, path):
        """
        Write a pandas DataFrame as CSV with a fixed float format.

        Args:
            frame: DataFrame whose column order is the documented one
            path: Destination file

        Returns:
            Path: The written path
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
        logger.info("Wrote %s (%d rows)", path, len(frame))
        return path

    @staticmethod
    def git_describe():
        """Return ``git describe`` of the source tree, or ``"unknown"``."""
        try:
            result = subprocess.run(
                ["git", "describe", "--always", "--dirty", "--tags"],
                cwd=settings.BASE_DIR,
                capture_output=True,
                text=True,
                check=True,
                timeout=10,
            )
        except (OSError, subprocess.SubprocessError):
            return "unknown"
        return result.stdout.strip() or "unknown"


class RunConfigService:
    """Service class for loading, merging and echoing run configurations."""

    @staticmethod
    def load_file(path):
        """
        Read a YAML (or JSON) run configuration file.

        Args:
            path: Path to the configuration file

        Returns:
            dict: The parsed mapping

        Raises:
            serializers.ValidationError: If the file is unreadable or not a mapping
        """
        try:
            payload = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise serializers.ValidationError(f"Cannot read config {path}: {exc}")
        except yaml.YAMLError as exc:
            raise serializers.ValidationError(f"Malformed config {path}: {exc}")
        if payload is None:
            return {}
        if not isinstance(payload, dict):
            raise serializers.ValidationError("A run configuration must be a mapping")
        return payload

    @staticmethod
    def merge(base, overrides):
        """Deep-merge ``overrides`` into a copy of ``base``; ``None`` values are skipped."""
        merged = dict(base)
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = RunConfigService.merge(merged[key], value)
            elif isinstance(value, dict):
                merged[key] = RunConfigService.merge({}, value)
            else:
                merged[key] = value
        return merged

    @staticmethod
    def resolve(path=None, overrides=None, command=""):
        """
        Build the fully resolved configuration for a command run.

        Args:
            path: Optional config file; flag overrides win over its values
            overrides: Nested mapping of flag values (``None`` means unset)
            command: Name of the running command, echoed into outputs

        Returns:
            dict: Validated configuration with every default filled in
        """
        payload = RunConfigService.load_file(path) if path else {}
        payload = RunConfigService.merge(payload, overrides or {})
        if command:
            payload["command"] = command
        for section in RunConfigSerializer.SECTIONS:
            if payload.get(section) is None:
                payload[section] = {}
        serializer = RunConfigSerializer(data=payload)
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    @staticmethod
    def echo(config):
        """Return the JSON-ready echo of a resolved configuration."""
        return to_builtin(RunConfigSerializer(config).data)
