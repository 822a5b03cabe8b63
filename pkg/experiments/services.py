import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from scipy.optimize import brentq

from circuits.operations import CircuitNoise
from circuits.services import CircuitService
from core.exceptions import DomainError
from core.services import SeedService
from decoding.services import DecoderService
from noise.services import RateService

from .sweeps import (
    CURVE_COLUMNS,
    Border,
    FtSurface,
    FtSurfacePoint,
    SweepAxis,
    SweepSpec,
    ThresholdEstimate,
    ThresholdScan,
    TradeoffCurve,
)

logger = logging.getLogger(__name__)

FIT_HALF_WINDOW = 2
NOISE_KEYS = {
    SweepAxis.P_F: "p_F",
    SweepAxis.T_RUS: "t_rus_over_T2",
    SweepAxis.D: "D",
    SweepAxis.EPSILON: "epsilon",
}


def default_evaluator(circuit, shots, seed, workers=None):
    return DecoderService.logical_error_rate(circuit, shots, seed, workers=workers)


def _log_rate(errors, shots):
    return np.log((np.asarray(errors, dtype=float) + 0.5) / (np.asarray(shots, dtype=float) + 1.0))


class EstimatorService:
    """Service class for locating crossings of logical error curves."""

    @staticmethod
    def pair_crossing(values, errors_small, shots_small, errors_large, shots_large):
        """
        Crossing of the curves of a smaller and a larger distance.

        Log rates are fitted linearly against log values over a few points
        around the first sign change of their difference.

        Returns:
            float: The crossing, or ``None`` without a sign change or when
            the fit leaves the swept range
        """
        x = np.log(np.asarray(values, dtype=float))
        small = _log_rate(errors_small, shots_small)
        large = _log_rate(errors_large, shots_large)
        difference = large - small
        changes = np.flatnonzero((difference[:-1] <= 0) & (difference[1:] > 0))
        if not len(changes):
            return None
        i = int(changes[0])
        window = slice(max(i - FIT_HALF_WINDOW + 1, 0), min(i + FIT_HALF_WINDOW + 1, len(x)))
        slope_small, intercept_small = np.polyfit(x[window], small[window], 1)
        slope_large, intercept_large = np.polyfit(x[window], large[window], 1)
        crossing = None
        if not math.isclose(slope_small, slope_large):
            crossing = (intercept_small - intercept_large) / (slope_large - slope_small)
        if crossing is None or not x[window][0] <= crossing <= x[window][-1]:
            # Linear interpolation of the difference inside the bracket.
            crossing = x[i] - difference[i] * (x[i + 1] - x[i]) / (difference[i + 1] - difference[i])
        value = float(np.exp(crossing))
        return value if values[0] <= value <= values[-1] else None

    @staticmethod
    def bootstrap_crossing(values, small, large, rng, resamples=None):
        """
        Crossing with a parametric bootstrap confidence interval.

        Args:
            values: Ascending axis values
            small: ``(errors, shots)`` arrays of the smaller distance
            large: ``(errors, shots)`` arrays of the larger distance
            rng: numpy Generator
            resamples: Bootstrap resamples (default from settings)

        Returns:
            tuple: ``(crossing, ci_low, ci_high)``; entries are ``None`` when
            unavailable
        """
        if resamples is None:
            resamples = settings.SPOQC["BOOTSTRAP_RESAMPLES"]
        crossing = EstimatorService.pair_crossing(values, *small, *large)
        if crossing is None:
            return None, None, None
        p_small = np.asarray(small[0]) / np.asarray(small[1])
        p_large = np.asarray(large[0]) / np.asarray(large[1])
        estimates = []
        for _ in range(resamples):
            errors_small = rng.binomial(small[1], p_small)
            errors_large = rng.binomial(large[1], p_large)
            estimate = EstimatorService.pair_crossing(
                values, errors_small, small[1], errors_large, large[1]
            )
            if estimate is not None:
                estimates.append(estimate)
        if len(estimates) < max(resamples // 2, 1):
            return crossing, None, None
        low, high = np.percentile(estimates, [2.5, 97.5])
        return crossing, float(low), float(high)

    @staticmethod
    def pooled(estimates):
        """Inverse-variance mean of the pair crossings that were found."""
        found = [e for e in estimates if e.found]
        if not found:
            return ThresholdEstimate(tuple(sorted({d for e in estimates for d in e.distances})))
        distances = tuple(sorted({d for e in found for d in e.distances}))
        with_ci = [e for e in found if e.ci_low is not None and e.ci_high > e.ci_low]
        if len(with_ci) == len(found):
            weights = np.array([((e.ci_high - e.ci_low) / 3.92) ** -2 for e in with_ci])
            crossing = float(np.average([e.crossing for e in with_ci], weights=weights))
            sigma = float(weights.sum() ** -0.5)
            return ThresholdEstimate(distances, crossing, crossing - 1.96 * sigma, crossing + 1.96 * sigma)
        return ThresholdEstimate(distances, float(np.mean([e.crossing for e in found])))


class ThresholdService:
    """Service class for threshold sweeps."""

    @staticmethod
    def noise_at(axis, value, section):
        """
        Circuit noise of one sweep point.

        Args:
            axis: SweepAxis value
            value: Axis value
            section: Validated ``noise`` configuration section for the
                other parameters

        Returns:
            CircuitNoise
        """
        if axis == SweepAxis.W:
            return CircuitNoise.from_config(section).scaled(value)
        section = dict(section)
        if axis == SweepAxis.EPSILON:
            section["p_F"] = None
        elif axis == SweepAxis.P_F:
            section["epsilon"] = None
        section[NOISE_KEYS[axis]] = value
        return CircuitNoise.from_config(section)

    @staticmethod
    def sweep_spec(config):
        """SweepSpec of a resolved run configuration."""
        sweep = config["sweep"]
        values = sweep["values"]
        if values is None:
            low, high = settings.SPOQC["SWEEP_RANGES"][sweep["axis"]]
            low = low if sweep["min"] is None else sweep["min"]
            high = high if sweep["max"] is None else sweep["max"]
            values = np.linspace(low, high, sweep["points"]).tolist()
        return SweepSpec(
            axis=sweep["axis"],
            values=tuple(values),
            distances=tuple(config["code"]["distances"]),
            shots=config["shots"],
            seed=config["seed"],
            basis=config["code"]["basis"],
            rounds=config["code"]["rounds"],
        )

    @staticmethod
    def threshold_scan(spec, section, workers=None, evaluator=None):
        """
        Logical error curves per distance and their crossings.

        Args:
            spec: SweepSpec
            section: Validated ``noise`` section for the fixed axes
            workers: Worker processes used per sweep point
            evaluator: ``(circuit, shots, seed, workers) -> LogicalErrorEstimate``

        Returns:
            ThresholdScan: Curves in the CSV column order, crossings for each
            consecutive distance pair and their pooled value
        """
        evaluator = evaluator or default_evaluator
        rows = []
        for distance in spec.distances:
            for index, value in enumerate(spec.values):
                circuit = CircuitService.build_memory_experiment(
                    distance,
                    basis=spec.basis,
                    rounds=spec.rounds or distance,
                    noise=ThresholdService.noise_at(spec.axis, value, section),
                )
                estimate = evaluator(
                    circuit,
                    spec.shots,
                    SeedService.derive_seed(spec.seed, distance, index),
                    workers,
                )
                rows.append(
                    (value, distance, spec.shots, estimate.errors, estimate.p_L, estimate.stderr)
                )
                logger.info(
                    "%s=%.6g d=%d: %d/%d logical errors",
                    spec.axis,
                    value,
                    distance,
                    estimate.errors,
                    spec.shots,
                )
        curves = pd.DataFrame(rows, columns=CURVE_COLUMNS)
        pairs = []
        for first, second in zip(spec.distances, spec.distances[1:]):
            small = curves[curves["distance"] == first]
            large = curves[curves["distance"] == second]
            rng = SeedService.generator(spec.seed, first, second)
            crossing, low, high = EstimatorService.bootstrap_crossing(
                list(spec.values),
                (small["logical_errors"].to_numpy(), small["shots"].to_numpy()),
                (large["logical_errors"].to_numpy(), large["shots"].to_numpy()),
                rng,
            )
            if crossing is None:
                logger.warning("No crossing of d=%d and d=%d in the swept range", first, second)
            pairs.append(ThresholdEstimate((first, second), crossing, low, high))
        return ThresholdScan(spec.axis, curves, tuple(pairs), EstimatorService.pooled(pairs))


class SurfaceService:
    """Service class for the FT surface and the border derived from it."""

    @staticmethod
    def _difference(spec, direction, w, seeds, shots, basis, workers, evaluator, rows, index):
        rates = []
        noise = CircuitNoise(
            p_F=min(w * direction[0], 1.0),
            t_rus_over_T2=w * direction[1],
            D=min(w * direction[2], 1.0),
        )
        for distance in spec.distances:
            circuit = CircuitService.build_memory_experiment(
                distance, basis=basis, rounds=distance, noise=noise
            )
            estimate = evaluator(circuit, shots, seeds(distance), workers)
            rows.append(
                (
                    index,
                    w,
                    noise.p_F,
                    noise.t_rus_over_T2,
                    noise.D,
                    distance,
                    shots,
                    estimate.errors,
                    estimate.p_L,
                    estimate.stderr,
                )
            )
            rates.append(_log_rate(estimate.errors, shots))
        return float(rates[1] - rates[0])

    @staticmethod
    def ft_surface(spec, shots, seed, basis="Z", workers=None, evaluator=None):
        """
        Scan every tessellation direction for its threshold scale ``w_th``.

        Each direction ``M`` is scanned on the w grid with both distances;
        the first bracketing interval is refined once by bisection and
        ``w_th`` is interpolated linearly in the refined interval.

        Args:
            spec: FtSurfaceSpec
            shots: Shots per (direction, w, distance)
            seed: Master seed
            basis: Memory basis
            workers: Worker processes used per point
            evaluator: ``(circuit, shots, seed, workers) -> LogicalErrorEstimate``

        Returns:
            FtSurface: One FtSurfacePoint per direction plus the raw scan
        """
        evaluator = evaluator or default_evaluator
        rows = []
        points = []
        grid = spec.w_grid
        for index, direction in enumerate(spec.directions()):

            def difference(w, step):
                return SurfaceService._difference(
                    spec,
                    direction,
                    w,
                    lambda distance: SeedService.derive_seed(seed, index, step, distance),
                    shots,
                    basis,
                    workers,
                    evaluator,
                    rows,
                    index,
                )

            differences = [difference(w, step) for step, w in enumerate(grid)]
            changes = [
                i for i in range(len(grid) - 1) if differences[i] <= 0 < differences[i + 1]
            ]
            if not changes:
                w_th = spec.w_min if differences[0] > 0 else spec.w_max
                points.append(FtSurfacePoint(index, direction, float(w_th), False, True))
                logger.warning("Direction %d %s is not bracketed by the w range", index, direction)
                continue
            i = changes[0]
            low, high = grid[i], grid[i + 1]
            d_low, d_high = differences[i], differences[i + 1]
            middle = (low + high) / 2.0
            d_middle = difference(middle, len(grid))
            if d_middle <= 0:
                low, d_low = middle, d_middle
            else:
                high, d_high = middle, d_middle
            w_th = float(low - d_low * (high - low) / (d_high - d_low))
            at_endpoint = math.isclose(w_th, spec.w_min) or math.isclose(w_th, spec.w_max)
            points.append(FtSurfacePoint(index, direction, w_th, True, at_endpoint))
            logger.info("Direction %d: w_th = %.4f", index, w_th)
        scan = pd.DataFrame(
            rows,
            columns=[
                "point",
                "w",
                "p_F",
                "t_rus_over_T2",
                "D",
                "distance",
                "shots",
                "logical_errors",
                "p_L",
                "stderr",
            ],
        )
        return FtSurface(spec, tuple(points), scan)

    @staticmethod
    def border_from_surface(surface):
        return Border.from_points(surface.boundary_points())

    @staticmethod
    def load_border(path):
        """
        Border from an ``ft_surface`` JSON output.

        Raises:
            DomainError: If the file has no usable surface points
        """
        try:
            payload = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise DomainError(f"Cannot read surface {path}: {exc}")
        points = [tuple(point["boundary"]) for point in payload.get("points", ())]
        return Border.from_points(points)

    @staticmethod
    def line_border(thresholds=None):
        thresholds = thresholds or settings.SPOQC["AXIS_THRESHOLDS"]
        return Border.line(thresholds["p_F"], thresholds["t_rus_over_T2"])


class TradeoffService:
    """Service class for the loss versus coherence trade-off."""

    @staticmethod
    def failure_probability(epsilon, k, n=1):
        eta = 1.0 - epsilon
        return RateService.hrus_rates(eta, eta, k, n).p_fail

    @staticmethod
    def tradeoff(n_values, k_values, losses, border):
        """
        Maximum trial time over T2 for every (n, k, loss).

        The gate fails with ``p_F = 1 - P_s`` and lasts ``k`` trials, so the
        trial time may be at most ``t_th(p_F) / k``.

        Returns:
            TradeoffCurve
        """
        losses = np.asarray(losses, dtype=float)
        rows = []
        for n in n_values:
            for k in k_values:
                p_F = np.array([TradeoffService.failure_probability(e, k, n) for e in losses])
                t_max = np.asarray(border(p_F)) / k
                rows.extend(zip([n] * len(losses), [k] * len(losses), losses, p_F, t_max))
        curves = pd.DataFrame(rows, columns=["n", "k", "epsilon", "p_F", "t_trial_max"])
        best = curves.loc[curves.groupby(["n", "epsilon"], sort=True)["t_trial_max"].idxmax()]
        envelope = best[["n", "epsilon", "t_trial_max", "k"]].rename(columns={"k": "k_opt"})
        envelope["k_opt"] = envelope["k_opt"].where(envelope["t_trial_max"] > 0).astype("Int64")
        return TradeoffCurve(curves, envelope.reset_index(drop=True), border)

    @staticmethod
    def loss_coherence_tradeoff(k_values, losses, border):
        return TradeoffService.tradeoff([1], k_values, losses, border)

    @staticmethod
    def hrus_tradeoff(n_values, k_values, losses, border):
        return TradeoffService.tradeoff(n_values, k_values, losses, border)

    @staticmethod
    def loss_intercept(k_values, border, n=1):
        """
        Largest loss with a nonzero trial time, over the given budgets.

        Solves ``p_F(epsilon, k) = root`` for every ``k``.
        """
        root = border.root
        best = 0.0
        for k in k_values:
            gap = lambda e: TradeoffService.failure_probability(e, k, n) - root  # noqa: E731
            if gap(0.0) >= 0:
                continue
            best = max(best, brentq(gap, 0.0, 1.0 - 1e-12, xtol=1e-12))
        return best

    @staticmethod
    def coherence_intercept(k_values, border, n=1):
        """Envelope trial time at zero loss and the budget achieving it."""
        values = [(float(border(TradeoffService.failure_probability(0.0, k, n))) / k, k) for k in k_values]
        t_max, k_opt = max(values)
        return t_max, (k_opt if t_max > 0 else None)

    @staticmethod
    def summary(curve, k_values):
        """Intercepts of every n in a trade-off curve."""
        result = {}
        for n in sorted(curve.curves["n"].unique()):
            t_max, k_opt = TradeoffService.coherence_intercept(k_values, curve.border, int(n))
            result[str(int(n))] = {
                "loss_intercept": TradeoffService.loss_intercept(k_values, curve.border, int(n)),
                "t_trial_intercept": t_max,
                "k_at_zero_loss": k_opt,
            }
        return result

