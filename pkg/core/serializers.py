import math

from django.conf import settings
from rest_framework import serializers

SWEEP_AXES = ("p_F", "t_rus_over_T2", "D", "epsilon", "w")


class TrialBudgetField(serializers.Field):
    """Trial budget k: a positive integer or ``"inf"`` for an unbounded budget."""

    default_error_messages = {
        "invalid": "Expected a positive integer or 'inf'.",
    }

    def to_internal_value(self, data):
        if isinstance(data, str) and data.strip().lower() in ("inf", "unbounded"):
            return math.inf
        if isinstance(data, float) and math.isinf(data) and data > 0:
            return math.inf
        if isinstance(data, bool) or (isinstance(data, float) and not data.is_integer()):
            self.fail("invalid")
        try:
            value = int(data)
        except (TypeError, ValueError):
            self.fail("invalid")
        if value < 1:
            self.fail("invalid")
        return value

    def to_representation(self, value):
        return "inf" if math.isinf(value) else int(value)


class CodeSectionSerializer(serializers.Serializer):
    """Serializer for the ``code`` section of a run configuration."""

    distances = serializers.ListField(
        child=serializers.IntegerField(min_value=3), default=[3, 5, 7]
    )
    rounds = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    basis = serializers.ChoiceField(choices=["Z", "X"], default="Z")

    def validate_distances(self, value):
        if not value:
            raise serializers.ValidationError("At least one distance is required")
        if any(d % 2 == 0 for d in value):
            raise serializers.ValidationError("Distances must be odd")
        return sorted(set(value))


class NoiseSectionSerializer(serializers.Serializer):
    """
    Serializer for the ``noise`` section.

    Either ``p_F`` (gate failure probability) or ``epsilon`` (single-photon
    loss mapped through the RUS rate formulas) sets the failure rate.
    ``t_rus_over_T2`` overrides ``k * t_trial_over_T2`` when given.
    """

    p_F = serializers.FloatField(min_value=0.0, max_value=1.0, allow_null=True, default=None)
    epsilon = serializers.FloatField(
        min_value=0.0, max_value=1.0, allow_null=True, default=None
    )
    k = TrialBudgetField(default=1)
    n = serializers.IntegerField(min_value=1, default=1)
    D = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    t_trial_over_T2 = serializers.FloatField(min_value=0.0, default=0.0)
    t_rus_over_T2 = serializers.FloatField(min_value=0.0, allow_null=True, default=None)
    t_rus_over_T1 = serializers.FloatField(min_value=0.0, default=0.0)

    def validate(self, data):
        if data["p_F"] is not None and data["epsilon"] is not None:
            raise serializers.ValidationError("Give either p_F or epsilon, not both")
        return data


class SweepSectionSerializer(serializers.Serializer):
    axis = serializers.ChoiceField(choices=SWEEP_AXES, default="p_F")
    min = serializers.FloatField(allow_null=True, default=None)
    max = serializers.FloatField(allow_null=True, default=None)
    points = serializers.IntegerField(min_value=2, default=11)
    values = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), allow_null=True, default=None
    )
    heralds = serializers.BooleanField(default=True)

    def validate(self, data):
        if data["values"] is not None:
            if len(data["values"]) < 2:
                raise serializers.ValidationError("A sweep needs at least two values")
            data["values"] = sorted(data["values"])
            return data
        if data["min"] is not None and data["max"] is not None:
            if not 0 <= data["min"] < data["max"]:
                raise serializers.ValidationError("Sweep needs 0 <= min < max")
        return data


class FtSurfaceSectionSerializer(serializers.Serializer):
    points = serializers.IntegerField(
        min_value=3, default=lambda: settings.SPOQC["FT_SURFACE_POINTS"]
    )
    w_min = serializers.FloatField(
        min_value=0.0, default=lambda: settings.SPOQC["FT_SURFACE_W_RANGE"][0]
    )
    w_max = serializers.FloatField(default=lambda: settings.SPOQC["FT_SURFACE_W_RANGE"][1])
    w_steps = serializers.IntegerField(
        min_value=2, default=lambda: settings.SPOQC["FT_SURFACE_W_STEPS"]
    )
    distances = serializers.ListField(
        child=serializers.IntegerField(min_value=3),
        default=lambda: [
            settings.SPOQC["FT_SURFACE_DISTANCE"] - 2,
            settings.SPOQC["FT_SURFACE_DISTANCE"],
        ],
    )
    thresholds = serializers.DictField(
        child=serializers.FloatField(min_value=0.0),
        default=lambda: dict(settings.SPOQC["AXIS_THRESHOLDS"]),
    )

    def validate_thresholds(self, value):
        missing = {"p_F", "t_rus_over_T2", "D"} - set(value)
        if missing:
            raise serializers.ValidationError(f"Missing thresholds: {sorted(missing)}")
        if any(value[axis] <= 0 for axis in ("p_F", "t_rus_over_T2", "D")):
            raise serializers.ValidationError("Axis thresholds must be positive")
        return value

    def validate(self, data):
        if not 0 < data["w_min"] < data["w_max"]:
            raise serializers.ValidationError("Need 0 < w_min < w_max")
        if len(data["distances"]) != 2 or data["distances"][0] >= data["distances"][1]:
            raise serializers.ValidationError("Give two increasing distances")
        return data


class TradeoffSectionSerializer(serializers.Serializer):
    k_values = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=list(range(1, 21))
    )
    n_values = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=[1, 2, 3, 4]
    )
    loss_min = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    loss_max = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.05)
    loss_points = serializers.IntegerField(min_value=2, default=101)
    border = serializers.ChoiceField(choices=["line", "surface"], default="line")
    surface = serializers.CharField(allow_null=True, default=None)

    def validate(self, data):
        if data["loss_min"] >= data["loss_max"]:
            raise serializers.ValidationError("Need loss_min < loss_max")
        if data["border"] == "surface" and not data["surface"]:
            raise serializers.ValidationError("A surface border needs a surface file")
        return data


class OutputSectionSerializer(serializers.Serializer):
    csv = serializers.CharField(allow_null=True, default=None)
    json = serializers.CharField(allow_null=True, default=None)
    dump = serializers.CharField(allow_null=True, default=None)


class RunConfigSerializer(serializers.Serializer):
    """Serializer for a complete, resolved run configuration."""

    command = serializers.CharField(required=False, allow_blank=True, default="")
    code = CodeSectionSerializer()
    noise = NoiseSectionSerializer()
    sweep = SweepSectionSerializer()
    ft_surface = FtSurfaceSectionSerializer()
    tradeoff = TradeoffSectionSerializer()
    output = OutputSectionSerializer()
    shots = serializers.IntegerField(
        min_value=1, default=lambda: settings.SPOQC["DEFAULT_SHOTS"]
    )
    seed = serializers.IntegerField(
        min_value=0, default=lambda: settings.SPOQC["DEFAULT_SEED"]
    )
    workers = serializers.IntegerField(min_value=1, allow_null=True, default=None)

    SECTIONS = ("code", "noise", "sweep", "ft_surface", "tradeoff", "output")
