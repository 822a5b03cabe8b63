from rest_framework import serializers

from core.exceptions import CodeConstructionError, DomainError

from .graphs import CheckKind, LayoutParams, Pauli, TannerGraph


class CheckVertexSerializer(serializers.Serializer):
    """Serializer for one ``{id, kind}`` check entry."""

    id = serializers.IntegerField(min_value=0)
    kind = serializers.ChoiceField(choices=CheckKind.choices)


class TannerGraphSerializer(serializers.Serializer):
    """
    Serializer for the JSON form of a Tanner graph.

    ``{"data": [...], "checks": [{"id", "kind"}], "edges": [[data, check, "X"|"Y"|"Z"]]}``
    with an optional ``"coords": {"<vertex>": [row, col]}`` mapping.
    """

    data = serializers.ListField(child=serializers.IntegerField(min_value=0))
    checks = CheckVertexSerializer(many=True)
    edges = serializers.ListField(child=serializers.ListField(min_length=3, max_length=3))
    coords = serializers.DictField(
        child=serializers.ListField(
            child=serializers.IntegerField(), min_length=2, max_length=2
        ),
        required=False,
        default=dict,
    )

    def validate_edges(self, value):
        edges = []
        for data_id, check_id, pauli in value:
            if pauli not in Pauli.values:
                raise serializers.ValidationError(f"Unknown Pauli label {pauli!r}")
            try:
                edges.append((int(data_id), int(check_id), pauli))
            except (TypeError, ValueError):
                raise serializers.ValidationError(
                    f"Edge endpoints must be integers, got {data_id!r}, {check_id!r}"
                )
        return edges

    def validate_coords(self, value):
        try:
            return {int(vertex): tuple(position) for vertex, position in value.items()}
        except ValueError:
            raise serializers.ValidationError("Coordinate keys must be vertex ids")

    def create(self, validated_data):
        try:
            return TannerGraph(
                tuple(validated_data["data"]),
                tuple((check["id"], check["kind"]) for check in validated_data["checks"]),
                tuple(validated_data["edges"]),
                validated_data["coords"],
            )
        except CodeConstructionError as exc:
            raise serializers.ValidationError(str(exc))


class LayoutParamsSerializer(serializers.Serializer):
    """Serializer for the hardware layout of a module arrangement."""

    module_volume = serializers.FloatField()
    attenuation_length = serializers.FloatField()
    dimension = serializers.IntegerField(min_value=1, max_value=3)
    qubit_count = serializers.IntegerField(min_value=1)
    trials = serializers.IntegerField(min_value=1)

    def create(self, validated_data):
        try:
            return LayoutParams(**validated_data)
        except DomainError as exc:
            raise serializers.ValidationError(str(exc))
