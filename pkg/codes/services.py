import logging
import math

from core.exceptions import CodeConstructionError

from .graphs import (
    CheckKind,
    CodeParams,
    LayoutOverhead,
    LdpcReport,
    LogicalOperators,
    Pauli,
    SurfaceCode,
    TannerGraph,
    paulis_commute,
)

logger = logging.getLogger(__name__)

# Corner offsets of a plaquette at check position (i, j) on the data grid.
PLAQUETTE_OFFSETS = ((-1, -1), (-1, 0), (0, -1), (0, 0))


class CodeService:
    """Service class for Tanner graph construction and inspection."""

    @staticmethod
    def build_rotated_surface_code(distance):
        """
        Build the rotated surface code of odd distance ``d``.

        Data qubit ``(r, c)`` of the ``d x d`` grid gets identifier
        ``r * d + c`` and planar coordinate ``(2r + 1, 2c + 1)``. Checks sit
        on plaquette corners ``(i, j)`` with coordinate ``(2i, 2j)`` and are
        X-type when ``i + j`` is even. Top and bottom boundaries carry Z-type
        weight-2 checks, left and right boundaries X-type ones, so the
        Z logical runs down the left column and the X logical along the top
        row.

        Args:
            distance: Odd code distance, at least 3

        Returns:
            SurfaceCode: Graph, ``[[d^2, 1, d]]`` parameters and logicals

        Raises:
            CodeConstructionError: If ``distance`` is even or below 3
        """
        d = distance
        if isinstance(d, bool) or not isinstance(d, int) or d < 3 or d % 2 == 0:
            raise CodeConstructionError(f"Distance must be an odd integer >= 3, got {d!r}")

        data = tuple(range(d * d))
        coords = {r * d + c: (2 * r + 1, 2 * c + 1) for r in range(d) for c in range(d)}
        checks = []
        edges = []
        next_id = d * d
        for i in range(d + 1):
            for j in range(d + 1):
                kind = CheckKind.X if (i + j) % 2 == 0 else CheckKind.Z
                on_row_edge = i in (0, d)
                on_col_edge = j in (0, d)
                if on_row_edge and on_col_edge:
                    continue
                if on_row_edge and kind != CheckKind.Z:
                    continue
                if on_col_edge and kind != CheckKind.X:
                    continue
                check_id = next_id
                next_id += 1
                checks.append((check_id, kind))
                coords[check_id] = (2 * i, 2 * j)
                for di, dj in PLAQUETTE_OFFSETS:
                    r, c = i + di, j + dj
                    if 0 <= r < d and 0 <= c < d:
                        edges.append((r * d + c, check_id, Pauli(kind.value)))

        graph = TannerGraph(data, tuple(checks), tuple(edges), coords)
        logicals = LogicalOperators(
            z_support=frozenset(r * d for r in range(d)),
            x_support=frozenset(range(d)),
        )
        logger.debug("Built rotated surface code d=%d with %d edges", d, len(edges))
        return SurfaceCode(graph, CodeParams(n=d * d, k=1, d=d), logicals)

    @staticmethod
    def validate_ldpc(graph, max_degree):
        """
        Check degree bound, CSS structure and data connectivity.

        Args:
            graph: TannerGraph to inspect
            max_degree: Largest allowed vertex degree

        Returns:
            LdpcReport: Never raises; ``report.passed`` tells the outcome
        """
        vertices = list(graph.data_vertices) + [c for c, _ in graph.check_vertices]
        over = tuple(
            (vertex, graph.degree(vertex))
            for vertex in vertices
            if graph.degree(vertex) > max_degree
        )
        non_css = tuple(
            check
            for check, kind in graph.check_vertices
            if kind == CheckKind.MIXED
            or len({pauli for _, pauli in graph.check_support(check)}) > 1
            or any(pauli == Pauli.Y for _, pauli in graph.check_support(check))
        )
        disconnected = tuple(v for v in graph.data_vertices if graph.degree(v) == 0)
        return LdpcReport(max_degree, over, non_css, disconnected)

    @staticmethod
    def css_subgraphs(graph):
        """
        Split a CSS Tanner graph into its X and Z subgraphs.

        Args:
            graph: TannerGraph with no Y edges and no mixed checks

        Returns:
            tuple: ``(G_X, G_Z)``, each holding every data vertex

        Raises:
            CodeConstructionError: If the graph is not CSS
        """
        if not graph.is_css:
            raise CodeConstructionError("css_subgraphs requires a CSS Tanner graph")

        def family(kind):
            checks = tuple((c, k) for c, k in graph.check_vertices if k == kind)
            check_ids = {c for c, _ in checks}
            edges = tuple(e for e in graph.edges if e[1] in check_ids)
            coords = {
                v: xy
                for v, xy in graph.coords.items()
                if v in check_ids or v in graph.data_vertices
            }
            return TannerGraph(graph.data_vertices, checks, edges, coords)

        return family(CheckKind.X), family(CheckKind.Z)

    @staticmethod
    def router_fanout(graph):
        """Return ``{vertex: degree}`` for every data and check vertex."""
        vertices = list(graph.data_vertices) + [c for c, _ in graph.check_vertices]
        return {vertex: graph.degree(vertex) for vertex in vertices}

    @staticmethod
    def commutation_violations(graph, logicals=None):
        """
        List stabilizer pairs, or stabilizer/logical pairs, that anticommute.

        A valid code returns an empty list. When ``logicals`` is given, the
        two logical operators must also anticommute with each other.
        """
        stabilizers = [(c, graph.stabilizer(c)) for c, _ in graph.check_vertices]
        violations = []
        for index, (first, first_op) in enumerate(stabilizers):
            for second, second_op in stabilizers[index + 1:]:
                if not paulis_commute(first_op, second_op):
                    violations.append((first, second))
        if logicals is not None:
            z_op, x_op = logicals.as_paulis()
            for check, op in stabilizers:
                if not paulis_commute(op, z_op):
                    violations.append((check, "Z_L"))
                if not paulis_commute(op, x_op):
                    violations.append((check, "X_L"))
            if paulis_commute(z_op, x_op):
                violations.append(("Z_L", "X_L"))
        return violations

    @staticmethod
    def layout_overhead(params):
        """
        Estimate link loss and latency of a module layout.

        Loss is ``1 - exp(-N^(1/D) V^(1/3) / L_att)``. Latency is given in
        units of the single-module light-crossing time ``V^(1/3) / c`` and
        equals ``k N^(1/D)``.

        Args:
            params: LayoutParams (validated on construction)

        Returns:
            LayoutOverhead: Loss probability and latency estimate
        """
        span = params.qubit_count ** (1.0 / params.dimension)
        link_length = span * params.module_volume ** (1.0 / 3.0)
        loss = -math.expm1(-link_length / params.attenuation_length)
        return LayoutOverhead(loss_estimate=loss, latency_estimate=params.trials * span)
