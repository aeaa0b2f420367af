"""Noncontextual-model membership for observed statistics.

The membership test is a linear program over epistemic weights on the
vertices of the response polytope: response functions obey
per-measurement normalization, the [0,1] box, and every effect-side
operational identity; epistemic states obey normalization and every
state-side identity.  Restricting ontic states to polytope vertices
loses no generality -- interior response assignments split into convex
combinations of vertices without changing the statistics.

Infeasibility converts, via the LP's Farkas dual, into a
noncontextuality inequality whose bound is re-tightened to the exact
maximum over noncontextual tables and normalized so the logical maximum
of the functional is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import h_rep_extreme_rays
from .errors import FormatError, NumericalError, ResourceLimitError
from .fragments import UNIT_LABEL, Measurement, StatisticsTable
from .linalg import null_space
from .lp import LinearProgram, solve
from .models import OntologicalModel

MAX_OUTCOME_PRODUCT = 4096
MAX_AFFINE_DIM = 15  # double description works in dimension p + 1 <= 16


@dataclass
class ResponseVertex:
    """One extreme noncontextual response assignment.

    ``values[i]`` is the response probability of effect ``labels[i]``;
    shared effect labels across measurements share one value, which is
    where noncontextuality enters.
    """

    vertex_id: int
    labels: tuple[str, ...]
    values: np.ndarray

    def value(self, label: str) -> float:
        if label == UNIT_LABEL:
            return 1.0
        return float(self.values[self.labels.index(label)])


def _normalize_structure(measurements) -> list[Measurement]:
    out = []
    for m in measurements:
        if isinstance(m, Measurement):
            out.append(m)
        else:
            label, outcomes = m
            out.append(Measurement(label, tuple(outcomes)))
    return out


def response_vertices(
    effect_identities, measurements, tol: float = 1e-9
) -> list[ResponseVertex]:
    """Enumerate all vertices of the constrained response polytope.

    The polytope lives in [0,1]^(distinct effect labels) and is cut out
    by per-measurement normalization plus the effect identities (terms on
    the reserved ``unit`` label contribute constants).  Vertices are
    found by double description on the homogenized affine slice and
    returned in deterministic lexicographic order.
    """
    structure = _normalize_structure(measurements)
    if not structure:
        raise FormatError("response vertices need at least one measurement")
    product = 1
    for m in structure:
        product *= max(1, len(m.effects))
    if product > MAX_OUTCOME_PRODUCT:
        raise ResourceLimitError(
            f"outcome-count product {product} exceeds {MAX_OUTCOME_PRODUCT}"
        )
    labels: list[str] = []
    for m in structure:
        for lab in m.effects:
            if lab == UNIT_LABEL:
                raise FormatError("the unit label cannot be a measurement outcome")
            if lab not in labels:
                labels.append(lab)
    n = len(labels)
    pos = {lab: i for i, lab in enumerate(labels)}

    rows = []
    rhs = []
    for m in structure:
        row = np.zeros(n)
        for lab in m.effects:
            row[pos[lab]] += 1.0
        rows.append(row)
        rhs.append(1.0)
    for ident in effect_identities:
        if getattr(ident, "side", "effects") != "effects":
            raise FormatError("response polytope takes effect-side identities only")
        row = np.zeros(n)
        constant = 0.0
        for lab, coeff in ident.terms:
            if lab == UNIT_LABEL:
                constant += coeff
            elif lab in pos:
                row[pos[lab]] += coeff
            else:
                raise FormatError(
                    f"identity references effect {lab!r} outside the measurements"
                )
        rows.append(row)
        rhs.append(-constant)
    a = np.array(rows)
    b = np.array(rhs)

    point, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.max(np.abs(a @ point - b)) > 1e-8:
        raise FormatError("effect identities are inconsistent with normalization")
    basis = null_space(a, tol)
    p = len(basis)
    if p == 0:
        if np.min(point) < -1e-9 or np.max(point) > 1 + 1e-9:
            raise FormatError("response polytope is empty")
        return [ResponseVertex(0, tuple(labels), np.clip(point, 0.0, 1.0))]
    if p > MAX_AFFINE_DIM:
        raise ResourceLimitError(
            f"response polytope affine dimension {p} exceeds {MAX_AFFINE_DIM}"
        )
    z = np.array(basis).T  # (n, p)

    # Homogenize the box 0 <= point + z w <= 1 into a pointed cone in R^(p+1).
    cons = [np.concatenate([z[i], [point[i]]]) for i in range(n)]
    cons += [np.concatenate([-z[i], [1.0 - point[i]]]) for i in range(n)]
    cons.append(np.concatenate([np.zeros(p), [1.0]]))
    rays = h_rep_extreme_rays(np.array(cons), tol)

    verts = []
    for ray in rays:
        t = ray[-1]
        if t <= tol:
            raise NumericalError("response polytope is unbounded")  # pragma: no cover
        w = ray[:-1] / t
        verts.append(np.clip(point + z @ w, 0.0, 1.0))
    verts = _dedupe_rows(verts, 1e-9)
    verts.sort(key=lambda v: tuple(np.round(v, 10)))
    return [
        ResponseVertex(i, tuple(labels), v) for i, v in enumerate(verts)
    ]


def _dedupe_rows(rows, tol):
    out: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - q)) <= tol for q in out):
            out.append(r)
    return out


@dataclass
class NoncontextualityInequality:
    """A linear functional of the statistics bounded on noncontextual tables.

    ``coefficients[y]`` aligns with the statistics tables; the bound is
    the LP-certified maximum of the functional over all tables admitting
    a noncontextual model for the generating scenario.
    """

    preparations: list[str]
    measurements: list[str]
    outcomes: list[list[str]]
    coefficients: list[np.ndarray]
    bound: float
    provenance: str = ""

    def value(self, stats: StatisticsTable) -> float:
        total = 0.0
        for y_here, m in enumerate(self.measurements):
            if m not in stats.measurements:
                raise FormatError(f"statistics lack measurement {m!r}")
            y = stats.measurements.index(m)
            if self.outcomes[y_here] != list(stats.outcomes[y]) or [
                p for p in self.preparations
            ] != list(stats.preparations):
                raise FormatError("inequality and statistics are index-incompatible")
            total += float(np.sum(self.coefficients[y_here] * stats.tables[y]))
        return total


@dataclass
class InequalityVerdict:
    value: float
    bound: float
    violated: bool


def evaluate(
    ineq: NoncontextualityInequality, stats: StatisticsTable, tol: float = 1e-9
) -> InequalityVerdict:
    value = ineq.value(stats)
    return InequalityVerdict(
        value=value, bound=ineq.bound, violated=value > ineq.bound + tol
    )


@dataclass
class MembershipResult:
    feasible: bool
    model: OntologicalModel | None = None
    inequality: NoncontextualityInequality | None = None


def _vertex_matrix(stats: StatisticsTable, vertices: list[ResponseVertex]):
    """xi[v, y][b] array aligned with the statistics tables."""
    per_meas = []
    try:
        for y, outs in enumerate(stats.outcomes):
            vals = np.array([[v.value(lab) for lab in outs] for v in vertices])
            per_meas.append(vals)  # (n_vertices, n_outcomes)
    except ValueError as exc:
        raise FormatError(
            "statistics outcome labels do not match the response vertices"
        ) from exc
    return per_meas


def membership(
    stats: StatisticsTable,
    state_identities=(),
    vertices: list[ResponseVertex] | None = None,
    effect_identities=(),
    provenance: str = "",
) -> MembershipResult:
    """Is the table a mixture of response vertices respecting the identities?

    Feasible instances return the explicit model; infeasible ones return
    a violated noncontextuality inequality extracted from the Farkas dual
    and certified tight by one auxiliary LP.
    """
    for y, table in enumerate(stats.tables):
        if np.max(np.abs(table.sum(axis=1) - 1.0)) > 1e-9:
            raise FormatError(
                f"statistics for measurement {stats.measurements[y]!r} are not "
                "normalized; raw frequencies need explicit trial bookkeeping"
            )
    if vertices is None:
        vertices = response_vertices(
            effect_identities, list(zip(stats.measurements, stats.outcomes))
        )
    if not vertices:
        raise FormatError("membership needs a nonempty response vertex set")
    nx = len(stats.preparations)
    nv = len(vertices)
    xi = _vertex_matrix(stats, vertices)

    alphas = [ident.coefficient_vector(stats.preparations) for ident in state_identities]

    # Variables mu_x(v), x-major.  Rows: normalization per x, identity per
    # (identity, vertex), statistics per (x, y, b).
    rows = []
    rhs = []
    for x in range(nx):
        row = np.zeros(nx * nv)
        row[x * nv : (x + 1) * nv] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for alpha in alphas:
        for v in range(nv):
            row = np.zeros(nx * nv)
            for x in range(nx):
                row[x * nv + v] = alpha[x]
            rows.append(row)
            rhs.append(0.0)
    stat_rows_start = len(rows)
    for x in range(nx):
        for y in range(len(stats.measurements)):
            for b in range(len(stats.outcomes[y])):
                row = np.zeros(nx * nv)
                row[x * nv : (x + 1) * nv] = xi[y][:, b]
                rows.append(row)
                rhs.append(float(stats.tables[y][x, b]))

    lp = LinearProgram(
        n_vars=nx * nv,
        sense="feasibility",
        a_eq=np.array(rows),
        b_eq=np.array(rhs),
    )
    sol = solve(lp)

    if sol.status == "optimal":
        mu = np.maximum(sol.x.reshape(nx, nv), 0.0)
        support = np.flatnonzero(np.max(mu, axis=0) > 1e-12)
        if support.size == 0:
            support = np.array([0])
        model = OntologicalModel(
            ontic_labels=[f"v{vertices[v].vertex_id}" for v in support],
            preparations=list(stats.preparations),
            measurements=list(stats.measurements),
            outcomes=[list(o) for o in stats.outcomes],
            mu=mu[:, support],
            xi=[xi[y][support].T for y in range(len(stats.measurements))],
        )
        return MembershipResult(feasible=True, model=model)

    if sol.status != "infeasible":  # pragma: no cover
        raise NumericalError(f"membership LP ended with status {sol.status}")

    # Farkas multipliers on the statistics rows give the inequality
    # direction: for any noncontextual table p', sum c.p' >= -(norm-row
    # part), so -c is bounded above on noncontextual tables.
    p_mult = sol.farkas.eq
    coeffs = []
    pos = stat_rows_start
    for y in range(len(stats.measurements)):
        block = np.zeros((nx, len(stats.outcomes[y])))
        coeffs.append(block)
    for x in range(nx):
        for y in range(len(stats.measurements)):
            for b in range(len(stats.outcomes[y])):
                coeffs[y][x, b] = -p_mult[pos]
                pos += 1

    ineq = _tighten_and_normalize(stats, vertices, alphas, xi, coeffs, provenance)
    return MembershipResult(feasible=False, inequality=ineq)


def noncontextual_maximum(
    stats: StatisticsTable,
    vertices: list[ResponseVertex],
    alphas,
    xi,
    coeffs,
) -> float:
    """Exact maximum of sum c.p over tables with a noncontextual model."""
    nx = len(stats.preparations)
    nv = len(vertices)
    objective = np.zeros(nx * nv)
    for x in range(nx):
        for y in range(len(stats.measurements)):
            objective[x * nv : (x + 1) * nv] += xi[y] @ coeffs[y][x]
    rows = []
    rhs = []
    for x in range(nx):
        row = np.zeros(nx * nv)
        row[x * nv : (x + 1) * nv] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for alpha in alphas:
        for v in range(nv):
            row = np.zeros(nx * nv)
            for x in range(nx):
                row[x * nv + v] = alpha[x]
            rows.append(row)
            rhs.append(0.0)
    lp = LinearProgram(
        n_vars=nx * nv,
        objective=objective,
        sense="max",
        a_eq=np.array(rows),
        b_eq=np.array(rhs),
    )
    sol = solve(lp)
    if sol.status != "optimal":
        raise NumericalError("noncontextual polytope maximization failed")
    return float(sol.objective_value)


def _tighten_and_normalize(stats, vertices, alphas, xi, coeffs, provenance):
    # Shift each (x, y) outcome block so its minimum coefficient is zero;
    # on normalized tables this only moves the bound by the same amount.
    shift = 0.0
    for y in range(len(coeffs)):
        mins = coeffs[y].min(axis=1, keepdims=True)
        coeffs[y] = coeffs[y] - mins
        shift += float(mins.sum())
    # Scale so the maximum over all (not only noncontextual) tables is 1.
    logical_max = sum(float(c.max(axis=1).sum()) for c in coeffs)
    if logical_max <= 1e-12:
        raise NumericalError("degenerate Farkas inequality direction")
    coeffs = [c / logical_max for c in coeffs]
    bound = noncontextual_maximum(stats, vertices, alphas, xi, coeffs)
    return NoncontextualityInequality(
        preparations=list(stats.preparations),
        measurements=list(stats.measurements),
        outcomes=[list(o) for o in stats.outcomes],
        coefficients=coeffs,
        bound=bound,
        provenance=provenance or "membership-farkas",
    )
