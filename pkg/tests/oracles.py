"""Independent test oracles and seeded random-instance generators.

These deliberately avoid the code paths they check: extremality is
filtered with NNLS, noncontextual bounds come from an exhaustive grid
search, and robustness is re-derived by depolarize-and-retest bisection.
"""

import numpy as np

from classicality.fragments import Fragment, GptVector, Measurement, StatisticsTable
from classicality.linalg import matrix_rank
from classicality.lp import LinearProgram, solve
from classicality.models import OntologicalModel
from classicality.noncontextuality import response_vertices


def random_fragment(seed):
    """Seeded random valid fragment: dimension <= 3, <= 6 states, <= 6 effects.

    States are sampled on the normalization plane until they span the
    space; binary measurements use sharp effects so both embeddable and
    non-embeddable geometries occur.  Effects plus the unit always span
    the state span (no quotient on accessibilization).
    """
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    n_states = int(rng.integers(d + 1, 7))
    for _ in range(100):
        xs = rng.uniform(-1.0, 1.0, size=(n_states, d - 1))
        states = np.hstack([np.ones((n_states, 1)), xs])
        if matrix_rank(states) == d:
            break
    else:  # pragma: no cover
        raise RuntimeError("could not sample spanning states")

    n_meas = int(rng.integers(d - 1, 4))
    for _ in range(100):
        dirs = rng.normal(size=(n_meas, d - 1))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        if matrix_rank(dirs) == min(d - 1, n_meas):
            break
    effects = []
    measurements = []
    unit = np.zeros(d)
    unit[0] = 1.0
    for j in range(n_meas):
        w = dirs[j]
        vals = xs @ w
        spread = float(vals.max() - vals.min())
        if spread < 1e-6:  # pragma: no cover
            spread = 1e-6
        sharp = float(rng.uniform(0.7, 0.999))
        c = sharp / spread
        a = -c * float(vals.min()) + (1.0 - sharp) * float(rng.uniform(0.0, 1.0))
        e = np.concatenate([[a], c * w])
        effects.append(GptVector(f"e0|{j}", e, "effect"))
        effects.append(GptVector(f"e1|{j}", unit - e, "effect"))
        measurements.append(Measurement(f"m{j}", (f"e0|{j}", f"e1|{j}")))
    return Fragment(
        name=f"random-{seed}",
        dimension=d,
        unit_effect=unit,
        states=[GptVector(f"s{i}", states[i], "state") for i in range(n_states)],
        effects=effects,
        measurements=measurements,
    )


def grid_bound_oracle(coeffs, outcomes, alpha_groups, resolution=64):
    """Exhaustive grid maximum of a functional over noncontextual models.

    Supports the single pair-identity structure of the square scenario:
    ``alpha_groups`` is ((plus indices), (minus indices)) from an identity
    with +-1 coefficients.  Epistemic states over the 4 deterministic
    response vertices must satisfy the identity pointwise, so the shared
    column measure tau (mass 2, on a 1/resolution grid) determines the
    optimum of each preparation pair by exact greedy filling that stays on
    the grid; tau itself is enumerated exhaustively.
    """
    structure = [(f"m{y}", list(outcomes[y])) for y in range(len(outcomes))]
    verts = response_vertices([], structure)
    n = len(verts)
    n_prep = coeffs[0].shape[0]
    score = np.zeros((n_prep, n))
    for x in range(n_prep):
        for v, vert in enumerate(verts):
            s = 0.0
            for y, tab in enumerate(coeffs):
                for b, lab in enumerate(outcomes[y]):
                    s += tab[x, b] * vert.value(lab)
            score[x, v] = s

    plus, minus = alpha_groups

    # All grid column measures tau with total mass 2 (vectorized
    # compositions of 2*resolution into n parts).
    total = 2 * resolution
    grids = np.meshgrid(*([np.arange(total + 1)] * (n - 1)), indexing="ij")
    parts = np.stack([g.reshape(-1) for g in grids], axis=1)
    mask = parts.sum(axis=1) <= total
    parts = parts[mask]
    tau = np.hstack([parts, (total - parts.sum(axis=1))[:, None]]) / resolution

    def greedy_pair(sx, sy):
        # The greedy fill order depends only on the gains, so it is shared
        # by every tau row and the whole sweep vectorizes.
        order = np.argsort(-(sx - sy), kind="stable")
        t = tau[:, order]
        room = np.maximum(1.0 - np.cumsum(t, axis=1) + t, 0.0)
        take = np.minimum(t, room)
        filled = take.sum(axis=1)
        value = take @ sx[order] + (t - take) @ sy[order]
        value[filled < 1.0 - 1e-12] = -np.inf  # tau cannot carry unit mass
        return value

    totals = greedy_pair(score[plus[0]], score[plus[1]]) + greedy_pair(
        score[minus[0]], score[minus[1]]
    )
    return float(np.max(totals))


def random_noncontextual_models(stats, state_identities, vertices, count, seed):
    """Explicit noncontextual models sampled as vertices of the mu polytope.

    Each sample maximizes a random linear objective over {mu >= 0, rows
    normalized, identities pointwise}, so it is a concrete ontological
    model by construction; callers can verify its invariants directly.
    """
    nx = len(stats.preparations)
    nv = len(vertices)
    rows = []
    rhs = []
    for x in range(nx):
        row = np.zeros(nx * nv)
        row[x * nv : (x + 1) * nv] = 1.0
        rows.append(row)
        rhs.append(1.0)
    alphas = [i.coefficient_vector(stats.preparations) for i in state_identities]
    for alpha in alphas:
        for v in range(nv):
            row = np.zeros(nx * nv)
            for x in range(nx):
                row[x * nv + v] = alpha[x]
            rows.append(row)
            rhs.append(0.0)
    a_eq = np.array(rows)
    b_eq = np.array(rhs)
    xi = [
        np.array([[vert.value(lab) for lab in stats.outcomes[y]] for vert in vertices])
        for y in range(len(stats.measurements))
    ]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        lp = LinearProgram(
            n_vars=nx * nv,
            objective=rng.normal(size=nx * nv),
            sense="max",
            a_eq=a_eq,
            b_eq=b_eq,
        )
        sol = solve(lp)
        assert sol.status == "optimal"
        mu = np.maximum(sol.x.reshape(nx, nv), 0.0)
        model = OntologicalModel(
            ontic_labels=[f"v{v.vertex_id}" for v in vertices],
            preparations=list(stats.preparations),
            measurements=list(stats.measurements),
            outcomes=[list(o) for o in stats.outcomes],
            mu=mu,
            xi=[xi[y].T for y in range(len(stats.measurements))],
        )
        table = StatisticsTable(
            preparations=list(stats.preparations),
            measurements=list(stats.measurements),
            outcomes=[list(o) for o in stats.outcomes],
            tables=[mu @ xi[y] for y in range(len(stats.measurements))],
        )
        out.append((model, table))
    return out
