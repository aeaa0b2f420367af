"""Secondary states and effects: repairing imperfect operational identities.

Realized (noisy) vectors generally miss their target identities.  The
first remedy constructs secondary vectors inside the convex hull of the
realized ones that satisfy every target identity exactly; the price is
that secondaries are noisier than the realized originals whenever those
violate the targets.  The mixing weights come from a linear program
maximizing the total diagonal weight, so each secondary stays as close
to its primary as the constraints allow.

(The second remedy -- re-deriving identities from the realized vectors
 themselves -- is `identities.find_identities` applied to the noisy data
 at a suitable tolerance.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .fragments import UNIT_LABEL, ZERO_LABEL
from .lp import LinearProgram, farkas_gap, solve


@dataclass
class SecondarySolution:
    """Row-stochastic mixing weights and the secondary vectors they define."""

    target_labels: list[str]
    mixer_labels: list[str]
    weights: np.ndarray  # (targets, mixers), rows sum to 1
    secondaries: np.ndarray  # (targets, dim)
    residuals: list[float]  # per target identity, infinity norm
    primary_weight: np.ndarray  # diagonal weights c_xx
    feasible: bool = True
    farkas_margin: float | None = None

    @property
    def mean_primary_weight(self) -> float:
        return float(np.mean(self.primary_weight))

    @property
    def added_noise(self) -> float:
        """The noisier-than-realized tradeoff, 1 - min diagonal weight."""
        return float(1.0 - np.min(self.primary_weight))


def secondary_states(realized, targets) -> SecondarySolution:
    """Secondary states in the hull of the realized ones meeting the targets.

    ``realized`` is a list of (label, vector) pairs; identity coefficients
    refer to the secondary counterparts of those labels.  Infeasible
    targets return a solution flagged infeasible with its Farkas margin.
    """
    labels, vectors = _unpack(realized)
    for ident in targets:
        if ident.side != "states":
            raise FormatError("secondary_states takes state-side identities")
    return _solve_mixing(labels, vectors, list(labels), vectors, targets, {})


def secondary_effects(realized, unit_effect, targets) -> SecondarySolution:
    """Secondary effects mixed from the realized ones plus zero and unit.

    The zero and unit effects are always physically available, so the hull
    is taken inside the order interval [0, unit]; identity terms may
    reference the reserved ``unit``/``zero`` labels, which stand for the
    fixed vectors rather than for secondaries.
    """
    labels, vectors = _unpack(realized)
    unit = np.asarray(unit_effect, dtype=float)
    for ident in targets:
        if ident.side != "effects":
            raise FormatError("secondary_effects takes effect-side identities")
    mixer_labels = list(labels) + [ZERO_LABEL, UNIT_LABEL]
    mixers = np.vstack([vectors, np.zeros_like(unit)[None, :], unit[None, :]])
    constants = {ZERO_LABEL: np.zeros_like(unit), UNIT_LABEL: unit}
    return _solve_mixing(labels, vectors, mixer_labels, mixers, targets, constants)


def _unpack(realized):
    labels = [lab for lab, _ in realized]
    if len(labels) != len(set(labels)):
        raise FormatError("duplicate realized labels")
    if not labels:
        raise FormatError("no realized vectors given")
    vectors = np.array([np.asarray(v, dtype=float) for _, v in realized])
    return labels, vectors


def _identity_rows(ident, labels, n_m, mixers, constants, dim):
    coeffs = dict(ident.terms)
    unknown = set(coeffs) - set(labels) - set(constants)
    if unknown:
        raise FormatError(f"identity references unknown labels {sorted(unknown)}")
    rows = np.zeros((dim, len(labels) * n_m))
    const = np.zeros(dim)
    for lab, c in coeffs.items():
        if lab in constants and lab not in labels:
            const += c * constants[lab]
        else:
            x = labels.index(lab)
            rows[:, x * n_m : (x + 1) * n_m] += c * mixers.T
    return rows, -const


def _solve_mixing(labels, vectors, mixer_labels, mixers, targets, constants):
    n_t = len(labels)
    n_m = len(mixer_labels)
    dim = mixers.shape[1]
    nv = n_t * n_m  # weights c[x, y], x-major

    rows = []
    rhs = []
    for x in range(n_t):
        row = np.zeros(nv)
        row[x * n_m : (x + 1) * n_m] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for ident in targets:
        block, const = _identity_rows(ident, labels, n_m, mixers, constants, dim)
        rows.extend(block)
        rhs.extend(const)

    objective = np.zeros(nv)
    for x, lab in enumerate(labels):
        objective[x * n_m + mixer_labels.index(lab)] = 1.0

    lp = LinearProgram(
        n_vars=nv,
        objective=objective,
        sense="max",
        a_eq=np.array(rows),
        b_eq=np.array(rhs),
        upper=np.ones(nv),
    )
    sol = solve(lp)
    if sol.status == "infeasible":
        _, margin = farkas_gap(lp, sol.farkas)
        return SecondarySolution(
            target_labels=list(labels),
            mixer_labels=list(mixer_labels),
            weights=np.zeros((n_t, n_m)),
            secondaries=np.zeros((n_t, dim)),
            residuals=[np.inf for _ in targets],
            primary_weight=np.zeros(n_t),
            feasible=False,
            farkas_margin=float(margin),
        )

    weights = np.maximum(sol.x.reshape(n_t, n_m), 0.0)
    secondaries = weights @ mixers
    residuals = []
    for ident in targets:
        coeffs = dict(ident.terms)
        total = np.zeros(dim)
        for lab, c in coeffs.items():
            if lab in constants and lab not in labels:
                total += c * constants[lab]
            else:
                total += c * secondaries[labels.index(lab)]
        residuals.append(float(np.max(np.abs(total))))
    diag = np.array(
        [weights[x, mixer_labels.index(lab)] for x, lab in enumerate(labels)]
    )
    return SecondarySolution(
        target_labels=list(labels),
        mixer_labels=list(mixer_labels),
        weights=weights,
        secondaries=secondaries,
        residuals=residuals,
        primary_weight=diag,
    )
