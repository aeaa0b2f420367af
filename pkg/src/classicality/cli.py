"""Command-line front end: file-based, reproducible analyses.

Every run writes a single JSON report to standard output (or ``-o``);
verdicts live in the report, never in the exit code.  Exit status 0
means the analysis completed, 2 an input or format problem, 3 a
resource-limit problem.  Typed outputs (fragments, statistics, counts,
identities) are valid inputs to the subcommands that consume them, so
analyses compose through files or pipes.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import serialize
from .embedding import accessibilize, robustness, test_embeddability, to_model
from .errors import FormatError, NumericalError, ResourceLimitError
from .fragments import Fragment, partial_trace, predict, tensor, validate
from .identities import check_identity, find_identities, induced_marginal_identities
from .linalg import DEFAULT_RANK_TOL
from .noncontextuality import evaluate, membership, response_vertices
from .scenarios import SCENARIO_NAMES, build
from .secondary import secondary_effects, secondary_states
from .serialize import dumps
from .tomography import fit, synth, verdict_pipeline

LP_TOL = 1e-8
BISECTION_TOL = 1e-6


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise FormatError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def _write(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tolerances(args) -> dict:
    return {
        "rank": args.tol,
        "lp": LP_TOL,
        "bisection": BISECTION_TOL,
    }


def _load_fragment(path: str) -> Fragment:
    return serialize.fragment_from_obj(_read_json(path))


def _load_identities(path: str):
    obj = _read_json(path)
    if isinstance(obj, dict) and "identities" in obj:
        obj = obj["identities"]
    return serialize.identities_from_obj(obj)


def _geometry(fragment: Fragment) -> dict:
    states = fragment.state_matrix()
    center = states.mean(axis=0)
    centered = states - center
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[: min(3, vt.shape[0])]
    coords = centered @ axes.T
    return {
        "axes": axes.tolist(),
        "center": center.tolist(),
        "states": [
            {"label": v.label, "coordinates": coords[i].tolist()}
            for i, v in enumerate(fragment.states)
        ],
    }


def _finish(args, obj: dict) -> int:
    obj.setdefault("tolerances", _tolerances(args))
    if getattr(args, "seed", None) is not None:
        obj.setdefault("seed", args.seed)
    if getattr(args, "emit_geometry", False) and "_geometry_source" in obj:
        obj["geometry"] = _geometry(obj.pop("_geometry_source"))
    obj.pop("_geometry_source", None)
    _write(dumps(obj), args.output)
    return 0


# -- subcommand handlers -------------------------------------------------


def _cmd_scenario(args) -> int:
    params = {}
    if args.dimension is not None:
        params["d"] = args.dimension
    if args.variant is not None:
        params["variant"] = args.variant
    bundle = build(args.name, **params)
    if args.with_stats:
        _write(dumps(serialize.statistics_to_obj(bundle.statistics)), args.with_stats)
    obj = serialize.fragment_to_obj(bundle.fragment)
    obj["_geometry_source"] = bundle.fragment
    return _finish(args, obj)


def _cmd_validate(args) -> int:
    fragment = _load_fragment(args.fragment)
    report = validate(fragment, args.tol)
    obj = {
        "passed": report.passed,
        "violations": [
            {
                "kind": v.kind,
                "labels": list(v.labels),
                "magnitude": None if not np.isfinite(v.magnitude) else v.magnitude,
            }
            for v in report.violations
        ],
        "_geometry_source": fragment,
    }
    return _finish(args, obj)


def _cmd_predict(args) -> int:
    fragment = _load_fragment(args.fragment)
    stats = predict(fragment, args.tol)
    obj = serialize.statistics_to_obj(stats)
    obj["_geometry_source"] = fragment
    return _finish(args, obj)


def _cmd_identities(args) -> int:
    fragment = _load_fragment(args.fragment)
    if args.marginalize:
        idents = induced_marginal_identities(fragment, args.marginalize, args.tol)
    else:
        idents = find_identities(fragment, args.side, args.tol)
    return _finish(args, {"identities": serialize.identities_to_obj(idents)})


def _cmd_embed(args) -> int:
    fragment = _load_fragment(args.fragment)
    af = accessibilize(fragment, args.tol)
    result = test_embeddability(af, args.tol)
    inequality = None
    model_obj = None
    if result.embeddable:
        model = to_model(result.certificate, af)
        model_obj = {
            "ontic_states": model.ontic_labels,
            "mu": model.mu.tolist(),
            "xi": [x.tolist() for x in model.xi],
        }
    else:
        # The inequality pairs with the geometric verdict, so identities
        # come from the projected (accessible) vectors.
        from .embedding import accessible_identities

        stats = predict(fragment, args.tol)
        state_idents, effect_idents = accessible_identities(af, args.tol)
        mem = membership(
            stats,
            state_idents,
            effect_identities=effect_idents,
            provenance=f"embed:{fragment.name}",
        )
        if not mem.feasible:
            inequality = mem.inequality
    obj = serialize.certificate_to_obj(result, inequality)
    obj["accessible_dimension"] = af.dimension
    if model_obj is not None:
        obj["model"] = model_obj
    obj["_geometry_source"] = fragment
    return _finish(args, obj)


def _cmd_robustness(args) -> int:
    fragment = _load_fragment(args.fragment)
    af = accessibilize(fragment, args.tol)
    rob = robustness(af, args.tol)
    obj = {
        "r_star": rob.r_star,
        "noise_center": rob.noise_center.tolist(),
        "residual": rob.certificate.residual,
        "_geometry_source": fragment,
    }
    return _finish(args, obj)


def _cmd_membership(args) -> int:
    stats = serialize.statistics_from_obj(_read_json(args.statistics))
    state_idents = _load_identities(args.identities) if args.identities else []
    effect_idents = (
        _load_identities(args.effect_identities) if args.effect_identities else []
    )
    result = membership(
        stats,
        state_idents,
        effect_identities=effect_idents,
        provenance="membership-cli",
    )
    obj: dict = {"feasible": result.feasible}
    if result.feasible:
        obj["model"] = {
            "ontic_states": result.model.ontic_labels,
            "mu": result.model.mu.tolist(),
            "xi": [x.tolist() for x in result.model.xi],
        }
    else:
        obj["inequality"] = serialize.inequality_to_obj(result.inequality)
    return _finish(args, obj)


def _cmd_evaluate(args) -> int:
    obj = _read_json(args.inequality)
    # Accept bare inequality files and reports that nest one.
    if isinstance(obj, dict):
        obj = obj.get("inequality", obj.get("violated_inequality", obj))
    ineq = serialize.inequality_from_obj(obj)
    stats = serialize.statistics_from_obj(_read_json(args.statistics))
    verdict = evaluate(ineq, stats, args.tol if args.tol else 1e-9)
    return _finish(
        args,
        {"value": verdict.value, "bound": verdict.bound, "violated": verdict.violated},
    )


def _cmd_secondary(args) -> int:
    fragment = _load_fragment(args.fragment)
    targets = _load_identities(args.identities)
    if args.side == "states":
        realized = [(v.label, v.vector) for v in fragment.states]
        sol = secondary_states(realized, targets)
    else:
        realized = [(v.label, v.vector) for v in fragment.effects]
        sol = secondary_effects(realized, fragment.unit_effect, targets)
    obj = serialize.secondary_to_obj(sol)
    if args.report_robustness and args.side == "states" and sol.feasible:
        # Experimental: robustness of the fragment with repaired states.
        from dataclasses import replace

        from .fragments import GptVector

        repaired = replace(
            fragment,
            name=f"{fragment.name}+secondary",
            states=[
                GptVector(lab, sol.secondaries[i], "state")
                for i, lab in enumerate(sol.target_labels)
            ],
        )
        rob = robustness(accessibilize(repaired, max(args.tol, 1e-7)), args.tol)
        obj["secondary_robustness"] = {"r_star": rob.r_star, "experimental": True}
    return _finish(args, obj)


def _cmd_tomo_synth(args) -> int:
    fragment = _load_fragment(args.fragment)
    table = synth(fragment, args.trials, args.seed if args.seed is not None else 0)
    return _finish(args, serialize.counts_to_obj(table))


def _cmd_tomo_fit(args) -> int:
    counts = serialize.counts_from_obj(_read_json(args.counts))
    result = fit(
        counts, max_dimension=args.max_dim, seed=args.seed if args.seed is not None else 0
    )
    obj = serialize.fragment_to_obj(result.fragment)
    obj["fit"] = {
        "dimension": result.dimension,
        "chi_squared": result.chi_squared,
        "dof": result.dof,
        "chi_squared_trace": [[k, c] for k, c in result.chi_squared_trace],
        "gauge": result.gauge,
        "state_condition": result.state_condition,
        "effect_condition": result.effect_condition,
        "tomographic_completeness": "assumed, not certified",
    }
    return _finish(args, obj)


def _cmd_pipeline(args) -> int:
    counts = serialize.counts_from_obj(_read_json(args.counts))
    result = verdict_pipeline(
        counts,
        max_dimension=args.max_dim,
        seed=args.seed if args.seed is not None else 0,
        tol=max(args.tol, 1e-7),
    )
    return _finish(
        args,
        {
            "dimension": result.fit.dimension,
            "chi_squared": result.fit.chi_squared,
            "verdict": "embeddable" if result.embeddable else "not_embeddable",
            "strict_lp_verdict": (
                "embeddable" if result.strictly_embeddable else "not_embeddable"
            ),
            "r_star": result.r_star,
            "noise_threshold": result.noise_threshold,
            "tomographic_completeness": "assumed, not certified",
        },
    )


def _cmd_tensor(args) -> int:
    a = _load_fragment(args.fragment_a)
    b = _load_fragment(args.fragment_b)
    composite = tensor(a, b, args.tol)
    obj = serialize.fragment_to_obj(composite)
    obj["_geometry_source"] = composite
    return _finish(args, obj)


def _cmd_marginalize(args) -> int:
    fragment = _load_fragment(args.fragment)
    marginal = partial_trace(fragment, args.keep, args.tol)
    obj = serialize.fragment_to_obj(marginal)
    obj["_geometry_source"] = marginal
    return _finish(args, obj)


# -- parser ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("-o", "--output", default="-", help="report path ('-' = stdout)")
    p.add_argument(
        "--tol",
        type=float,
        default=DEFAULT_RANK_TOL,
        help="rank/identity tolerance (default 1e-9), echoed in the report",
    )
    p.add_argument("--seed", type=int, default=None, help="seed for stochastic steps")
    p.add_argument(
        "--emit-geometry",
        action="store_true",
        help="add 2D/3D state-space cross-sections (coordinate lists) to the report",
    )
    p.add_argument("--format", choices=["json"], default="json", help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="classicality",
        description="Classical-explainability analysis of prepare-measure GPT fragments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="build a named example scenario")
    p.add_argument("name", choices=SCENARIO_NAMES)
    p.add_argument("--dimension", type=int, default=None, help="simplex dimension d")
    p.add_argument("--variant", choices=["A", "B"], default=None, help="lab-notebook variant")
    p.add_argument("--with-stats", default=None, help="also write exact statistics here")
    _add_common(p)
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("validate", help="check fragment consistency")
    p.add_argument("fragment")
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("predict", help="exact outcome statistics of a fragment")
    p.add_argument("fragment")
    _add_common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("identities", help="operational identities of a fragment")
    p.add_argument("fragment")
    p.add_argument("--side", choices=["states", "effects"], default="states")
    p.add_argument(
        "--marginalize",
        default=None,
        metavar="KEEP",
        help="find identities induced by marginalizing onto this subsystem",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_identities)

    p = sub.add_parser("embed", help="simplex-embeddability test with certificate")
    p.add_argument("fragment")
    _add_common(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("robustness", help="depolarizing robustness of a fragment")
    p.add_argument("fragment")
    _add_common(p)
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("membership", help="noncontextual-model membership of statistics")
    p.add_argument("statistics")
    p.add_argument("--identities", default=None, help="state-identity file")
    p.add_argument("--effect-identities", default=None, help="effect-identity file")
    _add_common(p)
    p.set_defaults(func=_cmd_membership)

    p = sub.add_parser("evaluate", help="evaluate an inequality on statistics")
    p.add_argument("inequality")
    p.add_argument("statistics")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("secondary", help="secondary states/effects meeting identities")
    p.add_argument("fragment")
    p.add_argument("--identities", required=True, help="target identity file")
    p.add_argument("--side", choices=["states", "effects"], default="states")
    p.add_argument(
        "--report-robustness",
        action="store_true",
        help="experimental: robustness of the repaired fragment",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_secondary)

    p = sub.add_parser("tomo-synth", help="simulate finite-count statistics")
    p.add_argument("fragment")
    p.add_argument("--trials", type=int, required=True, help="trials per cell")
    _add_common(p)
    p.set_defaults(func=_cmd_tomo_synth)

    p = sub.add_parser("tomo-fit", help="fit dimension and vectors to counts")
    p.add_argument("counts")
    p.add_argument("--max-dim", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=_cmd_tomo_fit)

    p = sub.add_parser("pipeline", help="counts -> fit -> embeddability verdict")
    p.add_argument("counts")
    p.add_argument("--max-dim", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("tensor", help="Kronecker composite of two fragments")
    p.add_argument("fragment_a")
    p.add_argument("fragment_b")
    _add_common(p)
    p.set_defaults(func=_cmd_tensor)

    p = sub.add_parser("marginalize", help="partial trace onto one subsystem")
    p.add_argument("fragment")
    p.add_argument("--keep", required=True, help="subsystem to keep")
    _add_common(p)
    p.set_defaults(func=_cmd_marginalize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
