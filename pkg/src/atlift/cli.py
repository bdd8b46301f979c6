"""``atlift``: load a model file, run one verification suite and print a deterministic report.

Exit codes: 0 every check passed, 1 some check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from atlift.connection import (
    Report,
    atiyah_closed_form,
    atiyah_cocycle,
    check_compatibility,
    check_cyclic,
    delbar_part_of_u,
    verify_connection_identities,
)
from atlift.modelfile import Model, ModelError, load_model, require_valid

COMMANDS = ("validate", "atiyah", "linfty-check", "semiregularity", "mc")


def _limit_threads():
    """Cap BLAS worker threads before numpy is first imported."""
    cap = os.environ.get("ATLIFT_THREADS")
    if cap and cap.isdigit() and int(cap) > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = cap


def _elem(a) -> str:
    return str(a) if a else "0"


# ---------------------------------------------------------------------------
# suites; each returns (Report, extra data)


def suite_validate(model: Model, args) -> tuple[Report, dict]:
    rep = Report("validate")
    groups = {"bga": [], "complex": [], "connection": []}
    for v in model.violations:
        key = "bga"
        if v.axiom.startswith("delta"):
            key = "complex"
        elif v.axiom.startswith("gamma"):
            key = "connection"
        groups[key].append(str(v))
    B = model.algebra
    rep.add("bga-axioms", groups["bga"], B.dim)
    if model.complex is None:
        return rep, {"skipped": ["complex", "connection", "cyclic-form", "compatibility"]}
    rep.add("complex", groups["complex"], len(model.complex.delta_entries) + 1)
    rep.add("connection", groups["connection"], model.complex.rank)
    if model.connection is None:
        return rep, {"skipped": ["cyclic-form", "compatibility"]}
    cyc = check_cyclic(model.form, model.complex)
    comp = check_compatibility(model.connection, model.form)
    for sub in (cyc, comp):
        for c in sub.checks:
            rep.checks.append(c)
    return rep, {}


def suite_atiyah(model: Model, args) -> tuple[Report, dict]:
    D = model.connection
    u = atiyah_cocycle(D, check=True)
    closed = atiyah_closed_form(D)
    rep = Report("atiyah")
    rep.add("operator-route-matches-closed-form", [] if u == closed else [f"difference {u - closed}"], 1)
    for c in verify_connection_identities(D).checks:
        rep.checks.append(c)
    comps = {f"{p},{q},{n}": str(h) for (p, q, n), h in sorted(u.components().items())}
    return rep, {"u": str(u), "u_components": comps, "delbar_part": str(delbar_part_of_u(D))}


def suite_linfty(model: Model, args) -> tuple[Report, dict]:
    from atlift.sweep import MorphismTables, SourceData, sweep_conditions

    D, F = model.connection, model.form
    rep = Report("linfty-check")
    comp = check_compatibility(D, F)
    for c in comp.checks:
        rep.checks.append(c)
    if not comp.passed:
        return rep, {}
    src = SourceData(D)
    T = MorphismTables(src, F)
    results = sweep_conditions(T, args.max_n, args.seed)
    modes = {}
    for r in results:
        c = rep.add(f"C{r.n}", r.failures, r.tuples)
        modes[c.name] = r.mode
    return rep, {"source_dim": src.N, "target_dim": src.M, "modes": modes}


def suite_semiregularity(model: Model, args) -> tuple[Report, dict]:
    from atlift.deformation import SourceComplex
    from atlift.linfty import chern_cocycle, tau, truncated_d

    p = args.p
    D = model.connection
    cx = D.complex
    u = atiyah_cocycle(D)
    src = SourceComplex(cx)
    fails = []
    for a in range(len(src.idx)):
        f = src.to_hom({a: 1})
        lhs = truncated_d(tau(u, f, p), p)
        rhs = tau(u, src.to_hom(src.d({a: 1})), p)
        if lhs != rhs:
            fails.append(f"f={f}: d tau - tau d = {_elem(lhs - rhs)}")
    rep = Report("semiregularity")
    rep.add(f"tau{p}-chain-map", fails, len(src.idx))
    ch = chern_cocycle(u, p)
    dch = cx.base.d(ch)
    rep.add(f"chern{p}-closed", [] if not dch else [f"d ch = {dch}"], 1)
    return rep, {"chern": _elem(ch)}


def suite_mc(model: Model, args) -> tuple[Report, dict]:
    from atlift.deformation import check_obstruction_annihilation, target_boundary, pushforward_mc
    from atlift.linfty import build_g

    D, F = model.connection, model.form
    rep = Report("mc")
    comp = check_compatibility(D, F)
    for c in comp.checks:
        rep.checks.append(c)
    if not comp.passed:
        return rep, {}
    g = build_g(D, F, check=False)
    ann = check_obstruction_annihilation(D, F, args.trials, seed=args.seed, order=args.order, g=g)
    fails = [r.to_json() for r in ann.records if not r.ok]
    rep.add("obstructions-annihilated", fails, len(ann.records))
    push_fails = []
    for i, x in enumerate(ann.mc_elements):
        bd = target_boundary(g, pushforward_mc(g, x))
        if bd:
            push_fails.append({"element": i, "d_push": {x.ring.name(m): str(v) for m, v in sorted(bd.items())}})
    rep.add("pushforward-closed", push_fails, len(ann.mc_elements))
    by_order = {}
    for r in ann.records:
        by_order[str(r.order)] = by_order.get(str(r.order), 0) + 1
    data = {
        "trials": ann.trials,
        "unobstructed_to_order": ann.extended,
        "obstructions_by_order": by_order,
        "obstructions": [r.to_json() for r in ann.records],
    }
    return rep, data


SUITES = {
    "validate": suite_validate,
    "atiyah": suite_atiyah,
    "linfty-check": suite_linfty,
    "semiregularity": suite_semiregularity,
    "mc": suite_mc,
}


# ---------------------------------------------------------------------------
# rendering


def report_document(rep: Report, model: Model, args, data: dict, elapsed: float | None) -> dict:
    params = {k: getattr(args, k) for k in ("max_n", "p", "order", "trials") if getattr(args, k, None) is not None}
    doc = {
        "suite": rep.suite,
        "model": {"name": model.name, "sha256": model.sha256},
        "seed": args.seed,
        "params": params,
        "passed": rep.passed,
        "checks": [c.to_json() for c in rep.checks],
        "data": data,
    }
    if elapsed is not None:
        doc["timing_seconds"] = round(elapsed, 3)
    return doc


def render_text(doc: dict) -> str:
    lines = [
        f"suite: {doc['suite']}",
        f"model: {doc['model']['name']} sha256={doc['model']['sha256']}",
        f"seed: {doc['seed']}",
    ]
    for k, v in doc["params"].items():
        lines.append(f"{k}: {v}")
    for c in doc["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        lines.append(f"{status} {c['name']} ({c['checked']} checked)")
        for f in c["failures"]:
            lines.append(f"    {json.dumps(f, sort_keys=True) if not isinstance(f, str) else f}")
    for k, v in doc["data"].items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True)
        lines.append(f"{k}: {v}")
    if "timing_seconds" in doc:
        lines.append(f"time: {doc['timing_seconds']}s")
    lines.append("result: " + ("pass" if doc["passed"] else "FAIL"))
    return "\n".join(lines) + "\n"


def render(doc: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return render_text(doc)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atlift", description=__doc__.split("\n\n")[0].replace("``", ""))
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="model file path or bundled model name")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")

    common(sub.add_parser("validate", help="check the algebra, complex, connection and form"))
    common(sub.add_parser("atiyah", help="Atiyah cocycle and the connection identities"))
    p = sub.add_parser("linfty-check", help="conditions C1..Cn for the morphism g")
    common(p)
    p.add_argument("--max-n", type=int, default=5)
    p = sub.add_parser("semiregularity", help="tau_p chain map and Chern form closedness")
    common(p)
    p.add_argument("--p", type=int, required=True)
    p = sub.add_parser("mc", help="obstruction annihilation and MC pushforward")
    common(p)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--trials", type=int, default=25)
    return parser


def main(argv=None) -> int:
    _limit_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("max_n", "order", "trials"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            parser.print_usage(sys.stderr)
            print(f"atlift: error: --{name.replace('_', '-')} must be at least 1", file=sys.stderr)
            return 2
    if getattr(args, "p", None) is not None and args.p < 0:
        print("atlift: error: --p must be non-negative", file=sys.stderr)
        return 2
    try:
        model = load_model(args.model)
        if args.command != "validate":
            require_valid(model)
    except ModelError as exc:
        print(f"atlift: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    rep, data = SUITES[args.command](model, args)
    elapsed = time.perf_counter() - start if args.timing else None
    doc = report_document(rep, model, args, data, elapsed)
    sys.stdout.write(render(doc, args.format))
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
