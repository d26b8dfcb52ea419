"""Command-line front end.

    lorsub verify <input> [--suites ...] [--samples N] [--seed S] [--tol T]
                          [--kappa 0.5|1] [--format json|md] [--out PATH] [--detail]
    lorsub list
    lorsub export <name> --out PATH

``<input>`` is a catalog name (``lorsub list``) or a JSON chart file.  Exit
codes: 0 all criteria pass, 1 at least one fails, 2 input or degeneracy error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, antiinv, catalog, linalg
from .antiinv import CriterionResult
from .contact import verify_all
from .expr import ExprError
from .geometry import random_polynomial_field
from .submersion import (
    MissingDeclaredFieldsError,
    SubmersionError,
    analyze_split,
    map_identities,
    oneill_identities,
)

SUITES = ("structure", "submersion", "antiinv", "lemmas", "theorems", "decomposition")
MAX_REJECT_FACTOR = 50
FD_TOL = 1e-6


class InputError(Exception):
    """Unreadable input: exit code 2."""


@dataclass
class RunConfig:
    input: str
    suites: tuple = SUITES
    samples: int = 25
    seed: int = 0
    tol: float = 1e-9
    kappa: float = 0.5
    format: str = "json"
    n: Optional[int] = None
    epsilon: Optional[int] = None
    detail: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise InputError("--samples must be at least 1")
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.kappa not in (0.5, 1.0):
            raise InputError("--kappa must be 0.5 or 1")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise InputError(f"unknown suite(s): {', '.join(bad)}")

    def echo(self) -> dict:
        return {
            "input": self.input, "suites": list(self.suites), "samples": self.samples, "seed": self.seed,
            "tol": self.tol, "kappa": self.kappa, "n": self.n, "epsilon": self.epsilon, "detail": self.detail,
        }


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------

def load_input(cfg: RunConfig) -> catalog.CatalogEntry:
    src = cfg.input
    path = Path(src)
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"cannot read {src}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{src}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        try:
            return catalog.entry_from_dict(doc, name=path.stem)
        except KeyError as exc:
            raise InputError(f"{src}: missing field {exc}") from exc
        except (ExprError, ValueError) as exc:
            raise InputError(f"{src}: {exc}") from exc
    try:
        return catalog.load_example(src, n=cfg.n, epsilon=cfg.epsilon)
    except catalog.CatalogError as exc:
        raise InputError(str(exc.args[0])) from exc


def sample_points(entry: catalog.CatalogEntry, samples: int, seed: int, tol: float) -> tuple[list, int]:
    """Uniform points in the entry's box; near-degenerate points are rejected and redrawn."""
    rng = np.random.default_rng(seed)
    dim = entry.chart.dim
    pts, rejected = [], 0
    while len(pts) < samples:
        if rejected > MAX_REJECT_FACTOR * samples:
            raise InputError(f"could not find {samples} nondegenerate points ({rejected} rejected)")
        p = rng.uniform(-entry.box, entry.box, dim)
        try:
            linalg.check_nondegenerate(entry.chart.metric_at(p), tol)
            if entry.fmap is not None:
                analyze_split(entry.fmap, p, tol)
        except (linalg.LinalgError, SubmersionError, ZeroDivisionError, FloatingPointError, ExprError):
            rejected += 1
            continue
        pts.append(p)
    return pts, rejected


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _point_result(cid, k, p, residual, tol, note="") -> CriterionResult:
    return CriterionResult(cid, k, [float(v) for v in p], [], [], float(residual), tol, note)


def _suite_structure(entry, pts, cfg) -> list[CriterionResult]:
    out = []
    S = entry.structure
    for k, p in enumerate(pts):
        rep = verify_all(S, [p], cfg.tol, cfg.kappa)
        for name, ax in rep.axioms.items():
            out.append(_point_result(name, k, p, ax.worst, cfg.tol, ax.note))
    # Levi-Civita sanity on random polynomial fields, and AD against finite differences
    rng = np.random.default_rng([cfg.seed, 7])
    chart = entry.chart
    fields = [(random_polynomial_field(chart, rng), random_polynomial_field(chart, rng),
               random_polynomial_field(chart, rng)) for _ in range(5)]
    for k, p in enumerate(pts):
        loc = chart.at(p)
        tors = comp = 0.0
        for X, Y, Z in fields:
            tors = max(tors, float(np.max(np.abs(
                (loc.nabla(X, Y) - loc.nabla(Y, X) - loc.bracket(X, Y)).val))))
            lhs = loc.inner(Y, Z).directional(loc.field(X)).val
            rhs = (loc.inner(loc.nabla(X, Y), Z) + loc.inner(Y, loc.nabla(X, Z))).val
            comp = max(comp, abs(float(lhs - rhs)))
        out.append(_point_result("connection: torsion-free", k, p, tors, cfg.tol))
        out.append(_point_result("connection: metric-compatible", k, p, comp, cfg.tol))
        h = 1e-5
        grad = loc.G.d1
        fd = np.zeros_like(grad)
        for i in range(chart.dim):
            e = np.zeros(chart.dim)
            e[i] = h
            fd[..., i] = (chart.metric_at(p + e) - chart.metric_at(p - e)) / (2 * h)
        out.append(_point_result("connection: AD metric gradient = finite differences", k, p,
                                 float(np.max(np.abs(grad - fd))), FD_TOL, "central differences, h = 1e-5"))
    return out


def _suite_submersion(entry, pts, cfg) -> list[CriterionResult]:
    F, D = entry.fmap, entry.declared
    out = []
    for k, p in enumerate(pts):
        sp = analyze_split(F, p, cfg.tol, D)
        note = f"fiber {sp.fiber_signature.as_tuple()}, target {sp.target_signature.as_tuple()}"
        out.append(_point_result("isometry on horizontal vectors", k, p, sp.isometry_residual, cfg.tol, note))
        out.append(_point_result("vertical and horizontal frames g-orthogonal", k, p,
                                 sp.orthogonality_residual, cfg.tol))
        out.append(_point_result("dF annihilates the vertical frame", k, p, sp.kernel_residual, cfg.tol))
        for name, r in sp.declared_residuals.items():
            out.append(_point_result(name, k, p, r, cfg.tol))
        if (D is not None and D.vertical) or len(sp.vertical) == 0:
            for name, r in oneill_identities(F, p, D, cfg.tol, sp).items():
                out.append(_point_result(name, k, p, r, cfg.tol))
        for name, r in map_identities(F, p, D, cfg.tol, sp).items():
            out.append(_point_result(name, k, p, r, cfg.tol))
    return out


def _suite_antiinv(entry, pts, cfg) -> list[CriterionResult]:
    F, S, D = entry.fmap, entry.structure, entry.declared
    out = []
    for k, p in enumerate(pts):
        out.append(antiinv.check_anti_invariance(F, S, p, cfg.tol, D, k))
        out.extend(antiinv.xi_position_and_dimension_audit(F, S, p, cfg.tol, D, k))
        ap = antiinv.anti_point(F, S, p, D, cfg.tol, k)
        if ap.Pmu is not None:
            for x in ap.X:
                r = antiinv.bc_mu_decompose(F, S, x, p, cfg.tol, D)
                for name, v in r.residuals.items():
                    out.append(_point_result(name, k, p, v, cfg.tol))
    if entry.expected:
        out.extend(antiinv.check_expected_facts(F, S, entry.expected, pts, cfg.tol, D))
    return out


def _suite_lemmas(entry, pts, cfg):
    return antiinv.lemma_residual_suite(entry.fmap, entry.structure, pts, cfg.tol, entry.declared)


def _suite_theorems(entry, pts, cfg):
    F, S, D = entry.fmap, entry.structure, entry.declared
    return (antiinv.integrability_check(F, S, pts, cfg.tol, D)
            + antiinv.foliation_checks(F, S, pts, cfg.tol, D)
            + antiinv.tg_map_and_harmonic_criteria(F, S, pts, cfg.tol, D))


def _suite_decomposition(entry, pts, cfg):
    v = antiinv.decomposition_classify(entry.fmap, entry.structure, pts, cfg.tol, entry.declared)
    out = list(v.results)
    out.append(CriterionResult("decomposition verdict stable across points", -1, [], [], [],
                               0.0 if v.stable else 1.0, 0.0, "; ".join(v.notes)))
    return out, {"classification": v.classification, "flags": v.flags, "per_point": v.per_point,
                 "stable": v.stable, "notes": v.notes}


_RUNNERS = {
    "structure": _suite_structure,
    "submersion": _suite_submersion,
    "antiinv": _suite_antiinv,
    "lemmas": _suite_lemmas,
    "theorems": _suite_theorems,
    "decomposition": _suite_decomposition,
}


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def aggregate(results: Sequence[CriterionResult]) -> list[dict]:
    """Worst residual per criterion id, in first-seen order."""
    rows: dict[str, dict] = {}
    for r in sorted(results, key=lambda r: r.point_index):
        row = rows.setdefault(r.id, {"id": r.id, "worst_residual": 0.0, "tol": r.tol, "passed": True,
                                     "evaluated": 0, "skipped": 0, "failed_points": [], "note": "",
                                     "info": r.info})
        if r.skipped:
            row["skipped"] += 1
            row["note"] = row["note"] or r.note
            continue
        row["evaluated"] += 1
        row["worst_residual"] = max(row["worst_residual"], float(r.residual))
        row["tol"] = max(row["tol"], r.tol)
        if not r.verdict:
            row["passed"] = False  # for info rows: "does not hold everywhere"
            if r.point_index not in row["failed_points"]:
                row["failed_points"].append(r.point_index)
            row["note"] = r.note or row["note"]
        elif not row["note"]:
            row["note"] = r.note
    for row in rows.values():
        row["worst_residual"] = _num(row["worst_residual"])
    return list(rows.values())


def run(cfg: RunConfig) -> tuple[dict, int]:
    """Execute the configured suites; returns the report and the exit code."""
    report: dict = {"tool": {"name": "lorsub", "version": __version__}, "config": cfg.echo()}
    try:
        entry = load_input(cfg)
        pts, rejected = sample_points(entry, cfg.samples, cfg.seed, cfg.tol)
    except InputError as exc:
        report["error"] = str(exc)
        report["verdict"] = "error"
        return report, 2
    report["input"] = {"name": entry.name, "description": entry.description, "dim": entry.chart.dim}
    report["sampling"] = {"box": entry.box, "rejected": rejected,
                          "points": [[float(v) for v in p] for p in pts]}
    suites = []
    overall = True
    for name in cfg.suites:
        block: dict = {"name": name}
        if name != "structure" and entry.fmap is None:
            block.update(skipped=True, note="input has no map", criteria=[])
            suites.append(block)
            continue
        try:
            res = _RUNNERS[name](entry, pts, cfg)
        except (linalg.LinalgError, SubmersionError, MissingDeclaredFieldsError, ValueError) as exc:
            report["error"] = f"suite {name}: {exc}"
            report["verdict"] = "error"
            report["suites"] = suites
            return report, 2
        if isinstance(res, tuple):
            res, extra = res
            block["decomposition"] = extra
        rows = aggregate(res)
        block["criteria"] = rows
        block["passed"] = all(r["passed"] for r in rows if not r["info"])
        if cfg.detail:
            block["results"] = [_clean(r.as_dict()) for r in res]
        overall = overall and block["passed"]
        suites.append(block)
    report["suites"] = suites
    report["verdict"] = "pass" if overall else "fail"
    return report, 0 if overall else 1


def _clean(d: dict) -> dict:
    return {k: ([_num(x) for x in v] if k in ("point", "lhs", "rhs") else _num(v) if k in ("residual", "tol") else v)
            for k, v in d.items()}


def to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_markdown(report: dict) -> str:
    lines = [f"# lorsub report: {report.get('input', {}).get('name', report['config']['input'])}", ""]
    lines.append(f"verdict: **{report['verdict']}**")
    if "error" in report:
        lines += ["", f"error: {report['error']}"]
    if "sampling" in report:
        s = report["sampling"]
        lines.append(f"points: {len(s['points'])} (seed {report['config']['seed']}, rejected {s['rejected']})")
    for block in report.get("suites", []):
        lines += ["", f"## {block['name']}", ""]
        if block.get("skipped"):
            lines.append(f"skipped: {block['note']}")
            continue
        if "decomposition" in block:
            lines += [f"classification: {block['decomposition']['classification']}", ""]
        lines += ["| criterion | worst residual | tol | result |", "|---|---|---|---|"]
        for r in block["criteria"]:
            if r["evaluated"] == 0:
                status = "skipped"
            elif r["info"]:
                status = "holds" if r["passed"] else f"does not hold ({len(r['failed_points'])} pts)"
            else:
                status = "pass" if r["passed"] else f"FAIL ({len(r['failed_points'])} pts)"
            w = r["worst_residual"]
            ws = f"{w:.3e}" if isinstance(w, float) else str(w)
            lines.append(f"| {r['id'].replace('|', '/')} | {ws} | {r['tol']:.0e} | {status} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lorsub", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites on a catalog entry or chart file")
    v.add_argument("input")
    v.add_argument("--suites", nargs="+", default=["all"], choices=list(SUITES) + ["all"])
    v.add_argument("--samples", type=int, default=25)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--kappa", type=float, default=0.5, choices=[0.5, 1.0])
    v.add_argument("--format", choices=["json", "md"], default="json")
    v.add_argument("--out")
    v.add_argument("--n", type=int, help="model-r2n1: half-dimension n")
    v.add_argument("--epsilon", type=int, choices=[-1, 1], help="model-r2n1: structure sign")
    v.add_argument("--detail", action="store_true", help="include per-point results")
    sub.add_parser("list", help="list catalog entries")
    e = sub.add_parser("export", help="write a catalog entry as a chart file")
    e.add_argument("name")
    e.add_argument("--out", required=True)
    e.add_argument("--n", type=int)
    e.add_argument("--epsilon", type=int, choices=[-1, 1])
    return ap


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name in catalog.list_examples():
            print(name)
        return 0
    if args.command == "export":
        try:
            entry = catalog.load_example(args.name, n=args.n, epsilon=args.epsilon)
        except catalog.CatalogError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return 2
        _write(json.dumps(catalog.entry_to_dict(entry), indent=2, sort_keys=True) + "\n", args.out)
        return 0
    suites = SUITES if "all" in args.suites else tuple(dict.fromkeys(args.suites))
    try:
        cfg = RunConfig(args.input, suites, args.samples, args.seed, args.tol, args.kappa, args.format,
                        args.n, args.epsilon, args.detail)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report, code = run(cfg)
    _write(to_json(report) if cfg.format == "json" else to_markdown(report), args.out)
    if code == 2:
        print(f"error: {report.get('error')}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
