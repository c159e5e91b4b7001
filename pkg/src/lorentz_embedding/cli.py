"""Command line scenario runner.

``eval`` runs one scenario file through classification, the case constant and the
oracle; ``catalog`` runs the built-in scenarios and writes per-scenario JSON plus a
CSV summary. Exit codes: 0 success, 1 ratio budget violated (catalog), 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
import zlib
from pathlib import Path

import numpy as np

from . import catalog
from .catalog import SCHEMA_VERSION, ScenarioError, problem_from_scenario
from .constants import (
    A1, A2, A3, A4, A5, A6, A7, A8,
    CaseTag,
    ConstantsError,
    WeakRepError,
    assum_W,
    assum_xi,
    classify,
    make_weak_rep,
    optimal_constant_estimate,
    weak_rep,
)
from .oracle import oracle_lower_bound, reduce_to_unit_u
from .quad import ext_div

RATIO_BUDGET = 32.0
DEFAULT_STEPS = 64
DEFAULT_BUDGET = 20000


def _num(x):
    x = float(x)
    if math.isnan(x):
        return None
    return "inf" if math.isinf(x) else x


def scenario_seed(name: str, master: int) -> int:
    """Per-scenario seed derived from the master seed and the scenario name."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def rep_from_json(obj, prob, tol: float):
    """Weak representation from ``{"mode": ...}``; ``user`` mode takes explicit parts."""
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ScenarioError("scenario.rep: expected an object")
    mode = obj.get("mode", "user")
    if mode in ("differentiable", "generic"):
        return weak_rep(prob, mode, tol=tol)
    if mode != "user":
        raise ScenarioError(f"scenario.rep.mode: unknown mode {mode!r}")
    try:
        atoms = [(float(s), float(m)) for s, m in obj.get("atoms", [])]
        rep = make_weak_rep(float(obj.get("gamma", 0.0)), float(obj.get("delta", 0.0)), prob.L, atoms,
                            B1=float(obj.get("B1", 1.0)), B2=float(obj.get("B2", 4.0)))
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"scenario.rep: {e}") from None
    return weak_rep(prob, "user", rep, tol=tol)


def applicable_constants(prob, rep):
    """Every A-constant that applies to the problem's case, by name."""
    case = classify(prob)
    if case is CaseTag.DEGENERATE:
        return {}
    if prob.weak:
        out = {"A6": A6(prob, rep)} if prob.q >= 1 else {"A7": A7(prob, rep), "A8": A8(prob)}
        return out
    out = {"A1": A1(prob)}
    if case is CaseTag.II:
        out["A2"] = A2(prob)
    elif case is CaseTag.III:
        out["A3"] = A3(prob)
    elif case is CaseTag.IV:
        out["A4"] = A4(prob)
        out["A5"] = A5(prob)
    return out


def evaluate(sc: dict, seed: int | None = None, n_steps: int | None = None, budget: int | None = None,
             tol: float = 1e-9) -> dict:
    """Full pipeline for one scenario dict; returns the JSON report.

    Warnings raised along the way (truncation, parameter bounds) are collected into
    ``flags["warnings"]`` instead of being printed.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = _evaluate(sc, seed, n_steps, budget, tol)
    report["flags"]["warnings"] = sorted({str(w.message) for w in caught})
    return report


def _evaluate(sc, seed, n_steps, budget, tol):
    prob = problem_from_scenario(sc)
    oracle_cfg = sc.get("oracle") or {}
    if not isinstance(oracle_cfg, dict):
        raise ScenarioError("scenario.oracle: expected an object")
    n_steps = int(n_steps if n_steps is not None else oracle_cfg.get("n_steps", DEFAULT_STEPS))
    budget = int(budget if budget is not None else oracle_cfg.get("budget", DEFAULT_BUDGET))
    seed = int(seed if seed is not None else oracle_cfg.get("seed", 0))
    case = classify(prob)
    rep = None
    if prob.weak and case is not CaseTag.DEGENERATE:
        if sc.get("rep") is None:
            rep = weak_rep(prob, "differentiable", tol=tol)
        else:
            rep = rep_from_json(sc["rep"], prob, tol)
    est = optimal_constant_estimate(prob, rep)
    consts = applicable_constants(prob, rep)
    orc = oracle_lower_bound(prob, n_steps, budget, seed)
    flags = {"degenerate": case is CaseTag.DEGENERATE}
    if not prob.weak and prob.q < 1 and prob.q < prob.p and not flags["degenerate"]:
        flags["assumW"] = assum_W(prob)
    if prob.weak and prob.q < 1 and not flags["degenerate"]:
        flags["assumxi"] = assum_xi(prob)
    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": sc.get("name", ""),
        "case": case.value,
        "A": est.to_json(),
        "constants": {k: r.to_json() for k, r in consts.items()},
        "oracle": {
            "C_lb": _num(orc.C_lb), "phase1": _num(orc.phase1), "evaluations": orc.evaluations,
            "n_steps": n_steps, "budget": budget, "skipped": orc.skipped, "witness": orc.witness.summary(),
        },
        "ratio": _num(ext_div(float(est.value), float(orc.C_lb))),
        "flags": flags,
        "seed": seed,
    }
    if rep is not None:
        report["rep"] = {"mode": rep.mode, "gamma": _num(rep.gamma), "delta": _num(rep.delta),
                         "B1": rep.B1, "B2": rep.B2, "kinks": [list(k) for k in rep.kinks]}
    if sc.get("name") in catalog.SUBSTITUTION or sc.get("substitution"):
        red = reduce_to_unit_u(prob)
        r_orc = oracle_lower_bound(red, n_steps, budget, seed)
        report["reduced"] = {
            "L": _num(red.L),
            "constants": {k: _num(r.value) for k, r in applicable_constants(red, None).items()},
            "C_lb": _num(r_orc.C_lb),
        }
    return report


def within_budget(report: dict, budget: float = RATIO_BUDGET) -> bool:
    if report["flags"]["degenerate"]:
        return report["A"]["value"] == 0.0
    ratio = report["ratio"]
    return isinstance(ratio, float) and 1.0 / budget <= ratio <= budget


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def summary_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["scenario", "case", "constant", "A", "C_lb", "ratio", "within_budget", "seed"])
    for r in reports:
        wr.writerow([r["scenario"], r["case"], r["A"]["name"], r["A"]["value"], r["oracle"]["C_lb"],
                     r["ratio"], within_budget(r), r["seed"]])
    return buf.getvalue()


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def cmd_eval(args) -> int:
    try:
        sc = json.loads(Path(args.scenario).read_text())
    except OSError as e:
        return _fail(f"scenario: cannot read {args.scenario}: {e.strerror}")
    except json.JSONDecodeError as e:
        return _fail(f"scenario: invalid JSON at line {e.lineno}: {e.msg}")
    try:
        report = evaluate(sc, args.seed, args.oracle_steps, args.budget, args.tol)
    except WeakRepError as e:
        return _fail(f"scenario.rep: {e}")
    except (ScenarioError, ConstantsError) as e:
        return _fail(str(e))
    text = _dump(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _case_matches(sc: dict, tag: str | None) -> bool:
    return tag is None or sc["case"].lower() == tag.lower()


def run_catalog(case: str | None = None, seed: int = 0) -> list[dict]:
    out = []
    for sc in catalog.SCENARIOS:
        if _case_matches(sc, case):
            out.append(evaluate(sc, seed=scenario_seed(sc["name"], seed)))
    return out


def cmd_catalog(args) -> int:
    if args.case is not None and not any(_case_matches(sc, args.case) for sc in catalog.SCENARIOS):
        return _fail(f"--case: unknown case tag {args.case!r}")
    reports = run_catalog(args.case, args.seed)
    table = summary_csv(reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            (out / f"{r['scenario']}.json").write_text(_dump(r))
        (out / "summary.csv").write_text(table)
    sys.stdout.write(table)
    return 0 if all(within_budget(r) for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lorentz-embedding", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("eval", help="evaluate one scenario file")
    ev.add_argument("--scenario", required=True, help="scenario JSON file")
    ev.add_argument("--report", help="write the JSON report here instead of stdout")
    ev.add_argument("--tol", type=float, default=1e-9, help="sandwich tolerance for weak representations")
    ev.add_argument("--oracle-steps", type=int, default=None, help="pieces of the oracle step functions")
    ev.add_argument("--budget", type=int, default=None, help="oracle evaluation budget")
    ev.add_argument("--seed", type=int, default=None, help="oracle seed")
    ev.set_defaults(func=cmd_eval)
    ca = sub.add_parser("catalog", help="run the built-in scenarios")
    ca.add_argument("--case", help="only scenarios of this case tag (I, II, III, IV, WEAK_GE1, ...)")
    ca.add_argument("--out", help="directory for per-scenario JSON and summary.csv")
    ca.add_argument("--seed", type=int, default=0, help="master seed")
    ca.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
