"""Command-line front end: ``ermconc bound | experiment | verify | mcdiarmid-sim``.

Configuration is a TOML file with a strict schema; unknown keys are errors.
Exit codes: 0 success, 1 acceptance failure, 2 config or regime error,
3 I/O error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import tomli
import tomli_w

from . import __version__, montecarlo, orlicz, problems, transport
from .bounds import (BoundQuery, ConcentrationParams, corollary_b2a1_probability, corollary_expectation_b2a1,
                     derive_constants, expectation_bound, theorem_bound)
from .core import RngSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


_num = (int, float)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {
        "n_grid": (list, [25, 100, 400, 1600]),
        "reps": (int, 2000),
        "base_seed": (int, 20240601),
        "delta_grid": (list, [0.2, 0.1, 0.05, 0.01]),
        "bound_delta": (_num, 0.05),
        "out": (str, "ermconc-out"),
        "threads": (int, 1),
        "timing": (bool, False),
    },
    "bound": {
        "beta": (_num, 2.0),
        "alpha": (_num, 1.0),
        "tau": (_num, 1.0),
        "j0": (_num, math.inf),
        "psi1_a": (_num, 1.0),
        "diam_s": (_num, 0.0),
        "p_n": (_num, 0.0),
        "n": (list, [100]),
        "delta": (list, [0.05]),
    },
    "verify": {
        "problems": (list, ["euclidean", "spider", "eigenvector", "lasso", "entropic"]),
        "n_quadruples": (int, 100_000),
        "n_points": (int, 10_000),
        "n_entropic_quadruples": (int, 1000),
        "n_entropic_points": (int, 100),
        "entropic_grid": (int, 32),
        "entropic_tau": (_num, -1.0),
        "a_scale": (_num, 1.0),
        "seed": (int, 7),
    },
    "mcdiarmid": {
        "n": (int, 50),
        "reps": (int, 10_000),
        "t_grid": (list, [0.01 + 0.19 * k / 9 for k in range(10)]),
        "t_grid_extended": (list, [0.05 + 0.05 * k for k in range(10)]),
        "p_bad": (_num, 0.01),
        "jump": (_num, 10.0),
    },
    "tolerances": {
        "quadruple": (_num, 1e-9),
        "variance": (_num, 1e-9),
        "entropic_quadruple": (_num, 1e-8),
        "confidence": (_num, 0.99),
    },
}


def _problem_fields(name: str) -> Dict[str, dataclasses.Field]:
    cls = problems.PROBLEMS[name]
    return {f.name: f for f in dataclasses.fields(cls) if f.name != "name"}


def _check_type(section: str, key: str, value, typ) -> Any:
    if typ is bool:
        ok = isinstance(value, bool)
    elif typ is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif typ is _num:
        ok = isinstance(value, _num) and not isinstance(value, bool)
    else:
        ok = isinstance(value, typ)
    if not ok:
        raise ConfigError(f"[{section}] {key}: expected {getattr(typ, '__name__', 'number')}, got {value!r}")
    return float(value) if typ is _num else value


@dataclass
class RunConfig:
    """Validated configuration.  ``problem`` holds ``name`` plus problem fields."""

    sections: Dict[str, Dict[str, Any]]
    problem: Optional[Dict[str, Any]]

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        raw = copy.deepcopy(raw)
        unknown = set(raw) - set(SCHEMA) - {"problem"}
        if unknown:
            raise ConfigError(f"unknown section(s): {sorted(unknown)}")
        sections = {}
        for sec, spec in SCHEMA.items():
            given = raw.get(sec, {})
            if not isinstance(given, dict):
                raise ConfigError(f"[{sec}] must be a table")
            bad = set(given) - set(spec)
            if bad:
                raise ConfigError(f"[{sec}] unknown key(s): {sorted(bad)}")
            sections[sec] = {k: _check_type(sec, k, given[k], t) if k in given else copy.deepcopy(d)
                             for k, (t, d) in spec.items()}
        prob = raw.get("problem")
        if prob is not None:
            if not isinstance(prob, dict) or "name" not in prob:
                raise ConfigError("[problem] needs a name")
            if prob["name"] not in problems.PROBLEMS:
                raise ConfigError(f"[problem] unknown name {prob['name']!r}; choose from {sorted(problems.PROBLEMS)}")
            fields = _problem_fields(prob["name"])
            bad = set(prob) - set(fields) - {"name"}
            if bad:
                raise ConfigError(f"[problem] unknown key(s) for {prob['name']}: {sorted(bad)}")
        cfg = cls(sections, prob)
        cfg._validate()
        return cfg

    def _validate(self):
        run = self.sections["run"]
        if run["reps"] < 1:
            raise ConfigError("[run] reps must be positive")
        if not all(isinstance(n, int) and n >= 1 for n in run["n_grid"]):
            raise ConfigError("[run] n_grid must hold positive integers")
        if not all(isinstance(d, _num) and 0 < d <= 1 for d in run["delta_grid"]):
            raise ConfigError("[run] delta_grid entries must lie in (0, 1]")
        if self.sections["verify"]["problems"] and not all(p in problems.PROBLEMS for p in self.sections["verify"]["problems"]):
            raise ConfigError(f"[verify] problems must be among {sorted(problems.PROBLEMS)}")

    def to_dict(self) -> Dict[str, Any]:
        out = copy.deepcopy(self.sections)
        if self.problem is not None:
            out["problem"] = copy.deepcopy(self.problem)
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @property
    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True, default=str).encode()).hexdigest()[:16]

    def build_problem(self):
        if self.problem is None:
            raise ConfigError("no [problem] block")
        kw = {}
        for k, v in self.problem.items():
            if k == "name":
                continue
            kw[k] = _tupleize(v)
        try:
            return problems.PROBLEMS[self.problem["name"]](**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[problem] {exc}") from exc


def _tupleize(v):
    return tuple(_tupleize(x) for x in v) if isinstance(v, list) else v


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig.from_dict({})
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
    return RunConfig.from_dict(raw)


def _header(cfg: RunConfig, comment: str = "#") -> str:
    return f"{comment} ermconc {__version__} config_hash={cfg.hash}\n"


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_bound(cfg: RunConfig, out: Optional[str]) -> int:
    b = cfg.sections["bound"]
    if cfg.problem is not None:
        p = cfg.build_problem().params()
        pn_of = p.p_n_raw
    else:
        p = ConcentrationParams(beta=b["beta"], alpha=b["alpha"], tau=b["tau"], j0=b["j0"],
                                psi1_a=b["psi1_a"], diam_s=b["diam_s"], eta=b["p_n"])
        pn_of = lambda n: b["p_n"]
    dc = derive_constants(p)  # raises on regime violations
    rows = []
    for n in b["n"]:
        pn = pn_of(n)
        for delta in b["delta"]:
            tb = theorem_bound(p, dc, BoundQuery(n, delta, pn))
            row = {"n": n, "delta": delta, "p_n": pn, "theorem": tb.value, "probability": tb.probability,
                   "expectation": expectation_bound(p, dc, n, pn)}
            if p.beta == 2 and p.alpha == 1:
                row["corollary"] = corollary_b2a1_probability(p.L, p.diam_s, n, delta, pn)
                row["corollary_expectation"] = corollary_expectation_b2a1(p.L, p.diam_s, n, pn)
            rows.append(row)
    cols = list(rows[0])
    print(f"L={dc.L:.6g} K={dc.K:.6g} c1={dc.c1:.6g} c2={dc.c2:.6g} q={dc.q:g} Q={dc.Q:g} s={dc.s:g}")
    print("\t".join(cols))
    for r in rows:
        print("\t".join(f"{r[c]:.6g}" for c in cols))
    if out:
        doc = {"config_hash": cfg.hash, "version": __version__, "constants": dataclasses.asdict(dc), "rows": rows}
        _write(os.path.join(out, "bound.json"), json.dumps(doc, indent=2, default=_json_default) + "\n")
    return EXIT_OK


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def records_csv(records, cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "n", "rep", "seed", "distance", "status", "millis"])
    timing = cfg.sections["run"]["timing"]
    for r in records:
        w.writerow([r.problem, r.n, r.rep, r.seed, repr(float(r.distance)), r.status,
                    f"{r.millis:.3f}" if timing else "0"])
    return buf.getvalue()


def plot_data(report: montecarlo.RateReport, cfg: RunConfig) -> str:
    lines = [_header(cfg).rstrip("\n"), "# n\tq50\tq90\tq95\tmean\tbound"]
    for i, n in enumerate(report.n_grid):
        b = report.bound_curve[i] if report.bound_curve else math.nan
        lines.append("\t".join([str(n)] + [repr(report.quantiles[k][i]) for k in ("0.5", "0.9", "0.95")]
                               + [repr(report.mean[i]), repr(b)]))
    return "\n".join(lines) + "\n"


def cmd_experiment(cfg: RunConfig, out: Optional[str], threads: int) -> int:
    run = cfg.sections["run"]
    prob = cfg.build_problem()
    if run["reps"] < montecarlo.MIN_REPS:
        raise ConfigError(f"reps below minimum {montecarlo.MIN_REPS}")
    records = montecarlo.run_experiment(prob, run["n_grid"], run["reps"], RngSpec(run["base_seed"]), threads)
    params = prob.params()
    report = montecarlo.fit_rate(records, params, run["bound_delta"], cfg.sections["tolerances"]["confidence"])
    if isinstance(prob, problems.EuclideanBarycenterProblem):
        chk = montecarlo.expectation_check(records, prob.trace, 2**8 * prob.rho_psi1**2)
        report.flags["expectation_pass"] = all(v["passed"] for v in chk.values())
    else:
        report.flags["expectation_pass"] = None
    out = out or run["out"]
    _write(os.path.join(out, "records.csv"), records_csv(records, cfg))
    doc = report.to_json(cfg.hash)
    doc["version"] = __version__
    _write(os.path.join(out, "report.json"), json.dumps(doc, indent=2, default=_json_default) + "\n")
    _write(os.path.join(out, "plot.tsv"), plot_data(report, cfg))
    print(f"{prob.name}: slope={report.slope:.4f} r2={report.r2:.4f} flags={report.flags}"
          + (f" pre-asymptotic n={report.pre_asymptotic}" if report.pre_asymptotic else ""))
    flags = [v for k, v in report.flags.items() if v is not None]
    return EXIT_OK if all(flags) else EXIT_FAIL


def verify_suite(cfg: RunConfig):
    """Yield (check name, value, tolerance, passed) for the configured problems."""
    v, tol = cfg.sections["verify"], cfg.sections["tolerances"]
    rng = np.random.default_rng(v["seed"])
    for name in v["problems"]:
        if cfg.problem is not None and cfg.problem["name"] == name:
            prob = cfg.build_problem()
        else:
            prob = problems.PROBLEMS[name]()
        if name == "entropic":
            g = transport.Grid.uniform(v["entropic_grid"])
            a = 4.0 * g.diam**2 * v["a_scale"]
            val = transport.verify_entropic_quadruple(g, v["n_entropic_quadruples"], rng, a_const=a)
            yield f"{name}: quadruple", val, tol["entropic_quadruple"], val <= tol["entropic_quadruple"]
            tau = v["entropic_tau"] if v["entropic_tau"] > 0 else prob.lam / 2.0
            batch = prob.sample(rng, 20)
            res = problems.verify_entropic_strong_convexity(prob, batch, v["n_entropic_points"], rng, tau=tau)
            yield f"{name}: variance (tau={tau:g})", res["max_violation"], 0.0, res["max_violation"] <= 0.0
            continue
        val = problems.verify_quadruple_inequality(prob, v["n_quadruples"], rng, a_scale=v["a_scale"])
        yield f"{name}: quadruple", val, tol["quadruple"], val <= tol["quadruple"]
        val = problems.verify_variance_inequality(prob, v["n_points"], rng)
        yield f"{name}: variance", val, tol["variance"], val <= tol["variance"]
        if name == "eigenvector":
            A = prob.cov
            val = problems.verify_eigengap_lemma(A, v["n_points"], rng)
            t = tol["variance"] * np.linalg.norm(A, 2)
            yield f"{name}: eigengap lemma", val, t, val <= t
    if v["problems"]:
        est = orlicz.psi_norm_empirical(np.random.default_rng(v["seed"]).exponential(size=10**6), 1.0).value
        yield "orlicz: Exp(1) psi1 in [1.9, 2.1]", est, 2.0, 1.9 <= est <= 2.1


def cmd_verify(cfg: RunConfig, out: Optional[str]) -> int:
    if not cfg.sections["verify"]["problems"]:
        print("nothing to verify")
        return EXIT_OK
    rows = list(verify_suite(cfg))
    for name, val, t, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {val:.3e} (tolerance {t:.1e})")
    if out:
        doc = {"config_hash": cfg.hash, "version": __version__,
               "checks": [{"check": n, "value": float(v), "tolerance": float(t), "passed": bool(ok)} for n, v, t, ok in rows]}
        _write(os.path.join(out, "verify.json"), json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if all(ok for *_, ok in rows) else EXIT_FAIL


def cmd_mcdiarmid(cfg: RunConfig, out: Optional[str]) -> int:
    m = cfg.sections["mcdiarmid"]
    seed = RngSpec(cfg.sections["run"]["base_seed"])
    conf = cfg.sections["tolerances"]["confidence"]
    tables = {
        "bounded-difference": montecarlo.McDiarmidScenario(m["n"]).run(m["reps"], m["t_grid"], seed, conf),
        "extended": montecarlo.McDiarmidScenario(m["n"], m["jump"], m["p_bad"]).run(
            m["reps"], m["t_grid_extended"], seed, conf),
    }
    doc = {"config_hash": cfg.hash, "version": __version__, "tables": {}}
    for name, tab in tables.items():
        print(f"{name}: reference={tab.reference:.6f} dkw_margin={tab.margin:.4f} {'PASS' if tab.passed else 'FAIL'}")
        print("t\tempirical\tbound")
        for t, e, b, ok in tab.rows():
            print(f"{t:.4f}\t{e:.5f}\t{b:.5f}")
        doc["tables"][name] = {"t": tab.t.tolist(), "empirical": tab.empirical.tolist(),
                               "bound": tab.bound.tolist(), "margin": tab.margin, "passed": tab.passed}
    if out:
        _write(os.path.join(out, "mcdiarmid.json"), json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if all(t.passed for t in tables.values()) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ermconc", description="Concentration bounds and Monte Carlo checks for empirical risk minimizers.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (("bound", "evaluate the concentration bounds"),
                      ("experiment", "run a Monte Carlo rate experiment"),
                      ("verify", "run the assumption verifiers"),
                      ("mcdiarmid-sim", "simulate the McDiarmid-type tail bounds")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--seed", type=int, metavar="U64", help="override [run] base_seed")
        sp.add_argument("--threads", type=int, default=None, metavar="N")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.sections["run"]["base_seed"] = args.seed
        threads = args.threads if args.threads is not None else cfg.sections["run"]["threads"]
        if args.command == "bound":
            return cmd_bound(cfg, args.out)
        if args.command == "experiment":
            return cmd_experiment(cfg, args.out, threads)
        if args.command == "verify":
            return cmd_verify(cfg, args.out)
        return cmd_mcdiarmid(cfg, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
