"""Command-line front end.

Each subcommand runs one module, writes ``<subcommand>.jsonl`` and
``<subcommand>.csv`` plus ``manifest.json`` into the output directory and
exits 0 when every asserted check passes, 1 when a check fails and 2 on a
validation error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

OUTPUT_ENV = "LEVYREN_OUTPUT_DIR"
MAX_EDGES = 8
MAX_K = 6
MAX_M = 6


class ConfigError(ValueError):
    pass


def parse_range(text: str) -> List[int]:
    """``"0..4"`` -> ``[0, 1, 2, 3, 4]``; ``"1,3"`` and ``"2"`` also accepted."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc


def parse_number(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad number {text!r}") from exc


@dataclass
class RunConfig:
    family: str = "gamma"
    alpha: str = "1"
    beta: str = "1"
    sigma: str = "1"
    scale: str = "1"
    d: int = 1
    n: int = 0
    m: int = 1
    k: int = 2
    levels: str = "0..4"
    m_range: str = "3..6"
    form: str = "kinetic"
    samples: int = 10 ** 6
    seed: int = 0
    z: float = 5.0
    tol: float = 1e-10
    workers: int = 1
    max_edges: int = MAX_EDGES
    k_max: int = MAX_K
    m_max: int = MAX_M
    out: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.family not in ("gamma", "gaussian", "cauchy"):
            raise ConfigError(f"unknown family {self.family!r}")
        for name in ("alpha", "beta", "sigma", "scale"):
            if parse_number(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.d not in (1, 2, 3):
            raise ConfigError("d must be 1, 2 or 3")
        self.max_edges = max(1, min(int(self.max_edges), MAX_EDGES))
        self.k_max = max(1, min(int(self.k_max), MAX_K))
        self.m_max = max(0, min(int(self.m_max), MAX_M))
        if self.n < 0 or not 0 <= self.m <= self.m_max:
            raise ConfigError(f"need n >= 0 and 0 <= m <= {self.m_max}")
        if not 1 <= self.k <= self.k_max:
            raise ConfigError(f"k must lie in 1..{self.k_max}")
        if self.samples < 1 or self.workers < 1 or self.z <= 0 or self.tol <= 0:
            raise ConfigError("samples, workers, z and tol must be positive")
        if self.form not in ("kinetic", "mass"):
            raise ConfigError(f"unknown form {self.form!r}")
        if min(self.level_list) < 0 or max(self.level_list) > 12:
            raise ConfigError("levels must lie in 0..12")
        parse_range(self.m_range)
        return self

    def checked_m_list(self) -> List[int]:
        ms = self.m_list
        if len(ms) < 2 or min(ms) < 1 or max(ms) > self.m_max:
            raise ConfigError(f"m range needs two or more values in 1..{self.m_max}")
        return ms

    @property
    def level_list(self) -> List[int]:
        return parse_range(self.levels)

    @property
    def m_list(self) -> List[int]:
        return parse_range(self.m_range)

    def make_family(self):
        from .reference import make_family

        return make_family(self.family, self.d, alpha=parse_number(self.alpha), beta=parse_number(self.beta),
                           sigma=parse_number(self.sigma), scale=float(parse_number(self.scale)))

    def digest(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "out"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def load_config(path: Optional[str]) -> Dict[str, object]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return data


# -- serialization ------------------------------------------------------------

def _json_value(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    return str(v)


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (Fraction, float, np.floating)):
        return f"{float(v):.12g}"
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_value(x) for x in v)
    return str(v)


def emit_results(records: Sequence[Dict[str, object]], columns: Sequence[str], out_dir, stem: str) -> List[Path]:
    """Write ``stem.jsonl`` (one record per line) and ``stem.csv`` (fixed columns)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath, cpath = out / f"{stem}.jsonl", out / f"{stem}.csv"
    with jpath.open("w") as fh:
        for rec in records:
            fh.write(json.dumps({c: _json_value(rec.get(c)) for c in columns}) + "\n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_csv_value(rec.get(c)) for c in columns])
    cpath.write_text(buf.getvalue())
    return [jpath, cpath]


def write_manifest(cfg: RunConfig, command: str, out_dir) -> Path:
    import scipy
    import sympy

    from . import __version__

    manifest = {"command": command, "config": {k: v for k, v in asdict(cfg).items() if k != "out"},
                "config_hash": cfg.digest(), "seed": cfg.seed,
                "versions": {"levyren": __version__, "python": platform.python_version(),
                             "numpy": np.__version__, "scipy": scipy.__version__,
                             "sympy": sympy.__version__}}
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- subcommands ----------------------------------------------------------------

def run_verify_compat(cfg: RunConfig):
    from .reference import verify_compatibility

    fam = cfg.make_family()
    grid = np.linspace(-10, 10, 200)
    rows = []
    for n in cfg.level_list:
        dev = verify_compatibility(fam, n, grid)
        rows.append({"family": cfg.family, "n": n, "deviation": dev, "pass": dev < cfg.tol})
    print(f"{'n':>3} {'deviation':>14}")
    for r in rows:
        print(f"{r['n']:>3} {r['deviation']:>14.3e}")
    return rows, ["family", "n", "deviation", "pass"], all(r["pass"] for r in rows)


def run_cond_exp(cfg: RunConfig):
    from .condexp import cond_exp_power, tower_check
    from .reference import GammaFamily

    fam = cfg.make_family()
    rows = []
    for k in range(1, cfg.k + 1):
        poly = cond_exp_power(fam, cfg.n, cfg.m, k)
        for ell, c in enumerate(poly.coeffs):
            rows.append({"k": k, "power": ell, "coefficient": c})
        print(f"E[x^{k} | x^{cfg.n}] coefficients (ascending): {[str(c) for c in poly.coeffs]}")
    ok = cond_exp_power(fam, cfg.n, cfg.m, 1).coeffs[:2] in ((0, 1),)
    if isinstance(fam, GammaFamily) and cfg.m >= 1:
        ok = ok and all(tower_check(fam, cfg.n, 1, cfg.m, k) for k in range(1, cfg.k + 1))
    return rows, ["k", "power", "coefficient"], ok


def run_wick(cfg: RunConfig):
    from .wick import martingale_residual, wick_by_subtraction, wick_closed_form

    fam = cfg.make_family()
    poly = wick_closed_form(fam, cfg.n, cfg.k)
    sub, _ = wick_by_subtraction(fam, cfg.n, cfg.k)
    desc = poly.descending()
    print("coefficients (descending):", "[" + ", ".join(_csv_value(c) for c in desc) + "]")
    rows = [{"n": cfg.n, "k": cfg.k, "power": cfg.k - i, "coefficient": c} for i, c in enumerate(desc)]
    resid = martingale_residual(fam, cfg.n, max(cfg.m, 1), cfg.k).max_abs()
    ok = all(abs(float(a) - float(b)) <= cfg.tol for a, b in zip(poly.coeffs, sub.coeffs)) and float(resid) <= cfg.tol
    return rows, ["n", "k", "power", "coefficient"], ok


def run_kinetic_ren(cfg: RunConfig):
    from .kinetic import cond_exp_t_app, t_ren_martingale_residual

    fam = cfg.make_family()
    ident = cond_exp_t_app(fam, cfg.n, cfg.m)
    resid = ident.residual()
    mart = t_ren_martingale_residual(fam, cfg.n, cfg.m)
    rows = [{"n": cfg.n, "m": cfg.m, "d": cfg.d, "shift_power": ell, "shift_coefficient": c,
             "identity_residual": resid.max_abs_coefficient(), "martingale_residual": mart.max_abs_coefficient()}
            for ell, c in enumerate(ident.shift.poly.coeffs)]
    ok = ident.holds(cfg.tol) and float(mart.max_abs_coefficient()) <= cfg.tol
    print(f"identity residual {float(resid.max_abs_coefficient()):.3e}, "
          f"martingale residual {float(mart.max_abs_coefficient()):.3e}")
    return rows, ["n", "m", "d", "shift_power", "shift_coefficient", "identity_residual",
                  "martingale_residual"], ok


def run_graph_expand(cfg: RunConfig):
    from .effective import mass_lren
    from .graphs import lagrangian_cumulant, lagrangian_moment, moments_from_lagrangian_cumulants
    from .kinetic import kinetic_adjacency_gamma
    from .reference import GammaFamily

    fam = cfg.make_family()
    if not isinstance(fam, GammaFamily):
        raise ConfigError("graph expansion is implemented for the Gamma family")
    if cfg.k > cfg.max_edges:
        raise ConfigError(f"k={cfg.k} exceeds the edge cap {cfg.max_edges}")
    N = cfg.n + cfg.m
    form = (kinetic_adjacency_gamma if cfg.form == "kinetic" else mass_lren)(N, fam.alpha0, cfg.d)
    cumulants = {j: lagrangian_cumulant(form, j, cfg.n, fam) for j in range(1, cfg.k + 1)}
    rows = []
    for j, poly in cumulants.items():
        for mono, c in sorted(poly.terms.items()):
            rows.append({"k": j, "monomial": " ".join(f"x{s}" for s in mono), "coefficient": c})
    ok = moments_from_lagrangian_cumulants(cumulants, cfg.k) == lagrangian_moment(form, cfg.k, cfg.n, fam)
    print(f"{len(rows)} terms; moment/cumulant roundtrip {'ok' if ok else 'FAILED'}")
    return rows, ["k", "monomial", "coefficient"], ok


def run_mass_eff(cfg: RunConfig):
    from .effective import bouquet_sum, mass_coefficient_limit, mass_lren
    from .graphs import lagrangian_cumulant
    from .reference import GammaFamily

    fam = cfg.make_family()
    if not isinstance(fam, GammaFamily):
        raise ConfigError("the mass perturbation is implemented for the Gamma family")
    rows, ok = [], True
    for k in range(1, cfg.k + 1):
        rep = mass_coefficient_limit(cfg.n, k, fam.alpha0, cfg.d, cfg.m_max)
        for m, v in enumerate(rep.values, start=1):
            rows.append({"k": k, "m": m, "value": v, "limit": rep.limit, "envelope": rep.envelope,
                         "monotone_decay": rep.monotone_decay, "converged": rep.converged})
        check = lagrangian_cumulant(mass_lren(cfg.n + 1, fam.alpha0, cfg.d), k, cfg.n, fam) if k <= 4 else None
        if check is not None:
            coef = check.terms.get((0,) * (2 * k), Fraction(0)) * Fraction(2 ** cfg.d) ** (k * cfg.n)
            ok = ok and coef == bouquet_sum(cfg.n, 1, k, fam.alpha0, cfg.d)
        ok = ok and bool(rep.within_envelope)
        print(f"k={k}: limit ~ {rep.limit:.6g} (envelope {rep.envelope:.4g}, monotone {rep.monotone_decay})")
    return rows, ["k", "m", "value", "limit", "envelope", "monotone_decay", "converged"], ok


def run_divergence_scan(cfg: RunConfig):
    from .effective import divergence_scan

    rows = [r.as_record() for r in divergence_scan(cfg.n, parse_number(cfg.alpha), cfg.d, cfg.k, cfg.checked_m_list())]
    seen = set()
    for r in rows:
        if (r["class"], r["ell"]) not in seen:
            seen.add((r["class"], r["ell"]))
            slope = "-" if r["fitted_slope"] is None else f"{r['fitted_slope']:.4f}"
            print(f"{r['class']:>8} l={r['ell']} slope={slope} exponent={r['predicted_exponent']} {r['verdict']}")
    ok = not any(r["verdict"].endswith(":mismatch") for r in rows)
    return rows, ["class", "ell", "m", "value", "fitted_slope", "predicted_exponent", "verdict"], ok


def run_mc_check(cfg: RunConfig):
    from .mc_oracle import fine_second_moment_check, run_registry

    fam = cfg.make_family()
    reports = run_registry(fam, cfg.samples, cfg.seed, cfg.z, cfg.n, cfg.m, cfg.workers)
    rows = [r.to_json() for r in reports]
    if cfg.family == "gamma" and cfg.d == 1:
        c = fine_second_moment_check(cfg.samples, cfg.seed, cfg.z)
        rows.append({"identity": "fine_second_moment", "test_function": "1", "estimate": c.fine.estimate,
                     "reference": c.fine.exact, "se": c.fine.se, "z": cfg.z, "pass": c.passed})
    for r in rows:
        print(f"{r['identity']:>24} {r['test_function']:>8} {'PASS' if r['pass'] else 'FAIL'}")
    return rows, ["identity", "test_function", "estimate", "reference", "se", "z", "pass"], all(r["pass"] for r in rows)


COMMANDS = {
    "verify-compat": run_verify_compat,
    "cond-exp": run_cond_exp,
    "wick": run_wick,
    "kinetic-ren": run_kinetic_ren,
    "graph-expand": run_graph_expand,
    "mass-eff": run_mass_eff,
    "divergence-scan": run_divergence_scan,
    "mc-check": run_mc_check,
}

# flag name -> RunConfig field
FLAGS = {"family": str, "alpha": str, "beta": str, "sigma": str, "scale": str, "d": int, "n": int,
         "m": int, "k": int, "levels": str, "m_range": str, "form": str, "samples": int, "seed": int,
         "z": float, "tol": float, "workers": int, "max_edges": int, "k_max": int, "m_max": int, "out": str}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levyren", description="Renormalization of polynomial densities on a refining lattice.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with RunConfig fields")
        for flag, typ in FLAGS.items():
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        values = load_config(args.config)
        values.update({k: getattr(args, k) for k in FLAGS if getattr(args, k) is not None})
        cfg = RunConfig(**values).validate()
        out_dir = cfg.out or os.environ.get(OUTPUT_ENV) or "results"
        rows, columns, ok = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"levyren: {exc}", file=sys.stderr)
        return 2
    emit_results(rows, columns, out_dir, args.command)
    write_manifest(cfg, args.command, out_dir)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
