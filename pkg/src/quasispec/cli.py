"""Band spectra, Lyapunov exponents and numerical checks for quasi-periodic Schroedinger operators.

Usage: ``quasispec <subcommand> [--config PATH] [--set KEY=VALUE] ...``.

Every subcommand turns a RunConfig into a table and/or a report and writes
it as CSV (grids) or JSON (reports). Both carry the fully resolved config,
so an output file says how it was produced. Exit status: 0 ok, 1 a check
failed, 2 bad config or unwritable output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import verify
from .discriminant import chambers_residual, check_period_collapse, leadcoef_check, sample_discriminant
from .lyapunov import (a_set_estimate, conjecture_probe, herman_check, lyapunov_curve)
from .potential import AnalyticPotential, Rational
from .rationals import IrrationalTarget, RationalInputError
from .spectrum import s_minus, s_minus_eps, sigma, theorem3_probe, upsilon_measure

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2

# Reserved for future stochastic sweeps; nothing in the core reads it.
SEED_ENV = "QUASISPEC_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    potential: dict = field(default_factory=lambda: {"coeffs": [[1, 1.0, 0.0]], "eta": 1.0, "degree": 1})
    alpha: str = "golden"
    convergent_count: int = 24
    q_list: list[int] | None = None
    q_max: int = 200
    theta: float = 0.0
    E_window: tuple[float, float] = (-3.0, 3.0)
    E_points: int = 61
    theta_count: int = 256
    eps: float = 0.25
    eps_list: list[float] = field(default_factory=lambda: [0.1, 0.25])
    gamma_tol: float = 0.05
    n_list: list[int] = field(default_factory=lambda: [34, 55, 89, 144, 233])
    method: str = "rational-exact"
    butterfly_q_max: int = 12
    out: str | None = None
    format: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.function()
            self.frequency()
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        lo, hi = (float(x) for x in self.E_window)
        self.E_window = (lo, hi)
        if not lo < hi:
            raise ConfigError("E_window must have lower < upper")
        if self.E_points < 1 or self.theta_count < 1:
            raise ConfigError("grids must be nonempty")
        if self.theta_count < 256:
            raise ConfigError("theta_count must be >= 256")
        if self.eps <= 0 or self.gamma_tol <= 0 or any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps, eps_list and gamma_tol must be positive")
        if self.q_max < 1 or self.convergent_count < 1 or self.butterfly_q_max < 1:
            raise ConfigError("q_max, convergent_count and butterfly_q_max must be >= 1")
        if self.method not in ("rational-exact", "Mn-limsup"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError("format must be csv or json")
        # The spectrum lies in [min f - 2, max f + 2]; a window far outside is a typo.
        R = self.function().max_abs() + 2.0
        if lo < -R - 10.0 or hi > R + 10.0:
            raise ConfigError(f"E_window {self.E_window} is far outside the spectral bound {R:.3f}")

    def function(self) -> AnalyticPotential:
        return AnalyticPotential.from_spec(self.potential)

    def frequency(self):
        text = str(self.alpha).strip()
        if "/" in text:
            try:
                fr = Fraction(text)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"alpha {text!r} is not a rational p/q: {exc}") from exc
            return Rational(fr.numerator, fr.denominator)
        return IrrationalTarget.from_value(text, self.convergent_count)

    def rational(self) -> Rational:
        a = self.frequency()
        return a if isinstance(a, Rational) else a.best_convergent(self.q_max)

    def ladder(self) -> list[Rational]:
        a = self.frequency()
        if isinstance(a, Rational):
            return [a]
        if self.q_list:
            wanted = set(self.q_list)
            found = [c for c in a.convergents if c.q in wanted]
            missing = wanted - {c.q for c in found}
            if missing:
                raise ConfigError(f"q values {sorted(missing)} are not convergent denominators")
            return found
        return [c for c in a.up_to(self.q_max) if c.q >= 2]

    def E_grid(self) -> np.ndarray:
        return np.linspace(self.E_window[0], self.E_window[1], self.E_points)

    def resolved(self) -> dict:
        d = asdict(self)
        d["E_window"] = list(self.E_window)
        d.pop("out")
        d.pop("format")
        return d


@dataclass
class Result:
    columns: list[str]
    rows: list[list]
    report: dict | None = None
    ok: bool = True
    default_format: str = "csv"
    text: str | None = None


# ---------------------------------------------------------------- commands

def cmd_bands(cfg: RunConfig, pmap) -> Result:
    pq = cfg.rational()
    b = sigma(cfg.function(), pq, cfg.theta)
    return Result(["lower", "upper"], [list(iv) for iv in b],
                  {"p": pq.p, "q": pq.q, "theta": cfg.theta, "measure": b.measure})


def cmd_sminus(cfg: RunConfig, pmap) -> Result:
    f, pq = cfg.function(), cfg.rational()
    n = max(cfg.theta_count, 16 * pq.q)
    rows = [["s_minus", *iv] for iv in s_minus(f, pq, n)]
    rows += [["s_minus_eps", *iv] for iv in s_minus_eps(f, pq, cfg.eps, n)]
    return Result(["set", "lower", "upper"], rows, {"p": pq.p, "q": pq.q, "theta_count": n, "eps": cfg.eps})


def cmd_upsilon(cfg: RunConfig, pmap) -> Result:
    f, pq = cfg.function(), cfg.rational()
    E = cfg.E_grid()
    vals = list(pmap(lambda e: upsilon_measure(float(e), f, pq), E))
    return Result(["E", "upsilon"], [[float(e), v] for e, v in zip(E, vals)], {"p": pq.p, "q": pq.q})


def cmd_theorem3(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    ladder = cfg.ladder()
    if len(ladder) < 3:
        raise ConfigError("theorem3 needs at least 3 convergents")
    rep = theorem3_probe(f, cfg.frequency(), ladder, cfg.E_grid(), cfg.eps, theta_count=cfg.theta_count)
    rows = [[r.E, r.gamma, r.slope, r.bound_slope, int(r.satisfied and r.decreasing)] for r in rep.rows]
    return Result(["E", "gamma", "slope", "bound_slope", "satisfied"], rows, rep.to_dict(),
                  ok=rep.passed, default_format="json")


def cmd_lyapunov(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    alpha = cfg.frequency()
    E = cfg.E_grid()
    if cfg.method == "rational-exact":
        curve = lyapunov_curve(f, alpha, E, cfg.method, cfg.q_max, cfg.theta_count)
        gam = curve.gamma
    else:
        curves = list(pmap(lambda e: lyapunov_curve(f, alpha, [e], cfg.method, n_list=cfg.n_list), E))
        curve = curves[0]
        gam = np.concatenate([c.gamma for c in curves])
    return Result(["E", "gamma"], [[float(e), float(g)] for e, g in zip(E, gam)],
                  {"method": cfg.method, **curve.meta})


def cmd_herman(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    ladder = cfg.ladder()
    rep = herman_check(f, ladder, cfg.E_grid(), cfg.theta_count)
    rows = [[r["p"], r["q"], r["gamma_min"], r["E_at_min"]] for r in rep.rows]
    return Result(["p", "q", "gamma_min", "E_at_min"], rows, rep.to_dict(), ok=rep.passed,
                  default_format="json")


def cmd_aset(cfg: RunConfig, pmap) -> Result:
    a = a_set_estimate(cfg.function(), cfg.frequency(), cfg.E_grid(), cfg.gamma_tol, cfg.q_max,
                       cfg.theta_count)
    return Result(["lower", "upper"], [list(iv) for iv in a], {**a.meta, "measure": a.measure})


def cmd_conjecture(cfg: RunConfig, pmap) -> Result:
    ladder = cfg.ladder()
    if len(ladder) < 3:
        raise ConfigError("conjecture needs at least 3 convergents")
    rep = conjecture_probe(cfg.function(), cfg.frequency(), ladder, cfg.E_grid(), cfg.eps_list,
                           cfg.gamma_tol, theta_count=cfg.theta_count)
    rows = [[r.p, r.q, r.a_measure, r.s_minus_measure, r.sym_diff] for r in rep.rows]
    return Result(["p", "q", "a_measure", "s_minus_measure", "sym_diff"], rows, rep.to_dict(),
                  ok=rep.s_minus_inside_a_set, default_format="json")


def cmd_fourier_check(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    E = cfg.E_grid()
    if E.size > 9:
        E = E[np.linspace(0, E.size - 1, 9).astype(int)]

    def one(job):
        pq, e = job
        s = sample_discriminant(float(e), f, pq, pq.q)
        row = [pq.p, pq.q, float(e), check_period_collapse(s)]
        if f.is_trigonometric and f.degree > 0:
            lc = leadcoef_check(s, f)
            row += [lc.statement_error, lc.proof_error, lc.periodic_error]
        else:
            row += [math.nan, math.nan, math.nan]
        if f.is_trigonometric and f.degree == 1:
            res, peak = chambers_residual(f, pq, float(e))
            row.append(res / max(1.0, peak))
        else:
            row.append(math.nan)
        return row

    rows = list(pmap(one, [(pq, e) for pq in cfg.ladder() for e in E]))
    worst = {name: max((r[i] for r in rows if not math.isnan(r[i])), default=0.0)
             for i, name in ((3, "period_collapse"), (4, "statement"), (5, "proof"),
                             (6, "periodic"), (7, "chambers"))}
    ok = (worst["period_collapse"] <= 1e-9 and worst["periodic"] <= 1e-9
          and worst["statement"] <= 1e-9 and worst["chambers"] <= 1e-9)
    form = "statement" if worst["statement"] <= worst["proof"] else "proof"
    return Result(["p", "q", "E", "max_offlattice", "leadcoef_error", "proof_form_error",
                   "periodic_error", "chambers_residual"], rows,
                  {"worst": worst, "matching_form": form}, ok=ok, default_format="json")


def cmd_butterfly(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    fracs = sorted({Fraction(p, q) for q in range(1, cfg.butterfly_q_max + 1) for p in range(0, q + 1)
                    if math.gcd(p, q) == 1})
    spectra = pmap(lambda fr: sigma(f, Rational(fr.numerator, fr.denominator), cfg.theta), fracs)
    rows = [[fr.numerator, fr.denominator, float(fr), *iv] for fr, b in zip(fracs, spectra) for iv in b]
    return Result(["p", "q", "alpha", "lower", "upper"], rows, {"frequencies": len(fracs)})


def cmd_verify_all(cfg: RunConfig, pmap) -> Result:
    f = cfg.function()
    target = cfg.frequency()
    ladder = [c for c in cfg.ladder() if c.q <= 40][:8]
    case = verify.Case(f, tuple(ladder))
    results = verify.run_suite(case, target if isinstance(target, IrrationalTarget) else None, pmap)
    rows = [r.row() for r in results]
    ok = all(r.passed for r in results)
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}  {r.value:.3e}  (tol {r.tol:.1e})"
             + (f"  {r.detail}" if r.detail else "") for r in results]
    lines.append(f"{'all':<{width}}  {'pass' if ok else 'FAIL'}")
    return Result(verify.COLUMNS, rows, {"passed": ok}, ok=ok, text="\n".join(lines) + "\n")


COMMANDS = {
    "bands": cmd_bands,
    "sminus": cmd_sminus,
    "upsilon": cmd_upsilon,
    "theorem3": cmd_theorem3,
    "lyapunov": cmd_lyapunov,
    "herman": cmd_herman,
    "aset": cmd_aset,
    "conjecture": cmd_conjecture,
    "fourier-check": cmd_fourier_check,
    "butterfly": cmd_butterfly,
    "verify-all": cmd_verify_all,
}


# ---------------------------------------------------------------- output

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if x is None or isinstance(x, str):
        return x
    return str(x)


def render(command: str, cfg: RunConfig, res: Result, fmt: str) -> str:
    config = cfg.resolved()
    if fmt == "json":
        doc = {"command": command, "config": config, "ok": res.ok, "columns": res.columns,
               "rows": res.rows, "report": res.report}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# command: {command}\n")
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    if res.report is not None and res.default_format == "csv":
        buf.write("# meta: " + json.dumps(_jsonable(res.report), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    for row in res.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- driver

def load_config(path: str | None, overrides: list[str]) -> RunConfig:
    data: dict = {}
    if path:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("config must be a mapping")
        data.update(loaded or {})
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        data[key.strip()] = yaml.safe_load(value)
    if "alpha" in data:
        data["alpha"] = str(data["alpha"])
    try:
        return RunConfig.from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def run(command: str, cfg: RunConfig, threads: int = 1) -> tuple[int, str, Result]:
    if command not in COMMANDS:
        raise ConfigError(f"unknown subcommand {command!r}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = COMMANDS[command](cfg, pool.map)
    else:
        res = COMMANDS[command](cfg, map)
    fmt = cfg.format or res.default_format
    return (EXIT_OK if res.ok else EXIT_CHECK), render(command, cfg, res, fmt), res


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasispec", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML or JSON run configuration")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; VALUE is parsed as YAML")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.overrides)
        if args.format:
            cfg.format = args.format
        if args.out:
            cfg.out = args.out
        status, output, res = run(args.command, cfg, args.threads)
    except (ConfigError, RationalInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if res.text is not None:
        sys.stdout.write(res.text)
    if cfg.out:
        try:
            Path(cfg.out).write_text(output)
        except OSError as exc:
            print(f"cannot write {cfg.out}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    elif res.text is None:
        sys.stdout.write(output)
    return status


if __name__ == "__main__":
    sys.exit(main())
