"""Lyapunov exponents and the probes built on them.

Rational frequencies use gamma = (1/q) ln rho(Phi_q) with the spectral
radius read off the trace; irrational ones go through continued-fraction
convergents (rational-exact) or through max_theta |D_n| (Mn-limsup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bandset import BandSet
from .discriminant import m_n
from .potential import TWO_PI, AnalyticPotential, Rational, potential_sequence, potential_table
from .rationals import IrrationalTarget
from .spectrum import NumericalDegeneracyError, s_minus, s_minus_eps, sigma
from .transfer import LN2, scaled_product, trace_log_batch

EPS = float(np.finfo(float).eps)


class SpectrumMembershipError(ValueError):
    """An energy that should lie in a gap is inside a band."""


def log_spectral_radius(logabs_trace, slack: float = 0.0):
    """ln rho for a unimodular 2x2 matrix from ln|tr|; 0 where |tr| <= 2 e^slack.

    rho = x + sqrt(x^2 - 1) with x = |tr|/2, i.e. ln rho = arccosh(x).
    ``slack`` absorbs the rounding of a computed trace, so a trace that is
    2 up to rounding (closed gaps, band edges) counts as parabolic.
    """
    L = np.asarray(logabs_trace, dtype=float)
    lnx = L - LN2
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.arccosh(np.exp(np.minimum(lnx, 700.0)))
        asym = lnx + np.log1p(np.sqrt(-np.expm1(-2.0 * lnx)))
    out = np.where(lnx > 30.0, asym, direct)
    out = np.where(lnx > slack, out, 0.0)
    return out[()] if out.ndim == 0 else out


def _as_target(alpha, count: int = 24) -> IrrationalTarget:
    if isinstance(alpha, IrrationalTarget):
        return alpha
    if isinstance(alpha, Rational):
        raise TypeError("expected an irrational frequency, got a Rational")
    return IrrationalTarget.from_value(alpha, count)


def gamma_table(E, f: AnalyticPotential, pq: Rational, thetas) -> np.ndarray:
    """gamma(E, p/q, theta) on the product grid, shape (len(thetas), len(E))."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    V = potential_table(f, pq, thetas, pq.q)
    logabs, _ = trace_log_batch(E[None, :], V[:, None, :])
    # a q-step product carries about q roundings per entry
    return log_spectral_radius(logabs, 4.0 * pq.q * EPS) / pq.q


def gamma_rational(E: float, f: AnalyticPotential, pq: Rational, theta: float = 0.0) -> float:
    """(1/q) ln rho(Phi_q(E, p/q, theta)); exactly 0 when |D_q| <= 2."""
    return float(gamma_table(E, f, pq, theta)[0, 0])


def bar_gamma_rational(E, f: AnalyticPotential, pq: Rational, theta_count: int = 256):
    """Phase average of gamma(E, p/q, theta).

    Midpoint (offset trapezoid) rule on theta_count nodes of one period
    2 pi / q; the offset keeps nodes off the band-edge phases where the
    integrand has square-root kinks.
    """
    if theta_count < 256:
        raise ValueError("theta_count must be >= 256")
    period = TWO_PI / pq.q
    thetas = period * (np.arange(theta_count) + 0.5) / theta_count
    out = gamma_table(E, f, pq, thetas).mean(axis=0)
    return float(out[0]) if np.ndim(E) == 0 else out


def bar_gamma_convergence(E, f: AnalyticPotential, pq: Rational, theta_count: int = 256) -> dict:
    """bar-gamma at theta_count and 2*theta_count plus a Richardson combination."""
    coarse = np.asarray(bar_gamma_rational(E, f, pq, theta_count))
    fine = np.asarray(bar_gamma_rational(E, f, pq, 2 * theta_count))
    return {"coarse": coarse, "fine": fine, "richardson": (4 * fine - coarse) / 3,
            "error": np.abs(fine - coarse)}


@dataclass
class MnEstimate:
    """max over n of (1/n) ln M_n, with the whole sequence kept for inspection."""

    value: float
    n_list: list[int]
    rates: list[float]

    def __float__(self) -> float:
        return self.value


def bar_gamma_mn(E: float, f: AnalyticPotential, alpha, n_list) -> MnEstimate:
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    if n_list[-1] > 2000:
        raise ValueError("n values above 2000 are not supported")
    if isinstance(alpha, str):
        alpha = IrrationalTarget.from_value(alpha)
    rates = [m_n(E, f, alpha, n) / n for n in n_list]
    return MnEstimate(max(0.0, max(rates)), n_list, rates)


@dataclass
class LyapunovCurve:
    E_grid: np.ndarray
    gamma: np.ndarray
    alpha: str
    method: str  # "rational-exact" or "Mn-limsup"
    meta: dict = field(default_factory=dict)


def lyapunov_curve(f: AnalyticPotential, alpha, E_grid, method: str = "rational-exact",
                   q_max: int = 200, theta_count: int = 256, n_list=None) -> LyapunovCurve:
    E_grid = np.asarray(E_grid, dtype=float)
    if method == "rational-exact":
        pq = alpha if isinstance(alpha, Rational) else _as_target(alpha).best_convergent(q_max)
        gam = np.asarray(bar_gamma_rational(E_grid, f, pq, theta_count))
        meta = {"p": pq.p, "q": pq.q, "theta_count": theta_count}
    elif method == "Mn-limsup":
        n_list = list(n_list or [34, 55, 89, 144, 233])
        gam = np.array([bar_gamma_mn(E, f, alpha, n_list).value for E in E_grid])
        meta = {"n_list": n_list}
    else:
        raise ValueError(f"unknown method {method!r}")
    return LyapunovCurve(E_grid, np.maximum(gam, 0.0), str(alpha), method, meta)


def _crossings(E_lo, E_hi, fn, tol, steps):
    """Bisect each [E_lo, E_hi] (fn < tol at E_lo, not at E_hi) down to the crossing."""
    a, b = E_lo.copy(), E_hi.copy()
    for _ in range(steps):
        mid = 0.5 * (a + b)
        below = np.atleast_1d(fn(mid)) < tol
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def a_set_estimate(f: AnalyticPotential, alpha, E_grid, gamma_tol: float = 0.05,
                   q_max: int = 200, theta_count: int = 256, refine_steps: int = 30) -> BandSet:
    """Energies where bar-gamma at the best convergent with q <= q_max is below gamma_tol.

    Grid points are classified first; every in/out transition between
    neighbours is then bisected to the crossing bar-gamma = gamma_tol, so
    the cell boundaries do not depend on the grid spacing. A run of one
    grid point is kept as a degenerate cell if its neighbours are out.
    """
    if gamma_tol <= 0:
        raise ValueError("gamma_tol must be positive")
    E_grid = np.unique(np.asarray(E_grid, dtype=float))
    target = alpha if isinstance(alpha, Rational) else _as_target(alpha)
    pq = target if isinstance(target, Rational) else target.best_convergent(q_max)
    fn = lambda E: bar_gamma_rational(E, f, pq, theta_count)
    inside = np.atleast_1d(fn(E_grid)) < gamma_tol
    meta = {"kind": "a_set_estimate", "gamma_tol": gamma_tol, "q_max": q_max, "p": pq.p, "q": pq.q,
            "grid_points": int(E_grid.size)}
    if not np.any(inside):
        return BandSet.empty(meta)
    up = np.flatnonzero(~inside[:-1] & inside[1:])      # out -> in between i and i+1
    down = np.flatnonzero(inside[:-1] & ~inside[1:])    # in -> out between i and i+1
    lowers = _crossings(E_grid[up + 1], E_grid[up], fn, gamma_tol, refine_steps) if up.size else up
    uppers = _crossings(E_grid[down], E_grid[down + 1], fn, gamma_tol, refine_steps) if down.size else down
    lowers = list(lowers)
    uppers = list(uppers)
    if inside[0]:
        lowers.insert(0, float(E_grid[0]))
    if inside[-1]:
        uppers.append(float(E_grid[-1]))
    return BandSet.from_intervals(zip(lowers, uppers), merge_tol=0.0, meta=meta)


@dataclass
class HermanReport:
    bound: float
    tol: float
    worst_E: float
    worst_margin: float
    gamma_min: float
    emptiness: list[dict]
    rows: list[dict]

    @property
    def bound_holds(self) -> bool:
        return self.worst_margin >= -self.tol

    @property
    def emptiness_holds(self) -> bool:
        # unresolved entries (bands below double resolution) neither pass nor fail
        return all(e["empty"] for e in self.emptiness if e["applies"] and e["resolved"])

    @property
    def passed(self) -> bool:
        return self.bound_holds and self.emptiness_holds

    def to_dict(self) -> dict:
        return {"bound": self.bound, "tol": self.tol, "passed": self.passed,
                "bound_holds": self.bound_holds, "emptiness_holds": self.emptiness_holds,
                "worst_E": self.worst_E, "worst_margin": self.worst_margin,
                "gamma_min": self.gamma_min, "emptiness": self.emptiness, "rows": self.rows}


def herman_check(f: AnalyticPotential, frequencies, E_grid, theta_count: int = 256,
                 base_tol: float = 0.02) -> HermanReport:
    """bar-gamma >= ln_+ |a_d| on the grid, and S_- empty for q > 1/(2 log2 |a_d|) when |a_d| > 1.

    The tolerance is base_tol plus the observed change of bar-gamma under a
    doubling of the phase grid.
    """
    if not f.is_trigonometric:
        raise TypeError("Herman's bound is stated for trigonometric polynomials")
    top = abs(f.top_coefficient())
    if top == 0:
        raise ValueError("top coefficient vanishes")
    bound = max(0.0, math.log(top))
    E_grid = np.asarray(E_grid, dtype=float)
    worst = (math.inf, math.nan)
    gmin = math.inf
    quad_err = 0.0
    rows = []
    for pq in frequencies:
        conv = bar_gamma_convergence(E_grid, f, pq, theta_count)
        gam = conv["fine"]
        quad_err = max(quad_err, float(np.max(conv["error"])))
        i = int(np.argmin(gam))
        gmin = min(gmin, float(gam[i]))
        if gam[i] - bound < worst[0]:
            worst = (float(gam[i] - bound), float(E_grid[i]))
        rows.append({"p": pq.p, "q": pq.q, "gamma_min": float(gam[i]), "E_at_min": float(E_grid[i])})
    emptiness = []
    threshold = 1.0 / (2.0 * math.log2(top)) if top > 1 else math.inf
    resolvable = True
    for pq in sorted(frequencies, key=lambda c: c.q):
        applies = pq.q > threshold
        entry = {"p": pq.p, "q": pq.q, "applies": applies, "empty": None, "resolved": applies and resolvable}
        if entry["resolved"]:
            try:
                entry["empty"] = not s_minus(f, pq, 16 * pq.q)
            except NumericalDegeneracyError:
                # band widths shrink with q, so larger q are out of reach too
                entry["resolved"] = resolvable = False
        emptiness.append(entry)
    return HermanReport(bound, base_tol + quad_err, worst[1], worst[0], gmin, emptiness, rows)


@dataclass
class CombesThomasReport:
    c: float
    ratios: list[float]
    distances: list[float]
    identity_max_rel_error: float
    traces: list[float]


def combes_thomas_probe(f: AnalyticPotential, pq: Rational, theta: float, E_list) -> CombesThomasReport:
    """Empirical Combes-Thomas constant and the gap identity |D_q| = e^{q gamma} + e^{-q gamma}.

    gamma here comes from the eigenvalues of Phi_q, not from its trace, so
    the identity is a genuine cross-check.
    """
    bands = sigma(f, pq, theta)
    V = potential_sequence(f, pq, theta, pq.q)
    ratios, dists, traces = [], [], []
    worst = 0.0
    for E in E_list:
        where = bands.locate(E)
        if where is not None:
            a, b = bands.intervals[where]
            raise SpectrumMembershipError(f"E={E} lies in band {where} = [{a}, {b}]")
        phi = scaled_product(E, V)
        ln_trace, sign = phi.trace_log()
        q_gamma = phi.log_spectral_radius()
        # ln(e^{x} + e^{-x}) for x = q gamma, compared in log form
        ln_identity = q_gamma + math.log1p(math.exp(-2.0 * q_gamma))
        worst = max(worst, abs(math.expm1(ln_identity - ln_trace)))
        dist = bands.distance(E)
        ratios.append(ln_trace / (pq.q * min(dist, 1.0)))
        dists.append(dist)
        traces.append(sign * math.exp(min(ln_trace, 700.0)))
    return CombesThomasReport(min(ratios), ratios, dists, worst, traces)


@dataclass
class ConjectureRow:
    p: int
    q: int
    a_measure: float
    s_minus_measure: float
    sym_diff: float
    sym_diff_eps: dict


@dataclass
class ConjectureReport:
    a_measure: float
    a_set: BandSet
    rows: list[ConjectureRow]
    s_minus_inside_a_set: bool
    s_minus_outside_a_set: list[float]

    def to_dict(self) -> dict:
        return {"a_measure": self.a_measure, "a_set": [list(iv) for iv in self.a_set],
                "a_meta": self.a_set.meta,
                "s_minus_inside_a_set": self.s_minus_inside_a_set,
                "s_minus_outside_a_set": self.s_minus_outside_a_set,
                "rows": [{"p": r.p, "q": r.q, "a_measure": r.a_measure,
                          "s_minus_measure": r.s_minus_measure,
                          "sym_diff": r.sym_diff,
                          "sym_diff_eps": {str(k): v for k, v in r.sym_diff_eps.items()}}
                         for r in self.rows]}


def conjecture_probe(f: AnalyticPotential, alpha, convergents: list[Rational], E_grid,
                     eps_list, gamma_tol: float = 0.05, theta_factor: int = 16,
                     theta_count: int = 256) -> ConjectureReport:
    """Trend table of |A_est symmetric-difference S_-(p/q)| along the convergent ladder.

    Each row compares S_-(p/q) with A_est built from the same convergent. No verdict on the conjecture itself; the one asserted direction is that
    grid energies lying in S_-(p/q) for every convergent of the upper half of
    the ladder belong to A_est.
    """
    if len(convergents) < 3:
        raise ValueError("need at least 3 convergents")
    E_grid = np.sort(np.asarray(E_grid, dtype=float))
    q_max = max(c.q for c in convergents)
    a_est = a_set_estimate(f, alpha, E_grid, gamma_tol, q_max, theta_count)
    window = (float(E_grid[0]), float(E_grid[-1]))
    rows = []
    large = convergents[len(convergents) // 2:]
    persistent = np.ones(E_grid.size, dtype=bool)
    for c in convergents:
        # A_est at the same level of the ladder, so both sets sharpen together.
        a_q = a_set_estimate(f, alpha, E_grid, gamma_tol, c.q, theta_count)
        sm = s_minus(f, c, theta_factor * c.q).clip(*window)
        eps_diff = {eps: a_q.symmetric_difference_measure(
            s_minus_eps(f, c, eps, theta_factor * c.q).clip(*window)) for eps in eps_list}
        rows.append(ConjectureRow(c.p, c.q, a_q.measure, sm.measure,
                                  a_q.symmetric_difference_measure(sm), eps_diff))
        if c in large:
            persistent &= np.array([sm.contains(E) for E in E_grid])
    violations = [float(E) for E, keep in zip(E_grid, persistent) if keep and not a_est.contains(E)]
    return ConjectureReport(a_est.measure, a_est, rows, not violations, violations)
