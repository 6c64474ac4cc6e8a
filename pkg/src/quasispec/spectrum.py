"""Band spectra of the periodic approximants and the sets built from them.

sigma(p/q, theta) = {E : |D_q(E, p/q, theta)| <= 2}. Band edges are the q
roots of D_q - 2 and the q roots of D_q + 2, located by a sign scan of D_q on
a grid of 64 q energies followed by bisection. D_q is evaluated through the
transfer-matrix product, never through its monomial coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bandset import TOUCH_TOL, BandSet
from .discriminant import sample_discriminant
from .potential import TWO_PI, AnalyticPotential, Rational, potential_sequence, potential_table
from .transfer import product_batch, trace_batch

_EPS = np.finfo(float).eps
_REFINE_ROUNDS = 10


class NumericalDegeneracyError(RuntimeError):
    """Band-edge search did not produce exactly 2q edges."""


class UpsilonDegeneracyWarning(RuntimeWarning):
    """|G| is identically 2, so every phase sits on a band edge."""


def energy_window(V: np.ndarray) -> tuple[float, float]:
    """[min V - 2.5, max V + 2.5]; the spectrum lies in [min V - 2, max V + 2]."""
    return float(V.min()) - 2.5, float(V.max()) + 2.5


def _refine_extrema(V, lo, hi, sign):
    """Locate local maxima (sign=+1) or minima (sign=-1) of D_q inside [lo, hi]."""
    centers = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    offsets = np.linspace(-1.0, 1.0, 33)
    rows = np.arange(centers.size)
    for _ in range(_REFINE_ROUNDS):
        pts = centers[:, None] + half[:, None] * offsets[None, :]
        vals = sign * trace_batch(pts, V)
        centers = pts[rows, np.argmax(vals, axis=1)]
        half = half / 16.0
    a, b, c, d, expo = product_batch(centers, V)
    size = np.ldexp(np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.abs(d)]), expo)
    return centers, np.ldexp(a + d, expo), size


def _bisect(V, left, right, level, orient, left_positive):
    """Roots of orient*(D_q - level) bracketed by [left, right].

    Returns the final bracket end on the band side (|D_q| < 2 there), so
    every computed edge is itself a point of the computed spectrum.
    """
    a, b = left.copy(), right.copy()
    for _ in range(200):
        mid = 0.5 * (a + b)
        active = (mid > a) & (mid < b)
        if not np.any(active):
            break
        positive = orient * (trace_batch(mid, V) - level) >= 0
        go_right = positive == left_positive
        a = np.where(active & go_right, mid, a)
        b = np.where(active & ~go_right, mid, b)
    # a keeps the sign of the left end; the band side is the non-positive one
    return np.where(left_positive, b, a)


def _close_split_tangencies(V, roots, width):
    """Collapse root pairs that rounding split off a touching double root.

    Two adjacent roots of the same level bound an excursion beyond it; if
    they are closer than 1e-6 of the window and the excursion peak is within
    rounding of the level, the gap is closed.
    """
    q = V.size
    labelled = sorted([(r, level) for level, rs in roots.items() for r in rs])
    out = {level: [] for level in roots}
    i = 0
    while i < len(labelled):
        r, level = labelled[i]
        if i + 1 < len(labelled):
            r2, level2 = labelled[i + 1]
            if level2 == level and r2 - r < 1e-6 * width:
                sign = 1.0 if level > 0 else -1.0
                c, val, size = _refine_extrema(V, np.array([r]), np.array([r2]), sign)
                if abs(val[0] - level) < 64.0 * q * _EPS * max(1.0, size[0]):
                    out[level].extend([c[0], c[0]])
                    i += 2
                    continue
        out[level].append(r)
        i += 1
    return {level: np.sort(np.asarray(rs, dtype=float)) for level, rs in out.items()}


_MAX_GRID_FACTOR = 4096


def band_edges(V: np.ndarray, grid_factor: int = 64) -> np.ndarray:
    """All 2q band edges (with multiplicity, sorted) for one period of potential V.

    Clustered bands can share a scan cell; when roots are missing the scan
    grid is refined fourfold, up to 4096 q points.
    """
    V = np.asarray(V, dtype=float)
    q = V.size
    while True:
        roots = _scan_roots(V, grid_factor)
        counts = {level: r.size for level, r in roots.items()}
        if all(c == q for c in counts.values()) or grid_factor >= _MAX_GRID_FACTOR:
            break
        grid_factor = min(4 * grid_factor, _MAX_GRID_FACTOR)
    for level, r in roots.items():
        if r.size != q:
            gaps = np.diff(np.sort(np.concatenate(list(roots.values()))))
            closest = np.sort(gaps)[:3] if gaps.size else gaps
            raise NumericalDegeneracyError(
                f"found {r.size} roots of D_q {'-' if level > 0 else '+'} 2, expected {q}; "
                f"closest edge separations {closest.tolist()}")
    return np.sort(np.concatenate([roots[2.0], roots[-2.0]]))


def _scan_roots(V: np.ndarray, grid_factor: int) -> dict:
    q = V.size
    lo, hi = energy_window(V)
    x = np.linspace(lo, hi, grid_factor * q + 1)
    y = trace_batch(x, V)

    # A gap narrower than the grid step hides between samples as a discrete
    # extremum with |D_q| < 2; a closed gap is an extremum with |D_q| = 2.
    double_plus: list[float] = []
    double_minus: list[float] = []
    extra_x: list[np.ndarray] = []
    extra_y: list[np.ndarray] = []
    ym, y0, yp = y[:-2], y[1:-1], y[2:]
    for sign, target, doubles in ((1.0, 2.0, double_plus), (-1.0, -2.0, double_minus)):
        hidden = (sign * y0 >= sign * ym) & (sign * y0 >= sign * yp) & (sign * y0 < 2.0)
        idx = np.flatnonzero(hidden) + 1
        if idx.size == 0:
            continue
        c, val, size = _refine_extrema(V, x[idx - 1], x[idx + 1], sign)
        delta = 64.0 * q * _EPS * np.maximum(1.0, size)
        opened = sign * (val - target) >= delta
        touching = np.abs(val - target) < delta
        extra_x.append(c[opened])
        extra_y.append(val[opened])
        doubles.extend(c[touching].tolist())

    if extra_x:
        x = np.concatenate([x] + extra_x)
        y = np.concatenate([y] + extra_y)
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]

    roots = {}
    for level, orient, doubles in ((2.0, 1.0, double_plus), (-2.0, -1.0, double_minus)):
        positive = orient * (y - level) >= 0
        cells = np.flatnonzero(positive[:-1] != positive[1:])
        found = _bisect(V, x[cells], x[cells + 1], level, orient, positive[cells])
        roots[level] = np.sort(np.concatenate([found, np.repeat(np.asarray(doubles, dtype=float), 2)]))

    return _close_split_tangencies(V, roots, hi - lo)


def bands_from_potential(V: np.ndarray, merge_tol: float = TOUCH_TOL) -> BandSet:
    edges = band_edges(V)
    return BandSet.from_intervals(zip(edges[0::2], edges[1::2]), merge_tol=merge_tol)


def sigma(f: AnalyticPotential, pq: Rational, theta: float = 0.0) -> BandSet:
    """sigma(p/q, theta): the (essential) spectrum as at most q closed bands."""
    V = potential_sequence(f, pq, theta, pq.q)
    return bands_from_potential(V).with_meta(p=pq.p, q=pq.q, theta=float(theta))


def bloch_matrices(V: np.ndarray, kappas: np.ndarray) -> np.ndarray:
    """Hermitian q x q Bloch Hamiltonians for psi(n + q) = e^{i kappa} psi(n)."""
    q = V.size
    H = np.zeros((kappas.size, q, q), dtype=complex)
    idx = np.arange(q)
    H[:, idx, idx] = V
    if q > 1:
        H[:, idx[:-1], idx[1:]] = 1.0
        H[:, idx[1:], idx[:-1]] = 1.0
    H[:, q - 1, 0] += np.exp(1j * kappas)
    H[:, 0, q - 1] += np.exp(-1j * kappas)
    return H


def bloch_oracle(f: AnalyticPotential, pq: Rational, theta: float = 0.0,
                 k_grid_size: int = 4096) -> BandSet:
    """Bands from eigenvalues of the Bloch Hamiltonians on kappa in [0, pi].

    Band j is [min_kappa lambda_j, max_kappa lambda_j]. The grid contains
    kappa = 0 and pi, where the band edges sit.
    """
    V = potential_sequence(f, pq, theta, pq.q)
    kappas = np.linspace(0.0, math.pi, k_grid_size)
    ev = np.linalg.eigvalsh(bloch_matrices(V, kappas))
    return BandSet.from_intervals(zip(ev.min(axis=0), ev.max(axis=0))).with_meta(
        p=pq.p, q=pq.q, theta=float(theta), k_grid_size=k_grid_size)


def phase_grid(pq: Rational, theta_count: int) -> np.ndarray:
    """theta_j = 2 pi j / theta_count restricted to the period [0, 2 pi / q)."""
    return TWO_PI * np.arange(-(-theta_count // pq.q)) / theta_count


def _intersect_over_phases(f, pq, theta_count, eps, what):
    if theta_count < 8 * pq.q:
        raise ValueError(f"theta_count must be >= 8q = {8 * pq.q}")
    thetas = phase_grid(pq, theta_count)
    result = None
    for theta in thetas:
        bands = sigma(f, pq, theta)
        if eps:
            bands = bands.fatten(eps)
        result = bands if result is None else result.intersect(bands)
        if not result:
            break
    meta = dict(kind=what, p=pq.p, q=pq.q, theta_count=theta_count,
                theta_step=TWO_PI / theta_count, phases_used=int(thetas.size))
    if eps:
        meta["eps"] = eps
    return BandSet(result.intervals, meta)


def s_minus(f: AnalyticPotential, pq: Rational, theta_count: int) -> BandSet:
    """Intersection of sigma(p/q, theta) over the phase grid (an outer approximation of S_-)."""
    return _intersect_over_phases(f, pq, theta_count, 0.0, "s_minus")


def s_minus_eps(f: AnalyticPotential, pq: Rational, eps: float, theta_count: int) -> BandSet:
    """Intersection over the phase grid of the closed eps-neighbourhoods of sigma."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return _intersect_over_phases(f, pq, theta_count, eps, "s_minus_eps")


def lattice_polynomial(E: float, f: AnalyticPotential, pq: Rational) -> np.ndarray:
    """Coefficients c_{-d..d} of G with D_q(E, p/q, theta) = G(q theta)."""
    d = f.degree
    s = sample_discriminant(E, f, pq, pq.q)
    return np.array([s.coeff(k * pq.q) for k in range(-d, d + 1)])


def _eval_lattice(c: np.ndarray, phi: np.ndarray) -> np.ndarray:
    d = (c.size - 1) // 2
    ks = np.arange(-d, d + 1)
    return (np.exp(1j * np.outer(phi, ks)) @ c).real


def upsilon_measure(E: float, f: AnalyticPotential, pq: Rational, circle_tol: float = 1e-6) -> float:
    """|{theta in [0, 2 pi) : E in sigma(p/q, theta)}|.

    D_q(theta) = G(q theta) with G of degree <= d, and theta -> q theta covers
    the circle q times with Jacobian 1/q, so the measure equals
    |{phi : |G(phi)| <= 2}|. The crossings G = +-2 are the unit-circle roots
    of z^d (G(z) -+ 2), a polynomial of degree 2d.
    """
    c = lattice_polynomial(E, f, pq)
    d = (c.size - 1) // 2
    scale = max(1.0, float(np.max(np.abs(c))))
    if d == 0 or np.all(np.abs(np.delete(c, d)) <= 1e-14 * scale):
        c0 = c[d].real
        if abs(abs(c0) - 2.0) <= 1e-12 * scale:
            warnings.warn("|G| == 2 identically; phases are all band edges", UpsilonDegeneracyWarning)
        return TWO_PI if abs(c0) <= 2.0 else 0.0
    crossings = []
    for level in (2.0, -2.0):
        poly = c[::-1].copy()
        poly[d] -= level
        z = np.roots(poly)
        on_circle = np.abs(np.abs(z) - 1.0) < circle_tol
        crossings.append(np.mod(np.angle(z[on_circle]), TWO_PI))
    phis = np.unique(np.concatenate(crossings))
    if phis.size == 0:
        return TWO_PI if abs(_eval_lattice(c, np.array([0.0]))[0]) <= 2.0 else 0.0
    starts = phis
    lengths = np.diff(np.append(phis, phis[0] + TWO_PI))
    mids = starts + 0.5 * lengths
    g = np.abs(_eval_lattice(c, mids))
    # An arc whose midpoint is within rounding of the level is a split tangency.
    resolution = 64.0 * _EPS * float(np.sum(np.abs(c)))
    inside = (g <= 2.0) & ~((2.0 - g < resolution) & (lengths < 1e-4))
    return float(np.sum(lengths[inside]))


def upsilon_scan(E: float, f: AnalyticPotential, pq: Rational, n_theta: int = 10**6,
                 chunk: int = 2**17) -> float:
    """Brute-force oracle: fraction of a uniform midpoint theta grid with |D_q| <= 2, times 2 pi."""
    hits = 0
    for start in range(0, n_theta, chunk):
        j = np.arange(start, min(start + chunk, n_theta))
        thetas = TWO_PI * (j + 0.5) / n_theta
        vals = trace_batch(E, potential_table(f, pq, thetas, pq.q))
        hits += int(np.count_nonzero(np.abs(vals) <= 2.0))
    return TWO_PI * hits / n_theta


def sigma_theta_integral(f: AnalyticPotential, pq: Rational, window: tuple[float, float],
                         theta_count: int = 256) -> float:
    """int_0^{2 pi} |sigma(p/q, theta) cap I| d theta by the midpoint rule over one period."""
    period = TWO_PI / pq.q
    thetas = period * (np.arange(theta_count) + 0.5) / theta_count
    lengths = [sigma(f, pq, t).clip(*window).measure for t in thetas]
    return float(np.mean(lengths)) * TWO_PI


@dataclass
class Theorem3Row:
    E: float
    gamma: float
    qs: list[int]
    measures: list[float]
    slope: float
    bound_slope: float

    @property
    def satisfied(self) -> bool:
        return self.slope <= self.bound_slope

    @property
    def decreasing(self) -> bool:
        """Positive measures strictly decrease in q."""
        pos = [m for m in self.measures if m > 0.0]
        return all(b < a for a, b in zip(pos, pos[1:]))


@dataclass
class Theorem3Report:
    alpha: str
    degree: int
    eps: float
    slack: float
    rows: list[Theorem3Row] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)
    integrated: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.slope <= r.bound_slope + self.slack and r.decreasing for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "degree": self.degree, "eps": self.eps, "slack": self.slack,
            "passed": self.passed,
            "rows": [{"E": r.E, "gamma": r.gamma, "q": r.qs, "measure": r.measures,
                      "slope": r.slope, "bound_slope": r.bound_slope,
                      "decreasing": r.decreasing} for r in self.rows],
            "skipped_E": self.skipped,
            "integrated": self.integrated,
        }


def theorem3_probe(f: AnalyticPotential, alpha_target, convergents: list[Rational],
                   E_grid, eps: float, slack: float = 0.0, gamma: np.ndarray | None = None,
                   theta_count: int = 256) -> Theorem3Report:
    """Decay of the phase measure |{theta : E in sigma(p/q, theta)}| along convergents.

    For each E with bar-gamma(E, alpha) > eps the slope of ln(measure)
    against q is fitted and compared with -(bar-gamma - eps)/(2d). bar-gamma
    is taken at the largest supplied convergent unless ``gamma`` is given.
    The integrated form is reported both through the E-sum of measures and
    through the theta-average of |sigma cap I|.
    """
    from .lyapunov import bar_gamma_rational

    if len(convergents) < 3:
        raise ValueError("need at least 3 convergents for a slope fit")
    E_grid = np.atleast_1d(np.asarray(E_grid, dtype=float))
    d = max(f.degree, 1)
    if gamma is None:
        gamma = bar_gamma_rational(E_grid, f, convergents[-1], theta_count)
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    report = Theorem3Report(str(alpha_target), d, eps, slack)
    qs = [c.q for c in convergents]
    table = {c.q: np.array([upsilon_measure(E, f, c) for E in E_grid]) for c in convergents}
    for i, E in enumerate(E_grid):
        if not gamma[i] > eps:
            report.skipped.append(float(E))
            continue
        meas = [float(table[q][i]) for q in qs]
        # A zero measure (the level only touched) meets any decay bound; the
        # fit runs over the positive samples.
        pos = [(q, m) for q, m in zip(qs, meas) if m > 0.0]
        if len(pos) < 2:
            slope = -math.inf
        else:
            slope = float(np.polyfit([q for q, _ in pos], np.log([m for _, m in pos]), 1)[0])
        report.rows.append(Theorem3Row(float(E), float(gamma[i]), qs, meas, slope,
                                       float(-(gamma[i] - eps) / (2 * d))))
    if E_grid.size > 1:
        window = (float(E_grid[0]), float(E_grid[-1]))
        rate = np.maximum(gamma - eps, 0.0)
        for c in convergents:
            report.integrated.append({
                "q": c.q,
                "upsilon_integral": float(np.trapezoid(table[c.q], E_grid)),
                "sigma_integral": sigma_theta_integral(f, c, window, theta_count=64),
                "bound_integrand": float(np.trapezoid(np.exp(-c.q / (2 * d) * rate), E_grid)),
            })
    return report
