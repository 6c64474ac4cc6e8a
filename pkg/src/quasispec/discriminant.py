"""Fourier structure of theta -> D_n(E, alpha, theta).

For rational alpha = p/q the discriminant D_q only contains modes k in qZ,
and for a trigonometric f of degree d its extreme modes +-dn are known in
closed form. The helpers here sample D_n on a uniform theta grid, read off
the coefficients with an FFT and compare them against those identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .potential import TWO_PI, AnalyticPotential, Rational, as_fraction, potential_table
from .transfer import partial_peak_batch, trace_batch, trace_log_batch

_EPS = float(np.finfo(float).eps)


def default_grid_size(f: AnalyticPotential, n: int) -> int:
    """Smallest power of two >= 4 d n + 4 (twice the alias-free minimum)."""
    need = 4 * max(f.degree, 1) * n + 4
    return 1 << (need - 1).bit_length()


@dataclass(frozen=True, eq=False)
class DiscriminantSample:
    """D_n sampled at theta_j = 2 pi j / N together with its DFT coefficients."""

    E: float
    alpha: object
    n: int
    values: np.ndarray
    fourier: np.ndarray  # C_{k,n} at index k mod N

    @property
    def theta_grid_size(self) -> int:
        return self.values.size

    @property
    def thetas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.values.size) / self.values.size

    def coeff(self, k: int) -> complex:
        N = self.values.size
        if abs(k) > N // 2:
            raise IndexError(f"mode {k} is not resolved by a grid of {N} points")
        return complex(self.fourier[k % N])

    def modes(self) -> np.ndarray:
        """Signed mode numbers aligned with ``fourier``."""
        return np.fft.fftfreq(self.values.size, 1.0 / self.values.size).astype(int)

    def truncated(self, m: int) -> np.ndarray:
        """D_{n,m} on the grid: the Fourier series cut to |k| <= m."""
        kept = np.where(np.abs(self.modes()) <= m, self.fourier, 0)
        return np.fft.ifft(kept).real * self.values.size

    @property
    def log_max(self) -> float:
        return math.log(float(np.max(np.abs(self.values))))


def sample_discriminant(E: float, f: AnalyticPotential, alpha, n: int,
                        N: int | None = None) -> DiscriminantSample:
    """Sample D_n(E, alpha, .) on N nodes and take its DFT.

    N must resolve the full band limit d*n of D_n (d = stored degree of f),
    i.e. N >= 2 d n + 2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if N is None:
        N = default_grid_size(f, n)
    if N < 2 * f.degree * n + 2:
        raise ValueError(f"grid of {N} points is below Nyquist for degree {f.degree * n}")
    thetas = TWO_PI * np.arange(N) / N
    table = potential_table(f, alpha, thetas, n)
    values = trace_batch(E, table)
    # a product that grows and then cancels back down carries rounding of
    # order n eps max_k |Phi_k|, and |dD/dV| is as large, so even rounding V
    # spoils it; redo those phases in extended precision
    peak = partial_peak_batch(E, table)
    with np.errstate(over="ignore"):
        bad = n * _EPS * np.exp(peak) > 1e-13 * np.maximum(1.0, np.abs(values))
    bad &= np.isfinite(values)
    for j in np.flatnonzero(bad):
        values[j] = _trace_extended(E, f, alpha, Fraction(int(j), N), n, float(peak[j]))
    if not np.all(np.isfinite(values)):
        raise OverflowError("D_n overflows double range on the grid; use m_n for log-scale maxima")
    return DiscriminantSample(float(E), alpha, n, values, np.fft.fft(values) / N)


def _trace_extended(E: float, f: AnalyticPotential, alpha, theta_turns: Fraction, n: int,
                    log_peak: float) -> float:
    """D_n at theta = 2 pi theta_turns with exact phases and mpmath arithmetic.

    Coefficients, E and alpha are taken as the exact binary values they hold.
    """
    fr = as_fraction(alpha)
    dps = 30 + max(0, int(log_peak / math.log(10.0)))
    # a private context: the global mpmath precision is shared between threads
    mp = mpmath.MPContext()
    mp.dps = dps
    two_pi = 2 * mp.pi
    modes = [(k, mp.mpf(a.real), mp.mpf(a.imag)) for k, a in f.coeffs.items() if k > 0]
    a0 = mp.mpf(f.coefficient(0).real)
    x = mp.mpf(E)
    a, b, c, d = mp.mpf(1), mp.mpf(0), mp.mpf(0), mp.mpf(1)
    for m in range(1, n + 1):
        turns = (fr * m + theta_turns) % 1
        phase = two_pi * mp.mpf(turns.numerator) / turns.denominator
        v = a0 + 2 * mp.fsum(ar * mp.cos(k * phase) - ai * mp.sin(k * phase) for k, ar, ai in modes)
        t = x - v
        a, b, c, d = t * a - c, t * b - d, a, b
    return float(a + d)


def _coefficient_scale(s: DiscriminantSample) -> float:
    return max(1.0, float(np.max(np.abs(s.fourier))))


def check_period_collapse(s: DiscriminantSample) -> float:
    """Largest |C_{k,q}| with q not dividing k, relative to max(1, max_k |C_{k,q}|)."""
    if not isinstance(s.alpha, Rational):
        raise TypeError("period collapse needs a Rational frequency")
    q = s.alpha.q
    if s.n != q:
        raise ValueError(f"sample has n={s.n}, expected n=q={q}")
    off = s.modes() % q != 0
    if not np.any(off):
        return 0.0
    return float(np.max(np.abs(s.fourier[off]))) / _coefficient_scale(s)


def _exp_i_pi(x: Fraction) -> complex:
    """exp(i pi x) with x reduced mod 2 exactly before the float conversion."""
    r = x % 2
    if r == 0:
        return 1 + 0j
    if r == 1:
        return -1 + 0j
    if r == Fraction(1, 2):
        return 1j
    if r == Fraction(3, 2):
        return -1j
    phase = math.pi * float(r)
    return complex(math.cos(phase), math.sin(phase))


def expected_leading_coeff(f: AnalyticPotential, alpha, n: int,
                           form: str = "statement") -> tuple[complex, complex]:
    """Closed form of (C_{dn,n}, C_{-dn,n}) for a trigonometric f of degree d.

    ``form="statement"`` gives (-a_{+-d})^n exp(+-i pi alpha d n (n+1));
    ``form="proof"`` drops the (-1)^n, i.e. a_{+-d}^n exp(...). Only the
    first agrees with a direct expansion of the product.
    """
    if not f.is_trigonometric:
        raise TypeError("leading coefficients are only defined for trigonometric polynomials")
    d = f.degree
    a_plus, a_minus = f.coefficient(d), f.coefficient(-d)
    if a_plus == 0:
        raise ValueError("top coefficient vanishes")
    if form == "statement":
        base_plus, base_minus = -a_plus, -a_minus
    elif form == "proof":
        base_plus, base_minus = a_plus, a_minus
    else:
        raise ValueError(f"unknown form {form!r}")
    x = as_fraction(alpha) * d * n * (n + 1)
    return base_plus ** n * _exp_i_pi(x), base_minus ** n * _exp_i_pi(-x)


def expected_leading_coeff_periodic(f: AnalyticPotential, pq: Rational) -> tuple[complex, complex]:
    """The n = q specialization -(-1)^{(d+1)(q+1)} a_{+-d}^q."""
    d, q = f.degree, pq.q
    sign = -((-1) ** ((d + 1) * (q + 1)))
    return sign * f.coefficient(d) ** q, sign * f.coefficient(-d) ** q


@dataclass(frozen=True)
class LeadcoefCheck:
    sampled: tuple[complex, complex]
    statement_error: float
    proof_error: float
    periodic_error: float | None

    @property
    def matching_form(self) -> str:
        return "statement" if self.statement_error <= self.proof_error else "proof"


def leadcoef_check(s: DiscriminantSample, f: AnalyticPotential) -> LeadcoefCheck:
    """Compare sampled C_{+-dn,n} with both printed closed forms.

    Errors are relative to max(1, max_k |C_{k,n}|), the scale at which the
    DFT coefficients are resolved.
    """
    dn = f.degree * s.n
    sampled = (s.coeff(dn), s.coeff(-dn))
    scale = _coefficient_scale(s)

    def err(pair):
        return max(abs(sampled[0] - pair[0]), abs(sampled[1] - pair[1])) / scale

    periodic = None
    if isinstance(s.alpha, Rational) and s.n == s.alpha.q:
        periodic = err(expected_leading_coeff_periodic(f, s.alpha))
    return LeadcoefCheck(sampled,
                         err(expected_leading_coeff(f, s.alpha, s.n, "statement")),
                         err(expected_leading_coeff(f, s.alpha, s.n, "proof")),
                         periodic)


def chambers_residual(f: AnalyticPotential, pq: Rational, E: float,
                      N: int | None = None) -> tuple[float, float]:
    """max over the grid of |D_q - sum_{|k|<=d} C_{kq,q} e^{ikq theta}|.

    The |k| = d modes come from the closed form, the lower lattice modes from
    the sampled DFT. Returns (residual, max_theta |D_q|) so callers can form
    the relative residual.
    """
    q, d = pq.q, f.degree
    if d > 0 and not f.is_trigonometric:
        raise TypeError("Chambers reconstruction needs a trigonometric polynomial")
    s = sample_discriminant(E, f, pq, q, N)
    top_plus, top_minus = expected_leading_coeff(f, pq, q) if d > 0 else (s.coeff(0), s.coeff(0))
    theta = s.thetas
    recon = np.zeros(theta.size, dtype=complex)
    for k in range(-d, d + 1):
        if k == d:
            c = top_plus
        elif k == -d:
            c = top_minus
        else:
            c = s.coeff(k * q)
        recon += c * np.exp(1j * k * q * theta)
    return float(np.max(np.abs(s.values - recon))), float(np.max(np.abs(s.values)))


def _log_abs_trace(E: float, f: AnalyticPotential, alpha, thetas: np.ndarray, n: int) -> np.ndarray:
    logabs, _ = trace_log_batch(E, potential_table(f, alpha, thetas.ravel(), n))
    return logabs.reshape(thetas.shape)


def m_n(E: float, f: AnalyticPotential, alpha, n: int, grid: int | None = None,
        rounds: int = 6, candidates: int = 4) -> float:
    """ln max_theta |D_n(E, alpha, theta)|.

    A uniform grid of max(1024, 4 d n) nodes locates the largest local
    maxima; each of the top ``candidates`` brackets is then subdivided into
    32 cells ``rounds`` times (a 16x contraction per round). The result is a
    lower bound on the true ln M_n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if grid is None:
        grid = max(1024, 4 * max(f.degree, 1) * n)
    h = TWO_PI / grid
    thetas = h * np.arange(grid)
    y = _log_abs_trace(E, f, alpha, thetas, n)
    best = float(np.max(y))
    if f.degree == 0 or not np.isfinite(best):
        return best
    is_peak = (y >= np.roll(y, 1)) & (y >= np.roll(y, -1))
    peaks = np.flatnonzero(is_peak)
    peaks = peaks[np.argsort(y[peaks])[::-1][:candidates]]
    centers = thetas[peaks]
    half = np.full(centers.shape, h)
    offsets = np.linspace(-1.0, 1.0, 33)
    for _ in range(rounds):
        pts = centers[:, None] + half[:, None] * offsets[None, :]
        vals = _log_abs_trace(E, f, alpha, pts, n)
        idx = np.argmax(vals, axis=1)
        rows = np.arange(pts.shape[0])
        best = max(best, float(np.max(vals)))
        centers = pts[rows, idx]
        half = half / 16.0
    return best
