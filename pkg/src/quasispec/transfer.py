"""Transfer matrices and their products Phi_n = T_n ... T_1.

Products are kept as ``2^e * m`` with m rescaled by exact powers of two
whenever its largest entry leaves [2^-8, 2^8]; the rescaling is exact, so
the only rounding comes from the multiplications themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import AnalyticPotential, potential_sequence

LN2 = math.log(2.0)
_HI = 2.0 ** 8
_LO = 2.0 ** -8


@dataclass(frozen=True, eq=False)
class ScaledMatrix:
    """A 2x2 real matrix ``exp(log_scale) * m`` with max|m_ij| in [1/2, 1)."""

    m: np.ndarray
    log_scale: float
    exponent: int | None = None  # log_scale = exponent * ln 2 when the scale is a power of two

    @property
    def matrix(self) -> np.ndarray:
        """Represented matrix in plain floats (overflows to inf for large log_scale)."""
        with np.errstate(over="ignore"):
            if self.exponent is not None:
                return np.ldexp(self.m, self.exponent)
            return self.m * np.exp(self.log_scale)

    @property
    def trace(self) -> float:
        if self.exponent is not None:
            with np.errstate(over="ignore"):
                return float(np.ldexp(self.m[0, 0] + self.m[1, 1], self.exponent))
        logabs, sign = self.trace_log()
        return _from_log(logabs, sign)

    def trace_log(self) -> tuple[float, float]:
        """(ln|tr|, sign of tr); ln|tr| is -inf for an exactly zero trace."""
        t = float(self.m[0, 0] + self.m[1, 1])
        if t == 0.0:
            return -math.inf, 0.0
        return math.log(abs(t)) + self.log_scale, math.copysign(1.0, t)

    def log_norm(self) -> float:
        """ln of the operator 2-norm of the represented matrix."""
        return math.log(np.linalg.norm(self.m, 2)) + self.log_scale

    def log_spectral_radius(self) -> float:
        """ln rho from the eigenvalues of m (independent of the trace formula)."""
        return math.log(float(np.max(np.abs(np.linalg.eigvals(self.m))))) + self.log_scale

    def log_det(self) -> float:
        """ln|det| of the represented matrix, as computed from m."""
        det = float(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])
        return math.log(abs(det)) + 2.0 * self.log_scale if det != 0 else -math.inf


def _from_log(logabs, sign):
    """sign * exp(logabs) with overflow going to a signed infinity."""
    with np.errstate(over="ignore"):
        out = np.where(np.asarray(logabs) > 709.7, np.inf, np.exp(np.minimum(logabs, 709.7)))
    out = np.asarray(sign) * out
    return float(out) if np.ndim(out) == 0 else out


def one_step(E: float, v: float) -> np.ndarray:
    """T(E) = [[E - v, -1], [1, 0]]."""
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def product_batch(E, V: np.ndarray):
    """Entries of Phi_n for a batch of (E, potential row) pairs.

    ``V`` has shape (..., n) and ``E`` broadcasts against ``V.shape[:-1]``.
    Returns ``(a, b, c, d, e)`` with Phi_n = 2**e * [[a, b], [c, d]]; e is an
    integer array.
    """
    V = np.asarray(V, dtype=float)
    shape = np.broadcast_shapes(np.shape(E), V.shape[:-1])
    E = np.broadcast_to(np.asarray(E, dtype=float), shape)
    a = np.ones(shape)
    b = np.zeros(shape)
    c = np.zeros(shape)
    d = np.ones(shape)
    expo = np.zeros(shape, dtype=np.int64)
    for k in range(V.shape[-1]):
        x = E - V[..., k]
        a, b, c, d = x * a - c, x * b - d, a, b
        big = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        out = (big > _HI) | (big < _LO)
        if np.any(out):
            _, shift = np.frexp(np.where(out, big, 1.0))
            shift = np.where(out, shift, 0)
            a, b, c, d = (np.ldexp(t, -shift) for t in (a, b, c, d))
            expo = expo + shift
    return a, b, c, d, expo


def partial_peak_batch(E, V: np.ndarray) -> np.ndarray:
    """ln max_k max|entries of Phi_k|, k = 1..n, for a batch.

    Rounding in the product grows with the largest partial product, which
    can be far above the final one when the product grows and then shrinks.
    """
    V = np.asarray(V, dtype=float)
    shape = np.broadcast_shapes(np.shape(E), V.shape[:-1])
    E = np.broadcast_to(np.asarray(E, dtype=float), shape)
    a, b, c, d = np.ones(shape), np.zeros(shape), np.zeros(shape), np.ones(shape)
    log_scale = np.zeros(shape)
    peak = np.zeros(shape)
    for k in range(V.shape[-1]):
        x = E - V[..., k]
        a, b, c, d = x * a - c, x * b - d, a, b
        big = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        with np.errstate(divide="ignore"):
            peak = np.maximum(peak, np.log(big) + log_scale)
        a, b, c, d = a / big, b / big, c / big, d / big
        log_scale = log_scale + np.log(big)
    return peak


def trace_log_batch(E, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(ln|D_n|, sign D_n) for a batch; sign is 0 where the trace vanishes."""
    a, _, _, d, expo = product_batch(E, V)
    t = a + d
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(t)) + expo * LN2
    return logabs, np.sign(t)


def trace_batch(E, V: np.ndarray) -> np.ndarray:
    """D_n in plain floats; overflow gives a signed infinity."""
    a, _, _, d, expo = product_batch(E, V)
    with np.errstate(over="ignore"):
        return np.ldexp(a + d, expo)


def scaled_product(E: float, V: np.ndarray) -> ScaledMatrix:
    a, b, c, d, expo = product_batch(E, np.asarray(V, dtype=float))
    m = np.array([[float(a), float(b)], [float(c), float(d)]])
    _, shift = math.frexp(float(np.max(np.abs(m))))
    e = int(expo) + shift
    return ScaledMatrix(np.ldexp(m, -shift), e * LN2, e)


def phi_n(E: float, f: AnalyticPotential, alpha, theta: float, n: int) -> ScaledMatrix:
    """Phi_n(E, alpha, theta) = T_n ... T_2 T_1 with V(k) = f(2 pi alpha k + theta)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return scaled_product(E, potential_sequence(f, alpha, theta, n))


def discriminant_trace(E: float, f: AnalyticPotential, alpha, theta: float, n: int) -> float:
    """D_n(E, alpha, theta) = tr Phi_n; +-inf when the value exceeds double range."""
    return phi_n(E, f, alpha, theta, n).trace


def discriminant_trace_log(E: float, f: AnalyticPotential, alpha, theta: float,
                           n: int) -> tuple[float, float]:
    """(ln|D_n|, sign) for callers that need D_n beyond double range."""
    return phi_n(E, f, alpha, theta, n).trace_log()
