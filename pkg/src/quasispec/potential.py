"""Sampling functions f(theta) and the potentials V(n) = f(2 pi alpha n + theta).

A potential is stored as a finite Hermitian Fourier series
``f(theta) = sum_k a_k exp(i k theta)`` with ``a_{-k} = conj(a_k)``.
Trigonometric polynomials carry an explicit ``declared_degree``; anything
else is treated as a truncated series of an analytic function with strip
width ``strip_width``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi
_STRIP_GRID = 4096


class DomainError(ValueError):
    """Evaluation point lies outside the strip where f is known to be analytic."""


@dataclass(frozen=True)
class Rational:
    """A frequency p/q, always stored in lowest terms with q >= 1."""

    p: int
    q: int = 1

    def __post_init__(self):
        p, q = int(self.p), int(self.q)
        if q == 0:
            raise ZeroDivisionError("q must be nonzero")
        if q < 0:
            p, q = -p, -q
        g = math.gcd(p, q)
        object.__setattr__(self, "p", p // g)
        object.__setattr__(self, "q", q // g)

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __float__(self) -> float:
        return self.p / self.q

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def as_fraction(alpha) -> Fraction:
    """Exact rational value of a frequency (floats and mpf are exact dyadics)."""
    if hasattr(alpha, "as_fraction"):
        return alpha.as_fraction()
    if isinstance(alpha, (int, Fraction)):
        return Fraction(alpha)
    if isinstance(alpha, float):
        return Fraction(alpha)
    # mpmath.mpf and friends
    try:
        man, exp = alpha.man_exp
    except AttributeError as exc:
        raise TypeError(f"unsupported frequency type {type(alpha).__name__}") from exc
    return Fraction(int(man)) * (Fraction(2) ** int(exp))


def orbit_phases(alpha, n_max: int) -> np.ndarray:
    """2 pi * frac(alpha * n) for n = 1..n_max, reduced in exact integer arithmetic."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    fr = as_fraction(alpha)
    num, den = fr.numerator, fr.denominator
    fracs = np.array([((num * n) % den) / den for n in range(1, n_max + 1)], dtype=float)
    return TWO_PI * fracs


@dataclass(frozen=True, eq=False)
class AnalyticPotential:
    """Hermitian Fourier series ``f(theta) = sum_k a_k e^{i k theta}``.

    ``coeffs`` must contain both k and -k for every nonzero mode; use
    :meth:`from_nonnegative` to get the Hermitian completion for free.
    """

    coeffs: Mapping[int, complex]
    strip_width: float = 1.0
    declared_degree: int | None = None

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in self.coeffs.items()}
        clean = {k: v for k, v in clean.items() if v != 0}
        scale = sum(abs(v) for v in clean.values()) or 1.0
        for k, v in clean.items():
            partner = clean.get(-k, 0.0)
            if abs(partner - v.conjugate()) > 1e-12 * scale:
                raise ValueError(f"coefficients not Hermitian at k={k}: a_k={v}, a_-k={partner}")
        if self.declared_degree is not None:
            d = int(self.declared_degree)
            if d < 1:
                raise ValueError("declared_degree must be >= 1")
            if any(abs(k) > d for k in clean):
                raise ValueError(f"nonzero coefficient beyond declared degree {d}")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @classmethod
    def from_nonnegative(cls, coeffs: Mapping[int, complex], strip_width: float = 1.0,
                         declared_degree: int | None = None) -> "AnalyticPotential":
        """Build from a_k with k >= 0; a_{-k} is filled in as conj(a_k)."""
        full: dict[int, complex] = {}
        for k, v in coeffs.items():
            k, v = int(k), complex(v)
            if k < 0:
                raise ValueError("from_nonnegative takes k >= 0 only")
            if k == 0:
                full[0] = complex(v.real, 0.0)
            else:
                full[k] = v
                full[-k] = v.conjugate()
        return cls(full, strip_width, declared_degree)

    @classmethod
    def trig(cls, coeffs: Mapping[int, complex], strip_width: float = 1.0) -> "AnalyticPotential":
        """Trigonometric polynomial from its k >= 0 coefficients; degree is the top mode."""
        nonzero = [int(k) for k, v in coeffs.items() if complex(v) != 0 and int(k) > 0]
        if not nonzero:
            raise ValueError("a trigonometric polynomial needs a nonzero k >= 1 coefficient")
        return cls.from_nonnegative(coeffs, strip_width, max(nonzero))

    @classmethod
    def cosine(cls, amplitude: float, strip_width: float = 1.0) -> "AnalyticPotential":
        """f(theta) = amplitude * cos(theta); amplitude=2 is the critical almost Mathieu case."""
        if amplitude == 0:
            return cls.zero(strip_width)
        return cls.trig({1: amplitude / 2.0}, strip_width)

    @classmethod
    def zero(cls, strip_width: float = 1.0) -> "AnalyticPotential":
        return cls({}, strip_width)

    @classmethod
    def constant(cls, value: float, strip_width: float = 1.0) -> "AnalyticPotential":
        return cls({0: float(value)}, strip_width)

    # -- serialization -------------------------------------------------

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "AnalyticPotential":
        """Load from ``{"coeffs": [[k, re, im], ...], "eta": ..., "degree": ...}``.

        Entries may list only one of k / -k; the other is completed by
        conjugation. Listing both with inconsistent values is an error.
        ``{"cosine": A}`` is shorthand for A cos(theta).
        """
        if "cosine" in spec:
            return cls.cosine(float(spec["cosine"]), float(spec.get("eta", 1.0)))
        if "coeffs" not in spec:
            raise ValueError("potential spec needs a 'coeffs' list")
        given: dict[int, complex] = {}
        for entry in spec["coeffs"]:
            if len(entry) not in (2, 3):
                raise ValueError(f"coefficient entry must be [k, re] or [k, re, im], got {entry!r}")
            k = int(entry[0])
            v = complex(float(entry[1]), float(entry[2]) if len(entry) == 3 else 0.0)
            given[k] = v
        full = dict(given)
        for k, v in given.items():
            full.setdefault(-k, v.conjugate())
        eta = float(spec.get("eta", 1.0))
        degree = spec.get("degree")
        return cls(full, eta, None if degree is None else int(degree))

    def to_spec(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "coeffs": [[k, v.real, v.imag] for k, v in self.coeffs.items() if k >= 0],
            "eta": self.strip_width,
        }
        if self.declared_degree is not None:
            out["degree"] = self.declared_degree
        return out

    @classmethod
    def load(cls, path: str | Path) -> "AnalyticPotential":
        import yaml  # JSON is a subset of YAML

        with open(path) as fh:
            return cls.from_spec(yaml.safe_load(fh))

    def __repr__(self) -> str:
        return f"AnalyticPotential({json.dumps(self.to_spec())})"

    def __eq__(self, other):
        if not isinstance(other, AnalyticPotential):
            return NotImplemented
        return (self.coeffs == other.coeffs and self.strip_width == other.strip_width
                and self.declared_degree == other.declared_degree)

    __hash__ = None

    # -- structure -----------------------------------------------------

    @property
    def is_trigonometric(self) -> bool:
        return self.declared_degree is not None

    @property
    def degree(self) -> int:
        """Declared degree, else the highest stored mode (0 for a constant)."""
        if self.declared_degree is not None:
            return self.declared_degree
        return max((abs(k) for k in self.coeffs), default=0)

    def coefficient(self, k: int) -> complex:
        return self.coeffs.get(int(k), 0j)

    def top_coefficient(self) -> complex:
        """a_d for d = degree."""
        return self.coefficient(self.degree)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    @cached_property
    def _modes(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.array(sorted(self.coeffs), dtype=float)
        amps = np.array([self.coeffs[int(k)] for k in ks], dtype=complex)
        return ks, amps

    @cached_property
    def _positive_modes(self) -> tuple[float, np.ndarray, np.ndarray]:
        a0 = self.coefficient(0).real
        ks = np.array([k for k in self.coeffs if k > 0], dtype=float)
        amps = np.array([self.coeffs[int(k)] for k in ks], dtype=complex)
        return a0, ks, amps

    # -- evaluation ----------------------------------------------------

    def eval(self, z):
        """Complex value of the series at z (scalar or array) with |Im z| <= strip_width."""
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z.imag) > self.strip_width * (1 + 1e-12)):
            raise DomainError(f"|Im z| exceeds strip width {self.strip_width}")
        ks, amps = self._modes
        if ks.size == 0:
            out = np.zeros(z.shape, dtype=complex)
        else:
            out = np.exp(1j * z[..., None] * ks) @ amps
        return out[()] if out.ndim == 0 else out

    def real_values(self, x) -> np.ndarray:
        """f on the real line, using the Hermitian pairing so the result is exactly real."""
        x = np.asarray(x, dtype=float)
        a0, ks, amps = self._positive_modes
        out = np.full(x.shape, a0, dtype=float)
        for k, a in zip(ks, amps):
            kx = k * x
            out += 2.0 * (a.real * np.cos(kx) - a.imag * np.sin(kx))
        return out

    def max_abs(self, grid: int = _STRIP_GRID) -> float:
        """max |f(theta)| over a uniform grid on the real line."""
        x = TWO_PI * np.arange(grid) / grid
        return float(np.max(np.abs(self.real_values(x)))) if self.coeffs else 0.0

    def strip_max(self, grid: int = _STRIP_GRID) -> float:
        """max over theta of |f(theta - i eta)| and |f(theta + i eta)| on a grid."""
        if not self.coeffs:
            return 0.0
        x = TWO_PI * np.arange(grid) / grid
        lower = np.abs(self.eval(x - 1j * self.strip_width))
        upper = np.abs(self.eval(x + 1j * self.strip_width))
        return float(max(lower.max(), upper.max()))


def potential_sequence(f: AnalyticPotential, alpha, theta: float, n_max: int) -> np.ndarray:
    """V(1..n_max) with V(n) = f(2 pi alpha n + theta).

    For rational alpha the phase is reduced exactly, so V(n + q) == V(n)
    bit for bit.
    """
    return f.real_values(orbit_phases(alpha, n_max) + theta)


def potential_table(f: AnalyticPotential, alpha, thetas, n_max: int) -> np.ndarray:
    """Potentials for many phases at once, shape (len(thetas), n_max)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return f.real_values(orbit_phases(alpha, n_max)[None, :] + thetas[:, None])


def truncation_degree(f: AnalyticPotential, energy_bound: float, tail_tolerance: float) -> int:
    """Degree d for which D_{n,dn} approximates D_n to tail_tolerance**n on |E| <= R.

    Uses the bound 2 (C1 + R)^n e^{-d n eta} / (1 - e^{-eta}) <= tol^n with
    C1 = 2 + R + max|f(theta - i eta)|; the n = 1 case is the binding one, so
    the returned d works for every n >= 1. Trigonometric polynomials return
    their degree.
    """
    if f.is_trigonometric:
        return f.declared_degree
    eta = f.strip_width
    if eta <= 0:
        raise ValueError("strip width must be positive")
    if energy_bound <= 0 or not 0 < tail_tolerance < 1:
        raise ValueError("need energy_bound > 0 and 0 < tail_tolerance < 1")
    c1 = 2.0 + energy_bound + f.strip_max()
    need = (math.log(c1 + energy_bound) - math.log(tail_tolerance)
            + math.log(2.0 / (1.0 - math.exp(-eta)))) / eta
    return max(1, math.ceil(need))


def random_trig_potential(rng: np.random.Generator, degree: int,
                          top_modulus: tuple[float, float] = (1.0, 2.0),
                          lower_scale: float = 1.0) -> AnalyticPotential:
    """Random real trigonometric polynomial with |a_d| drawn from ``top_modulus``."""
    coeffs: dict[int, complex] = {0: float(rng.uniform(-lower_scale, lower_scale))}
    for k in range(1, degree):
        coeffs[k] = complex(*rng.uniform(-lower_scale, lower_scale, 2)) / 2
    r = rng.uniform(*top_modulus)
    coeffs[degree] = r * np.exp(1j * rng.uniform(0, TWO_PI))
    return AnalyticPotential.trig(coeffs)
