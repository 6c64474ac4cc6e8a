"""Continued-fraction convergents p_k/q_k -> alpha at multi-precision."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .potential import Rational, as_fraction

DEFAULT_PREC = 256
# A partial quotient this large means the input is rational at working precision.
_QUOTIENT_CAP = 2 ** 64

_TOKENS = {
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "sqrt2m1": lambda: mpmath.sqrt(2) - 1,
}


# mpmath's working precision is global state; threads take turns changing it
MP_LOCK = threading.RLock()


class RationalInputError(ValueError):
    """alpha is rational (or indistinguishable from it) at working precision."""


def parse_alpha(token, prec: int = DEFAULT_PREC) -> mpmath.mpf:
    """Turn a token ("golden", "sqrt2m1"), decimal string or number into an mpf."""
    with MP_LOCK, mpmath.workprec(prec):
        if isinstance(token, str):
            key = token.strip().lower()
            if key in _TOKENS:
                return +_TOKENS[key]()
            return mpmath.mpf(key)
        if isinstance(token, Fraction):
            return mpmath.mpf(token.numerator) / token.denominator
        return mpmath.mpf(token)


def _cf_expand(alpha: mpmath.mpf, count: int, prec: int) -> tuple[list[int], list[Rational]]:
    terms: list[int] = []
    convs: list[Rational] = []
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    with MP_LOCK, mpmath.workprec(prec):
        x = mpmath.mpf(alpha)
        while len(convs) < count:
            a = int(mpmath.floor(x))
            if terms and a > _QUOTIENT_CAP:
                raise RationalInputError(
                    f"partial quotient {a:.3e} after p/q = {convs[-1]}: alpha is rational "
                    f"at {prec}-bit precision; use Rational({convs[-1].p}, {convs[-1].q}) directly")
            terms.append(a)
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
            convs.append(Rational(p, q))
            frac = x - a
            if frac == 0:
                if len(convs) < count:
                    raise RationalInputError(f"alpha = {convs[-1]} exactly; use Rational directly")
                break
            x = 1 / frac
    return terms, convs


def convergents(alpha, count: int, prec: int = DEFAULT_PREC) -> list[Rational]:
    """First ``count`` continued-fraction convergents of alpha, in lowest terms."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return _cf_expand(parse_alpha(alpha, prec), count, prec)[1]


@dataclass(frozen=True, eq=False)
class IrrationalTarget:
    """An irrational frequency with its partial quotients and convergents."""

    value: mpmath.mpf
    cf_terms: tuple[int, ...]
    convergents: tuple[Rational, ...]
    prec: int = DEFAULT_PREC
    label: str = ""

    @classmethod
    def from_value(cls, alpha, count: int = 24, prec: int = DEFAULT_PREC) -> "IrrationalTarget":
        value = parse_alpha(alpha, prec)
        terms, convs = _cf_expand(value, count, prec)
        label = alpha if isinstance(alpha, str) else mpmath.nstr(value, 20)
        return cls(value, tuple(terms), tuple(convs), prec, label)

    def as_fraction(self) -> Fraction:
        return as_fraction(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def up_to(self, q_max: int) -> list[Rational]:
        """Convergents with q <= q_max."""
        return [c for c in self.convergents if c.q <= q_max]

    def best_convergent(self, q_max: int) -> Rational:
        found = self.up_to(q_max)
        if not found:
            raise ValueError(f"no convergent of {self.label} with q <= {q_max}")
        return found[-1]

    def __str__(self) -> str:
        return self.label
