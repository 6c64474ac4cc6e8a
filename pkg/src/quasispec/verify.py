"""Identity and invariant suite behind ``quasispec verify-all``.

Each check is a pure function of the potential and frequency ladder it is
given and returns a CheckResult; the runner only maps them, so the table is
the same whatever the thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .discriminant import chambers_residual, check_period_collapse, leadcoef_check, sample_discriminant
from .lyapunov import combes_thomas_probe, gamma_table, herman_check
from .potential import AnalyticPotential, Rational, potential_sequence
from .rationals import IrrationalTarget
from .spectrum import bloch_oracle, s_minus, sigma
from .transfer import scaled_product, trace_log_batch


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def row(self) -> list:
        return [self.name, "pass" if self.passed else "FAIL", self.value, self.tol, self.detail]


COLUMNS = ["check", "status", "value", "tol", "detail"]


@dataclass(frozen=True)
class Case:
    f: AnalyticPotential
    ladder: tuple[Rational, ...]
    E_probe: tuple[float, ...] = (-1.5, -0.3, 0.0, 0.7, 2.5)


def _worst(name, values, tol, detail=""):
    v = float(max(values)) if len(values) else 0.0
    return CheckResult(name, v <= tol, v, tol, detail)


def check_period_collapse_all(case: Case) -> CheckResult:
    errs = [check_period_collapse(sample_discriminant(E, case.f, pq, pq.q))
            for pq in case.ladder for E in case.E_probe]
    return _worst("zerocoef.period_collapse", errs, 1e-9)


def check_leadcoef_all(case: Case) -> CheckResult:
    if not case.f.is_trigonometric or case.f.degree == 0:
        return CheckResult("leadcoef.closed_form", True, 0.0, 1e-9, "not applicable")
    checks = [leadcoef_check(sample_discriminant(E, case.f, pq, pq.q), case.f)
              for pq in case.ladder for E in case.E_probe]
    errs = [max(c.periodic_error, c.statement_error) for c in checks]
    forms = sorted({c.matching_form for c in checks})
    return _worst("leadcoef.closed_form", errs, 1e-9, "matching form: " + ",".join(forms))


def check_chambers(case: Case) -> CheckResult:
    if not case.f.is_trigonometric or case.f.degree != 1:
        return CheckResult("chambers.reconstruction", True, 0.0, 1e-9, "needs degree 1")
    errs = []
    for pq in case.ladder:
        for E in case.E_probe:
            res, peak = chambers_residual(case.f, pq, E)
            errs.append(res / max(1.0, peak))
    return _worst("chambers.reconstruction", errs, 1e-9)


def check_sigma_vs_bloch(case: Case) -> CheckResult:
    errs = [sigma(case.f, pq).hausdorff(bloch_oracle(case.f, pq)) for pq in case.ladder if pq.q <= 30]
    return _worst("spectrum.sigma_vs_bloch", errs, 1e-8)


def check_free_sigma(case: Case) -> CheckResult:
    free = AnalyticPotential.zero()
    errs = []
    for q in (1, 3, 5, 8):
        b = sigma(free, Rational(1, q))
        errs.append(math.inf if len(b) != 1 else max(abs(b.hull[0] + 2), abs(b.hull[1] - 2)))
    return _worst("spectrum.free_band", errs, 1e-10)


def check_amo_half(case: Case) -> CheckResult:
    b = sigma(AnalyticPotential.cosine(2.0), Rational(1, 2))
    r = math.sqrt(8.0)
    want = ((-r, -2.0), (2.0, r))
    err = math.inf if len(b) != 2 else max(abs(x - y) for iv, jv in zip(b, want) for x, y in zip(iv, jv))
    return CheckResult("spectrum.amo_half_bands", err <= 1e-10, err, 1e-10)


def check_gamma_on_bands(case: Case) -> CheckResult:
    """gamma vanishes exactly at band midpoints and is positive at gap midpoints."""
    bad = 0
    total = 0
    for pq in case.ladder:
        b = sigma(case.f, pq)
        ivs = b.as_array()
        mids = ivs.mean(axis=1)
        gaps = 0.5 * (ivs[1:, 0] + ivs[:-1, 1])
        g_band = gamma_table(mids, case.f, pq, [0.0])[0]
        bad += int(np.count_nonzero(g_band != 0.0))
        if gaps.size:
            bad += int(np.count_nonzero(gamma_table(gaps, case.f, pq, [0.0])[0] <= 0.0))
        total += mids.size + gaps.size
    return CheckResult("lyapunov.zero_on_bands", bad == 0, float(bad), 0.0, f"{total} energies")


def check_gap_identity(case: Case) -> CheckResult:
    errs = []
    for pq in case.ladder:
        ivs = sigma(case.f, pq).as_array()
        lo, hi = ivs[0, 0], ivs[-1, 1]
        E_list = [lo - 0.5, hi + 0.5] + list(0.5 * (ivs[1:, 0] + ivs[:-1, 1]))
        E_list = [E for E in E_list if not sigma(case.f, pq).contains(E)]
        rep = combes_thomas_probe(case.f, pq, 0.0, E_list)
        errs.append(rep.identity_max_rel_error)
        if not rep.c > 0:
            errs.append(math.inf)
    return _worst("combes_thomas.gap_identity", errs, 1e-9)


def check_rho_below_trace(case: Case) -> CheckResult:
    E = np.linspace(-6.0, 6.0, 241)
    worst = -math.inf
    for pq in case.ladder:
        V = potential_sequence(case.f, pq, 0.0, pq.q)
        ln_tr, _ = trace_log_batch(E, np.broadcast_to(V, (E.size, V.size)))
        qg = gamma_table(E, case.f, pq, [0.0])[0] * pq.q
        hyper = ln_tr > math.log(2.0)
        if np.any(hyper):
            worst = max(worst, float(np.max(qg[hyper] - ln_tr[hyper])))
    worst = max(worst, -1.0)
    return CheckResult("lyapunov.rho_below_trace", worst <= 1e-12, worst, 1e-12)


def check_unimodular(case: Case) -> CheckResult:
    errs = []
    for pq in case.ladder:
        V = potential_sequence(case.f, pq, 0.0, pq.q)
        for E in case.E_probe:
            m = scaled_product(E, V)
            mat = m.matrix
            scale = max(1.0, float(np.max(np.abs(mat))) ** 2)
            errs.append(abs(np.linalg.det(mat) - 1.0) / scale)
    return _worst("transfer.unimodular", errs, 1e-9)


def check_convergent_bound(case: Case, target: IrrationalTarget | None) -> CheckResult:
    if target is None:
        return CheckResult("rationals.cf_bound", True, 0.0, 0.0, "rational frequency")
    import mpmath

    from .rationals import MP_LOCK

    bad = 0
    with MP_LOCK, mpmath.workprec(target.prec):
        for c in target.convergents[1:]:
            diff = abs(target.value - mpmath.mpf(c.p) / c.q)
            if not diff < mpmath.mpf(1) / (c.q * c.q) or math.gcd(c.p, c.q) != 1:
                bad += 1
    qs = [c.q for c in target.convergents]
    bad += sum(1 for a, b in zip(qs[1:], qs[2:]) if b <= a)
    return CheckResult("rationals.cf_bound", bad == 0, float(bad), 0.0, f"{len(qs)} convergents")


def check_herman(case: Case) -> CheckResult:
    f = AnalyticPotential.cosine(8.0)
    rep = herman_check(f, [Rational(3, 5), Rational(5, 8)], np.linspace(-6.0, 6.0, 25))
    return CheckResult("herman.lower_bound", rep.passed, rep.worst_margin, rep.tol,
                       f"margin >= -tol for bound {rep.bound:.6f}")


def check_emptiness(case: Case) -> CheckResult:
    f = AnalyticPotential.cosine(8.0)
    sizes = [len(s_minus(f, Rational(1, q), 16 * q)) for q in (1, 2, 3, 5, 8)]
    return CheckResult("herman.s_minus_empty", sum(sizes) == 0, float(sum(sizes)), 0.0)


def suite(case: Case, target: IrrationalTarget | None) -> list[Callable[[], CheckResult]]:
    return [
        lambda: check_unimodular(case),
        lambda: check_period_collapse_all(case),
        lambda: check_leadcoef_all(case),
        lambda: check_chambers(case),
        lambda: check_sigma_vs_bloch(case),
        lambda: check_free_sigma(case),
        lambda: check_amo_half(case),
        lambda: check_gamma_on_bands(case),
        lambda: check_gap_identity(case),
        lambda: check_rho_below_trace(case),
        lambda: check_convergent_bound(case, target),
        lambda: check_herman(case),
        lambda: check_emptiness(case),
    ]


def run_suite(case: Case, target: IrrationalTarget | None, pmap=map) -> list[CheckResult]:
    return list(pmap(lambda job: job(), suite(case, target)))
