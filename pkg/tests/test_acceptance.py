"""End-to-end acceptance checks at their stated tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from quasispec.bandset import BandSet
from quasispec.cli import main
from quasispec.discriminant import (chambers_residual, check_period_collapse, leadcoef_check,
                                    sample_discriminant)
from quasispec.lyapunov import a_set_estimate, bar_gamma_rational, combes_thomas_probe, gamma_table
from quasispec.potential import AnalyticPotential, Rational, random_trig_potential
from quasispec.rationals import IrrationalTarget
from quasispec.spectrum import bloch_oracle, s_minus, s_minus_eps, sigma, theorem3_probe

AMO = AnalyticPotential.cosine(2.0)
HERMAN = AnalyticPotential.cosine(8.0)
GOLD = IrrationalTarget.from_value("golden", 30)


def _coprime(rng, q):
    while True:
        p = int(rng.integers(0, q))
        if math.gcd(p, q) == 1:
            return p


def _fourier_cases(count=30, seed=20240601):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        f = random_trig_potential(rng, int(rng.integers(1, 4)))
        q = int(rng.integers(1, 41))
        out.append((f, Rational(_coprime(rng, q), q), float(rng.uniform(-5, 5))))
    return out


FOURIER_CASES = _fourier_cases()


def test_zero_modes_off_the_q_lattice(record):
    t0 = time.perf_counter()
    worst = max(check_period_collapse(sample_discriminant(E, f, pq, pq.q)) for f, pq, E in FOURIER_CASES)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    record(ok, f"max off-lattice |C_k| = {worst:.2e} (tol 1e-9), {elapsed:.1f}s")
    assert ok


def test_leading_coefficient_closed_form(record):
    t0 = time.perf_counter()
    checks = [leadcoef_check(sample_discriminant(E, f, pq, pq.q), f) for f, pq, E in FOURIER_CASES]
    elapsed = time.perf_counter() - t0
    periodic = max(c.periodic_error for c in checks)
    statement = max(c.statement_error for c in checks)
    # the two printed general forms differ by (-1)^n; odd q cases tell them apart
    odd = [c for (f, pq, E), c in zip(FOURIER_CASES, checks) if pq.q % 2 == 1]
    forms = sorted({c.matching_form for c in odd})
    ok = periodic <= 1e-9 and statement <= 1e-9 and forms == ["statement"] and elapsed < 10.0
    record(ok, f"periodic form err {periodic:.2e}, general form err {statement:.2e}; "
               f"{len(odd)} odd-q cases match the {'/'.join(forms)} form, {elapsed:.1f}s")
    assert ok


def test_chambers_three_mode_reconstruction(record):
    worst = 0.0
    rng = np.random.default_rng(3)
    for q in range(1, 41):
        pq = Rational(_coprime(rng, q), q)
        for E in (-2.5, 0.0, 1.3):
            res, peak = chambers_residual(AMO, pq, E)
            worst = max(worst, res / max(1.0, peak))
    ok = worst <= 1e-9
    record(ok, f"max residual / max(1, M_q) = {worst:.2e} over q = 1..40")
    assert ok


def test_sigma_matches_bloch_oracle(record):
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(20):
        f = random_trig_potential(rng, int(rng.integers(1, 4)))
        q = int(rng.integers(1, 31))
        pq = Rational(_coprime(rng, q), q)
        theta = float(rng.uniform(0, 2 * math.pi))
        worst = max(worst, sigma(f, pq, theta).hausdorff(bloch_oracle(f, pq, theta)))
    free = sigma(AnalyticPotential.zero(), Rational(0, 1)).hausdorff(BandSet(((-2.0, 2.0),)))
    r = math.sqrt(8.0)
    amo = sigma(AMO, Rational(1, 2)).hausdorff(BandSet(((-r, -2.0), (2.0, r))))
    ok = worst <= 1e-8 and free <= 1e-10 and amo <= 1e-10
    record(ok, f"Hausdorff: random {worst:.2e} (tol 1e-8), free {free:.2e}, AMO q=2 {amo:.2e} (tol 1e-10)")
    assert ok


def test_herman_lower_bound(record):
    t0 = time.perf_counter()
    E = np.linspace(-6.0, 6.0, 50)
    mins = {}
    for q in (13, 21, 34):
        mins[q] = float(np.min(bar_gamma_rational(E, HERMAN, GOLD.best_convergent(q))))
    elapsed = time.perf_counter() - t0
    bound = math.log(4.0) - 0.02
    ok = min(mins.values()) >= bound and elapsed < 60.0
    record(ok, "min bar-gamma " + ", ".join(f"q={q}: {v:.5f}" for q, v in mins.items())
           + f" (>= {bound:.5f}), {elapsed:.1f}s")
    assert ok


def test_s_minus_empty_for_large_top_coefficient(record):
    sizes = {q: len(s_minus(HERMAN, GOLD.best_convergent(q), 16 * q))
             for q in (2, 3, 5, 8)}
    ok = all(n == 0 for n in sizes.values())
    record(ok, "interval counts " + ", ".join(f"q={q}: {n}" for q, n in sizes.items()))
    assert ok


def test_phase_measure_decay_along_convergents(record):
    t0 = time.perf_counter()
    convs = [GOLD.best_convergent(q) for q in (5, 8, 13, 21)]
    rep = theorem3_probe(HERMAN, GOLD, convs, [0.0], 0.1)
    elapsed = time.perf_counter() - t0
    row = rep.rows[0]
    required = -(row.gamma - 0.1) / 2.0
    ok = row.slope <= required and row.decreasing and elapsed < 120.0
    record(ok, f"measures {[f'{m:.3e}' for m in row.measures]}, slope {row.slope:.4f} "
               f"<= {required:.4f}, decreasing={row.decreasing}, {elapsed:.1f}s")
    assert ok
    assert rep.to_dict()["rows"][0]["slope"] == row.slope


@pytest.mark.parametrize("name,f,E", [
    ("8cos", HERMAN, np.linspace(-10.0, 10.0, 201)),
    ("2cos", AMO, np.linspace(-4.0, 4.0, 201)),
    ("cos", AnalyticPotential.cosine(1.0), np.linspace(-3.0, 3.0, 201)),
])
def test_positive_gamma_excludes_s_minus(record, name, f, E):
    counts = []
    for q in (5, 8, 13):
        pq = GOLD.best_convergent(q)
        g = bar_gamma_rational(E, f, pq)
        S = s_minus(f, pq, 16 * q)
        hyperbolic = E[g > 0.05]
        counts.append((q, hyperbolic.size, sum(S.contains(e) for e in hyperbolic), S.measure))
    ok = all(c[2] == 0 for c in counts)
    record(ok, f"{name}: " + ", ".join(f"q={q}: {n} hyperbolic E, {bad} in S_- (|S_-|={m:.3f})"
                                       for q, n, bad, m in counts))
    assert ok


def _eps_needed(f, pq, cells, theta_count):
    """Smallest eps with cells inside s_minus_eps: sup over the cells of max_theta dist to sigma."""
    thetas = 2 * math.pi * np.arange(-(-theta_count // pq.q)) / theta_count
    pts = np.concatenate([np.linspace(a, b, 33) for a, b in cells]) if len(cells) else np.array([])
    worst = 0.0
    for t in thetas:
        s = sigma(f, pq, float(t))
        worst = max([worst] + [s.distance(float(e)) for e in pts])
    return worst


def test_a_set_inside_fattened_s_minus(record):
    E = np.linspace(-4.0, 4.0, 321)
    eps, tol = 0.25, 0.05
    parts = []
    ok = True
    for q in (8, 13, 21):
        pq = GOLD.best_convergent(q)
        A = a_set_estimate(AMO, GOLD, E, gamma_tol=tol, q_max=q)
        S = s_minus_eps(AMO, pq, eps, 16 * q)
        inside = A.issubset(S, tol=1e-12)
        ok &= inside
        need = _eps_needed(AMO, pq, A, 16 * q)
        parts.append(f"q={q}: {len(A)} cells, inside={inside}, needed eps/gamma_tol = {need / tol:.3f}")
    record(ok, "; ".join(parts))
    assert ok


def test_gap_identity_and_zero_gamma_on_bands(record):
    rng = np.random.default_rng(404)
    worst = 0.0
    n_gap = 0
    n_band = nonzero = 0
    while n_gap < 50:
        f = random_trig_potential(rng, int(rng.integers(1, 3)))
        q = int(rng.integers(2, 16))
        pq = Rational(_coprime(rng, q), q)
        ivs = sigma(f, pq).as_array()
        if ivs.shape[0] < 2:
            continue
        k = int(rng.integers(0, ivs.shape[0] - 1))
        lo, hi = ivs[k, 1], ivs[k + 1, 0]
        E = float(rng.uniform(lo, hi))
        if not lo < E < hi:
            continue
        worst = max(worst, combes_thomas_probe(f, pq, 0.0, [E]).identity_max_rel_error)
        n_gap += 1
        inside = np.concatenate([ivs.ravel(), rng.uniform(ivs[:, 0], ivs[:, 1])])
        g = gamma_table(inside, f, pq, [0.0])[0]
        n_band += inside.size
        nonzero += int(np.count_nonzero(g))
    ok = worst <= 1e-9 and nonzero == 0
    record(ok, f"gap identity rel err {worst:.2e} on {n_gap} gap energies (tol 1e-9); "
               f"gamma != 0 at {nonzero} of {n_band} band points incl. edges")
    assert ok


def test_verify_all_deterministic(record, tmp_path, capsys):
    outs = []
    codes = []
    for i, threads in enumerate((1, 1, 8)):
        path = tmp_path / f"verify{i}.csv"
        codes.append(main(["verify-all", "--threads", str(threads), "--out", str(path)]))
        outs.append(path.read_bytes())
    capsys.readouterr()
    same_runs = outs[0] == outs[1]
    same_threads = outs[0] == outs[2]
    ok = same_runs and same_threads and codes == [0, 0, 0]
    record(ok, f"repeat identical={same_runs}, threads 1 vs 8 identical={same_threads}, exit codes {codes}")
    assert ok
