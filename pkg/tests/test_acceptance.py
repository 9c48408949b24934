"""Acceptance suite: the eleven release criteria at their stated tolerances.

Each criterion is a function returning ``(passed, detail)``; it is also timed
against its runtime limit. Under pytest every criterion is one test and a
PASS/FAIL line per criterion is printed in the terminal summary. Run the file
directly (``python3 tests/test_acceptance.py``) for the same lines without pytest.
"""
import math
import sys
import time

import numpy as np
import pytest

from cdsphere import curvature as cv
from cdsphere import measures, profiles, sampling, spectral
from cdsphere.measures import SphereParams

RESULTS = {}


def _random_tuples(count=200, seed=20240601):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 11))
        alpha = float(rng.uniform(-n + 0.1, 3 * n))
        s = float(rng.uniform(0.0, 0.95))
        theta = float(rng.uniform(0.0, math.pi))
        phi = float(rng.uniform(0.0, math.pi / 2))
        out.append((SphereParams(n, alpha, s), max(theta, 1e-3), phi))
    return out


def c01_cd_minimum():
    value, (a, b) = cv.min_F_disk(1.0, 1.0)
    on_boundary = abs(math.hypot(a, b) - 1.0) <= 1e-9
    t = 2 * math.pi * (np.arange(100) + 0.5) / 100
    grid = cv.F(np.cos(t), np.sin(t))
    worst = float(np.max(np.abs(grid + 0.25)))
    ok = abs(value + 0.25) <= 1e-9 and on_boundary and worst <= 1e-12
    return ok, f"min={value:.12f} argmin=({a:.6f},{b:.6f}) boundary_dev={worst:.1e}"


def c02_tensor_oracle():
    worst_rel, worst_margin = 0.0, math.inf
    for params, theta, phi in _random_tuples():
        closed = cv.generalized_ricci_quadform(params, theta, phi)
        fd = cv.fd_ricci_oracle(params, theta, phi)
        worst_rel = max(worst_rel, abs(fd - closed) / abs(closed))
        rho = cv.rho(params.n, params.alpha)
        worst_margin = min(worst_margin, closed - rho, fd - rho)
    ok = worst_rel <= 1e-4 and worst_margin >= -1e-9
    return ok, f"max_rel_diff={worst_rel:.2e} min(Ric - rho)={worst_margin:.3e}"


def c03_harmonic_normalization():
    worst = 0.0
    for n in (2, 3, 5, 10):
        for s in (0.0, 0.3, 0.7, 0.95):
            worst = max(worst, abs(measures.sphere_normalization(SphereParams(n, 1.0, s)) - (1 - s * s)))
    return worst <= 1e-8, f"max|c - (1 - s^2)|={worst:.2e}"


def c04_uniform_gap():
    worst = 0.0
    cases = []
    for n in (2, 3, 5):
        cases += [SphereParams(n, a, 0.0) for a in (-n, 0.0, 1.0)]
        cases += [SphereParams(n, -n, s) for s in (0.0, 0.5, 0.9)]
    for p in cases:
        worst = max(worst, abs(spectral.spectral_gap(p).lambda_gap / p.n - 1.0))
    return worst <= 0.005, f"{len(cases)} cases, max|lambda/n - 1|={worst:.2e}"


def c05_harmonic_window():
    failures, rows = [], []
    for n in (2, 3, 5, 10):
        for s in (0.3, 0.7, 0.95):
            lam = spectral.spectral_gap(SphereParams(n, 1.0, s)).lambda_gap
            ok = (n - 1) / 2 <= lam <= n * 1.005 and lam >= 3 * (n - 1) / 8 - 0.25
            rows.append(lam / n)
            if not ok:
                failures.append((n, s, lam))
    return not failures, f"12 cases, lambda/n in [{min(rows):.4f}, {max(rows):.4f}], failures={failures}"


def _lower_bound_grid():
    grid = []
    for i, n in enumerate((2, 3, 4, 5, 10)):
        top = 3 * n - 4
        for j, alpha in enumerate((-0.5, 0.5, top / 2, top - 0.1)):
            grid.append(SphereParams(n, alpha, (0.3, 0.7, 0.95, 0.5)[(i + j) % 4]))
    return grid


def c06_lower_bounds():
    worst_lich, worst_che, checked = math.inf, math.inf, 0
    for p in _lower_bound_grid():
        lam = spectral.spectral_gap(p).lambda_gap
        if 0 < p.alpha < 3 * p.n - 4:
            worst_lich = min(worst_lich, lam - p.alpha / (p.alpha + 1) * cv.rho(p.n, p.alpha))
            checked += 1
        if -1 < p.alpha < 1:
            d = profiles.cheeger_lower(profiles.model_profile(p))
            worst_che = min(worst_che, lam - d * d / 4)
            checked += 1
    ok = worst_lich >= -1e-6 and worst_che >= -1e-6
    return ok, f"20 points, {checked} checks, min slack lichnerowicz={worst_lich:.3e} cheeger={worst_che:.3e}"


def _cap_grid():
    grid = []
    for n in (2, 3, 5, 10):
        for alpha in (-0.5, 0.0, 1.0, float(n), 3 * n - 4 - 0.1):
            if -1 < alpha < 3 * n - 4:
                grid += [SphereParams(n, alpha, s) for s in (0.0, 0.3, 0.7, 0.95)]
    grid += [p for p, _, _ in _random_tuples(60) if -1 < p.alpha < 3 * p.n - 4]
    return grid


def c07_cap_isoperimetry():
    worst, where, count = math.inf, None, 0
    for p in _cap_grid():
        report = profiles.isop_check_caps(p, 200)
        count += 1
        if report.worst_slack < worst:
            worst, where = report.worst_slack, p
    return worst >= -1e-8, f"{count} measures x 200 caps, worst slack={worst:.3e} at {where}"


CONCENTRATION_TRIPLES = [
    (2, 1.0, 0.5), (3, 1.0, 0.7), (5, 5.0, 0.9), (2, -0.5, 0.9), (3, 0.0, 0.3),
    (4, 2.0, 0.95), (5, -0.9, 0.6), (10, 1.0, 0.95), (10, 20.0, 0.8), (3, 4.5, 0.5),
]


def c08_concentration():
    r = np.linspace(0.1, 3.0, 20)
    dominated, within, worst_z = True, True, 0.0
    for i, t in enumerate(CONCENTRATION_TRIPLES):
        res = sampling.concentration_experiment(SphereParams(*t), r, count=10_000, seed=100 + i)
        dominated &= res.dominated
        within &= res.within_stderr(3.0)
        for _, exact, emp, _, se in res.rows:
            if se > 0:
                worst_z = max(worst_z, abs(emp - exact) / se)
    return dominated and within, f"dominated={dominated} within_3se={within} max|z|={worst_z:.2f}"


def c09_harmonic_ks():
    pvals = []
    for n in (2, 3):
        for k, s in enumerate((0.3, 0.5, 0.8)):
            x = np.zeros(n + 1)
            x[0] = s
            wos = sampling.walk_on_spheres(n, x, eps=1e-6, seed=11 + 10 * k + n, count=20_000)
            direct = sampling.sample_direct(SphereParams(n, 1.0, s), 20_000, seed=12 + 10 * k + n)
            pvals.append(sampling.ks_two_sample(wos, direct)[1])
    return min(pvals) > 0.01, "p-values " + " ".join(f"{p:.3f}" for p in pvals)


def c10_Fp_behaviour():
    mins = {p: cv.min_F_disk(1.0, p)[0] for p in (1.0, 1.5, 2.0, 4.0)}
    a = 1 - 1e-6
    below = cv.F_p(0.5, a, math.sqrt(1 - a * a))
    ok = all(abs(v + 0.25) <= 1e-9 for v in mins.values()) and below < -1e4
    return ok, "mins " + " ".join(f"p={p:g}:{v:.12f}" for p, v in mins.items()) + f"; F_0.5(1-1e-6)={below:.3e}"


def c11_norm_condition():
    n = 3
    res = cv.norm_epsilon(cv.euclidean_norm(), n)
    rho_dev = max(abs(res.implied_certificate(a)[0] - (n - 1)) for a in (-2.0, 0.0, 1.0, 5.0))
    n_ok = all(res.implied_certificate(a)[1] == -a for a in (-2.0, 0.0, 1.0, 5.0))
    ok = abs(res.epsilon - 1.0) <= 1e-6 and rho_dev <= 1e-6 * (n + 5) and n_ok
    return ok, f"epsilon={res.epsilon:.12f} max|rho - (n-1)|={rho_dev:.1e}"


CRITERIA = [
    (1, "CD minimum of F over the unit disk", c01_cd_minimum, 1.0),
    (2, "closed-form vs finite-difference Ricci", c02_tensor_oracle, 10.0),
    (3, "harmonic normalisation 1 - s^2", c03_harmonic_normalization, 5.0),
    (4, "uniform-sphere spectral gap", c04_uniform_gap, 60.0),
    (5, "harmonic-case spectral window", c05_harmonic_window, 300.0),
    (6, "spectral lower bounds", c06_lower_bounds, 300.0),
    (7, "cap isoperimetry", c07_cap_isoperimetry, 120.0),
    (8, "concentration tails", c08_concentration, 120.0),
    (9, "walk on spheres vs Poisson kernel", c09_harmonic_ks, 120.0),
    (10, "F_p minimum and p < 1 unboundedness", c10_Fp_behaviour, 5.0),
    (11, "general-norm condition, Euclidean", c11_norm_condition, 30.0),
]


def evaluate(number, fn, limit):
    start = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - start
    in_time = elapsed < limit
    line = (f"criterion {number:2d}: {'PASS' if passed and in_time else 'FAIL'} "
            f"({elapsed:.2f}s / {limit:g}s) {detail}")
    RESULTS[number] = line
    return passed, in_time, elapsed, line


@pytest.mark.parametrize("number,title,fn,limit", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, title, fn, limit):
    passed, in_time, elapsed, line = evaluate(number, fn, limit)
    assert passed, line
    assert in_time, line


if __name__ == "__main__":
    failed = 0
    for number, title, fn, limit in CRITERIA:
        passed, in_time, _, line = evaluate(number, fn, limit)
        failed += not (passed and in_time)
        print(line, flush=True)
    sys.exit(1 if failed else 0)
