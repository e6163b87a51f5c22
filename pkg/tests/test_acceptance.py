"""Graded acceptance suite.

One test per numbered criterion, each asserting every clause at its stated
tolerance and printing a single summary line. Stochastic criteria use the
fixed master seed below; they are exact reruns, not tuned draws. Clauses
that measure asymptotic effects at fixed finite n are asserted as written
even where the finite-size value is known to fall short; the accompanying
summary line shows the measured numbers.
"""

import math

import numpy as np
import pytest

from mcd.analytic import (
    a_fixed_point,
    cm_drift,
    critical_points,
    sw_drift,
    theta_r,
    theta_star,
)
from mcd.dynamics import cm_step, glauber_step, sw_step
from mcd.experiments import (
    bimodality_scan,
    cluster_tail_bound,
    cm_drift_map,
    escape_time,
    giant_concentration,
    one_step_exit,
    sm_tail,
    sw_drift_map,
)
from mcd.model import EdgeConfig, ModelParams, SpinConfig
from mcd.oracle import (
    bgj_coloring_check,
    build_kernel,
    detailed_balance_violation,
    edge_mask,
    es_coupling_check,
    exhaustive_min_ratio,
    iterated_coloring_check,
    min_bottleneck_ratio,
    mixing_time_exact,
    spectral_gap,
    spin_code,
    stationarity_residual,
    tv_distance,
)
from mcd.rng import RngStream

SEED = 20260817
LAMBDA_C3 = 4 * math.log(2)


def _report(num: str, clauses: list[tuple[bool, str]]) -> None:
    ok = all(flag for flag, _ in clauses)
    print(f"criterion {num}: " + ("PASS" if ok else "FAIL"))
    for flag, desc in clauses:
        print(f"  [{'ok' if flag else 'FAIL'}] {desc}")
    failed = [desc for flag, desc in clauses if not flag]
    assert ok, f"criterion {num} failed clauses: {failed}"


# ---------------------------------------------------------------------------
# 1. analytic suite

def test_criterion_1_analytic():
    clauses = []
    cp3 = critical_points(3.0)
    clauses.append((abs(cp3.lambda_c - LAMBDA_C3) < 1e-12,
                    f"lambda_c(3) = {cp3.lambda_c!r} vs 4 ln 2, tol 1e-12"))
    clauses.append((2.7450 <= cp3.lambda_s <= 2.7465,
                    f"lambda_s(3) = {cp3.lambda_s!r} in [2.7450, 2.7465]"))
    clauses.append((cp3.lambda_S == 3.0, f"lambda_S(3) = {cp3.lambda_S!r} == 3 exactly"))
    for q in (3.0, 4.0, 10.0):
        lam_c = critical_points(q).lambda_c
        got = theta_r(lam_c, q)
        want = (q - 2) / (q - 1)
        clauses.append((abs(got - want) < 1e-8,
                        f"Theta_r(lambda_c, q={q}) = {got!r} vs {want!r}, tol 1e-8"))
    for lam in (2.75, LAMBDA_C3, 2.9):
        a = a_fixed_point(lam, 3)
        fa = sw_drift(a, lam, 3)
        clauses.append((abs(fa - a) < 1e-8,
                        f"|F(a) - a| = {abs(fa - a):.2e} at lam={lam:.6f}, tol 1e-8"))
        tr = theta_r(lam, 3.0)
        g_tr = cm_drift(tr, lam, 3.0) - tr
        clauses.append((abs(g_tr) < 1e-8,
                        f"|g(Theta_r)| = {abs(g_tr):.2e} at lam={lam:.6f}, tol 1e-8"))
        ts = theta_star(lam, 3.0)
        g_ts = cm_drift(ts, lam, 3.0) - ts
        clauses.append((abs(g_ts) < 1e-8,
                        f"|g(Theta*)| = {abs(g_ts):.2e} at lam={lam:.6f}, tol 1e-8"))
        h = 1e-6
        deriv = (sw_drift(a + h, lam, 3) - sw_drift(a - h, lam, 3)) / (2 * h)
        clauses.append((abs(deriv) < 1.0,
                        f"|F'(a)| = {abs(deriv):.6f} < 1 at lam={lam:.6f}"))
    _report("1 (analytic)", clauses)


# ---------------------------------------------------------------------------
# 2. exact oracle suite

def test_criterion_2_oracle():
    clauses = []
    grid = [("sw", 3, 3.0), ("cm", 4, 2.0), ("cm", 4, 2.5)]
    grid += [("glauber", n, q) for n in (4, 6) for q in (1.5, 2.0, 3.0)]
    for kind, n, q in grid:
        for lam in (1.0, 2.0):
            kernel = build_kernel(kind, n, q, lam)
            res = stationarity_residual(kernel)
            db = detailed_balance_violation(kernel)
            clauses.append((res < 1e-10,
                            f"stationarity {kind} n={n} q={q} lam={lam}: {res:.2e} < 1e-10"))
            clauses.append((db < 1e-12,
                            f"detailed balance {kind} n={n} q={q} lam={lam}: {db:.2e} < 1e-12"))
    for n in (3, 4, 5):
        for lam in (1.0, 2.0):
            dev = max(es_coupling_check(n, lam, 3))
            clauses.append((dev < 1e-10,
                            f"edge/spin coupling n={n} q=3 lam={lam}: {dev:.2e} < 1e-10"))
    for lam in (1.0, 2.0):
        dev = bgj_coloring_check(4, lam, 3.0, 1.0 / 3.0)
        clauses.append((dev < 1e-10,
                        f"restriction law n=4 q=3 alpha=1/3 lam={lam}: {dev:.2e} < 1e-10"))
        dev = float(iterated_coloring_check(3, lam, 2.5))
        clauses.append((dev < 1e-10,
                        f"iterated coloring n=3 q=2.5 lam={lam}: {dev:.2e} < 1e-10"))

    # conductance sandwich. For every cut S the indicator of S certifies
    # gap <= Q(S,Sc)/(pi(S)pi(Sc)), so gap <= Phi_exact <= Phi_family and
    # checking Phi_family^2/2 <= gap certifies Phi_exact^2/2 <= gap without
    # enumerating all 2^63 cuts of the 64-state space. The 8-state chain is
    # small enough to take the true exhaustive minimum directly.
    small = build_kernel("glauber", 3, 2.0, 1.0)
    gap_s = spectral_gap(small, "dense")
    phi_s, _ = exhaustive_min_ratio(small)
    clauses.append((phi_s ** 2 / 2 <= gap_s + 1e-12 and gap_s <= 2 * phi_s + 1e-12,
                    f"exhaustive sandwich n=3: {phi_s ** 2 / 2:.4f} <= {gap_s:.4f} <= {2 * phi_s:.4f}"))
    kernel = build_kernel("glauber", 4, 2.0, 1.0)
    gap = spectral_gap(kernel)
    phi_fam, _ = min_bottleneck_ratio(kernel)
    clauses.append((phi_fam ** 2 / 2 <= gap + 1e-12,
                    f"certified lower sandwich n=4: Phi_fam^2/2 = {phi_fam ** 2 / 2:.4f} <= gap = {gap:.4f}"))
    clauses.append((gap <= phi_fam + 1e-12,
                    f"upper sandwich n=4: gap = {gap:.4f} <= Phi_fam = {phi_fam:.4f} (<= 2 Phi_exact)"))
    tmix = mixing_time_exact(kernel)
    pi_min = float(kernel.measure.probs.min())
    lo = 1.0 / gap - 1.0
    hi = math.log(2.0 * math.e / pi_min) / gap
    clauses.append((lo <= tmix <= hi,
                    f"t_mix = {tmix} within [{lo:.3f}, {hi:.3f}]"))
    _report("2 (oracle)", clauses)


# ---------------------------------------------------------------------------
# 3. dynamics versus oracle, one-step law

def _empirical_tv_sw(samples: int) -> float:
    params = ModelParams(n=3, q=3.0, lam=1.5)
    start = SpinConfig(colors=np.array([1, 2, 3]), q=3)
    kernel = build_kernel("sw", 3, 3.0, 1.5)
    row = kernel.P[spin_code(start.colors, 3)].toarray().ravel()
    rng = RngStream(SEED, "tv:sw").generator()
    counts = np.zeros(kernel.size)
    for _ in range(samples):
        new, _ = sw_step(start, params, rng)
        counts[spin_code(new.colors, 3)] += 1
    return tv_distance(counts / samples, row)


def _empirical_tv_edge(kind, n, q, lam, samples: int) -> float:
    params = ModelParams(n=n, q=q, lam=lam)
    start = EdgeConfig.empty(n)
    kernel = build_kernel(kind, n, q, lam)
    row = kernel.P[edge_mask(start)].toarray().ravel()
    rng = RngStream(SEED, f"tv:{kind}").generator()
    counts = np.zeros(kernel.size)
    step = cm_step if kind == "cm" else glauber_step
    for _ in range(samples):
        counts[edge_mask(step(start, params, rng))] += 1
    return tv_distance(counts / samples, row)


def test_criterion_3_dynamics_vs_oracle():
    samples = 100000
    tv_sw = _empirical_tv_sw(samples)
    tv_cm = _empirical_tv_edge("cm", 4, 2.5, 2.0, samples)
    tv_gl = _empirical_tv_edge("glauber", 4, 2.0, 1.0, samples)
    _report("3 (dynamics vs oracle)", [
        (tv_sw < 1e-2, f"sw n=3 q=3 lam=1.5: TV = {tv_sw:.5f} < 0.01"),
        (tv_cm < 1e-2, f"cm n=4 q=2.5 lam=2: TV = {tv_cm:.5f} < 0.01"),
        (tv_gl < 1e-2, f"glauber n=4 q=2 lam=1: TV = {tv_gl:.5f} < 0.01"),
    ])


# ---------------------------------------------------------------------------
# 4. drift maps at n = 10^4

def test_criterion_4_drift_maps():
    clauses = []
    rep = sw_drift_map(10000, LAMBDA_C3, 3, [1 / 3, 0.5, 2 / 3], 200, SEED,
                       threads=4)
    for cell in rep.cells:
        err = cell.extra["abs_error"]
        clauses.append((err < 0.01,
                        f"sw z={cell.param:.4f}: |mean - F| = {err:.5f} < 0.01"))
    ts = theta_star(LAMBDA_C3, 3.0)
    tr = theta_r(LAMBDA_C3, 3.0)
    rep2 = cm_drift_map(10000, LAMBDA_C3, 3.0, [ts, (ts + tr) / 2, tr], 200,
                        SEED, threads=4)
    for cell in rep2.cells:
        err = cell.extra["abs_error"]
        clauses.append((err < 0.02,
                        f"cm theta={cell.param:.4f}: |mean - f| = {err:.5f} < 0.02"))
    mid = rep2.cells[1]
    drift, se = mid.extra["empirical_drift"], mid.extra["stderr"]
    clauses.append((drift >= 2 * se,
                    f"midpoint drift {drift:.5f} >= 2 se = {2 * se:.5f}"))
    _report("4 (drift maps)", clauses)


# ---------------------------------------------------------------------------
# 5. slowdown proxy

def test_criterion_5_slowdown_proxy():
    clauses = []
    rep = one_step_exit([200, 400, 800], LAMBDA_C3, 3, 0.08, "balanced",
                        1000, SEED, threads=4)
    est = [c.estimate for c in rep.cells]
    cis = [(c.ci_lo, c.ci_hi) for c in rep.cells]
    clauses.append((est[0] > est[1] > est[2],
                    f"exit estimates strictly decreasing: {est}"))
    clauses.append((cis[0][0] > cis[1][1] and cis[1][0] > cis[2][1],
                    f"95% CIs non-overlapping: {cis}"))
    slope = rep.summary["log_slope"]
    clauses.append((slope < 0, f"log-estimate slope = {slope:.5f} < 0"))
    contrast = one_step_exit([400], 3.2, 3, 0.08, "balanced", 1000, SEED,
                             threads=4).cells[0].estimate
    clauses.append((contrast > 0.9,
                    f"contrast lam=3.2 > lambda_S exit = {contrast:.4f} > 0.9"))
    rep3 = escape_time([40, 60, 80], LAMBDA_C3, 3, 0.08, "balanced", 200,
                       SEED, cap=10 ** 5, threads=4)
    med = [c.estimate for c in rep3.cells]
    clauses.append((med[0] < med[1] < med[2],
                    f"median escape strictly increasing: {med}"))
    _report("5 (slowdown proxy)", clauses)


# ---------------------------------------------------------------------------
# 6. equilibrium cluster facts

def test_criterion_6_equilibrium_facts():
    clauses = []
    rep = cluster_tail_bound(10000, 0.5, [20, 40, 60], 100000, SEED, threads=4)
    for cell in rep.cells:
        bound = cell.extra["bound"]
        clauses.append((cell.ci_hi <= bound,
                        f"cluster tail k={int(cell.param)}: upper CI {cell.ci_hi:.3e} <= {bound:.3e}"))
    rep2 = sm_tail([100, 200, 400], 0.5, 20, 0.2, 50000, SEED, threads=4)
    slope = rep2.summary["log_slope"]
    clauses.append((slope < 0, f"S_M tail log-estimate slope = {slope:.5f} < 0"))
    rep3 = giant_concentration(100000, 2.0, 0.01, 100, SEED, threads=4)
    outside = rep3.cells[0].extra["outside"]
    clauses.append((outside <= 1,
                    f"giant concentration: {outside} of 100 replicas outside 0.01"))
    _report("6 (equilibrium facts)", clauses)


# ---------------------------------------------------------------------------
# 7. critical bimodality at n = 500

def test_criterion_7_bimodality():
    rep = bimodality_scan(500, LAMBDA_C3, 3, burn=200, samples=1000,
                          master_seed=SEED)
    bal_mean, ord_mean, bal_val, ord_val = [c.estimate for c in rep.cells]
    _report("7 (bimodality n=500)", [
        (abs(bal_mean - 1 / 3) < 0.05,
         f"balanced mean {bal_mean:.4f} within 0.05 of 1/3"),
        (abs(ord_mean - 2 / 3) < 0.05,
         f"ordered mean {ord_mean:.4f} within 0.05 of 2/3"),
        (bal_val < 0.01, f"balanced valley mass {bal_val:.4f} < 0.01"),
        (ord_val < 0.01, f"ordered valley mass {ord_val:.4f} < 0.01"),
    ])


def test_bimodality_demonstration_at_large_n():
    # same protocol at n = 30000, where the two chains do separate: the
    # coexistence the n=500 criterion is after appears once n outgrows the
    # critical-window fluctuations
    rep = bimodality_scan(30000, LAMBDA_C3, 3, burn=200, samples=1000,
                          master_seed=SEED)
    bal_mean, ord_mean, bal_val, ord_val = [c.estimate for c in rep.cells]
    assert abs(bal_mean - 1 / 3) < 0.05
    assert abs(ord_mean - 2 / 3) < 0.05
    assert bal_val < 0.01 and ord_val < 0.01


# ---------------------------------------------------------------------------
# 8. determinism

def test_criterion_8_determinism():
    clauses = []
    runs = [one_step_exit([60, 90], LAMBDA_C3, 3, 0.08, "balanced", 200,
                          SEED, threads=t).to_csv_text() for t in (1, 4, 7)]
    clauses.append((runs[0] == runs[1] == runs[2],
                    "one_step_exit identical across 1/4/7 worker processes"))
    tails = [sm_tail([80, 160], 0.5, 10, 0.3, 400, SEED, threads=t).to_csv_text()
             for t in (1, 3)]
    clauses.append((tails[0] == tails[1],
                    "sm_tail identical across 1/3 worker processes"))
    maps = [cm_drift_map(500, LAMBDA_C3, 3.0, [0.375], 40, SEED,
                         threads=t).to_csv_text() for t in (1, 5)]
    clauses.append((maps[0] == maps[1],
                    "cm_drift_map identical across 1/5 worker processes"))
    rerun = one_step_exit([60, 90], LAMBDA_C3, 3, 0.08, "balanced", 200,
                          SEED, threads=4).to_csv_text()
    clauses.append((rerun == runs[0], "rerun with same master seed is byte-identical"))
    _report("8 (determinism)", clauses)
