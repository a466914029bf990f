"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see lines as they
are produced); the verdicts are repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from codachart.designer import (DesignProblem, calibrate_H, near_optimal_vsi, optimize_fsi,
                                solve_hL)
from codachart.markov import (MarkovSpec, ats_incontrol, ats_outofcontrol, build_incontrol_chain,
                              norm_chain, shifted_chain)
from codachart.montecarlo import SimConfig, simulate_ats
from codachart.simplex import (balances, clr, clr_inv, ilr, ilr_inv, perturb, power, sbp_basis)
from codachart.special import noncentral_chi2_cdf, std_normal_cdf

from conftest import (EXAMPLE_ILR, EXAMPLE_PARTS, REF_DELTAS, REF_FSI_ARL1, REF_VSI_ATS1, REF_W_HL,
                      record_criterion)
from oracles import ncx2_cdf_quad, normal_cdf_mp, special_grid

P = 3
SEED = 20240601
H_SHORT = (0.1, 0.5)


@pytest.fixture(scope="module")
def fsi_optima():
    t0 = time.perf_counter()
    sols = {d: optimize_fsi(P, d) for d in REF_DELTAS}
    return sols, time.perf_counter() - t0


@pytest.fixture(scope="module")
def near_optima(fsi_optima):
    sols, _ = fsi_optima
    t0 = time.perf_counter()
    out = {}
    for d in REF_DELTAS:
        for h_S in H_SHORT:
            out[d, h_S] = near_optimal_vsi(sols[d].r_star, sols[d].H_star,
                                           DesignProblem(p=P, delta=d, h_S=h_S))
    return out, time.perf_counter() - t0


def test_criterion_1_ilr_example():
    t0 = time.perf_counter()
    coords = ilr(EXAMPLE_PARTS)
    rounded_ok = bool(np.array_equal(np.round(coords, 2) + 0.0, EXAMPLE_ILR))
    back = np.array([ilr_inv(c).parts for c in coords])
    inv_err = float(np.abs(back - EXAMPLE_PARTS).max())
    elapsed = time.perf_counter() - t0
    ok = rounded_ok and inv_err <= 1e-9 and elapsed < 1.0
    line = record_criterion(1, ok, f"6 rows match at 2 decimals={rounded_ok}, "
                                   f"max inverse error {inv_err:.1e}, {elapsed:.3f} s")
    assert ok, line


def test_criterion_2_fsi_baseline(fsi_optima):
    sols, elapsed = fsi_optima
    rows = []
    ok = elapsed < 300
    for d, ref in zip(REF_DELTAS, REF_FSI_ARL1):
        s = sols[d]
        dev = s.arl1 / ref - 1
        ok &= abs(dev) <= 0.05 and abs(s.arl0 - 200) <= 0.1
        rows.append(f"{d:.2f}:{s.arl1:.2f}({dev:+.1%})")
    line = record_criterion(2, ok, f"ARL1 vs reference [{', '.join(rows)}], {elapsed:.0f} s")
    assert ok, line


def test_criterion_3_near_optimal(fsi_optima, near_optima):
    sols, elapsed = near_optima
    elapsed += fsi_optima[1]
    worst, misses, constraint_ok = 0.0, [], True
    for h_S in H_SHORT:
        for d, ref in zip(REF_DELTAS, REF_VSI_ATS1[h_S]):
            s = sols[d, h_S]
            dev = s.ats1 / ref - 1
            worst = max(worst, abs(dev))
            if abs(dev) > 0.05:
                misses.append(f"({d:.2f},{h_S}):{s.ats1:.2f} vs {ref} ({dev:+.1%})")
            constraint_ok &= abs(s.ats0 - 200) <= 0.5 and abs(s.e0_h - 1) <= 1e-6
    ok = not misses and constraint_ok and elapsed < 1800
    detail = (f"{16 - len(misses)}/16 cells within 5% (worst {worst:.1%}), "
              f"ATS0/E0 constraints held={constraint_ok}, {elapsed:.0f} s")
    if misses:
        detail += "; off: " + "; ".join(misses)
    line = record_criterion(3, ok, detail)
    assert ok, line


def test_criterion_4_dominance(fsi_optima, near_optima):
    fsi, _ = fsi_optima
    sols, _ = near_optima
    beat_fsi = all(sols[d, h].ats1 <= fsi[d].arl1 for d in REF_DELTAS for h in H_SHORT)
    short_better = all(sols[d, 0.1].ats1 <= sols[d, 0.5].ats1 for d in REF_DELTAS)
    ok = beat_fsi and short_better
    line = record_criterion(4, ok, f"VSI <= FSI in 16/16={beat_fsi}, "
                                   f"h_S=0.1 <= h_S=0.5 in 8/8={short_better}")
    assert ok, line


def test_criterion_5_degenerate_vsi():
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for _ in range(20):
        r = float(rng.uniform(0.05, 1.0))
        H = float(rng.uniform(4.0, 16.0))
        w = float(rng.uniform(0.05, 0.95)) * H
        for rep in (ats_incontrol(MarkovSpec(p=P, r=r, H=H, w=w)),
                    ats_outofcontrol(MarkovSpec(p=P, r=r, H=H, w=w, delta=float(rng.uniform(0, 2))))):
            worst = max(worst, abs(rep.ats - rep.arl) / rep.arl, abs(rep.e_h - 1.0))
    ok = worst <= 1e-10
    line = record_criterion(5, ok, f"20 random (r, H), both chains: max |ats-arl|/arl, |e_h-1| = {worst:.1e}")
    assert ok, line


def test_criterion_6_chain_consistency():
    rng = np.random.default_rng(SEED + 6)
    worst = {30: 0.0, 60: 0.0}
    rows = []
    for _ in range(10):
        r = round(float(rng.uniform(0.05, 0.4)), 3)
        H = calibrate_H(P, r, float(rng.uniform(100, 500))).H
        devs = []
        for m, tol in ((30, 0.01), (60, 0.0025)):
            one = ats_incontrol(MarkovSpec(p=P, r=r, H=H, m=m)).arl
            two = ats_outofcontrol(MarkovSpec(p=P, r=r, H=H, m1=m, m2=m)).arl
            dev = two / one - 1
            worst[m] = max(worst[m], abs(dev))
            devs.append(f"{dev:+.2%}")
        rows.append(f"r={r}:{'/'.join(devs)}")
    ok = worst[30] <= 0.01 and worst[60] <= 0.0025
    line = record_criterion(6, ok, f"max |2D/1D - 1| = {worst[30]:.2%} at m=30 (limit 1%), "
                                   f"{worst[60]:.2%} at m=60 (limit 0.25%); per design m30/m60 "
                                   f"[{', '.join(rows)}]")
    assert ok, line


def _scenarios(fsi):
    """12 designs spanning the reference grid: VSI rows at printed w with h_L solved, FSI rows, in-control."""
    out = []
    for k, d in enumerate(REF_DELTAS):
        h_S = H_SHORT[k % 2]
        w, _ = REF_W_HL[h_S][k]
        s = fsi[d]
        out.append(dict(r=s.r_star, H=s.H_star, w=w, h_S=h_S,
                        h_L=solve_hL(P, s.r_star, s.H_star, w, h_S), delta=d))
    for d in (1.0, 2.0):
        out.append(dict(r=fsi[d].r_star, H=fsi[d].H_star, w=None, h_S=1.0, h_L=1.0, delta=d))
    for vsi in (out[0], out[7]):
        out.append({**vsi, "delta": 0.0})
    return out


def test_criterion_7_oracle_agreement(fsi_optima):
    fsi, _ = fsi_optima
    t0 = time.perf_counter()
    worst, worst_fine, misses = 0.0, 0.0, []
    for k, sc in enumerate(_scenarios(fsi)):
        if sc["delta"] == 0:
            markov = ats_incontrol(MarkovSpec(p=P, **sc)).ats
            fine = ats_incontrol(MarkovSpec(p=P, m=240, **sc)).ats
        else:
            markov = ats_outofcontrol(MarkovSpec(p=P, **sc)).ats
            fine = ats_outofcontrol(MarkovSpec(p=P, m1=60, m2=60, **sc)).ats
        est = simulate_ats(SimConfig(p=P, seed=SEED, replications=100_000, **sc))
        z = (est.ats - markov) / est.ats_se
        worst = max(worst, abs(z))
        # diagnostic only: the same comparison on finer grids
        worst_fine = max(worst_fine, abs(est.ats - fine) / est.ats_se)
        if abs(z) > 3 or not est.reportable:
            misses.append(f"#{k}(delta={sc['delta']}, r={sc['r']}): MC {est.ats:.3f}+-{est.ats_se:.3f} "
                          f"vs chain {markov:.3f} (z={z:+.2f})")
    elapsed = time.perf_counter() - t0
    ok = not misses and elapsed < 600
    detail = (f"{12 - len(misses)}/12 scenarios within 3 SE of the m=30 chains (max |z| {worst:.2f}), "
              f"{elapsed:.0f} s [diagnostic: max |z| {worst_fine:.2f} against m=240 (1D) / m=60 (2D)]")
    if misses:
        detail += "; off: " + "; ".join(misses)
    line = record_criterion(7, ok, detail)
    assert ok, line


def test_criterion_8_special_functions():
    chi_err = max(abs(noncentral_chi2_cdf(x, df, lam) - ncx2_cdf_quad(x, df, lam))
                  for x, df, lam in special_grid())
    zs = np.linspace(-8.0, 8.0, 161)
    phi_err = max(abs(std_normal_cdf(z) - normal_cdf_mp(z)) for z in zs)
    ok = chi_err <= 1e-8 and phi_err <= 1e-10
    line = record_criterion(8, ok, f"noncentral chi-square max error {chi_err:.1e} on 50 points, "
                                   f"Phi max error {phi_err:.1e} on 161 points")
    assert ok, line


def test_criterion_9_property_suites():
    rng = np.random.default_rng(SEED + 9)
    n = 1000
    counts = dict.fromkeys(("roundtrip", "linearity", "orthonormal", "substochastic", "seed"), 0)
    for _ in range(n):
        p = int(rng.integers(2, 9))
        x = np.exp(rng.normal(0, 3, p))
        y = np.exp(rng.normal(0, 3, p))
        v = rng.normal(0, 5, p - 1)
        a = float(rng.normal(0, 2))
        xc = x / x.sum()
        counts["roundtrip"] += bool(
            np.allclose(ilr_inv(ilr(x)).parts, xc, rtol=1e-10, atol=1e-14)
            and np.allclose(ilr(ilr_inv(v)), v, atol=1e-9)
            and np.allclose(clr_inv(clr(x)).parts, xc, rtol=1e-10, atol=1e-14)
            and np.allclose(ilr(x), balances(x), atol=1e-9))
        counts["linearity"] += bool(
            np.allclose(ilr(perturb(x, y)), ilr(x) + ilr(y), atol=1e-9)
            and np.allclose(ilr(power(a, x)), a * ilr(x), atol=1e-9))
        q = int(rng.integers(2, 60))
        B = sbp_basis(q).contrast
        counts["orthonormal"] += bool(np.allclose(B @ B.T, np.eye(q - 1), atol=1e-10)
                                      and np.allclose(B.sum(axis=1), 0, atol=1e-12))
        r, H = float(rng.uniform(0.02, 1.0)), float(rng.uniform(0.5, 25.0))
        spec = MarkovSpec(p=p, r=r, H=H, m=int(rng.integers(5, 40)))
        P1 = build_incontrol_chain(spec).P
        ucl = spec.ucl
        Hm = shifted_chain(r, ucl, int(rng.integers(5, 30)), float(rng.uniform(0, 3)))
        V = norm_chain(p, r, ucl, int(rng.integers(5, 30)))[0]
        counts["substochastic"] += bool(all(np.all(M >= 0) and np.all(M.sum(axis=1) <= 1 + 1e-12)
                                            for M in (P1, Hm, V))
                                        and (P1.sum(axis=1) < 1).any())
        cfg = SimConfig(p=p, r=r, H=H, w=H * float(rng.uniform(0.1, 0.9)), h_S=0.2, h_L=1.4,
                        delta=float(rng.uniform(0, 2)), seed=int(rng.integers(0, 2 ** 63)),
                        replications=10, max_samples=2000)
        counts["seed"] += simulate_ats(cfg) == simulate_ats(cfg)
    ok = all(c == n for c in counts.values())
    line = record_criterion(9, ok, ", ".join(f"{k} {c}/{n}" for k, c in counts.items()))
    assert ok, line


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
