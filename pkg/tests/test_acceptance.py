"""Exit criteria. Each test prints one PASS/FAIL line with the measured values."""
import math
import time

import numpy as np
import pytest

from edgeweyl.counting import (MollifierSpec, check_composition, count_edge,
                               edge_hit_probability, epsilon_collapse_discrepancy,
                               smoothed_curve, window_stats)
from edgeweyl.encoding import Affine, Perturbed, PolyType, default_families, encode
from edgeweyl.errors import NumericalError
from edgeweyl.estimation import (density_exponent, estimate_k, estimate_weyl, log_grid,
                                 loglog_slope, stability_report, two_term_fit)
from edgeweyl.krein import AtomicMeasurePlus, realize
from edgeweyl.spectra import ball3_spectrum, lens_spectrum, sphere_spectrum, torus_spectrum
from edgeweyl.transforms import heat_transfer_residual, seeley_fit, seeley_fit_edge, \
    zeta_transfer_residual

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n:>2}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return _report


def test_c01_s3_bulk_constant(report):
    t0 = time.perf_counter()
    em = encode(sphere_spectrum(3, 1e4), Affine(1.0))
    n = count_edge(em, math.pi - 1e4)
    ratio = n / (1e6 / 3)
    dt = time.perf_counter() - t0
    ok = n == 338350 and 0.98 <= ratio <= 1.03 and dt < 1.0
    report(1, ok, f"N={n:.0f} ratio={ratio:.4f} time={dt:.2f}s")


def test_c02_dimension_recovery(report):
    t0 = time.perf_counter()
    window = (1e3, 1e4)
    ests = {}
    for eps in (0.5, 1.0, 2.0):
        sm = sphere_spectrum(3, 1.05e4 / eps)
        curve = smoothed_curve(encode(sm, Affine(eps)), log_grid(window))
        ests[eps] = estimate_weyl(curve, eps, window)
    dt = time.perf_counter() - t0
    d = [e.d_hat for e in ests.values()]
    g = [e.gamma_hat for e in ests.values()]
    ok = (all(2.98 <= v <= 3.02 for v in d) and all(0.32 <= v <= 0.35 for v in g)
          and max(d) - min(d) <= 1e-2 and dt < 5.0)
    detail = " ".join(f"eps={k}: d={e.d_hat:.4f} gamma={e.gamma_hat:.4f}" for k, e in ests.items())
    report(2, ok, f"{detail} spread={max(d) - min(d):.4f} time={dt:.2f}s")


def test_c03_window_sanity(report):
    em = encode(sphere_spectrum(3, 100), Affine(1.0))
    empty = window_stats(em, math.pi - 0.1, 0.01)
    single = window_stats(em, math.pi - 8.0, 0.8)
    ok = (empty.cluster_count == 0 and empty.jump_total == 0
          and single.cluster_count == 1 and single.jump_total == 9)
    report(3, ok, f"[0.1,0.11]: jumps={empty.cluster_count}; "
                  f"[8,8.8]: jumps={single.cluster_count} size={single.jump_total:g}")


def test_c04_exact_identities(report):
    sm = sphere_spectrum(3, 1e4)
    em = encode(sm, Affine(1.0))
    rng = np.random.default_rng(2024)
    comp = check_composition(sm, em, rng.uniform(-1e4, math.pi, 1000)).max_discrepancy
    heat = heat_transfer_residual(em, np.geomspace(1e-4, 10, 50))
    em2 = encode(sm, Affine(2.5))
    heat2 = heat_transfer_residual(em2, np.geomspace(1e-4, 10, 50))
    zet = max(zeta_transfer_residual(e, np.linspace(1.6, 8, 50)) for e in (em, em2))
    lam = np.concatenate([sm.lambdas, rng.uniform(0, 1e4, 1000)])
    coll = epsilon_collapse_discrepancy(sm, 1.0, 2.5, lam)
    ok = comp == 0 and max(heat, heat2) <= 1e-12 and zet <= 1e-12 and coll == 0
    report(4, ok, f"composition={comp:g} heat={max(heat, heat2):.2e} zeta={zet:.2e} "
                  f"collapse={coll:g}")


def test_c05_torus(report):
    t0 = time.perf_counter()
    sm = torus_spectrum(np.eye(2), 1e4)
    n = sm.total_weight
    rel = n / (math.pi * 1e4) - 1
    window = (1e3, 1e4)
    curve = smoothed_curve(encode(sm, Affine(1.0)), log_grid(window))
    d_hat = estimate_weyl(curve, 1.0, window).d_hat
    dt = time.perf_counter() - t0
    ok = abs(rel) <= 0.01 and 1.97 <= d_hat <= 2.03 and dt < 10
    report(5, ok, f"N={n:.0f} rel={rel:+.2e} d_hat={d_hat:.4f} time={dt:.2f}s")


def test_c06_uniqueness_exponent(report):
    window = (1e4, 1e6)
    sm = sphere_spectrum(3, 1.2e3)
    wide = MollifierSpec(theta=0.9)
    curve = smoothed_curve(encode(sm, PolyType(2.0)), log_grid(window), wide)
    alpha = loglog_slope(curve, window).alpha_hat
    k_hat = estimate_k(curve, 3, window)
    dens = density_exponent(curve, window).alpha_hat
    gap = abs(dens - 0.5)
    ok = 0.72 <= alpha <= 0.78 and 1.95 <= k_hat <= 2.05 and gap >= 0.4
    report(6, ok, f"alpha={alpha:.4f} k_hat={k_hat:.4f} density_exp={dens:.4f} gap={gap:.3f}")


@pytest.mark.filterwarnings("ignore:encoded atoms above the edge")
def test_c07_stability_suite(report, s3_big):
    t0 = time.perf_counter()
    rows, ok = [], True
    for fam in default_families():
        rep = stability_report(s3_big, Perturbed(1.0, fam), (1e4, 1e6))
        good = 2.95 <= rep.d_hat <= 3.05 and rep.envelope_K <= 5
        ok &= good
        rows.append(f"{fam.name}: d={rep.d_hat:.4f} K={rep.envelope_K:.3g}{'' if good else ' !'}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    report(7, ok, "; ".join(rows) + f"; time={dt:.2f}s")


def test_c08_seeley(report, s3_4e4, torus2_4e4):
    t = np.geomspace(1e-3, 1e-2, 20)
    s3 = seeley_fit(s3_4e4, t)
    tor = seeley_fit(torus2_4e4, t)
    edge = seeley_fit_edge(encode(s3_4e4, Affine(2.0)), t / 2)
    v = 2 * math.pi ** 2
    r_a0 = s3.a0_hat / v - 1
    r_a2 = s3.a2_hat / s3.a0_hat
    r_t = tor.a2_hat / tor.a0_hat
    r_e = edge.a0_hat / s3.a0_hat / 2 ** -1.5 - 1
    ok = abs(r_a0) <= 0.01 and abs(r_a2 - 1) <= 0.1 and abs(r_t) <= 0.05 and abs(r_e) <= 0.01
    report(8, ok, f"a0/2pi^2-1={r_a0:+.2e} a2/a0={r_a2:.4f} torus a2/a0={r_t:+.2e} "
                  f"edge ratio err={r_e:+.2e}")


def test_c09_krein(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst_rt = worst_match = 0.0
    failures = 0
    for _ in range(200):
        n = int(rng.integers(1, 17))
        y = np.sort(rng.choice(np.arange(1, 2000), size=n, replace=False) * 0.05)
        try:
            r = realize(AtomicMeasurePlus(y, rng.uniform(0.1, 10, n)))
        except NumericalError:
            failures += 1
            continue
        worst_rt = max(worst_rt, r.roundtrip_residual)
        worst_match = max(worst_match, r.match_residual)
    x = 0.1 * (np.arange(10) + 1.0) ** 2
    q = realize(AtomicMeasurePlus(x, np.ones(10)))
    dt = time.perf_counter() - t0
    ok = (failures == 0 and max(worst_rt, q.roundtrip_residual) <= 1e-9
          and max(worst_match, q.match_residual) <= 1e-8 and dt < 5)
    report(9, ok, f"suite: roundtrip={worst_rt:.2e} match={worst_match:.2e} qd_failures="
                  f"{failures}; quadratic: roundtrip={q.roundtrip_residual:.2e} "
                  f"match={q.match_residual:.2e}; time={dt:.2f}s")


def test_c10_ball_two_term(report):
    window = (1e3, 4e4)
    sm = ball3_spectrum(4e4)
    y = log_grid(window, 400)
    cum = np.concatenate(([0.0], np.cumsum(sm.weights)))
    N = cum[np.searchsorted(sm.lambdas, y, side="right")]
    fit = two_term_fit((y, N), window)
    resid = np.abs(N - fit.A * y ** 1.5)
    slope = loglog_slope((y, resid), window).alpha_hat
    ok = 0.0693 <= fit.A <= 0.0721 and fit.B < 0 and 0.9 <= slope <= 1.1
    report(10, ok, f"A={fit.A:.5f} (2/(9pi)={2 / (9 * math.pi):.5f}) B={fit.B:.4f} "
                   f"(stated -1/16=-0.0625, substituted -1/4) residual slope={slope:.3f}")


def test_c11_clustering(report):
    eps, C = 1.0, -1e4
    delta = abs(C) ** 0.3
    em = encode(sphere_spectrum(3, 1.1e4), Affine(eps))
    ws = window_stats(em, C, delta)
    ratio = None if ws.mbar is None else ws.mbar / (abs(C) / eps)
    mbar_ok = ratio is not None and 0.95 <= ratio <= 1.05
    hp = edge_hit_probability(2, 3, 1.0, 0.7, trials=100_000, seed=0)
    hit_ok = abs(hp.empirical - hp.analytic) <= 3 * hp.sigma
    ratio_txt = "undefined (no atom in window)" if ratio is None else f"{ratio:.4f}"
    report(11, mbar_ok and hit_ok,
           f"mbar/(|C|/eps)={ratio_txt} window=[{C - delta:.2f},{C:.0f}] "
           f"clusters={ws.cluster_count}; hit={hp.empirical:.5f} vs {hp.analytic:.3f} "
           f"(3sigma={3 * hp.sigma:.5f})")


def test_c12_lens(report):
    base = sphere_spectrum(3, 1e4).total_weight
    r3 = lens_spectrum(3, 1, 1e4).total_weight / base
    r1 = lens_spectrum(1, 1, 1e4).total_weight / base
    ok = 0.32 <= r3 <= 0.35 and r1 == 1.0
    report(12, ok, f"L(3,1) ratio={r3:.5f} L(1,1) ratio={r1:g}")
