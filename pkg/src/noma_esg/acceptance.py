"""Acceptance suite: every criterion at its stated tolerance.

Each ``criterion_*`` function returns a :class:`CriterionResult`;
:func:`run_all` evaluates them in order and :func:`format_result` gives
the one-line pass/fail summary used by the CLI and the test suite.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import analytic, harness, multicell, receivers
from .channel import CellGeometry, RngStream, converged_table, drop_users
from .harness import figure_preset, resolve_point, run_scenario, simulate_point
from .specfun import (
    EULER_GAMMA,
    exp_integral_e1,
    ln_moment_gamma,
    lower_incomplete_gamma,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all", "format_result", "table4_reports"]

SEED = 20190101

TABLE4_PAPER = {
    "table4_siso_single_0db": 0.281,
    "table4_siso_single_10db": 0.983,
    "table4_mimo_single_0db": 2.114,
    "table4_mimo_single_10db": 6.65,
    "table4_mmimo_single_0db": 0.1796,
    "table4_mmimo_single_10db": 0.5765,
    "table4_siso_multi_0db": 0.2639,
    "table4_siso_multi_10db": 0.7973,
    "table4_mimo_multi_0db": 2.0179,
    "table4_mimo_multi_10db": 5.4113,
    "table4_mmimo_multi_0db": 0.1702,
    "table4_mmimo_multi_10db": 0.4490,
}


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str


def format_result(res):
    return f"[{'PASS' if res.passed else 'FAIL'}] criterion {res.number:2d}: {res.title} | {res.detail}"


def _table4_tol(target):
    return max(0.03 * abs(target), 0.03)


@functools.lru_cache(maxsize=None)
def table4_reports(trials=2000, seed=SEED, threads=1):
    """Run the table4 preset once and cache the per-cell reports."""
    return {
        cfg.name: run_scenario(cfg.with_(trials=trials, seed=seed), threads=threads).rows[0]
        for cfg in figure_preset("table4")
    }


def _table4_check(number, title, deployment, threads):
    rows = table4_reports(threads=threads)
    ok = True
    parts = []
    for name, target in TABLE4_PAPER.items():
        if f"_{deployment}_" not in name:
            continue
        row = rows[name]
        tol = _table4_tol(target)
        values = [("sim", row.esg_sim)]
        if deployment == "multi":
            values.append(("analytic", row.esg_analytic))
        for label, v in values:
            good = abs(v - target) <= tol
            ok &= good
            parts.append(f"{name[7:]} {label}={v:.4f} vs {target} (+/-{tol:.4f}){'' if good else ' X'}")
    return CriterionResult(number, title, ok, "; ".join(parts))


def criterion_1(threads=1):
    return _table4_check(1, "table4 single-cell ESG", "single", threads)


def criterion_2(threads=1):
    return _table4_check(2, "table4 multi-cell ESG", "multi", threads)


def criterion_3(threads=1):
    cfg = harness.ExperimentConfig(
        name="fading_gain", kind="SISO", d_outer_m=50.0, k_users=256,
        sweep_name="snr_db", sweep_values=(40.0,), trials=2000, seed=SEED,
    )
    row = run_scenario(cfg, threads=threads).rows[0]
    asym = analytic.esg_siso_high_snr(CellGeometry(50.0, 50.0)).esg
    ok = abs(row.esg_sim - 0.575) <= 0.02 and asym == EULER_GAMMA
    return CriterionResult(
        3, "small-scale fading gain", ok,
        f"esg_sim={row.esg_sim:.4f} (0.575 +/- 0.02), asymptote={asym!r}",
    )


def criterion_4(threads=1):
    zero = analytic.near_far_gain(CellGeometry(50.0, 50.0))
    exact = {eta: analytic.near_far_gain(CellGeometry(50.0, 50.0 * eta)) for eta in (2, 4, 10)}
    simple = {eta: analytic.vartheta_eta(eta, 3.76) for eta in (2, 4, 10)}
    rel = {eta: abs(exact[eta] - simple[eta]) / exact[eta] for eta in exact}
    ok = zero == 0.0 and exact[10] > exact[4] > exact[2] > 0 and max(rel.values()) <= 0.03
    detail = f"theta(1)={zero!r}; " + ", ".join(
        f"eta={e}: exact={exact[e]:.5f} simplified={simple[e]:.5f}" for e in exact
    )
    return CriterionResult(4, "near-far gain decomposition", ok, detail)


def _scenario(d, snr_db, k=256, m=1, w=1):
    geom = CellGeometry(50.0, d)
    table = converged_table(geom)
    p = harness.snr_calibrate(geom, m, table, snr_db, 1.0)
    return analytic.Scenario(geom, k, m, w, p, 1.0), table


def criterion_5(threads=1):
    ok = True
    parts = []
    for m in (2, 4, 8):
        sc, table = _scenario(500.0, 40.0, 256, m)
        asym = analytic.esg_mimo_zf(sc, table).esg
        siso = analytic.esg_siso_high_snr(sc.geom, table).esg
        identity = abs(asym - (m * siso + m * math.log(m)))
        finite = analytic.esg_mimo_zf_finite(sc, table)
        rel = abs(finite - asym) / asym
        good = identity <= 1e-9 and rel <= 0.05
        ok &= good
        parts.append(f"M={m}: |identity|={identity:.1e}, 40 dB={finite:.4f} vs {asym:.4f} ({rel:.2%})")
    return CriterionResult(5, "M-fold ESG law", ok, "; ".join(parts))


def criterion_6(threads=1):
    ok = True
    parts = []
    for m in (2, 4):
        target = (m - 1) * math.log(10) / 10
        for d in (50.0, 200.0, 500.0):
            hi, table = _scenario(d, 40.0, 256, m)
            lo, _ = _scenario(d, 30.0, 256, m)
            slope = (analytic.esg_mimo_mrc_finite(hi, table) - analytic.esg_mimo_mrc_finite(lo, table)) / 10
            rel = abs(slope - target) / target
            ok &= rel <= 0.05
            parts.append(f"M={m} eta={d / 50:g}: {slope:.4f} vs {target:.4f} ({rel:.2%})")
    return CriterionResult(6, "(M-1)-fold DoF slope", ok, "; ".join(parts))


def criterion_7(threads=1):
    n_draws = 1000
    geom = CellGeometry(50.0, 200.0)
    table = converged_table(geom)
    worst_sic = worst_logdet = 0.0
    violations = 0
    for t in range(n_draws):
        gen = RngStream(SEED, (7, t)).generator()
        k = int(gen.integers(1, 17))
        m = int(gen.integers(1, 9))
        snr = gen.uniform(-10, 40)
        p = harness.snr_calibrate(geom, m, table, snr, 1.0)
        pa = receivers.PowerAllocation.equal(k, p)
        draw, _ = drop_users(geom, k, m, gen).sorted_by_gain()
        siso, _ = drop_users(geom, k, 1, gen).sorted_by_gain()
        sic = receivers.sic_rates_siso(siso, pa, 1.0).sum
        worst_sic = max(worst_sic, abs(sic - math.log1p(np.dot(pa.p, siso.gains))))
        mmse = receivers.mmse_sic_rates(draw, pa, 1.0).sum
        cov = np.eye(m) + (draw.h * pa.p) @ draw.h.conj().T
        worst_logdet = max(worst_logdet, abs(mmse - np.linalg.slogdet(cov)[1]))
        mrc = receivers.mrc_sic_rates(draw, pa, 1.0).sum
        bound = receivers.theorem1_upper_bound(draw, pa, 1.0)
        slack = 1e-12 * max(1.0, bound)
        violations += (mrc > mmse + slack) + (mmse > bound + slack)
    ok = worst_sic <= 1e-9 and worst_logdet <= 1e-9 and violations == 0
    return CriterionResult(
        7, "structural identities", ok,
        f"{n_draws} draws: max SIC error={worst_sic:.1e}, max log-det error={worst_logdet:.1e}, "
        f"bound-chain violations={violations}",
    )


def criterion_8(threads=1):
    geom = CellGeometry(50.0, 200.0)
    table = converged_table(geom)
    p = harness.snr_calibrate(geom, 4, table, 10.0, 1.0)
    gaps = []
    for k in (8, 32, 128, 512):
        pa = receivers.PowerAllocation.equal(k, p)
        rel = []
        for t in range(200):
            draw = drop_users(geom, k, 4, RngStream(SEED, (8, k, t)))
            cap = receivers.mmse_sic_rates(draw, pa, 1.0).sum
            rel.append((receivers.theorem1_upper_bound(draw, pa, 1.0) - cap) / cap)
        gaps.append(float(np.mean(rel)))
    ok = all(a > b for a, b in zip(gaps, gaps[1:]))
    return CriterionResult(
        8, "upper-bound tightness", ok,
        "mean relative gap at K=8,32,128,512: " + ", ".join(f"{g:.5f}" for g in gaps),
    )


def criterion_9(threads=1):
    n = 100_000
    ok = True
    parts = []
    for m in (4, 64):
        gen = RngStream(SEED, (9, m)).generator()
        g = (gen.standard_normal((2, n, m)) + 1j * gen.standard_normal((2, n, m))) / math.sqrt(2)
        e = g / np.linalg.norm(g, axis=2, keepdims=True)
        x = np.abs(np.sum(e[0].conj() * e[1], axis=1)) ** 2
        se = x.std(ddof=1) / math.sqrt(n)
        dev = abs(x.mean() - 1 / m)
        ok &= dev <= 3 * se
        parts.append(f"M={m}: mean={x.mean():.6f} vs {1 / m:.6f} ({dev / se:.2f} SE)")
    return CriterionResult(9, "direction statistics", ok, "; ".join(parts))


def _mc_check(label, analytic_value, samples, band):
    mean = float(samples.mean())
    ci = 1.96 * float(samples.std(ddof=1)) / math.sqrt(samples.size)
    allowed = ci + band * abs(analytic_value)
    good = abs(analytic_value - mean) <= allowed
    tag = f" (+{band:.0%} band)" if band else ""
    return good, f"{label}: analytic={analytic_value:.4f} sim={mean:.4f} +/- {ci:.4f}{tag}{'' if good else ' X'}"


def criterion_10(threads=1):
    checks = []
    # SISO, eta = 10, 20 dB
    sc, table = _scenario(500.0, 20.0)
    pt = harness.PointSpec("SISO", sc.geom, 256, 1, 1, sc.p_max, 1.0)
    r = simulate_point(pt, 2000, SEED, 100, threads)
    checks.append(("SISO-NOMA", analytic.ergodic_siso_noma(sc, table), r[:, 0], 0.03))
    checks.append(("SISO-OMA", analytic.ergodic_siso_oma(sc, table), r[:, 1], 0.0))
    # MIMO, eta = 4, M = 4, 10 dB
    sc, table = _scenario(200.0, 10.0, 256, 4)
    for i, kind in enumerate(("MIMO_ZF", "MIMO_MRC")):
        pt = harness.PointSpec(kind, sc.geom, 256, 4, 1, sc.p_max, 1.0)
        r = simulate_point(pt, 2000, SEED, 101 + i, threads)
        if kind == "MIMO_ZF":
            checks.append(("MIMO-NOMA", analytic.ergodic_mimo_noma(sc, table), r[:, 0], 0.03))
            checks.append(("FDMA-ZF", analytic.ergodic_mimo_oma_zf(sc, table), r[:, 1], 0.0))
        else:
            checks.append(("FDMA-MRC", analytic.ergodic_mimo_oma_mrc(sc, table), r[:, 1], 0.0))
    # massive MIMO, eta = 10, K = 256, M = 128, W = 8, 10 dB
    sc, table = _scenario(500.0, 10.0, 256, 128, 8)
    pt = harness.PointSpec("MMIMO", sc.geom, 256, 128, 8, sc.p_max, 1.0)
    r = simulate_point(pt, 500, SEED, 103, threads)
    checks.append(("mMIMO-NOMA", analytic.ergodic_mmimo_noma(sc, table), r[:, 0], 0.03))
    checks.append(("mMIMO-OMA", analytic.ergodic_mmimo_oma(sc, table), r[:, 1], 0.03))
    # equidistant massive MIMO, varpi = 10
    geom = CellGeometry(50.0, 50.0)
    p = 10.0 * (1 + 50.0 ** 3.76)
    suite = analytic.theorem3_suite(50.0, 3.76, 256, 128, 8, p, 1.0)
    pt = harness.PointSpec("MMIMO", geom, 256, 128, 8, p, 1.0)
    r = simulate_point(pt, 500, SEED, 104, threads)
    checks.append(("equidistant mMIMO-NOMA", suite["noma"], r[:, 0], 0.03))
    checks.append(("equidistant mMIMO-OMA", suite["oma"], r[:, 1], 0.03))
    ok = True
    parts = []
    for label, value, samples, band in checks:
        good, text = _mc_check(label, value, samples, band)
        ok &= good
        parts.append(text)
    return CriterionResult(10, "analytic vs simulation", ok, "; ".join(parts))


def criterion_11(threads=1):
    ok = True
    parts = []
    for cfg in figure_preset("fig7c"):
        esg = {}
        for dbm in (30.0, 40.0, 50.0, 60.0):
            pt = resolve_point(cfg, dbm)
            esg[dbm] = multicell.multicell_esg(pt.layout, "MIMO_MRC", pt.scenario)
        ratio = (esg[60.0] - esg[50.0]) / (esg[40.0] - esg[30.0])
        ok &= ratio < 0.1
        parts.append(f"{cfg.name}: flattening ratio={ratio:.4f}")
    lay = multicell.MulticellLayout.from_density(200.0, 5000.0, 1000.0, 1.0)
    i_noma = multicell.ici_power(lay, "NOMA")
    exact = True
    for kind, m, w in (("SISO", 1, 1), ("MIMO_ZF", 4, 1), ("MIMO_MRC", 4, 1), ("MMIMO", 128, 8)):
        g = multicell.g_subbands(kind, 256, m, w)
        exact &= multicell.ici_power(lay, "OMA", g) == i_noma / g
    ok &= exact
    parts.append(f"I_OMA == I_NOMA/G for all kinds: {exact}")
    return CriterionResult(11, "multi-cell saturation", ok, "; ".join(parts))


def _e1_oracle(x):
    # E1(x) = int_x^inf e^-u / u du; the head is integrated in log u
    head, _ = integrate.quad(lambda v: math.exp(-math.exp(v)), math.log(x), 0.0,
                             epsabs=0, epsrel=1e-13, limit=200) if x < 1 else (0.0, 0)
    tail, _ = integrate.quad(lambda u: math.exp(-u) / u, max(x, 1.0), math.inf,
                             epsabs=0, epsrel=1e-13, limit=200)
    return head + tail


def _gamma_l_oracle(m, x):
    # gamma_L(m, x) = Gamma(m) * sum_{k>=m} e^-x x^k / k!
    total, k = 0.0, m
    term = math.exp(-x + k * math.log(x) - math.lgamma(k + 1))
    while True:
        total += term
        k += 1
        term *= x / k
        if term < 1e-18 * total:
            return math.gamma(m) * total


def criterion_12(threads=1):
    xs = np.logspace(-8, math.log10(50.0), 41)
    e1_err = max(abs(exp_integral_e1(x) / _e1_oracle(x) - 1) for x in xs)
    gl_err = max(
        abs(lower_incomplete_gamma(m, x) / _gamma_l_oracle(m, x) - 1)
        for m in range(1, 9)
        for x in (0.1, 0.5, 1.0, 5.0, 20.0, 50.0)
    )
    lm_err = max(
        abs(ln_moment_gamma(m, lam) / ln_moment_gamma(m, lam, method="quad") - 1)
        for m in (1, 2, 4, 8)
        for lam in (1e-3, 1.0, 1e3)
    )
    ok = max(e1_err, gl_err, lm_err) <= 1e-8
    return CriterionResult(
        12, "special-function oracles", ok,
        f"max rel error: E1={e1_err:.1e}, gamma_L={gl_err:.1e}, ln-moment={lm_err:.1e}",
    )


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
)


def run_all(threads=1, echo=None):
    results = []
    for fn in CRITERIA:
        res = fn(threads=threads)
        results.append(res)
        if echo is not None:
            echo(format_result(res))
    return results
