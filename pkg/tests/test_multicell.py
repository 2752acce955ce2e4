import math

import numpy as np
import pytest
from scipy import stats

from noma_esg import analytic as an
from noma_esg import multicell as mc
from noma_esg.channel import CellGeometry, RngStream, converged_table
from noma_esg.harness import dbm_to_watt, snr_calibrate

ALPHA = 3.76


def layout(d=200.0, dbm=46.0):
    return mc.MulticellLayout.from_density(d, 5000.0, 1000.0, dbm_to_watt(dbm))


def test_layout_from_density():
    lay = layout()
    assert lay.k_per_cell == math.ceil(1000 * math.pi * 0.04) == 126
    k_total = math.ceil(1000 * math.pi * 25)
    assert lay.l_cells == math.ceil((k_total - 126) / 126) == 623
    assert lay.p_max_cell * (lay.l_cells + 1) == pytest.approx(lay.p_max_total, rel=1e-12)
    assert [mc.MulticellLayout.from_density(50.0 * e, 5000.0, 1000.0, 1.0).k_per_cell
            for e in (1, 4, 10)] == [8, 126, 786]


def test_layout_validation_and_power_helper():
    with pytest.raises(ValueError):
        mc.MulticellLayout(200.0, 100.0, 10, 1, 1.0)
    lay = layout().with_cell_power(2.0)
    assert lay.p_max_cell == pytest.approx(2.0, rel=1e-14)


def test_ici_quadrature_structure():
    beta, c = mc.ici_quadrature(200.0, 5000.0, 500, ALPHA)
    assert np.all(beta > 0)
    assert c.min() >= 1 + 200.0 ** ALPHA
    with pytest.raises(ValueError):
        mc.ici_quadrature(200.0, 200.0)


def test_ici_mean_gain_monte_carlo():
    gen = RngStream(1).generator()
    u = gen.random(1_000_000)
    r = np.sqrt(200.0 ** 2 + u * (5000.0 ** 2 - 200.0 ** 2))
    g = gen.exponential(size=r.size) / (1 + r ** ALPHA)
    assert mc.ici_mean_gain(200.0, 5000.0, ALPHA) == pytest.approx(g.mean(), rel=0.01)


@pytest.mark.parametrize("m", [1, 4, 64])
def test_effective_ici_channel_is_exponential(m):
    gen = RngStream(2, (m,)).generator()
    n = 100_000
    g = (gen.standard_normal((n, m)) + 1j * gen.standard_normal((n, m))) / math.sqrt(2)
    w = (gen.standard_normal((n, m)) + 1j * gen.standard_normal((n, m)))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    x = np.abs(np.sum(w.conj() * g, axis=1)) ** 2
    assert stats.kstest(x, "expon").statistic < 0.01


def test_ici_power_structure():
    lay = layout()
    i_noma = mc.ici_power(lay, "NOMA")
    for g in (256, 64, 32):
        assert mc.ici_power(lay, "OMA", g) == i_noma / g
    assert i_noma > 0
    none = mc.MulticellLayout(200.0, 5000.0, 126, 0, 1.0)
    assert mc.ici_power(none, "NOMA") == 0.0
    with pytest.raises(ValueError):
        mc.ici_power(lay, "CDMA")


def test_ici_model_fields():
    lay = layout()
    model = mc.ici_model(lay, 64)
    assert model.i_oma == model.i_noma / 64
    assert model.i_noma == mc.ici_power(lay, "NOMA")


def test_ici_power_monte_carlo():
    lay = layout(dbm=46.0)
    samples = [mc.sample_ici_power(lay, RngStream(3, (t,))) for t in range(500)]
    assert np.mean(samples) == pytest.approx(mc.ici_power(lay, "NOMA"), rel=0.03)


def test_g_subbands():
    assert mc.g_subbands("SISO", 256) == 256
    assert mc.g_subbands("MIMO_MRC", 256, 4) == 256
    assert mc.g_subbands("MIMO_ZF", 256, 4) == 64
    assert mc.g_subbands("MMIMO", 256, 128, 8) == 32
    with pytest.raises(ValueError):
        mc.g_subbands("X", 1)


def table4_point(snr_db, kind):
    geom = CellGeometry(50.0, 200.0, ALPHA)
    t = converged_table(geom)
    m, w = {"SISO": (1, 1), "MIMO_ZF": (4, 1), "MIMO_MRC": (4, 1), "MMIMO": (128, 8)}[kind]
    p = snr_calibrate(geom, m, t, snr_db, 1.0)
    sc = an.Scenario(geom, 256, m, w, p, 1.0)
    return sc, t, layout().with_cell_power(p)


SINGLE = {
    "SISO": an.esg_siso,
    "MIMO_ZF": an.esg_mimo_zf_finite,
    "MIMO_MRC": an.esg_mimo_mrc_finite,
    "MMIMO": lambda sc, t: an.esg_mmimo(sc, t, per="sum"),
}


@pytest.mark.parametrize("kind", mc.KINDS)
def test_no_interference_gives_single_cell(kind):
    sc, t, lay = table4_point(10.0, kind)
    quiet = mc.MulticellLayout(200.0, 5000.0, 126, 0, sc.p_max)
    assert mc.multicell_esg(quiet, kind, sc, t) == SINGLE[kind](sc, t)


@pytest.mark.parametrize("kind", mc.KINDS)
@pytest.mark.parametrize("snr", [0.0, 10.0])
def test_interference_degrades_esg(kind, snr):
    sc, t, lay = table4_point(snr, kind)
    assert mc.multicell_esg(lay, kind, sc, t) < SINGLE[kind](sc, t)


def test_table4_siso_reference():
    sc, t, lay = table4_point(10.0, "SISO")
    assert mc.multicell_esg(lay, "SISO", sc, t) == pytest.approx(0.7973, abs=0.03)


def test_multicell_uses_substituted_noise():
    sc, t, lay = table4_point(0.0, "MIMO_ZF")
    i = mc.ici_power(lay, "NOMA")
    direct = an.esg_mimo_zf_finite(sc.with_(n0=sc.n0 + i), t)
    assert mc.multicell_esg(lay, "MIMO_ZF", sc, t) == pytest.approx(direct, rel=1e-14)


def test_ici_independent_of_antennas():
    lay = layout()
    vals = {m: mc.ici_power(lay, "NOMA") for m in (1, 4, 128)}
    assert len(set(vals.values())) == 1


def test_sinr_summary():
    sc, t, lay = table4_point(10.0, "SISO")
    quiet = mc.MulticellLayout(200.0, 5000.0, 126, 0, sc.p_max)
    assert mc.sinr_summary(quiet, sc, "NOMA", table=t) == pytest.approx(10.0, rel=1e-12)
    noma = mc.sinr_summary(lay, sc, "NOMA", table=t)
    oma = mc.sinr_summary(lay, sc, "OMA", g=256, table=t)
    assert noma < oma
    assert oma == pytest.approx(256 * noma, rel=1e-12)


def test_sinr_saturates():
    geom = CellGeometry(50.0, 200.0, ALPHA)
    t = converged_table(geom)
    sc = an.Scenario(geom, 126, 1, 1, 1.0, dbm_to_watt(-80.0))
    lay = layout(dbm=80.0)
    mg = np.dot(t.weights, 1 / t.c)
    beta, c = mc.ici_quadrature(200.0, 5000.0, 2000, ALPHA)
    limit = mg * (200.0 + 5000.0) / (lay.l_cells * np.sum(beta / c))
    assert mc.sinr_summary(lay, sc, "NOMA", table=t) == pytest.approx(limit, rel=0.01)


@pytest.mark.parametrize("eta", [1, 4, 10])
def test_mrc_esg_flattens_at_high_power(eta):
    geom = CellGeometry(50.0, 50.0 * eta, ALPHA)
    esg = {}
    for dbm in (30.0, 40.0, 50.0, 60.0):
        lay = mc.MulticellLayout.from_density(geom.d, 5000.0, 1000.0, dbm_to_watt(dbm))
        sc = an.Scenario(geom, lay.k_per_cell, 4, 1, 1.0, dbm_to_watt(-80.0))
        esg[dbm] = mc.multicell_esg(lay, "MIMO_MRC", sc)
    assert esg[60.0] - esg[50.0] < 0.1 * (esg[40.0] - esg[30.0])


def test_degradation_larger_for_small_cells():
    eps = []
    for eta in (1, 4, 10):
        geom = CellGeometry(50.0, 50.0 * eta, ALPHA)
        t = converged_table(geom)
        lay0 = mc.MulticellLayout.from_density(geom.d, 5000.0, 1000.0, 1.0)
        p = snr_calibrate(geom, 1, t, 10.0, 1.0)
        sc = an.Scenario(geom, lay0.k_per_cell, 1, 1, p, 1.0)
        single = an.esg_siso(sc, t)
        multi = mc.multicell_esg(lay0.with_cell_power(p), "SISO", sc, t)
        eps.append((single - multi) / single)
    assert eps[0] > eps[1] > eps[2] > 0
