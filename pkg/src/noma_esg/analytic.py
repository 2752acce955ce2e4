"""Closed-form ergodic sum-rates and ergodic sum-rate gains (ESG).

Distance averages use the Gauss-Chebyshev tables of :mod:`noma_esg.channel`.
When all users sit on the inner circle (``d == d0``) every average
collapses to a single path-loss value, and the functions below switch to
that law instead of the quadrature.

Rates are sums over all users in nat/s/Hz.  Functions whose name ends in
``_high_snr`` or ``_limit`` return asymptotic forms; finite-SNR ESG values
are always differences of two ergodic rates.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import CellGeometry, converged_table, ordered_weights
from .specfun import EULER_GAMMA, digamma_int, ln_moment_gamma, scaled_exp_integral_e1

__all__ = [
    "Scenario",
    "EsgBreakdown",
    "gain_law",
    "ergodic_siso_noma",
    "ergodic_siso_oma",
    "esg_siso",
    "near_far_gain",
    "vartheta_eta",
    "esg_siso_high_snr",
    "ergodic_mimo_noma",
    "ergodic_mimo_oma_zf",
    "ergodic_mimo_oma_mrc",
    "low_snr_limit",
    "high_snr_limit",
    "mrc_gap",
    "esg_mimo_zf",
    "esg_mimo_zf_finite",
    "esg_mimo_mrc",
    "esg_mimo_mrc_finite",
    "ergodic_mmimo_noma",
    "ergodic_mmimo_oma",
    "esg_mmimo",
    "theorem3_suite",
]


@dataclass(frozen=True)
class Scenario:
    """One operating point: geometry, user and antenna counts, powers."""

    geom: CellGeometry
    k_users: int = 1
    m_antennas: int = 1
    group_w: int = 1
    p_max: float = 1.0
    n0: float = 1.0

    def __post_init__(self):
        if self.k_users < 1 or self.m_antennas < 1 or self.group_w < 1:
            raise ValueError("K, M and W must all be >= 1")
        if self.group_w > self.m_antennas:
            raise ValueError(f"W={self.group_w} exceeds M={self.m_antennas}")
        if not self.p_max >= 0 or not self.n0 > 0:
            raise ValueError("need p_max >= 0 and n0 > 0")

    @property
    def delta(self):
        return self.m_antennas / self.k_users

    @property
    def varsigma(self):
        return self.group_w / self.m_antennas

    def with_(self, **kw):
        values = dict(
            geom=self.geom,
            k_users=self.k_users,
            m_antennas=self.m_antennas,
            group_w=self.group_w,
            p_max=self.p_max,
            n0=self.n0,
        )
        values.update(kw)
        return Scenario(**values)


@dataclass(frozen=True)
class EsgBreakdown:
    """High-SNR ESG split into near-far, fading and scheme-specific terms."""

    esg: float
    near_far: float
    fading: float
    dof_terms: dict = field(default_factory=dict)


def gain_law(geom, table=None):
    """Normalized weights and path-loss factors ``(w, c)`` of the distance law.

    ``sum(w * f(c))`` approximates E_d{f(1 + d^alpha)}.  The equidistant
    geometry gives the one-point law ``([1], [1 + d0^alpha])``.
    """
    if geom.degenerate:
        return np.ones(1), np.array([1.0 + geom.d0 ** geom.alpha])
    if table is None:
        table = converged_table(geom)
    return table.weights, table.c


def _snr_terms(sc, table):
    w, c = gain_law(sc.geom, table)
    return w, c, float(np.dot(w, 1.0 / c))


def _scaled_e1_mean(w, x):
    # x == inf (zero power) contributes exp(x) E1(x) -> 0
    out = np.zeros_like(x)
    finite = np.isfinite(x)
    out[finite] = scaled_exp_integral_e1(x[finite])
    return float(np.dot(w, out))


def _inverse_power(sc):
    return np.inf if sc.p_max == 0 else sc.n0 / sc.p_max


def ergodic_siso_noma(sc, table=None):
    """ln(1 + P_max E{|h|^2} / N0), the K -> infinity SIC sum-rate."""
    _, _, mg = _snr_terms(sc, table)
    return math.log1p(sc.p_max * mg / sc.n0)


def ergodic_siso_oma(sc, table=None):
    """FDMA sum-rate E_d{exp(c N0/P) E_1(c N0/P)}, valid for any K."""
    w, c, _ = _snr_terms(sc, table)
    return _scaled_e1_mean(w, c * _inverse_power(sc))


def esg_siso(sc, table=None):
    return ergodic_siso_noma(sc, table) - ergodic_siso_oma(sc, table)


def near_far_gain(geom, table=None):
    """Large-scale near-far gain: log ratio of the arithmetic to the
    geometric weighted mean of ``1 / c``.  Zero for equidistant users and
    non-negative otherwise."""
    if geom.degenerate:
        return 0.0
    w, c = gain_law(geom, table)
    w = w / w.sum()
    return max(math.log(np.dot(w, 1.0 / c)) + float(np.dot(w, np.log(c))), 0.0)


def vartheta_eta(eta, alpha=3.76, n_terms=2000):
    """Near-far gain as a function of the normalized cell size alone.

    Drops the unit term in ``1 + d^alpha``, which makes the result
    independent of the absolute radius.
    """
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta!r}")
    if eta == 1:
        return 0.0
    n = np.arange(1, n_terms + 1)
    theta = (2 * n - 1) * np.pi / (2 * n_terms)
    s = np.abs(np.sin(theta))
    lam = 0.5 * (eta - 1) * np.cos(theta) + 0.5 * (eta + 1)
    scale = np.pi / (n_terms * (1 + eta))
    first = math.log(scale * np.sum(lam ** (1 - alpha) * s))
    second = alpha * scale * np.sum(lam * s * np.log(lam))
    return first + second


def esg_siso_high_snr(geom, table=None):
    """Asymptotic SISO ESG = near-far gain + Euler's constant."""
    nf = near_far_gain(geom, table)
    return EsgBreakdown(nf + EULER_GAMMA, nf, EULER_GAMMA)


def ergodic_mimo_noma(sc, table=None):
    """M ln(1 + P_max E{|h|^2} / N0): an M-fold SISO-NOMA."""
    return sc.m_antennas * ergodic_siso_noma(sc, table)


def ergodic_mimo_oma_zf(sc, table=None):
    """FDMA with ZF inside groups of M users."""
    w, c, _ = _snr_terms(sc, table)
    m = sc.m_antennas
    return m * _scaled_e1_mean(w, c * m * _inverse_power(sc))


def ergodic_mimo_oma_mrc(sc, table=None):
    """FDMA-MRC: E_d{E ln(1 + X)} with X ~ Gamma(M, c N0 / P_max)."""
    w, c, _ = _snr_terms(sc, table)
    if sc.p_max == 0:
        return 0.0
    lam = c * sc.n0 / sc.p_max
    t = np.array([ln_moment_gamma(sc.m_antennas, v) for v in lam])
    return float(np.dot(w, t))


def low_snr_limit(sc, table=None):
    """Linear FDMA-MRC rate M P_max E{|h|^2} / N0 for P_max -> 0."""
    _, _, mg = _snr_terms(sc, table)
    return sc.m_antennas * sc.p_max * mg / sc.n0


def _mean_log_c(sc, table):
    w, c = gain_law(sc.geom, table)
    return float(np.dot(w, np.log(c)))


def high_snr_limit(sc, table=None):
    """FDMA-MRC rate ln(P_max/N0) + E{ln ||h||^2} for P_max -> infinity."""
    return math.log(sc.p_max / sc.n0) + digamma_int(sc.m_antennas) - _mean_log_c(sc, table)


def mrc_gap(sc, table=None):
    """Delta = ln E{||h||^2} - E{ln ||h||^2} (Jensen gap, >= 0)."""
    _, _, mg = _snr_terms(sc, table)
    m = sc.m_antennas
    return math.log(m * mg) - digamma_int(m) + _mean_log_c(sc, table)


def esg_mimo_zf(sc, table=None):
    """Asymptotic ZF ESG = M (near-far + gamma) + M ln M."""
    m = sc.m_antennas
    nf = near_far_gain(sc.geom, table)
    extra = m * math.log(m)
    return EsgBreakdown(m * (nf + EULER_GAMMA) + extra, m * nf, m * EULER_GAMMA, {"m_ln_m": extra})


def esg_mimo_zf_finite(sc, table=None):
    return ergodic_mimo_noma(sc, table) - ergodic_mimo_oma_zf(sc, table)


def esg_mimo_mrc(sc, table=None):
    """Asymptotic MRC ESG = (M-1) ln(P_max E{|h|^2}/N0) - ln M + Delta."""
    _, _, mg = _snr_terms(sc, table)
    m = sc.m_antennas
    return (m - 1) * math.log(sc.p_max * mg / sc.n0) - math.log(m) + mrc_gap(sc, table)


def esg_mimo_mrc_finite(sc, table=None):
    return ergodic_mimo_noma(sc, table) - ergodic_mimo_oma_mrc(sc, table)


def _require_spread(sc):
    if sc.geom.degenerate:
        raise ValueError("equidistant users: use theorem3_suite")


def ergodic_mmimo_noma(sc, table=None):
    """Massive-MIMO NOMA with MRC-SIC, averaged over ordered distances.

    User k (k = 1 nearest) sees the residual interference of every later
    user through its average gain I_i, which gives the effective SNR
    psi_k = P M / (P sum_{i>k} I_i + K N0).
    """
    if sc.geom.degenerate:
        return theorem3_suite(sc.geom.d0, sc.geom.alpha, sc.k_users, sc.m_antennas,
                              sc.group_w, sc.p_max, sc.n0)["noma"]
    if table is None:
        table = converged_table(sc.geom)
    k = sc.k_users
    w = ordered_weights(k, table)  # K x N
    moments = w @ (1.0 / table.c)
    after = np.concatenate([np.cumsum(moments[::-1])[::-1][1:], [0.0]])
    psi = sc.p_max * sc.m_antennas / (sc.p_max * after + k * sc.n0)
    terms = np.sum(w * np.log1p(psi[:, None] / table.c[None, :]), axis=1)
    return math.fsum(terms)


def ergodic_mmimo_oma(sc, table=None):
    """Massive-MIMO OMA: K/W subbands of W users each, IUI neglected.

    Summing the ordered laws over every rank gives K times the plain
    distance law, so this is W E_d{ln(1 + xi / c)} with xi = P_max / (varsigma N0).
    """
    if sc.p_max == 0:
        return 0.0
    w, c = gain_law(sc.geom, table)
    xi = sc.p_max / (sc.varsigma * sc.n0)
    return sc.delta * sc.varsigma * sc.k_users * float(np.dot(w, np.log1p(xi / c)))


def esg_mmimo(sc, table=None, per="user"):
    """Finite-SNR massive-MIMO ESG, optionally per user or per antenna."""
    esg = ergodic_mmimo_noma(sc, table) - ergodic_mmimo_oma(sc, table)
    if per == "user":
        return esg / sc.k_users
    if per == "antenna":
        return esg / sc.m_antennas
    if per in (None, "sum"):
        return esg
    raise ValueError(f"unknown normalization {per!r}")


def _xlog1p(x):
    return 0.0 if x == 0 else (1 + x) * math.log1p(x)


def theorem3_suite(d0, alpha, k_users, m_antennas, group_w, p_max, n0):
    """Massive-MIMO closed forms for equidistant users (d = d0).

    Returns the NOMA and OMA sum-rates, their difference, the per-user
    and per-antenna ESG, the high-SNR per-user and per-antenna forms and
    the per-user increment ``zeta``.
    """
    delta = m_antennas / k_users
    vs = group_w / m_antennas
    varpi = p_max / ((1.0 + d0 ** alpha) * n0)
    keys = ("noma", "oma", "esg", "esg_per_user", "esg_per_antenna",
            "esg_per_user_exact", "esg_per_antenna_exact", "zeta", "varpi")
    if varpi == 0:
        return dict.fromkeys(keys, 0.0)
    a = varpi * delta
    bracket = _xlog1p(a + varpi) - _xlog1p(a) - _xlog1p(varpi)
    noma = m_antennas / (varpi * delta) * bracket
    oma_term = math.log1p(varpi / vs)
    oma = vs * m_antennas * oma_term
    zeta = (1 + delta) * math.log1p(a + varpi) - delta * math.log1p(a) - math.log1p(varpi)
    esg = noma - oma
    return {
        "noma": noma,
        "oma": oma,
        "esg": esg,
        "esg_per_user": zeta - delta * vs * oma_term,
        "esg_per_antenna": zeta / delta - vs * oma_term,
        "esg_per_user_exact": esg / k_users,
        "esg_per_antenna_exact": esg / m_antennas,
        "zeta": zeta,
        "varpi": varpi,
    }
