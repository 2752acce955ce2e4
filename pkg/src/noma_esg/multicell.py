"""Inter-cell interference (ICI) and its effect on the ESG.

Interferers are the K*L users of the adjacent cells, modeled as uniform on
the annulus between the serving-cell edge ``d`` and the outer radius
``d1``.  With equal power ``P_max / K`` per interferer their aggregate
power at the serving BS concentrates on a deterministic value as K*L
grows, and treating it as extra Gaussian noise turns every single-cell
closed form into its multi-cell counterpart by replacing ``N0`` with
``I + N0``.  OMA subbands see only a 1/G share of both.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import analytic
from .channel import _as_generator, chebyshev_annulus

__all__ = [
    "MulticellLayout",
    "IciModel",
    "ici_quadrature",
    "ici_mean_gain",
    "ici_power",
    "ici_model",
    "g_subbands",
    "multicell_esg",
    "sinr_summary",
    "sample_ici_power",
    "KINDS",
]

KINDS = ("SISO", "MIMO_ZF", "MIMO_MRC", "MMIMO")


def _users_in_disc(rho_per_km2, radius_m):
    # the small tolerance keeps exact products from rounding up spuriously
    return math.ceil(rho_per_km2 * math.pi * (radius_m / 1000.0) ** 2 - 1e-9)


@dataclass(frozen=True)
class MulticellLayout:
    """Serving cell of radius ``d`` surrounded by L cells out to ``d1``.

    ``p_max_total`` is shared equally by the L+1 cells.
    """

    d: float
    d1: float
    k_per_cell: int
    l_cells: int
    p_max_total: float
    alpha: float = 3.76
    rho: float = float("nan")

    def __post_init__(self):
        if not self.d1 > self.d > 0:
            raise ValueError(f"need d1 > d > 0, got d={self.d!r}, d1={self.d1!r}")
        if self.k_per_cell < 1 or self.l_cells < 0:
            raise ValueError("need K >= 1 and L >= 0")
        if not self.p_max_total >= 0:
            raise ValueError("total power must be non-negative")

    @classmethod
    def from_density(cls, d, d1, rho_per_km2, p_max_total, alpha=3.76):
        """K = ceil(rho pi d^2) per cell and L = ceil((K' - K)/K) cells,
        where K' = ceil(rho pi d1^2) covers the whole area (radii in m)."""
        k = _users_in_disc(rho_per_km2, d)
        k_total = _users_in_disc(rho_per_km2, d1)
        l_cells = math.ceil((k_total - k) / k)
        return cls(d, d1, k, l_cells, p_max_total, alpha, rho_per_km2)

    @property
    def p_max_cell(self):
        return self.p_max_total / (self.l_cells + 1)

    @property
    def k_total(self):
        return self.k_per_cell * (self.l_cells + 1)

    def with_cell_power(self, p_max_cell):
        """Same layout with the total budget set from a per-cell budget."""
        return replace(self, p_max_total=p_max_cell * (self.l_cells + 1))


@dataclass(frozen=True)
class IciModel:
    beta: np.ndarray
    c: np.ndarray
    i_noma: float
    i_oma: float
    g_subbands: float


def ici_quadrature(d, d1, n_terms=2000, alpha=3.76):
    """``(beta', c')`` over the interferer annulus ``[d, d1]``."""
    if not d1 > d:
        raise ValueError(f"need d1 > d, got d={d!r}, d1={d1!r}")
    beta, c, _ = chebyshev_annulus(d, d1, n_terms, alpha)
    return beta, c


def ici_mean_gain(d, d1, alpha=3.76, n_terms=2000):
    """Average gain of one interferer, sum(beta'/c') / (d + d1)."""
    beta, c = ici_quadrature(d, d1, n_terms, alpha)
    return float(np.sum(beta / c)) / (d + d1)


def g_subbands(kind, k, m=1, w=1):
    """Number of OMA subbands G for each scenario kind."""
    if kind == "SISO" or kind == "MIMO_MRC":
        return k
    if kind == "MIMO_ZF":
        return k / m
    if kind == "MMIMO":
        return k / w
    raise ValueError(f"unknown scenario kind {kind!r}")


def ici_power(layout, scheme="NOMA", g=1.0, n_terms=2000):
    """Deterministic ICI power in watts.

    NOMA: every interferer is active, L P_max E{|h'|^2}.  OMA: only the
    1/G of them sharing the subband, so the NOMA value divided by G.
    """
    if layout.l_cells == 0:
        return 0.0
    i_noma = layout.l_cells * layout.p_max_cell * ici_mean_gain(
        layout.d, layout.d1, layout.alpha, n_terms
    )
    if scheme == "NOMA":
        return i_noma
    if scheme == "OMA":
        return i_noma / g
    raise ValueError(f"scheme must be 'NOMA' or 'OMA', got {scheme!r}")


def ici_model(layout, g, n_terms=2000):
    beta, c = ici_quadrature(layout.d, layout.d1, n_terms, layout.alpha)
    i_noma = ici_power(layout, "NOMA", n_terms=n_terms)
    return IciModel(beta, c, i_noma, i_noma / g, g)


def _single_cell_esg(kind, sc, table):
    if kind == "SISO":
        return analytic.esg_siso(sc, table)
    if kind == "MIMO_ZF":
        return analytic.esg_mimo_zf_finite(sc, table)
    if kind == "MIMO_MRC":
        return analytic.esg_mimo_mrc_finite(sc, table)
    if kind == "MMIMO":
        return analytic.esg_mmimo(sc, table, per="sum")
    raise ValueError(f"unknown scenario kind {kind!r}")


def multicell_esg(layout, kind, sc, table=None, n_terms=2000):
    """Finite-SNR ESG of the serving cell under ICI.

    The serving cell transmits with ``layout.p_max_cell`` (``sc.p_max`` is
    ignored) and the noise becomes ``I_NOMA + N0``.  Returns the sum ESG;
    divide by K or M for the normalized massive-MIMO values.
    """
    i_noma = ici_power(layout, "NOMA", n_terms=n_terms)
    eff = sc.with_(p_max=layout.p_max_cell, n0=sc.n0 + i_noma)
    return _single_cell_esg(kind, eff, table)


def sinr_summary(layout, sc, scheme="NOMA", g=1.0, table=None, n_terms=2000):
    """Average received sum SINR of the serving cell.

    NOMA sees the full ICI and noise; an OMA subband sees 1/G of each,
    with 1/G of the power, so the subband SINR is unchanged by G only when
    the ICI vanishes.
    """
    _, _, mg = analytic._snr_terms(sc, table)
    p = layout.p_max_cell
    i_noma = ici_power(layout, "NOMA", n_terms=n_terms)
    if scheme == "NOMA":
        return p * mg / (i_noma + sc.n0)
    if scheme == "OMA":
        return p * mg / (i_noma / g + sc.n0 / g)
    raise ValueError(f"scheme must be 'NOMA' or 'OMA', got {scheme!r}")


def sample_ici_power(layout, rng, n_interferers=None):
    """One random ICI realization: K*L interferers uniform on [d, d1],
    each with power P_max/K and an exponential(1) effective fading."""
    gen = _as_generator(rng)
    n = layout.k_per_cell * layout.l_cells if n_interferers is None else n_interferers
    if n == 0:
        return 0.0
    u = gen.random(n)
    r = np.sqrt(layout.d ** 2 + u * (layout.d1 ** 2 - layout.d ** 2))
    fading = gen.exponential(size=n)
    p = layout.p_max_cell / layout.k_per_cell
    return float(p * np.sum(fading / (1.0 + r ** layout.alpha)))
