"""Instantaneous uplink rates for NOMA and OMA receivers.

Every function takes a :class:`~noma_esg.channel.ChannelDraw` whose
columns are already in decoding order (strongest user first, see
:meth:`ChannelDraw.sorted_by_gain`) and returns a :class:`RateReport`
in nat/s/Hz.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelDraw, _as_generator

__all__ = [
    "PowerAllocation",
    "Grouping",
    "RateReport",
    "SchemeMismatchError",
    "ConfigurationError",
    "SingularGroupError",
    "FavorablePropagationWarning",
    "sic_rates_siso",
    "oma_rates_siso",
    "mmse_sic_rates",
    "theorem1_upper_bound",
    "mrc_sic_rates",
    "fdma_zf_rates",
    "fdma_mrc_rates",
    "mmimo_oma_rates",
]


class SchemeMismatchError(ValueError):
    """Receiver applied to a draw with the wrong antenna count."""


class ConfigurationError(ValueError):
    """Invalid scenario parameters, detected before any trial runs."""


class SingularGroupError(np.linalg.LinAlgError):
    """A ZF group matrix is rank deficient; the draw should be regenerated."""


class FavorablePropagationWarning(UserWarning):
    """Group size exceeds the antenna count in massive-MIMO OMA."""


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers under a sum-power budget."""

    p: np.ndarray
    p_max: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("powers must be finite and non-negative")
        if p.sum() > self.p_max * (1 + 1e-12):
            raise ValueError(f"sum power {p.sum()!r} exceeds budget {self.p_max!r}")
        object.__setattr__(self, "p", p)

    @classmethod
    def equal(cls, k, p_max):
        return cls(np.full(k, p_max / k), p_max)

    @property
    def k(self):
        return self.p.size


@dataclass(frozen=True)
class Grouping:
    """Partition of users into frequency subbands.

    ``freq_share[g]`` is the bandwidth fraction of group ``g``.  Groups are
    proportional to their size, so a short final group gets a smaller share.
    """

    groups: tuple
    group_size: int
    freq_share: np.ndarray

    def __post_init__(self):
        groups = tuple(np.asarray(g, dtype=int) for g in self.groups)
        share = np.asarray(self.freq_share, dtype=float)
        if len(groups) != share.size:
            raise ValueError("one frequency share per group is required")
        if np.any(share <= 0):
            raise ValueError("frequency shares must be positive")
        if abs(share.sum() - 1.0) > 1e-12:
            raise ValueError(f"frequency shares sum to {share.sum()!r}, not 1")
        flat = np.concatenate(groups) if groups else np.array([], dtype=int)
        if np.unique(flat).size != flat.size or (flat.size and set(flat) != set(range(flat.size))):
            raise ValueError("groups must be disjoint and cover every user exactly once")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "freq_share", share)

    @property
    def k(self):
        return sum(g.size for g in self.groups)

    @classmethod
    def contiguous(cls, k, size):
        """Users ``0..size-1`` in the first group, and so on."""
        if size < 1:
            raise ValueError(f"group size must be >= 1, got {size!r}")
        groups = [np.arange(s, min(s + size, k)) for s in range(0, k, size)]
        return cls(groups, size, np.array([g.size / k for g in groups]))

    @classmethod
    def singletons(cls, k):
        return cls.contiguous(k, 1)

    @classmethod
    def random(cls, k, size, rng):
        """Random grouping by shuffling user indices."""
        perm = _as_generator(rng).permutation(k)
        base = cls.contiguous(k, size)
        return cls(tuple(perm[g] for g in base.groups), size, base.freq_share)

    def user_share(self):
        """Frequency share seen by each user."""
        f = np.empty(self.k)
        for g, share in zip(self.groups, self.freq_share):
            f[g] = share
        return f


@dataclass(frozen=True)
class RateReport:
    per_user: np.ndarray
    scheme: str

    @property
    def sum(self):
        return float(np.sum(self.per_user))


def _check_n0(n0):
    if not n0 > 0:
        raise ValueError(f"noise power must be positive, got {n0!r}")


def _check_k(draw, pa):
    if pa.k != draw.k:
        raise ValueError(f"power allocation has {pa.k} users, draw has {draw.k}")


def _oma(gain, p, f, n0, scheme):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency shares must be positive")
    return RateReport(f * np.log1p(p * gain / (f * n0)), scheme)


def sic_rates_siso(draw: ChannelDraw, pa: PowerAllocation, n0: float) -> RateReport:
    """Single-antenna SIC, decoding columns left to right."""
    if draw.m != 1:
        raise SchemeMismatchError(f"SISO SIC needs m = 1, got m = {draw.m}")
    _check_n0(n0)
    _check_k(draw, pa)
    rx = pa.p * draw.gains
    after = np.concatenate([np.cumsum(rx[::-1])[::-1][1:], [0.0]])
    # ln(1 + rx_k / (after_k + n0)) written as a difference of logs
    return RateReport(np.log1p((rx + after) / n0) - np.log1p(after / n0), "SISO-NOMA")


def oma_rates_siso(draw, pa, grouping, n0) -> RateReport:
    """FDMA with one user per subband (FDMA-SUD)."""
    if draw.m != 1:
        raise SchemeMismatchError(f"SISO OMA needs m = 1, got m = {draw.m}")
    _check_n0(n0)
    _check_k(draw, pa)
    return _oma(draw.gains, pa.p, grouping.user_share(), n0, "FDMA-SUD")


def _logdet_hpd(a):
    """ln det of a Hermitian positive-definite matrix via Cholesky."""
    chol = np.linalg.cholesky(a)
    return 2.0 * np.sum(np.log(np.abs(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def mmse_sic_rates(draw, pa, n0) -> RateReport:
    """MMSE-SIC, each rate a difference of successive log-determinants."""
    _check_n0(n0)
    _check_k(draw, pa)
    m, k = draw.h.shape
    scaled = draw.h * np.sqrt(pa.p / n0)
    logdets = np.zeros(k + 1)
    # logdets[j] = ln|I + sum_{i>=j} p_i h_i h_i^H / n0|, built from the last user down
    if k <= m:
        # work in the k x k Gram domain: ln|I_m + A A^H| = ln|I_k + A^H A|
        for j in range(k - 1, -1, -1):
            a = scaled[:, j:]
            logdets[j] = _logdet_hpd(np.eye(k - j) + a.conj().T @ a)
    elif k * m * m <= 2_000_000:
        outer = np.einsum("ik,jk->kij", scaled, scaled.conj())
        acc = np.cumsum(outer[::-1], axis=0)[::-1] + np.eye(m)
        logdets[:-1] = _logdet_hpd(acc)
    else:
        acc = np.eye(m, dtype=complex)
        for j in range(k - 1, -1, -1):
            col = scaled[:, j]
            acc += np.outer(col, col.conj())
            logdets[j] = _logdet_hpd(acc)
    return RateReport(np.maximum(logdets[:-1] - logdets[1:], 0.0), "MIMO-NOMA-MMSE-SIC")


def theorem1_upper_bound(draw, pa, n0) -> float:
    """Sum-capacity upper bound M ln(1 + sum_k p_k ||h_k||^2 / (M N0))."""
    _check_n0(n0)
    return float(draw.m * np.log1p(np.dot(pa.p, draw.gains) / (draw.m * n0)))


def _cross_gains(h):
    """|e_k^H h_i|^2 for every pair, with e_k = h_k / ||h_k||."""
    gains = np.sum(np.abs(h) ** 2, axis=0)
    gram = h.conj().T @ h
    return np.abs(gram) ** 2 / gains[:, None]


def mrc_sic_rates(draw, pa, n0) -> RateReport:
    """MRC detection per stage, later users treated as interference."""
    _check_n0(n0)
    _check_k(draw, pa)
    x = _cross_gains(draw.h)
    interference = np.triu(x, 1) @ pa.p
    signal = pa.p * draw.gains
    return RateReport(np.log1p(signal / (interference + n0)), "MIMO-NOMA-MRC-SIC")


def zf_effective_gains(h_group, rcond=1e-12):
    """|w_k^H h_k|^2 for unit-norm ZF vectors taken from pseudoinverse rows.

    ``h_group`` is m x g with g <= m, or a stack of shape (..., m, g).
    Raises :class:`SingularGroupError` if any group is rank deficient.
    """
    h_group = np.asarray(h_group)
    sv = np.linalg.svd(h_group, compute_uv=False)
    if np.any(sv[..., -1] <= rcond * sv[..., 0]):
        raise SingularGroupError("ZF group matrix is singular; regenerate the draw")
    rows = np.linalg.pinv(h_group)
    # w_k = rows[k]^H / ||rows[k]||, so w_k^H h_k = 1 / ||rows[k]||
    return 1.0 / np.sum(np.abs(rows) ** 2, axis=-1)


def fdma_zf_rates(draw, pa, grouping, n0) -> RateReport:
    """FDMA across groups of m users, ZF inside each group."""
    _check_n0(n0)
    _check_k(draw, pa)
    m, k = draw.h.shape
    if k % m:
        raise ConfigurationError(f"FDMA-ZF needs K divisible by M, got K={k}, M={m}")
    if grouping.group_size != m or any(g.size != m for g in grouping.groups):
        raise ConfigurationError("FDMA-ZF groups must hold exactly M users")
    idx = np.stack(grouping.groups)  # G x m
    stack = np.transpose(draw.h[:, idx], (1, 0, 2))  # G x m x m
    eff = np.empty(k)
    eff[idx] = zf_effective_gains(stack)
    return _oma(eff, pa.p, grouping.user_share(), n0, "FDMA-ZF")


def fdma_mrc_rates(draw, pa, n0) -> RateReport:
    """One user per subband, f_k = 1/K, full MRC array gain."""
    _check_n0(n0)
    _check_k(draw, pa)
    return _oma(draw.gains, pa.p, np.full(draw.k, 1.0 / draw.k), n0, "FDMA-MRC")


def mmimo_oma_rates(draw, pa, grouping, n0, include_iui=False, strict=False) -> RateReport:
    """Massive-MIMO OMA with W users per subband and per-user MRC.

    By default the intra-group interference is dropped, which makes the
    result an upper bound that becomes tight under favorable propagation.
    ``include_iui=True`` keeps the residual MRC interference for
    sensitivity checks.
    """
    _check_n0(n0)
    _check_k(draw, pa)
    if grouping.group_size > draw.m:
        msg = f"group size W={grouping.group_size} exceeds M={draw.m}"
        if strict:
            raise ConfigurationError(msg)
        warnings.warn(msg, FavorablePropagationWarning, stacklevel=2)
    f = grouping.user_share()
    if not include_iui:
        return _oma(draw.gains, pa.p, f, n0, "mMIMO-OMA")
    rates = np.empty(draw.k)
    for g, share in zip(grouping.groups, grouping.freq_share):
        x = _cross_gains(draw.h[:, g])
        p = pa.p[g]
        signal = p * np.diagonal(x)
        interference = x @ p - signal
        rates[g] = share * np.log1p(signal / (interference + share * n0))
    return RateReport(rates, "mMIMO-OMA-IUI")
