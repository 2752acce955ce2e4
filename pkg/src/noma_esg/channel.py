"""Cell geometry, user drops, Rayleigh channels and Gauss-Chebyshev tables.

Users are uniform on the annulus ``d0 <= r <= d`` around the base station.
The channel of user k is ``h_k = g_k / sqrt(1 + d_k**alpha)`` with
``g_k ~ CN(0, I_M)``.  Distance averages over the annulus are evaluated
with an N-point Gauss-Chebyshev rule whose nodes, weights and path-loss
factors are held in a :class:`QuadratureTable`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "CellGeometry",
    "QuadratureTable",
    "ChannelDraw",
    "RngStream",
    "DegenerateGeometryError",
    "chebyshev_annulus",
    "quadrature_table",
    "converged_table",
    "sample_distances",
    "sample_channel",
    "drop_users",
    "mean_gain",
    "ordered_weights",
    "ordered_moment",
    "ordered_moments",
]

DEFAULT_TERMS = 100


class DegenerateGeometryError(ValueError):
    """Raised when a quadrature table is requested for ``d == d0``.

    All users are then equidistant and the closed forms with a single
    path-loss value apply directly.
    """


@dataclass(frozen=True)
class CellGeometry:
    """Annulus radii in meters and the path-loss exponent."""

    d0: float
    d: float
    alpha: float = 3.76

    def __post_init__(self):
        if not (self.d0 > 0 and np.isfinite(self.d0)):
            raise ValueError(f"inner radius must be positive, got {self.d0!r}")
        if not self.d >= self.d0:
            raise ValueError(f"outer radius {self.d!r} is below inner radius {self.d0!r}")
        if not self.alpha > 2:
            raise ValueError(f"path-loss exponent must exceed 2, got {self.alpha!r}")

    @property
    def eta(self):
        """Normalized cell size d / d0."""
        return self.d / self.d0

    @property
    def degenerate(self):
        return self.d == self.d0

    def path_loss(self, r):
        """Large-scale factor ``1 + r**alpha``."""
        return 1.0 + np.asarray(r, dtype=float) ** self.alpha


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureTable:
    """Gauss-Chebyshev coefficients for one annulus.

    ``beta`` are the weights (they sum to about ``d + d0``), ``phi`` the
    radial nodes and ``c = 1 + phi**alpha`` the path-loss factor at each
    node.  ``weights = beta / (d + d0)`` is the normalized version that
    integrates the distance density to one.
    """

    geom: CellGeometry
    n_terms: int
    beta: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def weights(self):
        return self.beta / (self.geom.d + self.geom.d0)

    def expect(self, values):
        """Distance average of ``values`` sampled at the nodes."""
        return float(np.dot(self.weights, values))


def chebyshev_annulus(lo, hi, n_terms, alpha):
    """Return ``(beta, c, phi)`` for the annulus ``[lo, hi]``.

    Shared by the serving-cell table and the inter-cell interference
    field, which only differ in the radii.
    """
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms!r}")
    n = np.arange(1, n_terms + 1)
    theta = (2 * n - 1) * np.pi / (2 * n_terms)
    phi = 0.5 * (hi - lo) * np.cos(theta) + 0.5 * (hi + lo)
    beta = np.pi / n_terms * np.abs(np.sin(theta)) * phi
    c = 1.0 + phi ** alpha
    return beta, c, phi


def quadrature_table(geom, n_terms=DEFAULT_TERMS):
    """Build the N-term table for ``geom``.

    Raises :class:`DegenerateGeometryError` for ``d == d0``; the
    equidistant case has its own closed forms.
    """
    if geom.degenerate:
        raise DegenerateGeometryError(
            "d == d0: use the equidistant closed forms instead of quadrature"
        )
    beta, c, phi = chebyshev_annulus(geom.d0, geom.d, int(n_terms), geom.alpha)
    return QuadratureTable(geom, int(n_terms), _readonly(beta), _readonly(c), _readonly(phi))


def converged_table(geom, n_terms=DEFAULT_TERMS, rtol=1e-6, max_terms=409_600):
    """Double the number of terms until ``mean_gain`` moves by less than ``rtol``.

    Returns ``None`` for a degenerate geometry so callers can branch to
    the closed forms.
    """
    if geom.degenerate:
        return None
    table = quadrature_table(geom, n_terms)
    value = mean_gain(geom, 1, table)
    while table.n_terms < max_terms:
        finer = quadrature_table(geom, 2 * table.n_terms)
        new = mean_gain(geom, 1, finer)
        table = finer
        if abs(new - value) <= rtol * abs(new):
            return table
        value = new
    raise ArithmeticError(f"quadrature did not converge to rtol={rtol} within {max_terms} terms")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by a seed and a tuple of indices.

    Two streams with the same seed and key always produce the same draws,
    and distinct keys give statistically independent streams, so Monte
    Carlo trials can run in any order.
    """

    seed: int
    stream: tuple = ()

    def generator(self):
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(s) for s in self.stream))
        return np.random.default_rng(ss)

    def child(self, *key):
        return RngStream(self.seed, self.stream + tuple(key))


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class ChannelDraw:
    """One channel realization: distances and the M x K matrix ``h``."""

    distances: np.ndarray
    h: np.ndarray

    @property
    def m(self):
        return self.h.shape[0]

    @property
    def k(self):
        return self.h.shape[1]

    @property
    def gains(self):
        """Per-user ``||h_k||^2``."""
        return np.einsum("mk,mk->k", self.h.real, self.h.real) + np.einsum(
            "mk,mk->k", self.h.imag, self.h.imag
        )

    def subset(self, idx):
        idx = np.asarray(idx)
        return ChannelDraw(self.distances[idx], self.h[:, idx])

    def sorted_by_gain(self):
        """Reorder users by descending channel gain (the SIC decoding order).

        Returns the reordered draw and the permutation applied.
        """
        order = np.argsort(-self.gains, kind="stable")
        return self.subset(order), order


def sample_distances(k, geom, rng):
    """Draw ``k`` i.i.d. user distances, uniform over the annulus area."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    gen = _as_generator(rng)
    if geom.degenerate:
        return np.full(k, float(geom.d0))
    u = gen.random(k)
    return np.sqrt(geom.d0 ** 2 + u * (geom.d ** 2 - geom.d0 ** 2))


def sample_channel(distances, m, alpha, rng):
    """Rayleigh fading scaled by path loss, one column per user."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    gen = _as_generator(rng)
    distances = np.asarray(distances, dtype=float)
    k = distances.size
    g = (gen.standard_normal((m, k)) + 1j * gen.standard_normal((m, k))) * np.sqrt(0.5)
    return ChannelDraw(distances, g / np.sqrt(1.0 + distances ** alpha))


def drop_users(geom, k, m, rng):
    """Distances and channel for one trial from a single stream."""
    gen = _as_generator(rng)
    return sample_channel(sample_distances(k, geom, gen), m, geom.alpha, gen)


def mean_gain(geom, m=1, table=None):
    """Average channel gain E{||h||^2} = m * E_d{1 / (1 + d^alpha)}."""
    if geom.degenerate:
        return m / (1.0 + geom.d0 ** geom.alpha)
    if table is None:
        table = quadrature_table(geom)
    return m * float(np.sum(table.beta / table.c)) / (geom.d + geom.d0)


def ordered_weights(k_total, table):
    """Quadrature weights of every ordered distance.

    Row ``k-1`` integrates against the density of the k-th smallest of
    ``k_total`` i.i.d. distances, so index 1 is the nearest user (largest
    average gain).  Binomial factors are formed in the log domain to stay
    finite for hundreds of users.
    """
    geom = table.geom
    span = geom.d ** 2 - geom.d0 ** 2
    cdf = (table.phi ** 2 - geom.d0 ** 2) / span
    tail = (geom.d ** 2 - table.phi ** 2) / span
    k = np.arange(1, k_total + 1)[:, None]
    log_coef = (
        gammaln(k_total + 1) - gammaln(k) - gammaln(k_total - k + 1)
    )  # k * C(K, k) = K! / ((k-1)! (K-k)!)
    with np.errstate(divide="ignore"):
        log_w = log_coef + (k - 1) * np.log(cdf) + (k_total - k) * np.log(tail)
    return np.exp(log_w) * table.weights


def ordered_moments(k_total, table):
    """I_k = E{1 / (1 + d_k^alpha)} for k = 1..k_total."""
    return ordered_weights(k_total, table) @ (1.0 / table.c)


def ordered_moment(k, k_total, geom, table):
    """I_k for a single rank ``k`` (1 = nearest user)."""
    if not 1 <= k <= k_total:
        raise IndexError(f"rank {k} outside 1..{k_total}")
    if table.geom != geom:
        raise ValueError("table was built for a different geometry")
    return float(ordered_moments(k_total, table)[k - 1])
