"""Scalar special functions used by the closed-form ergodic rates.

Only what the analysis needs: exponential integrals of integer order,
the lower incomplete Gamma function at integer shape, the logarithmic
moment of a Gamma variate and the digamma function at integers.
"""

import math

import numpy as np
from scipy import integrate, special

EULER_GAMMA = 0.57721566490153286061

_EPS = 1e-16
_FPMIN = 1e-300
_MAXITER = 10_000


def _check_positive(x, name="x"):
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be positive and finite, got {x!r}")


def _expn_scaled(n, x):
    """e^x * E_n(x) for integer n >= 1 and x > 0."""
    if x >= 1.0:
        # modified Lentz continued fraction
        b = x + n
        c = 1.0 / _FPMIN
        d = 1.0 / b
        h = d
        for i in range(1, _MAXITER):
            an = -i * (n - 1 + i)
            b += 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            h *= delta
            if abs(delta - 1.0) < _EPS:
                return h
        raise ArithmeticError(f"continued fraction for E_{n}({x}) did not converge")

    # power series
    nm1 = n - 1
    ans = 1.0 / nm1 if nm1 else -math.log(x) - EULER_GAMMA
    fact = 1.0
    for i in range(1, _MAXITER):
        fact *= -x / i
        if i != nm1:
            delta = -fact / (i - nm1)
        else:
            psi = -EULER_GAMMA + math.fsum(1.0 / k for k in range(1, nm1 + 1))
            delta = fact * (-math.log(x) + psi)
        ans += delta
        if abs(delta) < abs(ans) * _EPS:
            return ans * math.exp(x)
    raise ArithmeticError(f"series for E_{n}({x}) did not converge")


def expn_scaled(n, x):
    """Return ``exp(x) * E_n(x)``, the overflow-safe product used in the
    ergodic OMA rates.  Accepts scalar or array ``x``."""
    if n < 1 or int(n) != n:
        raise ValueError(f"order must be a positive integer, got {n!r}")
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    for v in flat:
        _check_positive(v)
    out = np.array([_expn_scaled(int(n), float(v)) for v in flat])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def exp_integral_e1(x):
    """Exponential integral E_1(x) = int_1^inf exp(-x t)/t dt for x > 0.

    Series for x < 1, continued fraction otherwise.  Relative accuracy is
    around 1e-15 across the domain; the result underflows to 0 for x > ~700.
    """
    _check_positive(x)
    x = float(x)
    if x > 745.0:
        return 0.0
    return _expn_scaled(1, x) * math.exp(-x)


def scaled_exp_integral_e1(x):
    """``exp(x) * E_1(x)`` evaluated without forming either factor."""
    return expn_scaled(1, x)


def lower_incomplete_gamma(m, x):
    """Lower incomplete Gamma function gamma_L(m, x) for integer m >= 1."""
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"x must be non-negative and finite, got {x!r}")
    if x == 0:
        return 0.0
    return float(special.gammainc(m, x) * math.gamma(m))


def digamma_int(m):
    """psi(m) = -gamma + H_{m-1} for integer m >= 1."""
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    return -EULER_GAMMA + math.fsum(1.0 / k for k in range(1, int(m)))


def ln_moment_gamma(m, lam, method="closed"):
    """E{ln(1 + X)} for X ~ Gamma(shape m, rate lam).

    For integer shape the Meijer-G representation collapses to

        exp(lam) * sum_{l=1}^{m} E_l(lam)

    which is the default path.  ``method="quad"`` integrates the density
    numerically instead (used as a cross-check).
    """
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    _check_positive(lam, "lam")
    m = int(m)
    if method == "closed":
        return math.fsum(_expn_scaled(l, float(lam)) for l in range(1, m + 1))
    if method == "quad":
        return _ln_moment_gamma_quad(m, float(lam))
    raise ValueError(f"unknown method {method!r}")


def _ln_moment_gamma_quad(m, lam):
    # u = lam * t turns the density into Gamma(m, 1)
    lg = math.lgamma(m)

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return math.log1p(u / lam) * math.exp((m - 1) * math.log(u) - u - lg)

    # split at the mode region so quad sees the bulk of the mass
    brk = [0.0, max(m, 1.0), 4.0 * m + 40.0]
    total = 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    val, _ = integrate.quad(integrand, brk[-1], np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return total + val
