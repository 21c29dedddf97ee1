"""Special functions used by the mode formulas.

Bessel functions of the first kind of real non-negative order, generalized
Laguerre polynomials, and positive zeros of :math:`J_\\nu`.
"""

from functools import lru_cache

import numpy as np
from scipy import optimize, special


class BesselZeroError(RuntimeError):
    """Root bracketing or refinement for a Bessel zero did not converge."""


def _check_order(nu):
    nu = float(nu)
    if not np.isfinite(nu) or nu < 0:
        raise ValueError(f"Bessel order must be finite and >= 0, got {nu}")
    return nu


def bessel_j(nu, x):
    r"""Bessel function of the first kind :math:`J_\nu(x)`.

    Parameters
    ----------
    nu : float
        Order, finite and non-negative (non-integer orders allowed).
    x : float or array_like
        Argument, finite and non-negative.

    Returns
    -------
    float or ndarray
        :math:`J_\nu(x)`, same shape as `x`.
    """
    nu = _check_order(nu)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("Bessel argument must be finite")
    if np.any(xa < 0):
        raise ValueError("Bessel argument must be >= 0")
    out = special.jv(nu, xa)
    return float(out) if out.ndim == 0 else out


def bessel_j_prime(nu, x):
    """Derivative :math:`J_\\nu'(x)` from the standard recurrence."""
    nu = _check_order(nu)
    xa = np.asarray(x, dtype=float)
    out = 0.5 * (special.jv(nu - 1.0, xa) - special.jv(nu + 1.0, xa))
    return float(out) if out.ndim == 0 else out


def laguerre(n, alpha, x):
    r"""Generalized Laguerre polynomial :math:`L_n^{\alpha}(x)`.

    Evaluated with the three-term recurrence

    .. math::
        (k+1) L_{k+1}^\alpha = (2k+1+\alpha-x) L_k^\alpha - (k+\alpha) L_{k-1}^\alpha .
    """
    n = int(n)
    if n < 0:
        raise ValueError(f"Laguerre degree must be >= 0, got {n}")
    alpha = float(alpha)
    xa = np.asarray(x, dtype=float)
    if not (np.isfinite(alpha) and np.all(np.isfinite(xa))):
        raise ValueError("Laguerre inputs must be finite")
    prev = np.ones_like(xa)
    if n == 0:
        return float(prev) if prev.ndim == 0 else prev
    cur = 1.0 + alpha - xa
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - xa) * cur - (k + alpha) * prev) / (k + 1)
    return float(cur) if cur.ndim == 0 else cur


@lru_cache(maxsize=512)
def bessel_zero(nu, m):
    """m-th positive zero of :math:`J_\\nu`.

    Zeros are bracketed by a sign scan starting at ``x = nu`` (the first zero
    always exceeds the order), refined with Brent's method and polished by
    Newton steps.

    Raises
    ------
    BesselZeroError
        If the scan or refinement fails.
    """
    nu = _check_order(nu)
    m = int(m)
    if m < 1:
        raise ValueError(f"zero index must be >= 1, got {m}")
    step = 0.1
    a = nu
    fa = special.jv(nu, a)
    if nu > 0 and fa <= 0:
        raise BesselZeroError(f"J_{nu}({nu}) is not positive; cannot start scan")
    found = 0
    limit = nu + 10.0 + 4.0 * m * np.pi
    while a < limit:
        b = a + step
        fb = special.jv(nu, b)
        if fa == 0.0 and a > 0:
            found += 1
            if found == m:
                return float(a)
        elif fa * fb < 0:
            found += 1
            if found == m:
                root = optimize.brentq(lambda t: special.jv(nu, t), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                for _ in range(3):
                    d = bessel_j_prime(nu, root)
                    if d == 0:
                        break
                    root -= special.jv(nu, root) / d
                if not a <= root <= b:
                    raise BesselZeroError(f"Newton polish left the bracket for nu={nu}, m={m}")
                return float(root)
        a, fa = b, fb
    raise BesselZeroError(f"zero {m} of J_{nu} not bracketed below x={limit:.3g}")


@lru_cache(maxsize=512)
def bessel_peak(nu):
    """Location and value of the global maximum of :math:`J_\\nu` on x >= 0.

    The maximum is the first one, which lies before the first zero.
    """
    nu = _check_order(nu)
    if nu == 0:
        return 0.0, 1.0
    res = optimize.minimize_scalar(
        lambda t: -special.jv(nu, t), bounds=(0.0, bessel_zero(nu, 1)),
        method="bounded", options={"xatol": 1e-10},
    )
    return float(res.x), float(-res.fun)
