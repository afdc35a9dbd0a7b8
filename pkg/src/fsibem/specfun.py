"""Cylindrical special functions: J_n, Y_n, H_n^(1) and derivatives.

Everything downstream (kernels, analytic disc series, resonance finders)
funnels through this module, so the accuracy contract is strict:
values and first derivatives to ~1e-12 relative away from zeros.
Evaluation is delegated to scipy.special, which meets that contract for
the real, moderate-order arguments used here (n <= ~100, 1e-8 < x <= ~1e3).

Zero finding for J_n' is done by bracketing on a scan grid followed by
Brent refinement; J_n' zeros are simple, so sign changes are reliable
brackets once the grid resolves neighbouring zeros (spacing ~pi).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import hankel1, h1vp, jv, jvp, yv, yvp

# Y_n blows up at the origin; no caller legitimately needs x below the
# smallest inter-node distance of any mesh, so refuse tiny arguments.
MIN_ARGUMENT = 1e-8

# Scan step used to bracket zeros of J_n'; consecutive zeros of J_n' are
# separated by more than 1 for all n >= 0, so 0.05 cannot skip a pair.
ZERO_SCAN_STEP = 0.05
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class CylFunEval:
    """Bundle of cylinder-function values at one (order, argument) pair.

    Attributes
    ----------
    order : int
        Order n >= 0.
    argument : float
        Argument x > 0.
    j, y : float
        J_n(x) and Y_n(x).
    h1 : complex
        First-kind Hankel function, ``j + 1j*y`` by construction.
    dj : float
        J_n'(x).
    dh1 : complex
        d/dx H_n^(1)(x).
    """

    order: int
    argument: float
    j: float
    y: float
    h1: complex
    dj: float
    dh1: complex


def bessel_jy(n: int, x: float) -> CylFunEval:
    """Evaluate J_n, Y_n, H_n^(1) and first derivatives at x > 0.

    Parameters
    ----------
    n : int
        Order, must be >= 0. Negative orders should be mapped by the
        caller through J_{-n} = (-1)^n J_n.
    x : float
        Argument, must exceed ``MIN_ARGUMENT``.

    Returns
    -------
    CylFunEval

    Raises
    ------
    ValueError
        If n < 0 or x is outside the supported domain.
    """
    if n < 0:
        raise ValueError(f"order must be >= 0, got {n}")
    if not np.isfinite(x) or x <= 0.0:
        raise ValueError(f"argument must be positive, got {x}")
    if x < MIN_ARGUMENT:
        raise ValueError(
            f"argument {x} below {MIN_ARGUMENT}: Y_n is divergent there and "
            "no boundary-element pairing evaluates kernels that close"
        )
    j = float(jv(n, x))
    y = float(yv(n, x))
    dj = float(jvp(n, x))
    dh1 = complex(h1vp(n, x))
    return CylFunEval(order=n, argument=x, j=j, y=y, h1=complex(j, y), dj=dj, dh1=dh1)


def jn_derivative(n: int, x):
    """J_n'(x), vectorized; uses J_n' = J_{n-1} - (n/x) J_n."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return -jv(1, x)
    return jv(n - 1, x) - (n / x) * jv(n, x)


def hn1_derivative(n: int, x):
    """d/dx H_n^(1)(x), vectorized, via H' = H_{n-1} - (n/x) H_n."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return -hankel1(1, x)
    return hankel1(n - 1, x) - (n / x) * hankel1(n, x)


def find_bessel_derivative_zeros(n: int, lo: float, hi: float) -> list[float]:
    """All zeros of J_n' in [lo, hi], refined to ~1e-10, sorted ascending.

    An empty interval (no zeros) returns an empty list.
    """
    if n < 0:
        raise ValueError(f"order must be >= 0, got {n}")
    if not (0.0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")

    npts = max(int(np.ceil((hi - lo) / ZERO_SCAN_STEP)), 2) + 1
    grid = np.linspace(lo, hi, npts)
    vals = jn_derivative(n, grid)

    roots: list[float] = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
            continue
        if fa * fb < 0.0:
            roots.append(float(brentq(lambda t: float(jn_derivative(n, t)),
                                      a, b, xtol=ZERO_TOL)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(roots)
