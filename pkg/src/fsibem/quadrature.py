"""Quadrature rules for weakly singular panel integrals.

Three ingredients:

* plain Gauss-Legendre (separated panel pairs),
* a Gauss rule for the weight ln(1/t) on (0, 1), built by the modified
  Chebyshev algorithm from closed-form shifted-Legendre moments and a
  Golub-Welsch eigensolve,
* geometric subdivision toward a shared node for adjacent panel pairs.

On a coincident flat panel every kernel in this solver reduces to
``geo * f(u) * sign(s-t)^parity`` with u = |s-t| and f = P + Q ln u, so
the double integral against (products of) affine basis factors collapses
to one-dimensional integrals

    int_0^h f(u) W(u) du,   W(u) = int_0^{h-u} [a(t+u)b(t) +- a(t)b(t+u)] dt,

with W a cubic polynomial. The ln-part is integrated by the log rule and
the analytic part by Gauss, which is exact up to the (superalgebraically
small) series truncation of P and Q.
"""

from functools import lru_cache
from math import comb

import numpy as np

from .mesh import gauss01

LOG_RULE_MIN = 2
LOG_RULE_MAX = 24


@lru_cache(maxsize=None)
def gauss_log_rule(q: int):
    """Nodes/weights for int_0^1 f(t) ln(1/t) dt, exact to degree 2q-1.

    Recurrence coefficients of the orthogonal polynomials for the weight
    ln(1/t) are recovered from its modified moments against monic shifted
    Legendre polynomials, nu_0 = 1, nu_n = (-1)^n / (n (n+1) C(2n, n)),
    by the modified Chebyshev algorithm; nodes/weights follow from the
    Jacobi-matrix eigendecomposition.
    """
    if not (LOG_RULE_MIN <= q <= LOG_RULE_MAX):
        raise ValueError(f"log rule order must be in "
                         f"[{LOG_RULE_MIN}, {LOG_RULE_MAX}], got {q}")
    m = 2 * q
    a = np.full(m, 0.5)
    b = np.array([0.0] + [ell * ell / (4.0 * (2 * ell - 1) * (2 * ell + 1))
                          for ell in range(1, m)])
    nu = np.zeros(m)
    nu[0] = 1.0
    for n in range(1, m):
        nu[n] = (-1.0) ** n / (n * (n + 1.0)) / comb(2 * n, n)

    alpha = np.zeros(q)
    beta = np.zeros(q)
    sig = np.zeros((q + 1, m))
    sig[1, :] = nu
    alpha[0] = a[0] + nu[1] / nu[0]
    beta[0] = nu[0]
    for k in range(1, q):
        for ell in range(k, m - k):
            sig[k + 1, ell] = (sig[k, ell + 1]
                               - (alpha[k - 1] - a[ell]) * sig[k, ell]
                               - beta[k - 1] * sig[k - 1, ell]
                               + b[ell] * sig[k, ell - 1])
        alpha[k] = (a[k] + sig[k + 1, k + 1] / sig[k + 1, k]
                    - sig[k, k] / sig[k, k - 1])
        beta[k] = sig[k + 1, k] / sig[k, k - 1]

    jac = (np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1)
           + np.diag(np.sqrt(beta[1:]), -1))
    x, vecs = np.linalg.eigh(jac)
    w = beta[0] * vecs[0, :] ** 2
    return x, w


# ---------------------------------------------------------------------------
# Coincident-panel reduction
# ---------------------------------------------------------------------------
# Basis factors on a panel of length h in local coordinate t in [0, h]:
# the two hats (ramp down from the start node / ramp up to the end node)
# and their constant derivatives. Encoded as (c0, c1) with value c0 + c1 t.
def basis_factor(kind: str, side: str, h: float) -> tuple[float, float]:
    if kind == "phi":
        return (1.0, -1.0 / h) if side == "down" else (0.0, 1.0 / h)
    if kind == "dphi":
        return (-1.0 / h, 0.0) if side == "down" else (1.0 / h, 0.0)
    raise ValueError(f"unknown basis kind {kind!r}")


def basis_factor_arrays(kind: str, h: np.ndarray):
    """Per-panel (c0, c1) coefficient arrays for both hat sides.

    Returns ((c0_down, c1_down), (c0_up, c1_up)) with each entry shaped
    like h.
    """
    h = np.asarray(h, dtype=float)
    one = np.ones_like(h)
    zero = np.zeros_like(h)
    if kind == "phi":
        return (one, -1.0 / h), (zero, 1.0 / h)
    if kind == "dphi":
        return (-1.0 / h, zero), (1.0 / h, zero)
    raise ValueError(f"unknown basis kind {kind!r}")


def correlation_weight(a, b, h, u: np.ndarray, parity: int) -> np.ndarray:
    """W(u) = int_0^{h-u} [a(t+u) b(t) +- a(t) b(t+u)] dt, exactly.

    a, b are (c0, c1) linear-coefficient pairs (scalars or per-panel
    arrays broadcastable against u along the leading axis); the
    integrand is quadratic in t, so a 2-point Gauss rule on [0, h-u]
    is exact. u may be (..., nq) with h (...,) or scalars.
    """
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    span = (h[..., None] if h.ndim else h) - u
    tg, wg = gauss01(2)
    t = span[..., None] * tg
    w = span[..., None] * wg

    def lin(c, arg):
        c0 = np.asarray(c[0], dtype=float)
        c1 = np.asarray(c[1], dtype=float)
        if c0.ndim:
            c0 = c0[..., None, None]
            c1 = c1[..., None, None]
        return c0 + c1 * arg

    uu = u[..., None]
    fwd = lin(a, t + uu) * lin(b, t)
    rev = lin(a, t) * lin(b, t + uu)
    combo = fwd + rev if parity == 0 else fwd - rev
    return np.sum(w * combo, axis=-1)


class CoincidentRule:
    """Shared node layout for self-interaction integrals on panels.

    Exposes the union of scaled Gauss and log-rule nodes as radii at
    which kernel profiles must be evaluated, and computes
    int_0^h (P(u) + Q(u) ln u) u^upow W(u) du from tabulated P, Q
    values at those nodes.
    """

    def __init__(self, q_gauss: int = 12, q_log: int = 12):
        self.xg, self.wg = gauss01(q_gauss)
        self.xl, self.wl = gauss_log_rule(q_log)
        self.n_gauss = q_gauss

    def radii(self, h: np.ndarray) -> np.ndarray:
        """All evaluation radii for panels of lengths h, shape (N, ng+nl)."""
        h = np.atleast_1d(np.asarray(h, dtype=float))
        return h[:, None] * np.concatenate([self.xg, self.xl])

    def integrate(self, h: np.ndarray, pvals: np.ndarray, qvals: np.ndarray,
                  upow: int, wfun) -> np.ndarray:
        """Vectorized over panels; pvals/qvals shaped like radii(h).

        wfun(u) must evaluate the correlation polynomial W at radii
        u (same shape in/out).
        """
        h = np.atleast_1d(np.asarray(h, dtype=float))
        ng = self.n_gauss
        ug = h[:, None] * self.xg
        ul = h[:, None] * self.xl
        weight_g = h[:, None] * self.wg
        weight_l = h[:, None] * self.wl
        corr_g = wfun(ug) * (ug ** upow if upow else 1.0)
        corr_l = wfun(ul) * (ul ** upow if upow else 1.0)
        p_g = pvals[:, :ng]
        q_g, q_l = qvals[:, :ng], qvals[:, ng:]
        smooth = np.sum(weight_g * p_g * corr_g, axis=1)
        log_gauss = np.log(h) * np.sum(weight_g * q_g * corr_g, axis=1)
        log_sing = -np.sum(weight_l * q_l * corr_l, axis=1)
        return smooth + log_gauss + log_sing


# ---------------------------------------------------------------------------
# Adjacent-panel subdivision
# ---------------------------------------------------------------------------
@lru_cache(maxsize=None)
def graded_rule(levels: int, q: int, ratio: float = 0.5):
    """Composite Gauss nodes on [0, 1], geometrically graded toward 0.

    Cells (0, r^L], (r^L, r^{L-1}], ..., (r, 1] with q Gauss points each;
    returns (nodes, weights) of length (levels + 1) * q. Used on both
    panels of an adjacent pair, measured from the shared node, so the
    corner singularity is resolved superalgebraically except on the
    innermost cell pair, whose relative contribution is O(ratio^{2L}).
    """
    cuts = [0.0] + [ratio ** (levels - j) for j in range(levels + 1)]
    xg, wg = gauss01(q)
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        nodes.append(lo + (hi - lo) * xg)
        weights.append((hi - lo) * wg)
    return np.concatenate(nodes), np.concatenate(weights)
