"""Analytic series solution for plane-wave scattering by an elastic disc.

The scattered pressure and the solid displacement potentials are
expanded in cylindrical modes,

    p(r, th)   = sum_n  a_n H_n^(1)(k r)   cos(n th)      (r >= R0)
    phi(r, th) = sum_n  b_n J_n(k_p r)     cos(n th)      (r <= R0)
    psi(r, th) = sum_n  c_n J_n(k_s r)     sin(n th),

with the displacement recovered as u = grad phi + curl(psi z), i.e.
u_r = phi_r + psi_th / r and u_th = phi_th / r - psi_r. Enforcing the
two interface conditions (normal-velocity match and pressure load with
zero shear traction) per mode yields a 3x3 system for (a_n, b_n, c_n)
whose right-hand side carries the Jacobi-Anger coefficients
eps_n i^n of the incident wave.

The same modal stress formulas evaluated at arbitrary radius provide an
independent check: the transmission residual test recomputes the
incident data from the closed-form exponential, so any wrong matrix
entry, phase or normalization shows up as a nonzero residual.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import hankel1, jv

from .material import MaterialSystem, PlaneWave

TAIL_CRITERION = 1e-14
DEFAULT_N_MAX = 40
HARD_N_CAP = 220

JONES_REFINE_TOL = 1e-4
JONES_DEPTH = 1e-6
DEDUP_TOL = 1e-6


class ResonanceError(RuntimeError):
    """A mode system is singular: traction-free oscillation frequency."""


def _eps(n: int) -> float:
    return 1.0 if n == 0 else 2.0


def _jn(n, x):
    """J_n with integer-order reflection for n = -1."""
    if n >= 0:
        return jv(n, x)
    return (-1.0) ** (-n) * jv(-n, x)


def _hn(n, x):
    if n >= 0:
        return hankel1(n, x)
    return (-1.0) ** (-n) * hankel1(-n, x)


@dataclass
class ModeSystem:
    """Per-mode 3x3 interface system; unknowns ordered (a_n, b_n, c_n)."""

    n: int
    matrix: np.ndarray
    rhs: np.ndarray
    coeffs: np.ndarray | None = None

    @property
    def det_scaled(self) -> float:
        """|det| of the column-normalized matrix (in [0, 1]).

        Column normalization removes the wildly different magnitudes of
        the Hankel and Bessel columns at high mode index, so this value
        is small only when the columns are genuinely near-dependent,
        i.e. at a traction-free-oscillation frequency.
        """
        norms = np.linalg.norm(self.matrix, axis=0)
        bound = np.prod(np.maximum(norms, np.finfo(float).tiny))
        return float(abs(np.linalg.det(self.matrix)) / bound)


def mode_matrix(n: int, material: MaterialSystem, radius: float) -> ModeSystem:
    """Build the unsolved 3x3 interface system of mode n.

    Rows: (1) radial velocity match scaled by 1/k, (2) vanishing shear
    traction, (3) normal stress balanced by the total pressure. The
    (2, 1) entry and the second right-hand entry are structural zeros:
    the fluid exerts no shear.
    """
    if n < 0:
        raise ValueError(f"mode index must be >= 0, got {n}")
    m = material
    k, ks, kp, mu = m.k, m.k_s, m.k_p, m.mu
    r0 = radius
    zf, zp, zs = k * r0, kp * r0, ks * r0

    mat = np.zeros((3, 3), dtype=complex)
    mat[0, 0] = -_hn(n - 1, zf) + (n / zf) * _hn(n, zf)
    mat[0, 1] = (m.eta * kp / k) * (_jn(n - 1, zp) - (n / zp) * _jn(n, zp))
    mat[0, 2] = (m.eta * n / zf) * _jn(n, zs)
    mat[1, 0] = 0.0
    mat[1, 1] = (2.0 * mu * n * kp / r0) * _jn(n - 1, zp) \
        - (2.0 * mu * (n * n + n) / r0**2) * _jn(n, zp)
    mat[1, 2] = ((2.0 * mu * (n * n + n) - mu * ks**2 * r0**2) / r0**2) \
        * _jn(n, zs) - (2.0 * mu * ks / r0) * _jn(n - 1, zs)
    mat[2, 0] = _hn(n, zf)
    mat[2, 1] = ((2.0 * mu * (n * n + n) - mu * ks**2 * r0**2) / r0**2) \
        * _jn(n, zp) - (2.0 * mu * kp / r0) * _jn(n - 1, zp)
    mat[2, 2] = (2.0 * mu * n * ks / r0) * _jn(n - 1, zs) \
        - (2.0 * mu * (n * n + n) / r0**2) * _jn(n, zs)

    amp = _eps(n) * 1j**n
    rhs = np.array([
        amp * (_jn(n - 1, zf) - (n / zf) * _jn(n, zf)),
        0.0,
        -amp * _jn(n, zf),
    ], dtype=complex)
    return ModeSystem(n=n, matrix=mat, rhs=rhs)


@dataclass
class OracleSolution:
    """Solved truncated mode expansion for one scattering scenario."""

    material: MaterialSystem
    radius: float
    wave: PlaneWave
    modes: list[ModeSystem]
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    theta0: float
    tail: float = field(default=0.0)

    @property
    def n_modes(self) -> int:
        return len(self.a)


def solve_oracle(material: MaterialSystem, radius: float, wave: PlaneWave,
                 n_max: int | None = None) -> OracleSolution:
    """Solve modes until the pressure coefficients have decayed to the tail.

    Raises ResonanceError when a mode system is numerically singular,
    which happens exactly at the traction-free-oscillation frequencies.
    """
    if abs(wave.wavenumber - material.k) > 1e-9 * material.k:
        raise ValueError("wave.wavenumber inconsistent with material.k")
    theta0 = float(np.arctan2(wave.direction[1], wave.direction[0]))

    n_req = DEFAULT_N_MAX if n_max is None else int(n_max)
    n_cur = max(n_req, 6)
    while True:
        modes = []
        coeffs = np.zeros((n_cur + 1, 3), dtype=complex)
        for n in range(n_cur + 1):
            ms = mode_matrix(n, material, radius)
            if _is_resonant_mode(n, material, radius):
                raise ResonanceError(
                    f"mode {n} is singular at omega = {material.omega}: "
                    "traction-free oscillation (no unique scattering solution)")
            ms.coeffs = np.linalg.solve(ms.matrix, ms.rhs)
            coeffs[n] = ms.coeffs
            modes.append(ms)
        scale = np.max(np.abs(coeffs[:, 0]))
        tail = abs(coeffs[-1, 0]) / scale if scale > 0 else 0.0
        if tail < TAIL_CRITERION or (n_max is not None and n_cur >= n_req) \
                or n_cur >= HARD_N_CAP:
            break
        n_cur += max(10, n_cur // 2)
    return OracleSolution(material=material, radius=radius, wave=wave,
                          modes=modes, a=coeffs[:, 0], b=coeffs[:, 1],
                          c=coeffs[:, 2], theta0=theta0, tail=float(tail))


# ---------------------------------------------------------------------------
# Field evaluation
# ---------------------------------------------------------------------------
def _mode_tables(sol: OracleSolution, r: np.ndarray, what: str):
    """J/H tables over points x modes; r is flattened beforehand."""
    ns = np.arange(sol.n_modes)
    if what == "fluid":
        return hankel1(ns[None, :], sol.material.k * r[:, None])
    if what == "jp":
        return jv(ns[None, :], sol.material.k_p * r[:, None])
    if what == "js":
        return jv(ns[None, :], sol.material.k_s * r[:, None])
    raise ValueError(what)


def eval_scattered_pressure(sol: OracleSolution, r, theta) -> np.ndarray:
    """Scattered pressure at polar points (r >= radius)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    if np.any(r < sol.radius * (1.0 - 1e-12)):
        raise ValueError("scattered pressure is defined outside the disc")
    ns = np.arange(sol.n_modes)
    hn = _mode_tables(sol, r, "fluid")
    cosm = np.cos(np.outer(theta - sol.theta0, ns))
    return (hn * cosm) @ sol.a


def eval_pressure_radial_derivative(sol: OracleSolution, r, theta) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    k = sol.material.k
    ns = np.arange(sol.n_modes)
    z = k * r[:, None]
    dh = hankel1(ns[None, :] - 1, z) - (ns[None, :] / z) * hankel1(ns[None, :], z)
    dh[:, 0] = -hankel1(1, z[:, 0])
    cosm = np.cos(np.outer(theta - sol.theta0, ns))
    return k * (dh * cosm) @ sol.a


def eval_displacement(sol: OracleSolution, r, theta) -> np.ndarray:
    """Cartesian displacement at polar points (r <= radius), shape (..., 2)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape).copy()
    if np.any(r > sol.radius * (1.0 + 1e-12)):
        raise ValueError("displacement is defined inside the disc")
    m = sol.material
    ns = np.arange(sol.n_modes)
    th = theta - sol.theta0

    tiny = r < 1e-12 * sol.radius
    r_safe = np.where(tiny, sol.radius, r)

    zp = m.k_p * r_safe[:, None]
    zs = m.k_s * r_safe[:, None]
    jp = jv(ns[None, :], zp)
    js = jv(ns[None, :], zs)
    djp = jv(ns[None, :] - 1, zp) - (ns[None, :] / zp) * jp
    djp[:, 0] = -jv(1, zp[:, 0])
    djs = jv(ns[None, :] - 1, zs) - (ns[None, :] / zs) * js
    djs[:, 0] = -jv(1, zs[:, 0])

    cosm = np.cos(np.outer(th, ns))
    sinm = np.sin(np.outer(th, ns))
    inv_r = 1.0 / r_safe[:, None]
    u_r = (m.k_p * djp * cosm) @ sol.b + (ns[None, :] * inv_r * js * cosm) @ sol.c
    u_t = -(ns[None, :] * inv_r * jp * sinm) @ sol.b - (m.k_s * djs * sinm) @ sol.c

    if np.any(tiny):
        # only the n = 1 mode survives at the center
        amp = 0.5 * (sol.b[1] * m.k_p + sol.c[1] * m.k_s) if sol.n_modes > 1 \
            else 0.0
        u_r = np.where(tiny, amp * np.cos(th), u_r)
        u_t = np.where(tiny, -amp * np.sin(th), u_t)

    ca, sa = np.cos(theta), np.sin(theta)
    ux = u_r * ca - u_t * sa
    uy = u_r * sa + u_t * ca
    return np.stack([ux, uy], axis=-1)


def eval_solid_stresses(sol: OracleSolution, r, theta):
    """(sigma_rr, sigma_rtheta) of the solid at polar points, r <= radius."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    m = sol.material
    mu, ks, kp = m.mu, m.k_s, m.k_p
    ns = np.arange(sol.n_modes)
    th = theta - sol.theta0
    zp = kp * r[:, None]
    zs = ks * r[:, None]
    jp = jv(ns[None, :], zp)
    js = jv(ns[None, :], zs)
    jpm = jv(ns[None, :] - 1, zp)
    jsm = jv(ns[None, :] - 1, zs)
    jpm[:, 0] = -jv(1, zp[:, 0])
    jsm[:, 0] = -jv(1, zs[:, 0])
    rr = r[:, None]
    nn = ns[None, :]
    quad = 2.0 * mu * (nn * nn + nn)

    srr_b = ((quad - mu * ks**2 * rr**2) / rr**2) * jp - (2.0 * mu * kp / rr) * jpm
    srr_c = (2.0 * mu * nn * ks / rr) * jsm - (quad / rr**2) * js
    srt_b = -((2.0 * mu * nn * kp / rr) * jpm - (quad / rr**2) * jp)
    srt_c = -(((quad - mu * ks**2 * rr**2) / rr**2) * js
              - (2.0 * mu * ks / rr) * jsm)

    cosm = np.cos(np.outer(th, ns))
    sinm = np.sin(np.outer(th, ns))
    sigma_rr = (srr_b * cosm) @ sol.b + (srr_c * cosm) @ sol.c
    sigma_rt = (srt_b * sinm) @ sol.b + (srt_c * sinm) @ sol.c
    return sigma_rr, sigma_rt


def transmission_residuals(sol: OracleSolution, n_points: int = 100) -> dict:
    """Relative interface residuals of the solved series.

    The incident data are evaluated from the closed-form plane wave (not
    from their Jacobi-Anger series), so these residuals check every mode
    matrix entry, the eps_n i^n normalization and the solve itself.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    r0 = sol.radius
    m = sol.material
    pts = r0 * np.column_stack([np.cos(theta), np.sin(theta)])
    normal = pts / r0

    p_inc = sol.wave.pressure(pts)
    grad_inc = sol.wave.gradient(pts)
    dp_inc_dn = np.einsum("ij,ij->i", grad_inc, normal)

    p_sc = eval_scattered_pressure(sol, np.full_like(theta, r0), theta)
    dp_sc = eval_pressure_radial_derivative(sol, np.full_like(theta, r0), theta)
    u = eval_displacement(sol, np.full_like(theta, r0), theta)
    u_n = np.einsum("ij,ij->i", u, normal)
    srr, srt = eval_solid_stresses(sol, np.full_like(theta, r0), theta)

    kinematic = m.eta * u_n - (dp_sc + dp_inc_dn)
    dynamic = srr + (p_sc + p_inc)
    scale_kin = np.max(np.abs(dp_sc + dp_inc_dn)) + np.finfo(float).tiny
    scale_dyn = np.max(np.abs(p_sc + p_inc)) + np.finfo(float).tiny
    return {
        "kinematic": float(np.max(np.abs(kinematic)) / scale_kin),
        "traction_normal": float(np.max(np.abs(dynamic)) / scale_dyn),
        "traction_shear": float(np.max(np.abs(srt)) / scale_dyn),
    }


# ---------------------------------------------------------------------------
# Spectral finders
# ---------------------------------------------------------------------------
def _mode_det(n: int, material: MaterialSystem, radius: float,
              omega: float) -> float:
    return float(abs(np.linalg.det(
        mode_matrix(n, material.with_omega(omega), radius).matrix)))


def _is_resonant_mode(n: int, material: MaterialSystem, radius: float,
                      rel_step: float = 1e-3, depth: float = 1e-8) -> bool:
    """True when |det| at omega is a deep relative dip vs. nearby omegas.

    |det E_n| has no absolute scale (at high mode index it is uniformly
    tiny through the Bessel columns), so singularity must be judged
    against the determinant's own neighbourhood in frequency.
    """
    w = material.omega
    f0 = _mode_det(n, material, radius, w)
    ref = min(_mode_det(n, material, radius, w * (1.0 - rel_step)),
              _mode_det(n, material, radius, w * (1.0 + rel_step)))
    return f0 < depth * ref


def _golden_refine(fn, lo, hi, tol):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def find_jones_frequencies(material: MaterialSystem, radius: float,
                           omega_range, n_max: int = 30,
                           scan_step: float = 0.002) -> list[float]:
    """Frequencies where some mode system becomes singular.

    Per mode, scans |det E_n| over the frequency grid, refines local
    minima by golden section, and keeps only dips at least JONES_DEPTH
    below the determinant values 0.1 away on either side; the depth
    criterion is relative because |det E_n| has no absolute scale.
    """
    lo, hi = float(omega_range[0]), float(omega_range[-1])
    if hi <= lo:
        return []
    omegas = np.arange(lo, hi + 0.5 * scan_step, scan_step)
    out = []
    for n in range(n_max + 1):
        vals = np.array([_mode_det(n, material, radius, w) for w in omegas])
        for i in range(1, len(omegas) - 1):
            if not (vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]):
                continue
            # refine far below the reporting tolerance: the depth test
            # needs |det| evaluated essentially at the bottom of the dip
            w = _golden_refine(
                lambda x: _mode_det(n, material, radius, x),
                omegas[i - 1], omegas[i + 1], 1e-9)
            f0 = _mode_det(n, material, radius, w)
            ref = min(
                _mode_det(n, material, radius, max(w - 0.1, 1e-12)),
                _mode_det(n, material, radius, w + 0.1))
            if f0 < JONES_DEPTH * ref:
                out.append(w)
    merged: list[float] = []
    for w in sorted(out):
        if not merged or abs(w - merged[-1]) > DEDUP_TOL:
            merged.append(w)
    return merged


def find_neumann_eigenfrequencies(k_of_omega, radius: float, omega_range,
                                  n_max: int = 15,
                                  scan_step: float = 0.002) -> list[float]:
    """Frequencies where J_n'(k(omega) * radius) vanishes for some n <= n_max.

    These are the interior Laplace-Neumann eigenfrequencies that spoil
    unique solvability of the direct formulation only.
    """
    from scipy.optimize import brentq

    lo, hi = float(omega_range[0]), float(omega_range[-1])
    if hi <= lo:
        return []
    omegas = np.arange(lo, hi + 0.5 * scan_step, scan_step)
    roots = []
    for n in range(n_max + 1):
        vals = _jnprime(n, np.array([k_of_omega(w) * radius for w in omegas]))
        for i in range(len(omegas) - 1):
            va, vb = vals[i], vals[i + 1]
            if va == 0.0:
                roots.append(float(omegas[i]))
            elif va * vb < 0.0:
                roots.append(float(brentq(
                    lambda w: float(_jnprime(n, np.array(
                        [k_of_omega(w) * radius]))[0]),
                    omegas[i], omegas[i + 1], xtol=1e-12)))
    roots.sort()
    merged: list[float] = []
    for w in roots:
        if not merged or abs(w - merged[-1]) > DEDUP_TOL:
            merged.append(w)
    return merged


def _jnprime(n, x):
    if n == 0:
        return -jv(1, x)
    return jv(n - 1, x) - (n / x) * jv(n, x)
