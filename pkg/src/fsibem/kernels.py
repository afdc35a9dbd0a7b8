"""Fundamental-solution kernels for the coupled Helmholtz/Navier problem.

All kernels are radial combinations of first-kind Hankel functions at the
three wave numbers (acoustic k, shear k_s, compressional k_p):

    greens(a; r)  = (i/4) H_0^(1)(a r)                  [Helmholtz kernel]
    gdiff(r)      = greens(k_s; r) - greens(k_p; r)
    disp tensor   = greens(k_s)/mu * I
                    + (1/(rho w^2)) grad grad gdiff     [Navier kernel]

Every radial profile f(r) used by the assembly is represented as the pair

    f(r) = P(r^2) + Q(r^2) * ln r

with P, Q analytic. The pair form serves two purposes: the singular
quadrature integrates the ln-part with a dedicated rule, and the series
evaluation of P, Q kills the catastrophic cancellation that a naive
Hankel-difference evaluation of gdiff (and especially of its Hessian,
whose 1/r^2 poles cancel between the two wave numbers) suffers at small
k*r. Below ``Z_SWITCH`` the pair is summed from precomputed power-series
coefficients in s = r^2; above, from scipy Hankel evaluations, where the
ln-coefficient Q is obtained by substituting H_n -> (2i/pi) J_n (the only
route by which ln r enters any H_n combination).
"""

import numpy as np
from numpy.polynomial.polynomial import polyval
from scipy.special import hankel1, jv

from .material import MaterialSystem

# Series/Hankel switch on z = (largest participating wave number) * r.
# With 28 terms the alternating series is accurate to ~1e-14 for z <= 4
# (worst-case term amplification there is O(10)); the Hankel branch has
# no cancellation issues for z >= 4.
Z_SWITCH = 4.0
N_SERIES_TERMS = 28

# Below this z the two-wavenumber Hankel differences are meaningless in
# double precision; pointwise evaluators refuse rather than return noise.
COINCIDENCE_Z = 1e-14


class SingularityError(ValueError):
    """Kernel evaluated at coincident points; use the split/limit forms."""


def _harmonic_numbers(m: int) -> np.ndarray:
    h = np.zeros(m)
    h[1:] = np.cumsum(1.0 / np.arange(1, m))
    return h


def _greens_series_coeffs(a: float) -> tuple[np.ndarray, np.ndarray]:
    """(P, Q) series coefficients in s = r^2 for greens(a; r).

    From Y_0(z) = (2/pi)[(ln(z/2) + gamma_E) J_0(z) + sigma(z)] with
    sigma(z) = sum_{m>=1} (-1)^{m+1} h_m (z^2/4)^m / (m!)^2.
    """
    m = np.arange(N_SERIES_TERMS)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, N_SERIES_TERMS))]))
    # c_m = (-1)^m (a^2/4)^m / (m!)^2, evaluated in log space for stability
    c = (-1.0) ** m * np.exp(m * np.log(a * a / 4.0) - 2.0 * log_fact)
    h = _harmonic_numbers(N_SERIES_TERMS)
    q = -c / (2.0 * np.pi)
    p = (0.25j) * c - (np.euler_gamma + np.log(a / 2.0) - h) * c / (2.0 * np.pi)
    return p.astype(complex), q.astype(complex)


def _pair_diff(pa, pb):
    return pa[0] - pb[0], pa[1] - pb[1]


def _radial_derivative_coeffs(p: np.ndarray, q: np.ndarray):
    """Coefficient arrays of f'(r)/r given those of f = P(s) + Q(s) ln r.

    f'(r)/r = 2 P'(s) + Q(s)/s + 2 Q'(s) ln r, valid when Q(0) = 0.
    """
    if q[0] != 0.0:
        raise ValueError("f'(r)/r is not a (P, Q) pair unless Q(0) = 0")
    mm = np.arange(1, len(p))
    pd = np.zeros(len(p) - 1, dtype=complex)
    qd = np.zeros(len(p) - 1, dtype=complex)
    pd[:] = 2.0 * mm * p[1:] + q[1:]
    qd[:] = 2.0 * mm * q[1:]
    return pd, qd


def _radial_aniso_coeffs(p: np.ndarray, q: np.ndarray):
    """Coefficient arrays of f''(r) - f'(r)/r given those of the pair f.

    f'' - f'/r = 4 s P''(s) + 4 Q'(s) - 2 Q(s)/s + 4 s Q''(s) ln r; this
    combination is bounded at r = 0 (limit 2 q_1) although dividing it by
    r^2 would not be, which is why the Hessian is assembled with the unit
    dyad (d d^T / r^2) rather than d d^T.
    """
    if q[0] != 0.0:
        raise ValueError("aniso profile requires Q(0) = 0")
    n = len(p)
    mm = np.arange(n - 1)
    pd = 4.0 * mm * (mm + 1.0) * p[1:] + (4.0 * mm + 2.0) * q[1:]
    qd = 4.0 * mm * (mm + 1.0) * q[1:]
    return pd.astype(complex), qd.astype(complex)


class RadialBatch:
    """Shared-ingredient evaluator for one batch of radii.

    Caches Hankel/Bessel evaluations and the series/Hankel routing masks
    so that the many kernel profiles needed by one assembly pass do not
    recompute them. All profile methods return (P, Q) arrays with
    profile(r) = P + Q * ln r.
    """

    def __init__(self, bundle: "KernelBundle", r: np.ndarray):
        self.bundle = bundle
        self.r = np.asarray(r, dtype=float)
        self.s = self.r * self.r
        kmax_el = max(bundle.material.k_s, bundle.material.k_p)
        self._el_series = kmax_el * self.r < Z_SWITCH
        self._fl_series = bundle.material.k * self.r < Z_SWITCH
        self._cache: dict = {}

    def _cyl(self, fn, order: int, a: float, mask: np.ndarray, key) -> np.ndarray:
        full_key = (key, order, a)
        if full_key not in self._cache:
            out = np.zeros(self.r.shape, dtype=complex)
            sub = ~mask
            if np.any(sub):
                out[sub] = fn(order, a * self.r[sub])
            self._cache[full_key] = out
        return self._cache[full_key]

    def _hankel(self, order, a, mask):
        return self._cyl(hankel1, order, a, mask, "h")

    def _besselj(self, order, a, mask):
        return self._cyl(jv, order, a, mask, "j")

    def _series_pair(self, pcoef, qcoef, mask):
        p = np.zeros(self.r.shape, dtype=complex)
        q = np.zeros(self.r.shape, dtype=complex)
        if np.any(mask):
            sv = self.s[mask]
            p[mask] = polyval(sv, pcoef)
            q[mask] = polyval(sv, qcoef)
        return p, q

    def _logr(self, mask):
        out = np.zeros(self.r.shape)
        if np.any(~mask):
            out[~mask] = np.log(self.r[~mask])
        return out

    def _profile(self, name, a_tag, hankel_eval):
        """Assemble a (P, Q) pair from series (small z) + Hankel (large z).

        ``hankel_eval(sub)`` must return (value, Q) on the sub-batch where
        the Hankel branch applies; P there is value - Q ln r.
        """
        if name in self._cache:
            return self._cache[name]
        mask = self._fl_series if a_tag == "f" else self._el_series
        pcoef, qcoef = self.bundle.series_coeffs[name]
        p, q = self._series_pair(pcoef, qcoef, mask)
        sub = ~mask
        if np.any(sub):
            val, qh = hankel_eval(sub)
            q[sub] = qh
            p[sub] = val - qh * np.log(self.r[sub])
        self._cache[name] = (p, q)
        return p, q

    # -- scalar Helmholtz kernels ------------------------------------------

    def greens_pair(self, tag: str):
        """(i/4) H_0(a r) for a in {k, k_s, k_p} selected by tag f/s/p."""
        a = self.bundle.wavenumber(tag)

        def hankel_eval(sub):
            h0 = self._hankel(0, a, ~sub)[sub]
            j0 = self._besselj(0, a, ~sub)[sub]
            return 0.25j * h0, 0.25j * (2j / np.pi) * j0

        return self._profile("greens_" + tag, tag, hankel_eval)

    def dgreens_over_r(self, tag: str) -> np.ndarray:
        """d/dr of greens(a; r), divided by r. Carries a 1/r^2 pole.

        Only ever used multiplied by (x - y) . n factors, which keep the
        assembled integrands weakly singular; no series/log split needed
        since a single wave number has no cancellation.
        """
        key = "dgor_" + tag
        if key not in self._cache:
            a = self.bundle.wavenumber(tag)
            h1 = hankel1(1, a * self.r)
            self._cache[key] = -0.25j * a * h1 / self.r
        return self._cache[key]

    # -- two-wavenumber difference kernels ---------------------------------

    def gdiff_pair(self):
        """greens(k_s) - greens(k_p); bounded, -> -ln(k_s/k_p)/2pi at r=0."""
        ks, kp = self.bundle.material.k_s, self.bundle.material.k_p

        def hankel_eval(sub):
            mask = ~sub
            h0s = self._hankel(0, ks, mask)[sub]
            h0p = self._hankel(0, kp, mask)[sub]
            j0s = self._besselj(0, ks, mask)[sub]
            j0p = self._besselj(0, kp, mask)[sub]
            return 0.25j * (h0s - h0p), 0.25j * (2j / np.pi) * (j0s - j0p)

        return self._profile("gdiff", "el", hankel_eval)

    def gdiff_slope_pair(self):
        """gdiff'(r) / r; bounded (the 1/r^2 poles cancel)."""
        ks, kp = self.bundle.material.k_s, self.bundle.material.k_p

        def hankel_eval(sub):
            mask = ~sub
            h1s = self._hankel(1, ks, mask)[sub]
            h1p = self._hankel(1, kp, mask)[sub]
            j1s = self._besselj(1, ks, mask)[sub]
            j1p = self._besselj(1, kp, mask)[sub]
            rr = self.r[sub]
            val = -0.25j * (ks * h1s - kp * h1p) / rr
            qh = -0.25j * (2j / np.pi) * (ks * j1s - kp * j1p) / rr
            return val, qh

        return self._profile("gdiff_slope", "el", hankel_eval)

    def gdiff_aniso_pair(self):
        """gdiff''(r) - gdiff'(r)/r, the unit-dyad Hessian factor (bounded)."""
        ks, kp = self.bundle.material.k_s, self.bundle.material.k_p

        def hankel_eval(sub):
            mask = ~sub
            h0s = self._hankel(0, ks, mask)[sub]
            h0p = self._hankel(0, kp, mask)[sub]
            h1s = self._hankel(1, ks, mask)[sub]
            h1p = self._hankel(1, kp, mask)[sub]
            j0s = self._besselj(0, ks, mask)[sub]
            j0p = self._besselj(0, kp, mask)[sub]
            j1s = self._besselj(1, ks, mask)[sub]
            j1p = self._besselj(1, kp, mask)[sub]
            rr = self.r[sub]
            slope = -0.25j * (ks * h1s - kp * h1p) / rr
            val = -0.25j * (ks**2 * h0s - kp**2 * h0p) - 2.0 * slope
            slope_q = -0.25j * (2j / np.pi) * (ks * j1s - kp * j1p) / rr
            qh = -0.25j * (2j / np.pi) * (ks**2 * j0s - kp**2 * j0p) - 2.0 * slope_q
            return val, qh

        return self._profile("gdiff_aniso", "el", hankel_eval)

    # -- displacement-tensor factors: E = iso * I + aniso * (dd^T / r^2) ----

    def disp_iso_pair(self):
        m = self.bundle.material
        gp, gq = self.greens_pair("s")
        sp, sq = self.gdiff_slope_pair()
        inv = 1.0 / m.rho_omega2
        return gp / m.mu + inv * sp, gq / m.mu + inv * sq

    def disp_aniso_pair(self):
        """Coefficient of the unit dyad (d d^T / r^2) in the tensor."""
        inv = 1.0 / self.bundle.material.rho_omega2
        ap, aq = self.gdiff_aniso_pair()
        return inv * ap, inv * aq

    # -- combined values ----------------------------------------------------

    def value(self, pair) -> np.ndarray:
        p, q = pair
        return p + q * self._value_log()

    def _value_log(self):
        if "logr" not in self._cache:
            self._cache["logr"] = np.log(self.r)
        return self._cache["logr"]


class KernelBundle:
    """Pointwise kernel evaluators bound to one material system.

    Vector arguments x, y are shape (..., 2); radial batching is exposed
    through :meth:`batch` for the assembly engine.
    """

    def __init__(self, material: MaterialSystem):
        self.material = material
        m = material
        g_s = _greens_series_coeffs(m.k_s)
        g_p = _greens_series_coeffs(m.k_p)
        g_f = _greens_series_coeffs(m.k)
        gd = _pair_diff(g_s, g_p)
        slope = _radial_derivative_coeffs(*gd)
        aniso = _radial_aniso_coeffs(*gd)
        self.series_coeffs = {
            "greens_f": g_f,
            "greens_s": g_s,
            "greens_p": g_p,
            "gdiff": gd,
            "gdiff_slope": slope,
            "gdiff_aniso": aniso,
        }

    def wavenumber(self, tag: str) -> float:
        return {"f": self.material.k, "s": self.material.k_s,
                "p": self.material.k_p}[tag]

    def batch(self, r: np.ndarray) -> RadialBatch:
        return RadialBatch(self, r)

    # -- pointwise API -------------------------------------------------------

    def _separation(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = np.linalg.norm(d, axis=-1)
        kmax = max(self.material.k_s, self.material.k)
        if np.any(kmax * r < COINCIDENCE_Z):
            raise SingularityError("kernel evaluated at coincident points")
        return d, r

    def greens(self, tag: str, x, y) -> np.ndarray:
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r))
        out = b.value(b.greens_pair(tag))
        return out.reshape(np.shape(r))

    def greens_diff(self, x, y) -> np.ndarray:
        """gdiff = greens(k_s) - greens(k_p); continuous across r = 0."""
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r))
        return b.value(b.gdiff_pair()).reshape(np.shape(r))

    def greens_diff_limit(self) -> complex:
        """Coincidence limit of gdiff: -(1/2pi) ln(k_s/k_p)."""
        return complex(-np.log(self.material.k_s / self.material.k_p)
                       / (2.0 * np.pi))

    def grad_x_greens(self, tag: str, x, y) -> np.ndarray:
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r).ravel())
        g = b.dgreens_over_r(tag).reshape(np.shape(r) + (1,))
        return g * d

    def grad_x_greens_diff(self, x, y) -> np.ndarray:
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r).ravel())
        slope = b.value(b.gdiff_slope_pair()).reshape(np.shape(r) + (1,))
        return slope * d

    def hess_greens_diff(self, x, y) -> np.ndarray:
        """grad_x grad_x gdiff as shape (..., 2, 2)."""
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r).ravel())
        slope = b.value(b.gdiff_slope_pair()).reshape(np.shape(r))
        aniso = b.value(b.gdiff_aniso_pair()).reshape(np.shape(r))
        dyad = (d[..., :, None] * d[..., None, :]) / (r * r)[..., None, None]
        return slope[..., None, None] * np.eye(2) + aniso[..., None, None] * dyad

    def displacement_tensor(self, x, y) -> np.ndarray:
        """Fundamental displacement tensor of the solid, shape (..., 2, 2)."""
        d, r = self._separation(x, y)
        b = self.batch(np.atleast_1d(r).ravel())
        iso = b.value(b.disp_iso_pair()).reshape(np.shape(r))
        aniso = b.value(b.disp_aniso_pair()).reshape(np.shape(r))
        dyad = (d[..., :, None] * d[..., None, :]) / (r * r)[..., None, None]
        return iso[..., None, None] * np.eye(2) + aniso[..., None, None] * dyad

    # -- traction of the displacement tensor --------------------------------

    def traction_split_of_displacement_tensor(self, x, y, n_x) -> dict:
        """The three weakly-singular pieces of the x-traction of the tensor.

        Returns {"term_outer": -n_x grad_x^T gdiff,
                 "term_normal": (d greens_s / d n_x) I,
                 "term_tangential": A d/ds_x [2 mu E - greens_s I]},
        whose sum equals :meth:`traction_of_displacement_tensor`. The
        tangential piece is the one the Galerkin assembly moves onto the
        test functions by integration by parts.
        """
        from .mesh import ROTATION

        n_x = np.asarray(n_x, dtype=float).reshape(2)
        t_x = ROTATION @ n_x
        d, r = self._separation(x, y)
        d = np.asarray(d, dtype=float).reshape(2)
        r = float(r)
        e_hat = d / r
        b = self.batch(np.array([r]))
        m = self.material

        grad_gd = complex(b.value(b.gdiff_slope_pair())[0]) * d
        term_outer = -np.outer(n_x, grad_gd)

        dgs = complex(b.dgreens_over_r("s")[0])
        term_normal = dgs * (d @ n_x) * np.eye(2)

        # core = c1(r) I + c2(r) e e^T with c1 = 2 mu iso - greens_s,
        # c2 = 2 mu aniso/(rho w^2); tangential derivative via
        # grad(e e^T) = (t e^T + e t^T - 2 (e.t) e e^T)/r along t.
        s, logr = r * r, np.log(r)
        iso_p, iso_q = self._pair_coeffs_disp_iso()
        gs_p, gs_q = self.series_coeffs["greens_s"]
        an_p, an_q = self.series_coeffs["gdiff_aniso"]
        self._require_series_radius(r)
        inv = 1.0 / m.rho_omega2
        c1 = (2.0 * m.mu * _pair_value(iso_p, iso_q, s, logr)
              - _pair_value(gs_p, gs_q, s, logr))
        c2 = 2.0 * m.mu * inv * _pair_value(an_p, an_q, s, logr)
        dc1 = (2.0 * m.mu * _pair_radial_derivative(iso_p, iso_q, r, s, logr)
               - _pair_radial_derivative(gs_p, gs_q, r, s, logr))
        dc2 = 2.0 * m.mu * inv * _pair_radial_derivative(an_p, an_q, r, s, logr)
        et = e_hat @ t_x
        eeT = np.outer(e_hat, e_hat)
        mix = np.outer(t_x, e_hat) + np.outer(e_hat, t_x)
        d_core = (dc1 * et * np.eye(2) + dc2 * et * eeT
                  + c2 * (mix - 2.0 * et * eeT) / r)
        term_tangential = ROTATION @ d_core
        return {
            "term_outer": term_outer[None, ...],
            "term_normal": term_normal[None, ...],
            "term_tangential": term_tangential[None, ...],
        }

    def _pair_coeffs_disp_iso(self):
        m = self.material
        gp, gq = self.series_coeffs["greens_s"]
        sp, sq = self.series_coeffs["gdiff_slope"]
        inv = 1.0 / m.rho_omega2
        n = min(len(gp), len(sp))
        return gp[:n] / m.mu + inv * sp[:n], gq[:n] / m.mu + inv * sq[:n]

    def _require_series_radius(self, r: float) -> None:
        if max(self.material.k_s, self.material.k_p) * r >= Z_SWITCH:
            raise SingularityError(
                "traction evaluators only support k*r inside the series "
                f"radius {Z_SWITCH}; evaluate at smaller separations"
            )

    def traction_of_displacement_tensor(self, x, y, n_x) -> np.ndarray:
        """Direct x-traction of the displacement tensor (columnwise).

        Independent evaluation path used to validate the weakly-singular
        split: applies lam (div) n + 2 mu d/dn + mu n x curl to each
        column via the analytic radial derivatives of the tensor.
        """
        n_x = np.asarray(n_x, dtype=float).reshape(2)
        d, r = self._separation(x, y)
        d = np.asarray(d, dtype=float).reshape(2)
        r = float(r)
        e_hat = d / r
        m = self.material
        s, logr = r * r, np.log(r)
        self._require_series_radius(r)
        iso_p, iso_q = self._pair_coeffs_disp_iso()
        an_p, an_q = self.series_coeffs["gdiff_aniso"]
        inv = 1.0 / m.rho_omega2
        iso_d = _pair_radial_derivative(iso_p, iso_q, r, s, logr)
        a_val = inv * _pair_value(an_p, an_q, s, logr)
        a_d = inv * _pair_radial_derivative(an_p, an_q, r, s, logr)

        # dE[l, i, j] = d/dx_l E_ij with E = iso I + a_val e e^T
        eye = np.eye(2)
        dE = np.zeros((2, 2, 2), dtype=complex)
        for ell in range(2):
            unit = eye[ell]
            d_eeT = (np.outer(unit, e_hat) + np.outer(e_hat, unit)
                     - 2.0 * e_hat[ell] * np.outer(e_hat, e_hat)) / r
            dE[ell] = (iso_d * e_hat[ell] * eye
                       + a_d * e_hat[ell] * np.outer(e_hat, e_hat)
                       + a_val * d_eeT)
        out = np.zeros((2, 2), dtype=complex)
        for jcol in range(2):
            grad_u = dE[:, :, jcol]  # grad_u[l, i] = d_l u_i
            div_u = grad_u[0, 0] + grad_u[1, 1]
            curl_u = grad_u[0, 1] - grad_u[1, 0]
            out[:, jcol] = (m.lam * div_u * n_x
                            + 2.0 * m.mu * (n_x @ grad_u)
                            + m.mu * curl_u * np.array([n_x[1], -n_x[0]]))
        return out


def _pair_value(p: np.ndarray, q: np.ndarray, s: float, logr: float) -> complex:
    return complex(polyval(s, p) + polyval(s, q) * logr)


def _pair_radial_derivative(p: np.ndarray, q: np.ndarray, r: float, s: float,
                            logr: float) -> complex:
    """f'(r) = 2 r (P'(s) + Q'(s) ln r) + Q(s)/r for f = P + Q ln r."""
    dp = np.arange(1, len(p)) * p[1:]
    dq = np.arange(1, len(q)) * q[1:]
    return complex(2.0 * r * (polyval(s, dp) + polyval(s, dq) * logr)
                   + polyval(s, q) / r)


def helmholtz_greens(k: float, x, y) -> np.ndarray:
    """Outgoing 2D Helmholtz fundamental solution (i/4) H_0^(1)(k|x-y|)."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(k * r < COINCIDENCE_Z):
        raise SingularityError("kernel evaluated at coincident points")
    return 0.25j * hankel1(0, k * r)


def grad_x_helmholtz_greens(k: float, x, y) -> np.ndarray:
    """Gradient in x of the Helmholtz fundamental solution, shape (..., 2)."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(k * r < COINCIDENCE_Z):
        raise SingularityError("kernel evaluated at coincident points")
    return (-0.25j * k * hankel1(1, k * r) / r)[..., None] * d
