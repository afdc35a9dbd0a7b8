"""Physical parameters of the coupled fluid-solid scattering problem.

Holds the Lame constants, densities, sound speed and angular frequency,
and derives the three wave numbers

    k   = omega / c                       (acoustic)
    k_s = omega * sqrt(rho / mu)          (shear)
    k_p = omega * sqrt(rho / (lam + 2mu)) (compressional)

together with the coupling factor eta = rho_f * omega**2 that ties the
normal displacement to the pressure's normal derivative on the interface.
All quantities are SI.
"""

from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """A physical parameter violates its sign or consistency constraint."""


def _require_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class MaterialSystem:
    """Immutable bundle of material constants and derived wave numbers.

    Parameters
    ----------
    lam, mu : float
        Lame constants [Pa]; require mu > 0 and lam + mu > 0.
    rho : float
        Solid density [kg/m^3].
    rho_f : float
        Fluid density [kg/m^3].
    c : float
        Fluid sound speed [m/s].
    omega : float
        Angular frequency [rad/s].
    """

    lam: float
    mu: float
    rho: float
    rho_f: float
    c: float
    omega: float
    k: float = field(init=False)
    k_s: float = field(init=False)
    k_p: float = field(init=False)
    eta: float = field(init=False)

    def __post_init__(self) -> None:
        _require_positive("mu", self.mu)
        if not np.isfinite(self.lam) or self.lam + self.mu <= 0.0:
            raise ParameterError(
                f"lam + mu must be positive, got lam={self.lam}, mu={self.mu}"
            )
        _require_positive("rho", self.rho)
        _require_positive("rho_f", self.rho_f)
        _require_positive("c", self.c)
        _require_positive("omega", self.omega)
        object.__setattr__(self, "k", self.omega / self.c)
        object.__setattr__(self, "k_s", self.omega * np.sqrt(self.rho / self.mu))
        object.__setattr__(
            self, "k_p", self.omega * np.sqrt(self.rho / (self.lam + 2.0 * self.mu))
        )
        object.__setattr__(self, "eta", self.rho_f * self.omega**2)

    @property
    def rho_omega2(self) -> float:
        """rho * omega^2, the inertia factor in the solid wave operator."""
        return self.rho * self.omega**2

    def with_omega(self, omega: float) -> "MaterialSystem":
        """Same material constants at a different angular frequency."""
        return MaterialSystem(lam=self.lam, mu=self.mu, rho=self.rho,
                              rho_f=self.rho_f, c=self.c, omega=omega)


def derive_wavenumbers(lam: float, mu: float, rho: float, rho_f: float,
                       c: float, omega: float) -> MaterialSystem:
    """Validate parameters and populate the derived wave numbers."""
    return MaterialSystem(lam=lam, mu=mu, rho=rho, rho_f=rho_f, c=c, omega=omega)


def material_from_wavespeeds(c_s: float, c_p: float, rho: float, rho_f: float,
                             c: float, omega: float) -> MaterialSystem:
    """Build a MaterialSystem from shear/compressional wave speeds.

    Inverts c_s = sqrt(mu/rho) and c_p = sqrt((lam + 2mu)/rho). Requires
    c_p > c_s * sqrt(2) so the implied lam + mu stays positive.
    """
    _require_positive("c_s", c_s)
    _require_positive("c_p", c_p)
    _require_positive("rho", rho)
    mu = rho * c_s**2
    lam = rho * c_p**2 - 2.0 * mu
    return MaterialSystem(lam=lam, mu=mu, rho=rho, rho_f=rho_f, c=c, omega=omega)


@dataclass(frozen=True)
class PlaneWave:
    """Unit-amplitude plane pressure wave exp(i k x.d).

    Parameters
    ----------
    direction : ndarray, shape (2,)
        Propagation direction d; normalized on construction.
    wavenumber : float
        Acoustic wave number k > 0.
    """

    direction: np.ndarray
    wavenumber: float

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=float).reshape(2)
        norm = np.linalg.norm(d)
        if norm == 0.0 or not np.isfinite(norm):
            raise ParameterError(f"direction must be a nonzero 2-vector, got {d}")
        object.__setattr__(self, "direction", d / norm)
        _require_positive("wavenumber", self.wavenumber)

    def pressure(self, x: np.ndarray) -> np.ndarray:
        """p_inc at points x, shape (..., 2) -> (...)."""
        x = np.asarray(x, dtype=float)
        phase = self.wavenumber * (x @ self.direction)
        return np.exp(1j * phase)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """grad p_inc = i k d p_inc, shape (..., 2)."""
        p = self.pressure(x)
        return 1j * self.wavenumber * p[..., None] * self.direction


def incident_trace(wave: PlaneWave, x: np.ndarray, n: np.ndarray):
    """Incident Cauchy data at a boundary point.

    Parameters
    ----------
    wave : PlaneWave
    x : ndarray, shape (2,)
        Evaluation point.
    n : ndarray, shape (2,)
        Unit normal (|n| = 1 expected).

    Returns
    -------
    (p_inc, dp_inc_dn, grad_p_inc) : (complex, complex, ndarray(2,) complex)
    """
    x = np.asarray(x, dtype=float).reshape(2)
    n = np.asarray(n, dtype=float).reshape(2)
    p = complex(wave.pressure(x))
    grad = 1j * wave.wavenumber * p * wave.direction
    return p, complex(grad @ n), grad
