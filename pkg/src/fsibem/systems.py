"""Coupled block systems for the three boundary-integral formulations.

Unknown layout is always [vector dof (2N, interleaved per node) | scalar
dof (N)]. The direct and Burton-Miller systems solve for the physical
traces (displacement, scattered pressure); the indirect system solves
for layer densities that only become fields through the representation
formulas.

Incident Cauchy data enter exactly as interpolated nodal values: b1
holds the incident pressure at the nodes and b2 its gradient, and the
right-hand sides apply the same operator blocks to them that appear in
the matrices.
"""

from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .assembly import QuadConfig, assemble_operators
from .kernels import KernelBundle
from .material import MaterialSystem, PlaneWave
from .mesh import BoundaryMesh

FORMULATIONS = ("direct", "indirect", "burton_miller")

# Natural-log depth corresponding to two decades of |det|; a grid point
# qualifies as a resonance dip only if it undercuts the local median by
# at least this much.
DIP_DEPTH = 2.0 * np.log(10.0)
DIP_WINDOW = 0.2

PIVOT_BREAKDOWN = 1e-13
COND_WARN = 1e6


class NearSingularSystemError(RuntimeError):
    """The block system is numerically singular (resonant frequency)."""


@dataclass
class BlockSystem:
    formulation: str
    matrix: np.ndarray
    rhs: np.ndarray
    mesh: BoundaryMesh
    material: MaterialSystem
    wave: PlaneWave
    beta: complex | None = None

    @property
    def unknown_semantics(self) -> str:
        return "densities" if self.formulation == "indirect" else "traces"


@dataclass
class TraceSolution:
    """Physical boundary traces at the mesh nodes."""

    u_nodes: np.ndarray  # (N, 2) complex displacement trace [m]
    p_nodes: np.ndarray  # (N,) complex scattered pressure trace [Pa]
    mesh: BoundaryMesh
    metadata: dict = field(default_factory=dict)


@dataclass
class DensitySolution:
    """Layer densities of the indirect ansatz (not physical traces)."""

    v_nodes: np.ndarray
    psi_nodes: np.ndarray
    mesh: BoundaryMesh
    metadata: dict = field(default_factory=dict)


def incident_nodal_data(mesh: BoundaryMesh, wave: PlaneWave):
    """(b1, b2): incident pressure and its gradient at the nodes."""
    b1 = wave.pressure(mesh.nodes)
    b2 = wave.gradient(mesh.nodes).reshape(-1)
    return b1, b2


_DIRECT_OPS = ("solid_hyper_b", "solid_double_adj_normal", "normal_mass",
               "fluid_double_adj_row", "fluid_hyper")
_BM_EXTRA = ("fluid_single_normal_row", "fluid_double", "mass")
_INDIRECT_EXTRA = ("fluid_single_normal_dyad", "fluid_double_normal_col",
                   "solid_double_normal_row", "solid_single_normal_scalar")


def operator_names_for(formulations) -> set:
    names = set()
    for f in formulations:
        names.update(_DIRECT_OPS)
        if f == "burton_miller":
            names.update(_BM_EXTRA)
        elif f == "indirect":
            names.update(_INDIRECT_EXTRA)
    return names


def _blocks(ops):
    return {name: op.data for name, op in ops.items()}


def build_direct(mesh: BoundaryMesh, material: MaterialSystem, wave: PlaneWave,
                 config: QuadConfig | None = None, ops: dict | None = None
                 ) -> BlockSystem:
    """Trace system: hypersingular rows coupled through the normal."""
    if ops is None:
        ops = assemble_operators(mesh, material, operator_names_for(["direct"]),
                                 config)
    b = _blocks(ops)
    return _assemble_direct_like(mesh, material, wave, b, beta=None)


def build_burton_miller(mesh: BoundaryMesh, material: MaterialSystem,
                        wave: PlaneWave, beta: complex | None = None,
                        config: QuadConfig | None = None,
                        ops: dict | None = None) -> BlockSystem:
    """Direct system with the complex-combined fluid row.

    beta defaults to 1j * k; a real beta is rejected because only
    Im(beta) != 0 removes the interior Neumann spectrum.
    """
    if beta is None:
        beta = 1j * material.k
    beta = complex(beta)
    if beta.imag == 0.0:
        raise ValueError(
            "burton_miller requires Im(beta) != 0 (unique solvability "
            "condition); got beta = {}".format(beta))
    if ops is None:
        ops = assemble_operators(mesh, material,
                                 operator_names_for(["burton_miller"]), config)
    b = _blocks(ops)
    return _assemble_direct_like(mesh, material, wave, b, beta=beta)


def _assemble_direct_like(mesh, material, wave, b, beta):
    n = mesh.n_panels
    eta = material.eta
    ih = b["normal_mass"]
    ksp = b["solid_double_adj_normal"]
    kfp_row = b["fluid_double_adj_row"]
    b1, b2 = incident_nodal_data(mesh, wave)

    a11 = b["solid_hyper_b"]
    a12 = 0.5 * ih - ksp
    a21 = eta * (0.5 * ih.T + kfp_row)
    a22 = b["fluid_hyper"].copy()
    rhs1 = (-0.5 * ih + ksp) @ b1
    rhs_row2 = 0.5 * ih.T + kfp_row
    if beta is not None:
        vfn = b["fluid_single_normal_row"]
        a21 = a21 + eta * beta * vfn
        a22 += beta * (0.5 * b["mass"] - b["fluid_double"])
        rhs_row2 = rhs_row2 + beta * vfn
    rhs2 = rhs_row2 @ b2

    matrix = np.zeros((3 * n, 3 * n), dtype=complex)
    matrix[: 2 * n, : 2 * n] = a11
    matrix[: 2 * n, 2 * n:] = a12
    matrix[2 * n:, : 2 * n] = a21
    matrix[2 * n:, 2 * n:] = a22
    rhs = np.concatenate([rhs1, rhs2])
    form = "direct" if beta is None else "burton_miller"
    return BlockSystem(formulation=form, matrix=matrix, rhs=rhs, mesh=mesh,
                       material=material, wave=wave, beta=beta)


def build_indirect(mesh: BoundaryMesh, material: MaterialSystem,
                   wave: PlaneWave, config: QuadConfig | None = None,
                   ops: dict | None = None) -> BlockSystem:
    """Density system from the combined single-/double-layer ansatz."""
    if ops is None:
        ops = assemble_operators(mesh, material,
                                 operator_names_for(["indirect"]), config)
    b = _blocks(ops)
    n = mesh.n_panels
    eta = material.eta
    b1, b2 = incident_nodal_data(mesh, wave)

    matrix = np.zeros((3 * n, 3 * n), dtype=complex)
    matrix[: 2 * n, : 2 * n] = (b["solid_hyper_b"]
                                - eta * b["fluid_single_normal_dyad"])
    matrix[: 2 * n, 2 * n:] = (b["fluid_double_normal_col"]
                               - b["solid_double_adj_normal"])
    matrix[2 * n:, : 2 * n] = (b["fluid_double_adj_row"]
                               - b["solid_double_normal_row"])
    matrix[2 * n:, 2 * n:] = (b["fluid_hyper"] / eta
                              - b["solid_single_normal_scalar"])
    ih = b["normal_mass"]
    rhs = np.concatenate([-(ih @ b1), (ih.T @ b2) / eta])
    return BlockSystem(formulation="indirect", matrix=matrix, rhs=rhs,
                       mesh=mesh, material=material, wave=wave)


def solve(system: BlockSystem):
    """LU solve with partial pivoting; reports residual and conditioning.

    Raises NearSingularSystemError on pivot breakdown (an irregular or
    Jones frequency hit head-on); otherwise a large condition estimate
    only sets ``metadata['near_singular_warning']`` so frequency scans
    can pass through resonances.
    """
    a = system.matrix
    lu, piv = sla.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    row_scale = np.max(np.abs(a), axis=1)
    if np.any(diag < PIVOT_BREAKDOWN * np.max(row_scale)):
        raise NearSingularSystemError(
            f"system is numerically singular at omega = {system.material.omega}"
            " (suspected irregular or traction-free-oscillation frequency)")
    x = sla.lu_solve((lu, piv), system.rhs, check_finite=False)
    residual = np.linalg.norm(a @ x - system.rhs) / max(
        np.linalg.norm(system.rhs), np.finfo(float).tiny)
    anorm = np.linalg.norm(a, 1)
    rcond = lapack.zgecon(lu, anorm, norm="1")[0]
    cond = 1.0 / rcond if rcond > 0 else np.inf
    meta = {
        "residual": float(residual),
        "condition_estimate": float(cond),
        "near_singular_warning": bool(cond > COND_WARN),
        "omega": system.material.omega,
    }
    n = system.mesh.n_panels
    vec = x[: 2 * n].reshape(n, 2)
    scal = x[2 * n:]
    if system.formulation == "indirect":
        return DensitySolution(v_nodes=vec, psi_nodes=scal, mesh=system.mesh,
                               metadata=meta)
    return TraceSolution(u_nodes=vec, p_nodes=scal, mesh=system.mesh,
                         metadata=meta)


# ---------------------------------------------------------------------------
# Determinant sweeps
# ---------------------------------------------------------------------------
def _sweep_point(args):
    (omega, formulations, material, mesh_nodes, beta, cfg) = args
    from .mesh import mesh_from_polyline

    mesh = mesh_from_polyline(mesh_nodes)
    mat = material.with_omega(omega)
    wave = PlaneWave(direction=np.array([1.0, 0.0]), wavenumber=mat.k)
    ops = assemble_operators(mesh, mat, operator_names_for(formulations), cfg)
    out = []
    for form in formulations:
        if form == "direct":
            sys_ = build_direct(mesh, mat, wave, ops=ops)
        elif form == "burton_miller":
            sys_ = build_burton_miller(mesh, mat, wave, beta=beta or 1j * mat.k,
                                       ops=ops)
        else:
            sys_ = build_indirect(mesh, mat, wave, ops=ops)
        sign, logdet = np.linalg.slogdet(sys_.matrix)
        out.append(float(logdet))
    return out


def logdet_sweep(formulation, material: MaterialSystem, mesh: BoundaryMesh,
                 omega_grid, beta: complex | None = None,
                 config: QuadConfig | None = None, threads: int = 1):
    """log|det| of the block matrix over an ascending frequency grid.

    ``formulation`` may be one name or a sequence (they share assembly).
    Returns an array shaped (n_omega,) or (n_omega, n_formulations).
    Singular points produce very negative values, never errors.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    if np.any(np.diff(omega_grid) <= 0) or np.any(omega_grid <= 0):
        raise ValueError("omega grid must be positive and ascending")
    single = isinstance(formulation, str)
    formulations = [formulation] if single else list(formulation)
    for f in formulations:
        if f not in FORMULATIONS:
            raise ValueError(f"unknown formulation {f!r}")
    cfg = config or QuadConfig()
    jobs = [(float(w), formulations, material, mesh.nodes, beta, cfg)
            for w in omega_grid]
    if threads > 1:
        with get_context("spawn").Pool(threads) as pool:
            rows = pool.map(_sweep_point, jobs, chunksize=4)
    else:
        rows = [_sweep_point(j) for j in jobs]
    arr = np.array(rows)
    return arr[:, 0] if single else arr


def find_dips(omegas, logdets, window: float = DIP_WINDOW,
              depth: float = DIP_DEPTH) -> list[float]:
    """Grid frequencies that are local minima undercutting the local median.

    The median is taken over +-window around each point; the dip must lie
    at least ``depth`` (natural log) below it.
    """
    omegas = np.asarray(omegas, dtype=float)
    vals = np.asarray(logdets, dtype=float)
    dips = []
    for i in range(1, len(omegas) - 1):
        if not (vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]):
            continue
        sel = np.abs(omegas - omegas[i]) <= window
        if np.median(vals[sel]) - vals[i] >= depth:
            dips.append(float(omegas[i]))
    return dips
