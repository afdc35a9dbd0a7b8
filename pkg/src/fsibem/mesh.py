"""Closed polygonal boundary meshes and periodic piecewise-linear bases.

A boundary curve is approximated by N straight panels joining N nodes
(index arithmetic is mod N throughout). Normals and tangents are
per-panel constants; with the tangent pointing from node i to node i+1
and counterclockwise node ordering, the outward normal satisfies
t = A n with the rotation A = [[0, -1], [1, 0]].

The degrees of freedom are the continuous periodic hat functions
phi_i with phi_i(x_j) = delta_ij; on each panel exactly two hats are
nonzero (an affine ramp down and a ramp up), with panel-wise constant
arclength derivatives -1/h and +1/h.
"""

from dataclasses import dataclass

import numpy as np

# Rotation by +90 degrees; maps the outward normal to the tangent and
# realizes the Guenter tangential derivative as A d/ds.
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class BoundaryMesh:
    """Closed polygonal approximation of a boundary curve.

    Attributes
    ----------
    nodes : ndarray, shape (N, 2)
        Panel endpoints [m]; panel i runs from node i to node (i+1) % N.
    seg_length : ndarray, shape (N,)
        Panel lengths h_i.
    seg_tangent : ndarray, shape (N, 2)
        Unit tangents along increasing node index.
    seg_normal : ndarray, shape (N, 2)
        Unit outward normals (for counterclockwise node ordering).
    node_arc : ndarray, shape (N + 1,)
        Cumulative arclength at the nodes; node_arc[N] is the perimeter.
    """

    nodes: np.ndarray
    seg_length: np.ndarray
    seg_tangent: np.ndarray
    seg_normal: np.ndarray
    node_arc: np.ndarray

    @property
    def n_panels(self) -> int:
        return len(self.seg_length)

    @property
    def segments(self) -> list[tuple[int, int]]:
        n = self.n_panels
        return [(i, (i + 1) % n) for i in range(n)]

    @property
    def perimeter(self) -> float:
        return float(self.node_arc[-1])

    def validate(self) -> None:
        """Raise ValueError if the mesh invariants are violated."""
        n = self.n_panels
        if n < 4:
            raise ValueError(f"need at least 4 panels, got {n}")
        if self.nodes.shape != (n, 2):
            raise ValueError(f"nodes shape {self.nodes.shape} != ({n}, 2)")
        closing = np.roll(self.nodes, -1, axis=0) - self.nodes
        if not np.allclose(np.linalg.norm(closing, axis=1), self.seg_length):
            raise ValueError("seg_length inconsistent with node positions")
        if not np.allclose(np.linalg.norm(self.seg_tangent, axis=1), 1.0, atol=1e-13):
            raise ValueError("tangents are not unit vectors")
        if not np.allclose(self.seg_tangent, self.seg_normal @ ROTATION.T, atol=1e-13):
            raise ValueError("tangent != A @ normal")


def _from_nodes(nodes: np.ndarray) -> BoundaryMesh:
    nodes = np.asarray(nodes, dtype=float)
    edges = np.roll(nodes, -1, axis=0) - nodes
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths <= 0.0):
        raise ValueError("degenerate panel (repeated consecutive nodes)")
    tangents = edges / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    node_arc = np.concatenate([[0.0], np.cumsum(lengths)])
    return BoundaryMesh(nodes=nodes, seg_length=lengths, seg_tangent=tangents,
                        seg_normal=normals, node_arc=node_arc)


def build_circle_mesh(radius: float, n_panels: int) -> BoundaryMesh:
    """Uniform polygon inscribed in the circle of given radius.

    Nodes sit at angles 2*pi*j/N, so every panel has length
    2*radius*sin(pi/N) and the ordering is counterclockwise.
    """
    if n_panels < 4:
        raise ValueError(f"n_panels must be >= 4, got {n_panels}")
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    theta = 2.0 * np.pi * np.arange(n_panels) / n_panels
    nodes = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return _from_nodes(nodes)


def mesh_from_polyline(nodes: np.ndarray) -> BoundaryMesh:
    """Mesh from an explicit node list (implicitly closed, CCW expected)."""
    return _from_nodes(np.asarray(nodes, dtype=float))


def load_polyline(path) -> BoundaryMesh:
    """Read one "x y" pair per line; the polyline is implicitly closed."""
    nodes = np.loadtxt(path, dtype=float, ndmin=2)
    if nodes.shape[1] != 2:
        raise ValueError(f"expected 2 columns in {path}, got {nodes.shape[1]}")
    return mesh_from_polyline(nodes)


@dataclass(frozen=True)
class PLBasis:
    """Periodic hat function phi_i on a boundary mesh.

    Supported on panels i-1 (rising toward node i) and i (falling away
    from it); d(phi_i)/ds is +1/h on the first and -1/h on the second.
    """

    mesh: BoundaryMesh
    index: int

    @property
    def support(self) -> tuple[int, int]:
        n = self.mesh.n_panels
        return ((self.index - 1) % n, self.index)

    def value_on_panel(self, panel: int, t: np.ndarray) -> np.ndarray:
        """phi_i on the given panel at local coordinates t in [0, 1]."""
        t = np.asarray(t, dtype=float)
        n = self.mesh.n_panels
        if panel % n == (self.index - 1) % n:
            return t
        if panel % n == self.index % n:
            return 1.0 - t
        return np.zeros_like(t)

    def dvalue_ds_on_panel(self, panel: int) -> float:
        """Arclength derivative of phi_i on the given panel (constant)."""
        n = self.mesh.n_panels
        if panel % n == (self.index - 1) % n:
            return 1.0 / self.mesh.seg_length[panel % n]
        if panel % n == self.index % n:
            return -1.0 / self.mesh.seg_length[panel % n]
        return 0.0


@dataclass(frozen=True)
class QuadratureTable:
    """Per-panel Gauss-Legendre data with hat-function values.

    Attributes
    ----------
    ref_nodes : ndarray, shape (q,)
        Gauss points on the reference interval [0, 1].
    points : ndarray, shape (N, q, 2)
        Quadrature points in physical space.
    weights : ndarray, shape (N, q)
        Physical weights; each row sums to the panel length.
    phi_down, phi_up : ndarray, shape (q,)
        Values of the two hats living on a panel: the one peaking at the
        panel's start node (1 - t) and at its end node (t).
    dphi_down, dphi_up : ndarray, shape (N,)
        Their panel-wise constant arclength derivatives -1/h_i and +1/h_i.
    """

    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    phi_down: np.ndarray
    phi_up: np.ndarray
    dphi_down: np.ndarray
    dphi_up: np.ndarray


def basis_quadrature_nodes(mesh: BoundaryMesh, q: int) -> QuadratureTable:
    """Tabulate Gauss points, weights and hat values on every panel."""
    if q < 1:
        raise ValueError(f"Gauss order must be >= 1, got {q}")
    x01, w01 = gauss01(q)
    starts = mesh.nodes
    points = starts[:, None, :] + (
        x01[None, :, None]
        * mesh.seg_length[:, None, None]
        * mesh.seg_tangent[:, None, :]
    )
    weights = w01[None, :] * mesh.seg_length[:, None]
    inv_h = 1.0 / mesh.seg_length
    return QuadratureTable(
        ref_nodes=x01,
        ref_weights=w01,
        points=points,
        weights=weights,
        phi_down=1.0 - x01,
        phi_up=x01.copy(),
        dphi_down=-inv_h,
        dphi_up=inv_h,
    )


def gauss01(q: int):
    """Gauss-Legendre nodes/weights transplanted to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w
