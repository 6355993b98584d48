"""Complex-valued 2D finite elements for the anisotropic elasticity
operator div(C grad u) + kappa^2 rho u with traction boundary data.

Element matrices contract the FULL displacement gradient against C,
pairing du_k/dx_l with dv_i/dx_j through C_ijkl: the coefficient tensors
here are not minor-symmetric, so a symmetric-strain formulation would be
wrong.  Major symmetry of C makes the assembled matrix symmetric under
the plain (unconjugated) transpose, for complex densities too.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, ResonanceSuspectedError, SolverError
from .mesh import OUTER_BDY, TriMesh
from .tensors import ElasticTensor4, convexity_constant

__all__ = [
    "Region",
    "MediumSpec",
    "TractionData",
    "DiscreteSystem",
    "Solution",
    "assemble",
    "assemble_transmission_parts",
    "apply_traction",
    "add_body_force",
    "solve",
    "trace",
    "boundary_quadrature",
    "l2_norm_region",
    "l2_error",
]

log = logging.getLogger(__name__)

PIVOT_RATIO_FLOOR = 1e-12
RESIDUAL_TOL = 1e-10

# order-4 rule on the reference triangle (weights include the 1/2 area)
_QP_BARY = np.array(
    [
        [0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070],
        [0.108103018168070, 0.445948490915965],
        [0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459],
        [0.816847572980459, 0.091576213509771],
    ]
)
_QP_W = 0.5 * np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)

# 3-point Gauss rule on [0, 1]
_EDGE_T = np.array([0.5 * (1 - np.sqrt(0.6)), 0.5, 0.5 * (1 + np.sqrt(0.6))])
_EDGE_W = np.array([5.0, 8.0, 5.0]) / 18.0


def _shape_p1(xi: np.ndarray):
    x, y = xi[:, 0], xi[:, 1]
    n = np.stack([1.0 - x - y, x, y], axis=1)
    g = np.zeros((xi.shape[0], 3, 2))
    g[:, 0] = (-1.0, -1.0)
    g[:, 1] = (1.0, 0.0)
    g[:, 2] = (0.0, 1.0)
    return n, g

def _shape_p2(xi: np.ndarray):
    x, y = xi[:, 0], xi[:, 1]
    l1 = 1.0 - x - y
    n = np.stack(
        [
            l1 * (2 * l1 - 1),
            x * (2 * x - 1),
            y * (2 * y - 1),
            4 * l1 * x,
            4 * x * y,
            4 * y * l1,
        ],
        axis=1,
    )
    g = np.empty((xi.shape[0], 6, 2))
    g[:, 0, 0] = 1 - 4 * l1
    g[:, 0, 1] = 1 - 4 * l1
    g[:, 1, 0] = 4 * x - 1
    g[:, 1, 1] = 0.0
    g[:, 2, 0] = 0.0
    g[:, 2, 1] = 4 * y - 1
    g[:, 3, 0] = 4 * (l1 - x)
    g[:, 3, 1] = -4 * x
    g[:, 4, 0] = 4 * y
    g[:, 4, 1] = 4 * x
    g[:, 5, 0] = -4 * y
    g[:, 5, 1] = 4 * (l1 - y)
    return n, g


def _edge_shape(order: int, t: np.ndarray) -> np.ndarray:
    if order == 1:
        return np.stack([1.0 - t, t], axis=1)
    return np.stack([(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)], axis=1)


@dataclass(frozen=True)
class Region:
    """Coefficient data of one mesh region.

    tensor_fn maps a point to a (2,2,2,2) array (or ElasticTensor4);
    density_fn maps a point to a complex density rho = rho_R + i rho_I.
    """

    tensor_fn: Callable[[np.ndarray], object]
    density_fn: Callable[[np.ndarray], complex]


@dataclass(frozen=True)
class MediumSpec:
    """Piecewise medium: one Region per mesh band index."""

    regions: Mapping[int, Region]

    @staticmethod
    def homogeneous(tensor_fn, density_fn, bands) -> "MediumSpec":
        r = Region(tensor_fn, density_fn)
        return MediumSpec({b: r for b in bands})

    def region_for(self, band: int) -> Region:
        try:
            return self.regions[band]
        except KeyError:
            raise AssemblyError(f"no medium defined for mesh region {band}")


@dataclass(frozen=True)
class TractionData:
    """Traction datum on a marked boundary, as a field of (point, normal)."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    marker: str = OUTER_BDY

    @staticmethod
    def zero(marker: str = OUTER_BDY) -> "TractionData":
        return TractionData(lambda x, nu: np.zeros(2), marker)

    @staticmethod
    def from_nodal_values(
        angles: np.ndarray, values: np.ndarray, marker: str = OUTER_BDY
    ) -> "TractionData":
        """Interpolate angle-ordered nodal values periodically in angle."""
        order = np.argsort(angles)
        th = np.asarray(angles)[order]
        vals = np.asarray(values, dtype=complex)[order]
        th_ext = np.concatenate([th, [th[0] + 2.0 * np.pi]])
        vals_ext = np.vstack([vals, vals[:1]])

        def fn(x, nu):
            a = np.arctan2(x[1], x[0])
            if a < th_ext[0]:
                a += 2.0 * np.pi
            re = np.array(
                [np.interp(a, th_ext, vals_ext[:, c].real) for c in range(2)]
            )
            im = np.array(
                [np.interp(a, th_ext, vals_ext[:, c].imag) for c in range(2)]
            )
            return re + 1j * im

        return TractionData(fn, marker)


@dataclass
class DofHandler:
    """Scalar nodes (vertices plus, for order 2, edge midpoints)."""

    order: int
    elem_nodes: np.ndarray  # (nt, nloc)
    coords: np.ndarray  # (n_scalar, 2)
    edge_node: Dict[Tuple[int, int], int]

    @property
    def n_scalar(self) -> int:
        return self.coords.shape[0]

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_scalar


def build_dof_handler(mesh: TriMesh, order: int) -> DofHandler:
    if order not in (1, 2):
        raise AssemblyError(f"element order must be 1 or 2, got {order}")
    if order == 1:
        return DofHandler(1, mesh.triangles.copy(), mesh.vertices.copy(), {})
    edge_node: Dict[Tuple[int, int], int] = {}
    coords = [mesh.vertices]
    extra = []
    nv = mesh.n_vertices
    elem_nodes = np.empty((mesh.n_triangles, 6), dtype=np.int64)
    elem_nodes[:, :3] = mesh.triangles
    for e, tri in enumerate(mesh.triangles):
        for s, (a, b) in enumerate(((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))):
            key = (min(a, b), max(a, b))
            idx = edge_node.get(key)
            if idx is None:
                idx = nv + len(extra)
                edge_node[key] = idx
                extra.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            elem_nodes[e, 3 + s] = idx
    coords = np.vstack([mesh.vertices, np.array(extra).reshape(-1, 2)])
    return DofHandler(2, elem_nodes, coords, edge_node)


@dataclass
class DiscreteSystem:
    """Assembled operator (stiffness minus kappa^2 mass) plus load."""

    A: sp.spmatrix
    f: np.ndarray
    handler: DofHandler
    mesh: TriMesh
    kappa: float
    _bq_cache: Dict[str, "BoundaryQuad"] = dc_field(default_factory=dict)


@dataclass
class Solution:
    """Nodal complex displacement with solver diagnostics."""

    u: np.ndarray
    kappa: float
    handler: DofHandler
    mesh: TriMesh
    pivot_ratio: float
    residual: float


def _geometry(mesh: TriMesh, handler: DofHandler):
    """Affine maps: qpoint coords, scalar gradients, scaled weights."""
    nfun = _shape_p1 if handler.order == 1 else _shape_p2
    nvals, gref = nfun(_QP_BARY)  # (Q, nloc), (Q, nloc, 2)
    p = mesh.vertices[mesh.triangles]  # (E, 3, 2)
    j = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (E, 2, 2) columns
    detj = j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]
    jinv = np.empty_like(j)
    jinv[:, 0, 0] = j[:, 1, 1]
    jinv[:, 0, 1] = -j[:, 0, 1]
    jinv[:, 1, 0] = -j[:, 1, 0]
    jinv[:, 1, 1] = j[:, 0, 0]
    jinv /= detj[:, None, None]
    # physical gradients: g_phys[e, q, m, l] = sum_r gref[q, m, r] jinv[e, r, l]
    gphys = np.einsum("qmr,erl->eqml", gref, jinv)
    qpts = np.einsum("qm,eml->eql", nvals[:, :3] if handler.order == 2 else nvals, p)
    # barycentric interpolation of coordinates is exact with the P1 part
    if handler.order == 2:
        n1, _ = _shape_p1(_QP_BARY)
        qpts = np.einsum("qm,eml->eql", n1, p)
    weights = _QP_W[None, :] * detj[:, None]
    return nvals, gphys, qpts, weights


def _eval_tensor(fn, x) -> np.ndarray:
    c = fn(x)
    if isinstance(c, ElasticTensor4):
        return c.entries
    return np.asarray(c, dtype=float)


def _assemble_matrices(
    mesh: TriMesh,
    medium: MediumSpec,
    order: int,
    unit_density_by_region: bool,
    convexity_samples: int = 3,
):
    handler = build_dof_handler(mesh, order)
    nvals, gphys, qpts, weights = _geometry(mesh, handler)
    nloc = handler.elem_nodes.shape[1]
    ndofs = handler.n_dofs

    k_mat = sp.csr_matrix((ndofs, ndofs))
    mass: Dict[int, sp.spmatrix] = {}
    rho_is_complex = False

    for band in np.unique(mesh.region):
        reg = medium.region_for(int(band))
        sel = np.where(mesh.region == band)[0]
        e_cnt, q_cnt = sel.size, _QP_BARY.shape[0]
        cvals = np.empty((e_cnt, q_cnt, 2, 2, 2, 2))
        rvals = np.empty((e_cnt, q_cnt), dtype=complex)
        for ei, e in enumerate(sel):
            for q in range(q_cnt):
                x = qpts[e, q]
                cvals[ei, q] = _eval_tensor(reg.tensor_fn, x)
                rvals[ei, q] = complex(reg.density_fn(x))
        scale = max(np.max(np.abs(cvals)), 1e-300)
        major_gap = np.max(np.abs(cvals - cvals.transpose(0, 1, 4, 5, 2, 3)))
        if major_gap > 1e-12 * scale:
            raise AssemblyError(
                f"tensor_fn of region {band} violates major symmetry "
                f"(gap {major_gap:.3e} vs scale {scale:.3e})"
            )
        for ei in range(min(convexity_samples, e_cnt)):
            c0 = convexity_constant(ElasticTensor4(2, cvals[ei, 0]))
            if c0 <= 0.0:
                log.warning(
                    "region %d tensor has non-positive convexity constant %.3e",
                    band,
                    c0,
                )
                break

        w = weights[sel]
        g = gphys[sel]
        ke = np.einsum("eq,eqajbl,eqml,eqij->eiamb", w, cvals, g, g, optimize=True)
        me_scalar = np.einsum(
            "eq,eq,qi,qm->eim",
            w.astype(complex),
            np.ones_like(rvals) if unit_density_by_region else rvals,
            nvals,
            nvals,
            optimize=True,
        )
        if not unit_density_by_region and np.any(rvals.imag != 0.0):
            rho_is_complex = True
        me = np.zeros((e_cnt, nloc, 2, nloc, 2), dtype=complex)
        me[:, :, 0, :, 0] = me_scalar
        me[:, :, 1, :, 1] = me_scalar

        nodes = handler.elem_nodes[sel]
        dofs = (2 * nodes[:, :, None] + np.arange(2)[None, None, :]).reshape(e_cnt, -1)
        rows = np.repeat(dofs, 2 * nloc, axis=1).ravel()
        cols = np.tile(dofs, (1, 2 * nloc)).ravel()
        k_band = sp.coo_matrix(
            (ke.reshape(e_cnt, 2 * nloc, 2 * nloc).ravel(), (rows, cols)),
            shape=(ndofs, ndofs),
        ).tocsr()
        m_band = sp.coo_matrix(
            (me.reshape(e_cnt, 2 * nloc, 2 * nloc).ravel(), (rows, cols)),
            shape=(ndofs, ndofs),
        ).tocsr()
        k_mat = k_mat + k_band
        if unit_density_by_region:
            mass[int(band)] = m_band
        else:
            mass[0] = mass.get(0, sp.csr_matrix((ndofs, ndofs), dtype=complex)) + m_band

    if unit_density_by_region:
        return handler, k_mat, mass, False
    return handler, k_mat, mass[0], rho_is_complex


def assemble(
    mesh: TriMesh, medium: MediumSpec, kappa: float, order: int = 2
) -> DiscreteSystem:
    """Assemble stiffness - kappa^2 * mass over both displacement components."""
    if kappa < 0.0:
        raise AssemblyError(f"kappa must be nonnegative, got {kappa}")
    handler, k_mat, m_mat, rho_cx = _assemble_matrices(mesh, medium, order, False)
    a_mat = k_mat - (kappa ** 2) * m_mat
    if not rho_cx:
        a_mat = a_mat.real
    return DiscreteSystem(
        A=a_mat.tocsc(),
        f=np.zeros(handler.n_dofs, dtype=complex),
        handler=handler,
        mesh=mesh,
        kappa=kappa,
    )


def assemble_transmission_parts(mesh: TriMesh, medium: MediumSpec, order: int = 2):
    """Stiffness plus one unit-density mass matrix per region.

    The caller combines them as K - kappa^2 sum_r rho_r M_r, which makes
    density scans cheap: one assembly serves the whole parameter grid.
    """
    handler, k_mat, mass_by_region, _ = _assemble_matrices(mesh, medium, order, True)
    return handler, k_mat, mass_by_region


@dataclass
class BoundaryQuad:
    """Quadrature on a marked polyline: points, weights, normals, and the
    scalar-node interpolation stencil at every quadrature point."""

    points: np.ndarray  # (nq, 2)
    weights: np.ndarray  # (nq,)
    normals: np.ndarray  # (nq, 2)
    nodes: np.ndarray  # (nq, k) scalar node indices
    shape: np.ndarray  # (nq, k)
    angles: np.ndarray  # (nq,)

    def interpolate(self, u: np.ndarray) -> np.ndarray:
        """Values of a dof vector at the quadrature points, (nq, 2)."""
        out = np.empty((self.points.shape[0], 2), dtype=complex)
        for c in range(2):
            out[:, c] = np.sum(self.shape * u[2 * self.nodes + c], axis=1)
        return out


def boundary_quadrature(
    mesh: TriMesh, handler: DofHandler, marker: str = OUTER_BDY
) -> BoundaryQuad:
    edges = mesh.edges_with_marker(marker)
    if not edges:
        raise AssemblyError(f"no boundary edges with marker {marker!r}")
    shape_ref = _edge_shape(handler.order, _EDGE_T)
    pts, wts, nrm, nds, shp = [], [], [], [], []
    for a, b in edges:
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.linalg.norm(pb - pa))
        tangent = (pb - pa) / length
        normal = np.array([tangent[1], -tangent[0]])
        mid = 0.5 * (pa + pb)
        if np.dot(normal, mid) < 0.0:
            normal = -normal
        if handler.order == 1:
            nodes = [a, b]
        else:
            nodes = [a, b, handler.edge_node[(min(a, b), max(a, b))]]
        for t, w, s in zip(_EDGE_T, _EDGE_W, shape_ref):
            pts.append(pa + t * (pb - pa))
            wts.append(w * length)
            nrm.append(normal)
            nds.append(nodes)
            shp.append(s)
    pts = np.array(pts)
    return BoundaryQuad(
        points=pts,
        weights=np.array(wts),
        normals=np.array(nrm),
        nodes=np.array(nds, dtype=np.int64),
        shape=np.array(shp),
        angles=np.arctan2(pts[:, 1], pts[:, 0]),
    )


def _get_bq(system: DiscreteSystem, marker: str) -> BoundaryQuad:
    bq = system._bq_cache.get(marker)
    if bq is None:
        bq = boundary_quadrature(system.mesh, system.handler, marker)
        system._bq_cache[marker] = bq
    return bq


def apply_traction(
    system: DiscreteSystem, phi: TractionData, mesh: Optional[TriMesh] = None
) -> DiscreteSystem:
    """Add the boundary term integral(phi . v) on the marked edges."""
    bq = _get_bq(system, phi.marker)
    vals = np.array(
        [np.asarray(phi.fn(x, nu), dtype=complex) for x, nu in zip(bq.points, bq.normals)]
    )
    for c in range(2):
        contrib = bq.weights[:, None] * vals[:, c, None] * bq.shape
        np.add.at(system.f, 2 * bq.nodes + c, contrib)
    return system


def add_body_force(
    system: DiscreteSystem, fn: Callable[[np.ndarray], np.ndarray]
) -> DiscreteSystem:
    """Add the volume term integral(fn . v) to the load vector."""
    handler = system.handler
    nvals, _, qpts, weights = _geometry(system.mesh, handler)
    e_cnt, q_cnt = qpts.shape[:2]
    vals = np.empty((e_cnt, q_cnt, 2), dtype=complex)
    for e in range(e_cnt):
        for q in range(q_cnt):
            vals[e, q] = np.asarray(fn(qpts[e, q]), dtype=complex)
    contrib = np.einsum("eq,eqc,qi->eic", weights, vals, nvals)
    dofs = 2 * handler.elem_nodes[:, :, None] + np.arange(2)[None, None, :]
    np.add.at(system.f, dofs.ravel(), contrib.ravel())
    return system


def solve(system: DiscreteSystem) -> Solution:
    """Direct sparse solve with a pivot-based singularity check.

    Raises ResonanceSuspectedError when the LU pivots collapse, which is
    the discrete signature of -kappa^2 sitting on an eigenvalue of the
    operator with zero-traction data.
    """
    a_mat = system.A.tocsc()
    try:
        lu = spla.splu(a_mat)
    except RuntimeError as exc:  # exactly singular
        raise ResonanceSuspectedError(f"factorization failed: {exc}", 0.0)
    dpiv = np.abs(lu.U.diagonal())
    pivot_ratio = float(dpiv.min() / dpiv.max()) if dpiv.max() > 0 else 0.0
    if pivot_ratio < PIVOT_RATIO_FLOOR:
        raise ResonanceSuspectedError(
            f"near-singular factorization (pivot ratio {pivot_ratio:.3e}); "
            f"-kappa^2 may sit near an eigenvalue",
            pivot_ratio,
        )
    rhs = system.f.astype(complex)
    if np.issubdtype(a_mat.dtype, np.complexfloating):
        u = lu.solve(rhs)
    else:  # real factorization serves both parts of a complex load
        u = lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)
    fn = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(a_mat @ u - rhs) / fn) if fn > 0 else 0.0
    if residual > RESIDUAL_TOL:
        raise SolverError(f"solve residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    return Solution(u, system.kappa, system.handler, system.mesh, pivot_ratio, residual)


def solve_columns(system: DiscreteSystem, loads: np.ndarray) -> np.ndarray:
    """Factor once and back-substitute many load vectors (columns)."""
    a_mat = system.A.tocsc()
    try:
        lu = spla.splu(a_mat)
    except RuntimeError as exc:
        raise ResonanceSuspectedError(f"factorization failed: {exc}", 0.0)
    dpiv = np.abs(lu.U.diagonal())
    pivot_ratio = float(dpiv.min() / dpiv.max()) if dpiv.max() > 0 else 0.0
    if pivot_ratio < PIVOT_RATIO_FLOOR:
        raise ResonanceSuspectedError(
            f"near-singular factorization (pivot ratio {pivot_ratio:.3e})",
            pivot_ratio,
        )
    loads = np.atleast_2d(loads).astype(complex)
    if np.issubdtype(a_mat.dtype, np.complexfloating):
        return lu.solve(loads.T).T
    return (lu.solve(loads.real.T) + 1j * lu.solve(loads.imag.T)).T


def trace(sol: Solution, mesh: TriMesh, marker: str = OUTER_BDY):
    """Boundary nodal displacements ordered by angle in (-pi, pi]."""
    handler = sol.handler
    nodes = set()
    for (a, b) in mesh.edges_with_marker(marker):
        nodes.add(a)
        nodes.add(b)
        if handler.order == 2:
            nodes.add(handler.edge_node[(min(a, b), max(a, b))])
    idx = np.array(sorted(nodes), dtype=np.int64)
    pts = handler.coords[idx]
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    order = np.argsort(angles)
    idx = idx[order]
    vals = np.stack([sol.u[2 * idx], sol.u[2 * idx + 1]], axis=1)
    return angles[order], vals


def l2_norm_region(sol: Solution, regions) -> float:
    """L2 norm of the displacement over selected region bands."""
    handler = sol.handler
    nvals, _, _, weights = _geometry(sol.mesh, handler)
    mask = np.isin(sol.mesh.region, list(regions))
    ue = sol.u[2 * handler.elem_nodes[mask][:, None, :] + np.array([0, 1])[:, None]]
    # ue: (E, 2, nloc); values at qps: (E, Q, 2)
    uq = np.einsum("qm,ecm->eqc", nvals, ue)
    val = np.einsum("eq,eqc->", weights[mask], np.abs(uq) ** 2)
    return float(np.sqrt(val))


def l2_error(sol: Solution, exact: Callable[[np.ndarray], np.ndarray]) -> float:
    """L2 distance between the FEM field and a pointwise exact field."""
    handler = sol.handler
    nvals, _, qpts, weights = _geometry(sol.mesh, handler)
    e_cnt, q_cnt = qpts.shape[:2]
    ex = np.empty((e_cnt, q_cnt, 2), dtype=complex)
    for e in range(e_cnt):
        for q in range(q_cnt):
            ex[e, q] = np.asarray(exact(qpts[e, q]), dtype=complex)
    ue = sol.u[2 * handler.elem_nodes[:, None, :] + np.array([0, 1])[:, None]]
    uq = np.einsum("qm,ecm->eqc", nvals, ue)
    val = np.einsum("eq,eqc->", weights, np.abs(uq - ex) ** 2)
    return float(np.sqrt(val))
