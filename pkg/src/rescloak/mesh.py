"""Interface-fitted triangulations of concentric-disc geometries.

The generator places nodes on concentric rings, with every material
interface carried exactly by a ring, and stitches consecutive rings with
an angle-ordered merge so rings may have different node counts.  The
construction is fully deterministic.  Region tags are band indices
counted from the centre (0 = innermost); for the standard two-interface
cloak geometry the aliases CORE, SHELL, OUTER apply.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from .errors import RefinementError

__all__ = [
    "TriMesh",
    "concentric_disc_mesh",
    "write_mesh_text",
    "read_mesh_text",
    "CORE",
    "SHELL",
    "OUTER",
    "OUTER_BDY",
]

log = logging.getLogger(__name__)

CORE, SHELL, OUTER = 0, 1, 2
OUTER_BDY = "OUTER_BDY"


def iface_marker(k: int) -> str:
    """Marker of the k-th interface circle, counted from the innermost."""
    return f"IFACE_{k}"


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangle mesh with region and boundary tags."""

    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3) int
    region: np.ndarray  # (nt,) int band index, 0 = innermost
    boundary_edges: Tuple[Tuple[Tuple[int, int], str], ...]
    h_mesh: float
    interface_radii: Tuple[float, ...]
    outer_radius: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges_with_marker(self, marker: str) -> List[Tuple[int, int]]:
        return [e for e, m in self.boundary_edges if m == marker]

    def validate(self) -> None:
        """Raise if areas, conformity, or interface fitting are broken."""
        areas = self.triangle_areas()
        if np.any(areas <= 0.0):
            raise RefinementError(f"{np.sum(areas <= 0)} non-positive triangle areas")
        counts: dict = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        bad = [k for k, c in counts.items() if c > 2]
        if bad:
            raise RefinementError(f"non-conforming edges: {bad[:5]}")
        outer_edges = sum(1 for c in counts.values() if c == 1)
        n_marked = len(self.edges_with_marker(OUTER_BDY))
        if outer_edges != n_marked:
            raise RefinementError(
                f"{outer_edges} free edges but {n_marked} marked outer edges"
            )
        # no triangle may straddle an interface circle
        radii = np.linalg.norm(self.vertices, axis=1)
        bands = np.concatenate([[0.0], self.interface_radii, [self.outer_radius]])
        tol = 1e-9
        for tri, reg in zip(self.triangles, self.region):
            lo, hi = bands[reg], bands[reg + 1]
            rr = radii[tri]
            if np.any(rr < lo - tol) or np.any(rr > hi + tol):
                raise RefinementError(f"triangle {tri} straddles an interface")


def _ring_sizes(
    interface_radii: Sequence[float],
    outer_radius: float,
    h_mesh: float,
    grade_inner: float,
) -> List[Tuple[float, int]]:
    """(radius, node count) of every ring, innermost first."""
    l_inner = h_mesh * grade_inner

    def target_len(r: float) -> float:
        # radius-proportional sizing keeps triangle aspect near 1 while
        # capping at h_mesh outside and at the graded length inside
        return float(np.clip(0.5 * r, l_inner, h_mesh))

    circles = list(interface_radii) + [outer_radius]
    ring_radii: List[float] = []
    inner = 0.0
    for outer in circles:
        # march from the outer circle of the band inward, then flip, so
        # the band adapts to the sizing without missing its ends
        pts = [outer]
        r = outer
        while r - target_len(r) > inner + 0.5 * target_len(inner + 1e-12):
            r = r - target_len(r)
            pts.append(r)
        pts = pts[::-1]
        if inner > 0.0:
            pts = [inner] + pts[:-1] + [outer] if len(pts) > 1 else [inner, outer]
            pts = sorted(set(pts))
            pts = pts[1:]  # the inner circle already belongs to the previous band
        ring_radii.extend(pts)
        inner = outer
    ring_radii = sorted(set(ring_radii))

    sizes = []
    for r in ring_radii:
        n = int(np.ceil(2.0 * np.pi * r / target_len(r)))
        n = max(8, n)
        n = ((n + 7) // 8) * 8  # multiples of 8 keep the mesh nearly symmetric
        sizes.append((r, n))
    return sizes


def _zip_rings(
    inner_idx: np.ndarray, outer_idx: np.ndarray
) -> List[Tuple[int, int, int]]:
    """Triangulate the annulus between two node rings ordered by angle."""
    na, nb = len(inner_idx), len(outer_idx)
    tris = []
    i = j = 0
    while i < na or j < nb:
        fa = (i + 1) / na
        fb = (j + 1) / nb
        if j >= nb or (i < na and fa <= fb):
            tris.append(
                (inner_idx[i % na], outer_idx[j % nb], inner_idx[(i + 1) % na])
            )
            i += 1
        else:
            tris.append(
                (outer_idx[j % nb], outer_idx[(j + 1) % nb], inner_idx[i % na])
            )
            j += 1
    return tris


def concentric_disc_mesh(
    radii: Sequence[float],
    outer_radius: float = 2.0,
    h_mesh: float = 0.1,
    grade_inner: float = 1.0,
) -> TriMesh:
    """Mesh the disc with the given interface circles resolved exactly.

    ``radii`` are the interface radii in strictly increasing order, all
    below ``outer_radius``; ``grade_inner`` in (0, 1] scales the target
    edge length near the innermost circle.  Raises RefinementError when
    the requested spacing would polygonalize the innermost circle with
    fewer than 16 segments.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or (
        radii and radii[0] <= 0.0
    ):
        raise RefinementError(f"interface radii must be strictly increasing: {radii}")
    if radii and radii[-1] >= outer_radius:
        raise RefinementError("interface radii must lie inside the outer circle")
    if h_mesh <= 0.0 or not (0.0 < grade_inner <= 1.0):
        raise RefinementError("need h_mesh > 0 and grade_inner in (0, 1]")
    if radii and 2.0 * np.pi * radii[0] / (h_mesh * grade_inner) < 16.0:
        raise RefinementError(
            f"h_mesh*grade_inner = {h_mesh * grade_inner:.4g} gives fewer than 16 "
            f"segments on the innermost circle of radius {radii[0]:.4g}"
        )

    sizes = _ring_sizes(radii, outer_radius, h_mesh, grade_inner)

    verts = [np.zeros(2)]
    ring_nodes: List[np.ndarray] = []
    for r, n in sizes:
        theta = 2.0 * np.pi * np.arange(n) / n
        idx = np.arange(len(verts), len(verts) + n)
        verts.extend(np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1))
        ring_nodes.append(idx)
    vertices = np.array(verts)

    tris: List[Tuple[int, int, int]] = []
    first = ring_nodes[0]
    n0 = len(first)
    for i in range(n0):
        tris.append((0, first[i], first[(i + 1) % n0]))
    for inner_ring, outer_ring in zip(ring_nodes, ring_nodes[1:]):
        tris.extend(_zip_rings(inner_ring, outer_ring))
    triangles = np.array(tris, dtype=np.int64)

    bands = np.array([0.0] + radii + [outer_radius])
    centroids = vertices[triangles].mean(axis=1)
    cr = np.linalg.norm(centroids, axis=1)
    region = np.searchsorted(bands, cr) - 1
    region = np.clip(region, 0, len(bands) - 2)

    boundary: List[Tuple[Tuple[int, int], str]] = []
    ring_radius = {tuple()}
    for (r, _), idx in zip(sizes, ring_nodes):
        marker = None
        if abs(r - outer_radius) < 1e-12:
            marker = OUTER_BDY
        else:
            for k, ri in enumerate(radii, start=1):
                if abs(r - ri) < 1e-12:
                    marker = iface_marker(k)
                    break
        if marker is None:
            continue
        n = len(idx)
        for i in range(n):
            boundary.append(((int(idx[i]), int(idx[(i + 1) % n])), marker))

    mesh = TriMesh(
        vertices=vertices,
        triangles=triangles,
        region=region.astype(np.int64),
        boundary_edges=tuple(boundary),
        h_mesh=h_mesh,
        interface_radii=tuple(radii),
        outer_radius=outer_radius,
    )
    log.info(
        "concentric mesh: %d vertices, %d triangles, %d rings",
        mesh.n_vertices,
        mesh.n_triangles,
        len(sizes),
    )
    return mesh


def write_mesh_text(mesh: TriMesh, path) -> None:
    """Plain-text export: header, vertex coordinates, triangles with tags."""
    lines = [f"VERTICES {mesh.n_vertices} / TRIANGLES {mesh.n_triangles}"]
    for x, y in mesh.vertices:
        lines.append(f"{x!r} {y!r}")
    for tri, reg in zip(mesh.triangles, mesh.region):
        lines.append(f"{tri[0]} {tri[1]} {tri[2]} {reg}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh_text(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back (vertices, triangles, region) from the text export."""
    lines = Path(path).read_text().strip().splitlines()
    head = lines[0].split()
    nv, nt = int(head[1]), int(head[4])
    vertices = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + nv]])
    rest = np.array(
        [[int(v) for v in ln.split()] for ln in lines[1 + nv : 1 + nv + nt]]
    )
    return vertices, rest[:, :3], rest[:, 3]
