"""Triangle-mesh target models and ray intersection.

Meshes load from a small OBJ subset (v / f / usemtl, quads and larger
faces fan-triangulated) with flat face normals: spacecraft bodies are
dominated by planar panels, so face normals are the default and vertex
smoothing is out of scope.  A median-split AABB tree answers single-ray
queries; the renderer uses the vectorised all-triangles kernel below,
which the test suite holds to exact agreement with the tree.

Hit distance and normal are computed in whatever scalar type the ray
carries; traversal and nearest-triangle selection always read primal
values, so derivatives are those of the locally selected triangle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .vec3 import cross3, dot3, sub3

__all__ = [
    "TriangleMesh",
    "MeshError",
    "Ray",
    "Hit",
    "Bvh",
    "IntersectStats",
    "load_mesh",
    "mesh_to_obj",
    "build_bvh",
    "intersect",
    "intersect_batch",
    "panel_satellite",
]

_MIN_AREA = 1e-12


class MeshError(ValueError):
    pass


@dataclass
class TriangleMesh:
    """Triangle soup in the target body frame, metres."""

    vertices: np.ndarray          # (n, 3) float
    triangles: np.ndarray         # (m, 3) int
    normals: np.ndarray           # (m, 3) float, unit
    materials: list               # per-triangle tag (str or None)
    dropped_degenerate: int = 0   # degenerate faces removed at load
    vertex_normals: np.ndarray = None  # (n, 3) when smooth shading requested

    def __post_init__(self):
        if len(self.triangles) == 0:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index out of range")

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self):
        """(m,3) arrays of the three triangle corners."""
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def transformed(self, rotation: np.ndarray) -> "TriangleMesh":
        """Mesh rotated by a 3x3 matrix (body -> render frame)."""
        r = np.asarray(rotation, dtype=float)
        vn = None if self.vertex_normals is None else self.vertex_normals @ r.T
        return TriangleMesh(
            vertices=self.vertices @ r.T,
            triangles=self.triangles,
            normals=self.normals @ r.T,
            materials=list(self.materials),
            dropped_degenerate=self.dropped_degenerate,
            vertex_normals=vn,
        )


def _face_data(vertices: np.ndarray, corners: list[int]):
    a, b, c = (vertices[i] for i in corners)
    n = np.cross(b - a, c - a)
    area2 = float(np.linalg.norm(n))
    return area2, (n / area2 if area2 > 0 else n)


def load_mesh(obj_text: str, smooth_normals: bool = False) -> TriangleMesh:
    """Parse an OBJ subset; larger faces are fan-triangulated.

    Flat face normals by default (spacecraft are mostly planar panels);
    ``smooth_normals`` additionally stores area-weighted vertex normals so
    hits interpolate a smoothly varying shading normal.
    """
    vertices: list[list[float]] = []
    tris: list[list[int]] = []
    normals: list[np.ndarray] = []
    materials: list = []
    current_material = None
    dropped = 0

    for lineno, raw in enumerate(obj_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                vertices.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise MeshError(f"line {lineno}: bad vertex coordinate") from None
        elif tag == "f":
            if len(parts) < 4:
                raise MeshError(f"line {lineno}: face needs at least 3 vertices")
            try:
                idx = [int(p.split("/")[0]) for p in parts[1:]]
            except ValueError:
                raise MeshError(f"line {lineno}: bad face index") from None
            idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
            if any(i < 0 or i >= len(vertices) for i in idx):
                raise MeshError(f"line {lineno}: face index out of range")
            varr = np.asarray(vertices, dtype=float)
            for k in range(1, len(idx) - 1):
                corner = [idx[0], idx[k], idx[k + 1]]
                area2, n = _face_data(varr, corner)
                if area2 <= 2.0 * _MIN_AREA:
                    dropped += 1
                    continue
                tris.append(corner)
                normals.append(n)
                materials.append(current_material)
        elif tag == "usemtl":
            current_material = parts[1] if len(parts) > 1 else None
        # mtllib, o, g, s, vn, vt: accepted and ignored
        elif tag not in ("mtllib", "o", "g", "s", "vn", "vt"):
            raise MeshError(f"line {lineno}: unsupported directive {tag!r}")

    if not tris:
        raise MeshError("no (non-degenerate) triangles in OBJ input")
    varr = np.asarray(vertices, dtype=float)
    tarr = np.asarray(tris, dtype=int)
    narr = np.asarray(normals, dtype=float)
    vertex_normals = None
    if smooth_normals:
        a, b, c = varr[tarr[:, 0]], varr[tarr[:, 1]], varr[tarr[:, 2]]
        weighted = np.cross(b - a, c - a)  # area-weighted face normals
        vertex_normals = np.zeros_like(varr)
        for corner in range(3):
            np.add.at(vertex_normals, tarr[:, corner], weighted)
        length = np.linalg.norm(vertex_normals, axis=1, keepdims=True)
        vertex_normals = vertex_normals / np.where(length > 0.0, length, 1.0)
    return TriangleMesh(
        vertices=varr,
        triangles=tarr,
        normals=narr,
        materials=materials,
        dropped_degenerate=dropped,
        vertex_normals=vertex_normals,
    )


def mesh_to_obj(mesh: TriangleMesh) -> str:
    """Serialise back to the OBJ subset (triangles only)."""
    out = []
    for v in mesh.vertices:
        out.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    last = object()
    for tri, mat in zip(mesh.triangles, mesh.materials):
        if mat != last:
            if mat is not None:
                out.append(f"usemtl {mat}")
            last = mat
        out.append(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Ray:
    origin: tuple     # (3,) generic scalars, metres
    direction: tuple  # (3,) generic scalars, unit


@dataclass(frozen=True)
class Hit:
    t: object         # generic scalar, metres along the ray
    normal: tuple     # generic scalars, unit, faces the ray origin
    triangle: int
    material: object


@dataclass
class IntersectStats:
    """Opt-in counters for traversal behaviour tests."""

    triangle_tests: int = 0
    nodes_visited: int = 0


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    left: int = -1
    right: int = -1
    start: int = 0
    count: int = 0


@dataclass
class Bvh:
    nodes: list = field(default_factory=list)
    order: np.ndarray = None  # triangle ids, leaf-contiguous

    @property
    def root(self) -> _Node:
        return self.nodes[0]


_LEAF_SIZE = 4


def build_bvh(mesh: TriangleMesh) -> Bvh:
    """Binary AABB tree, median split on the longest axis, leaves <= 4."""
    a, b, c = mesh.corners()
    lo_all = np.minimum(np.minimum(a, b), c)
    hi_all = np.maximum(np.maximum(a, b), c)
    centroid = (a + b + c) / 3.0

    order = np.arange(mesh.n_triangles)
    bvh = Bvh(nodes=[], order=order)

    def build(start: int, count: int) -> int:
        ids = order[start : start + count]
        node = _Node(
            lo=lo_all[ids].min(axis=0), hi=hi_all[ids].max(axis=0), start=start, count=count
        )
        index = len(bvh.nodes)
        bvh.nodes.append(node)
        if count <= _LEAF_SIZE:
            return index
        spread = centroid[ids].max(axis=0) - centroid[ids].min(axis=0)
        axis = int(np.argmax(spread))
        keys = centroid[ids, axis]
        half = count // 2
        local = np.argsort(keys, kind="stable")
        order[start : start + count] = ids[local]
        node.count = 0
        node.left = build(start, half)
        node.right = build(start + half, count - half)
        return index

    build(0, mesh.n_triangles)
    return bvh


def _slab_hit(lo, hi, origin, direction) -> tuple[float, float]:
    tmin, tmax = 0.0, np.inf
    for axis in range(3):
        d = direction[axis]
        if d == 0.0:
            if origin[axis] < lo[axis] or origin[axis] > hi[axis]:
                return 1.0, 0.0
            continue
        inv = 1.0 / d
        t1 = (lo[axis] - origin[axis]) * inv
        t2 = (hi[axis] - origin[axis]) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
    return tmin, tmax


_EPS_DET = 1e-12
_T_MIN = 1e-9


def _moller_trumbore(origin, direction, v0, v1, v2):
    """Hit parameter and barycentrics for one triangle, generic scalars.

    Returns (t, u, v) or None; the accept/reject tests read primal values
    so the returned scalars differentiate the locally selected sheet.
    """
    edge1 = sub3(v1, v0)
    edge2 = sub3(v2, v0)
    pvec = cross3(direction, edge2)
    det = dot3(edge1, pvec)
    if abs(ad.value_of(det)) < _EPS_DET:
        return None
    inv = 1.0 / det
    tvec = sub3(origin, v0)
    u = dot3(tvec, pvec) * inv
    uv = ad.value_of(u)
    if uv < 0.0 or uv > 1.0:
        return None
    qvec = cross3(tvec, edge1)
    v = dot3(direction, qvec) * inv
    vv = ad.value_of(v)
    if vv < 0.0 or uv + vv > 1.0:
        return None
    t = dot3(edge2, qvec) * inv
    if ad.value_of(t) <= _T_MIN:
        return None
    return t, u, v


def intersect(
    ray: Ray,
    bvh: Bvh,
    mesh: TriangleMesh,
    stats: IntersectStats | None = None,
):
    """Nearest positive hit along the ray, two-sided, or None.

    The returned normal is the face normal flipped to oppose the ray so
    shading sees the side the camera sees.
    """
    origin_v = np.array([ad.value_of(c) for c in ray.origin], dtype=float)
    dir_v = np.array([ad.value_of(c) for c in ray.direction], dtype=float)

    best_t = np.inf
    best_id = -1
    best_res = None
    stack = [0]
    while stack:
        node = bvh.nodes[stack.pop()]
        if stats is not None:
            stats.nodes_visited += 1
        tmin, tmax = _slab_hit(node.lo, node.hi, origin_v, dir_v)
        if tmin > tmax or tmin > best_t:
            continue
        if node.count > 0:
            for tri_id in bvh.order[node.start : node.start + node.count]:
                if stats is not None:
                    stats.triangle_tests += 1
                tri = mesh.triangles[tri_id]
                res = _moller_trumbore(
                    ray.origin,
                    ray.direction,
                    mesh.vertices[tri[0]],
                    mesh.vertices[tri[1]],
                    mesh.vertices[tri[2]],
                )
                if res is None:
                    continue
                t_v = ad.value_of(res[0])
                if t_v < best_t or (t_v == best_t and tri_id < best_id):
                    best_t = t_v
                    best_id = int(tri_id)
                    best_res = res
        else:
            stack.append(node.right)
            stack.append(node.left)

    if best_id < 0:
        return None
    normal = _shading_normal(mesh, best_id, best_res[1], best_res[2])
    if float(sum(ad.value_of(normal[c]) * dir_v[c] for c in range(3))) > 0.0:
        normal = (-normal[0], -normal[1], -normal[2])
    return Hit(
        t=best_res[0],
        normal=normal,
        triangle=best_id,
        material=mesh.materials[best_id],
    )


def _shading_normal(mesh: TriangleMesh, tri_id: int, u, v):
    """Face normal, or the barycentric vertex-normal blend when smooth.

    The blend runs in the scalars of ``u``/``v``, so smooth normals carry
    derivatives of the hit position across the face.
    """
    if mesh.vertex_normals is None:
        n = mesh.normals[tri_id]
        return (n[0], n[1], n[2])
    i0, i1, i2 = mesh.triangles[tri_id]
    n0, n1, n2 = mesh.vertex_normals[i0], mesh.vertex_normals[i1], mesh.vertex_normals[i2]
    w = 1.0 - u - v
    blended = tuple(w * n0[c] + u * n1[c] + v * n2[c] for c in range(3))
    from .vec3 import normalize3

    return normalize3(blended)


def intersect_batch(origins: np.ndarray, directions: np.ndarray, mesh: TriangleMesh):
    """Primal nearest-hit query for many rays at once.

    Same Möller-Trumbore arithmetic as the single-ray path, vectorised
    over rays x triangles (chunked to bound memory).  Returns
    ``(t, tri_id, u, v)`` with ``tri_id == -1`` for misses.
    """
    origins = np.asarray(origins, dtype=float)
    directions = np.asarray(directions, dtype=float)
    n = len(origins)
    best_t = np.full(n, np.inf)
    best_id = np.full(n, -1, dtype=int)
    best_u = np.zeros(n)
    best_v = np.zeros(n)

    a, b, c = mesh.corners()
    # Component arithmetic spelled out in the same order as the scalar
    # kernel, so both paths produce bit-identical hit distances.
    e1 = b - a
    e2 = c - a
    chunk = max(1, int(4e6) // max(1, mesh.n_triangles))
    for s in range(0, n, chunk):
        o = origins[s : s + chunk][:, None, :]
        d = directions[s : s + chunk][:, None, :]
        dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
        px = dy * e2[:, 2] - dz * e2[:, 1]
        py = dz * e2[:, 0] - dx * e2[:, 2]
        pz = dx * e2[:, 1] - dy * e2[:, 0]
        det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
        ok = np.abs(det) >= _EPS_DET
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / np.where(ok, det, 1.0)
            tx = o[..., 0] - a[:, 0]
            ty = o[..., 1] - a[:, 1]
            tz = o[..., 2] - a[:, 2]
            u = (tx * px + ty * py + tz * pz) * inv
            ok &= (u >= 0.0) & (u <= 1.0)
            qx = ty * e1[:, 2] - tz * e1[:, 1]
            qy = tz * e1[:, 0] - tx * e1[:, 2]
            qz = tx * e1[:, 1] - ty * e1[:, 0]
            v = (dx * qx + dy * qy + dz * qz) * inv
            ok &= (v >= 0.0) & (u + v <= 1.0)
            t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
            ok &= t > _T_MIN
        t = np.where(ok, t, np.inf)
        arg = np.argmin(t, axis=1)
        rows = np.arange(t.shape[0])
        tbest = t[rows, arg]
        hit = np.isfinite(tbest)
        sl = slice(s, s + t.shape[0])
        best_t[sl] = np.where(hit, tbest, np.inf)
        best_id[sl] = np.where(hit, arg, -1)
        best_u[sl] = np.where(hit, u[rows, arg], 0.0)
        best_v[sl] = np.where(hit, v[rows, arg], 0.0)
    return best_t, best_id, best_u, best_v


def panel_satellite(
    bus: float = 2.0,
    panel_length: float = 3.0,
    panel_width: float = 1.8,
    panel_thickness: float = 0.06,
    gap: float = 0.4,
    cant_deg: float = 25.0,
) -> TriangleMesh:
    """Procedural test target: a cubic bus with two canted solar wings.

    The bus is a ``bus``-metre cube at the origin.  The wings are thin
    boxes extending along +/-z with their large faces leaning ``cant_deg``
    from the +x axis toward +y, so an along-track observer sees them at an
    oblique angle (no zero-measure edge-on sheets) and the mirror geometry
    has no accidental symmetry.
    """

    verts: list[list[float]] = []
    faces: list[tuple[list[int], str]] = []

    def quad(p0, p1, p2, p3, mat):
        base = len(verts)
        verts.extend([list(p0), list(p1), list(p2), list(p3)])
        faces.append(([base, base + 1, base + 2], mat))
        faces.append(([base, base + 2, base + 3], mat))

    def box(center, ax_u, ax_v, ax_w, mat):
        """Axis triple scaled to half extents, outward winding all sides."""
        c = np.asarray(center, dtype=float)
        u, v, w = (np.asarray(a, dtype=float) for a in (ax_u, ax_v, ax_w))
        quad(c + u - v - w, c + u + v - w, c + u + v + w, c + u - v + w, mat)
        quad(c - u + v - w, c - u - v - w, c - u - v + w, c - u + v + w, mat)
        quad(c + v + u - w, c + v - u - w, c + v - u + w, c + v + u + w, mat)
        quad(c - v - u - w, c - v + u - w, c - v + u + w, c - v - u + w, mat)
        quad(c + w - v - u, c + w - v + u, c + w + v + u, c + w + v - u, mat)
        quad(c - w + v - u, c - w + v + u, c - w - v + u, c - w - v - u, mat)

    h = bus / 2.0
    box((0.0, 0.0, 0.0), (h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h), "bus")

    cant = np.deg2rad(cant_deg)
    normal_ax = np.array([np.cos(cant), np.sin(cant), 0.0])
    width_ax = np.array([-np.sin(cant), np.cos(cant), 0.0])
    for side in (+1.0, -1.0):
        z0 = side * (h + gap + panel_length / 2.0)
        box(
            (0.0, 0.0, z0),
            normal_ax * (panel_thickness / 2.0),
            width_ax * (panel_width / 2.0),
            (0.0, 0.0, panel_length / 2.0),
            "panel",
        )

    mesh_vertices = np.asarray(verts, dtype=float)
    tris = []
    normals = []
    mats = []
    for corner, mat in faces:
        area2, nrm = _face_data(mesh_vertices, corner)
        tris.append(corner)
        normals.append(nrm)
        mats.append(mat)
    return TriangleMesh(
        vertices=mesh_vertices,
        triangles=np.asarray(tris, dtype=int),
        normals=np.asarray(normals, dtype=float),
        materials=mats,
    )
