"""Pinhole camera, deterministic ray-cast shading and the saturation metric.

One ray through every pixel centre, nearest-hit visibility, single-bounce
Phong shading with a binary shadow ray toward the sun.  No sampling noise
anywhere: identical inputs give bit-identical buffers, which is what makes
the finite-difference gradient checks and reproducible reports possible.

The camera eye and orientation may carry dual scalars; per-pixel ray
directions then carry the derivative of the viewing geometry, which is the
smooth part of the specular cost.  Which pixel hits which triangle is
always decided on primal values (visibility is deliberately detached).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .geometry import TriangleMesh, intersect_batch
from .vec3 import cross3, norm3, normalize3, sub3, values3

__all__ = [
    "CameraPose",
    "ImagingSettings",
    "RenderBuffers",
    "look_at",
    "pixel_ray",
    "render",
    "saturation_fraction",
    "write_ppm",
    "write_mask_ppm",
    "write_intensity_csv",
]

_SHADOW_OFFSET = 1e-4  # metres along the shading normal


@dataclass(frozen=True)
class ImagingSettings:
    """Sensor and shading knobs; defaults match the shipped scenarios."""

    width: int = 64
    height: int = 64
    vertical_fov_deg: float = 25.0
    e_sun: float = 1361.0      # W/m^2 solar constant
    gain: float = 1.0          # lumped sensor gain
    k_d: float = 0.6
    k_s: float = 0.4
    default_phong_alpha: float = 2.0
    material_alpha: dict = field(default_factory=dict)
    full_well: float | None = None  # None -> 0.8 * e_sun * k_s * gain

    def __post_init__(self):
        if not 1.0 < self.vertical_fov_deg < 120.0:
            raise ValueError(f"fov {self.vertical_fov_deg} outside (1, 120) deg")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")

    @property
    def full_well_intensity(self) -> float:
        if self.full_well is not None:
            return self.full_well
        return 0.8 * self.e_sun * self.k_s * self.gain

    def alpha_for(self, material) -> float:
        return float(self.material_alpha.get(material, self.default_phong_alpha))


@dataclass(frozen=True)
class CameraPose:
    """Eye point plus look-at basis; components may be dual scalars."""

    eye: tuple
    right: tuple
    up: tuple
    forward: tuple
    vertical_fov_deg: float
    width: int
    height: int


_FALLBACK_AXES = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))


def look_at(
    eye,
    target_point=(0.0, 0.0, 0.0),
    up_hint=(0.0, 0.0, 1.0),
    vertical_fov_deg: float = 25.0,
    width: int = 64,
    height: int = 64,
) -> CameraPose:
    """Camera at ``eye`` pointing at ``target_point``.

    If the view direction is (near) parallel to the up hint, the next
    canonical axis that is not degenerate takes over.
    """
    offset = sub3(target_point, eye)
    if float(ad.value_of(norm3(offset))) == 0.0:
        raise ValueError("look_at: eye coincides with the target point")
    forward = normalize3(offset)
    right = None
    for hint in (tuple(up_hint),) + _FALLBACK_AXES:
        span = cross3(forward, hint)
        if float(ad.value_of(norm3(span))) >= 1e-6:
            right = normalize3(span)
            break
    if right is None:  # pragma: no cover - three canonical axes cannot all fail
        raise ValueError("look_at: no usable up axis")
    up = cross3(right, forward)
    return CameraPose(
        eye=tuple(eye),
        right=right,
        up=up,
        forward=forward,
        vertical_fov_deg=vertical_fov_deg,
        width=width,
        height=height,
    )


def _tan_half_fov(camera: CameraPose) -> float:
    return math.tan(math.radians(camera.vertical_fov_deg) / 2.0)


def pixel_ray(camera: CameraPose, i: int, j: int):
    """Unit direction through the centre of pixel (row i, column j)."""
    if not (0 <= i < camera.height and 0 <= j < camera.width):
        raise IndexError(f"pixel ({i}, {j}) outside {camera.height}x{camera.width}")
    tanv = _tan_half_fov(camera)
    aspect = camera.width / camera.height
    u = (2.0 * (j + 0.5) / camera.width - 1.0) * tanv * aspect
    v = (1.0 - 2.0 * (i + 0.5) / camera.height) * tanv
    d = tuple(
        camera.forward[c] + camera.right[c] * u + camera.up[c] * v for c in range(3)
    )
    return normalize3(d)


def _ray_grid(camera: CameraPose):
    """Per-pixel unit directions, vectorised; same arithmetic as pixel_ray."""
    tanv = _tan_half_fov(camera)
    aspect = camera.width / camera.height
    jj = np.arange(camera.width)
    ii = np.arange(camera.height)
    u = (2.0 * (jj + 0.5) / camera.width - 1.0) * tanv * aspect
    v = (1.0 - 2.0 * (ii + 0.5) / camera.height) * tanv
    uu, vv = np.meshgrid(u, v)

    comps = []
    for c in range(3):
        comps.append(camera.forward[c] + camera.right[c] * uu + camera.up[c] * vv)
    n2 = comps[0] * comps[0] + comps[1] * comps[1] + comps[2] * comps[2]
    norm = ad.sqrt(n2)
    # divide (not multiply by the reciprocal) to stay bit-identical with
    # the scalar pixel_ray path
    return tuple(comp / norm for comp in comps)


@dataclass
class RenderBuffers:
    """Per-pixel outputs of one snapshot render.

    ``ray_dir`` components and ``intensity`` keep whatever scalar type the
    camera carried; ``normals``/``alpha``/``lit`` are compacted over the
    masked pixels in row-major order.
    """

    width: int
    height: int
    mask: np.ndarray        # (H, W) bool, target pixels
    tri_id: np.ndarray      # (H, W) int, -1 off-target
    normals: np.ndarray     # (n_hit, 3) camera-facing unit normals
    ray_dir: tuple          # 3 x (H, W) generic scalars, camera -> scene
    intensity: object       # (H, W) generic scalar, W m^-2 sr^-1
    lit: np.ndarray         # (n_hit,) bool, False in cast shadow
    alpha: np.ndarray       # (n_hit,) Phong exponents

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())

    def mask_fraction(self) -> float:
        return float(self.mask.mean())

    def intensity_values(self) -> np.ndarray:
        return np.asarray(ad.value_of(self.intensity), dtype=float)


def render(
    mesh: TriangleMesh,
    camera: CameraPose,
    sun_dir,
    settings: ImagingSettings,
) -> RenderBuffers:
    """Shade one frame of the target under the given sun direction.

    The scene lives in the render frame: mesh about the origin, camera eye
    and sun direction already expressed in that frame.  Per-pixel normals
    are part of the detached visibility decision (for smooth meshes the
    interpolated normal is evaluated at the primal hit point), so camera
    derivatives flow only through the view rays.
    """
    h, w = camera.height, camera.width
    dx, dy, dz = _ray_grid(camera)
    dirs = np.stack(
        [np.asarray(ad.value_of(c), dtype=float) for c in (dx, dy, dz)], axis=-1
    ).reshape(-1, 3)
    eye = np.array(values3(camera.eye))
    origins = np.broadcast_to(eye, dirs.shape)

    t, tri, bary_u, bary_v = intersect_batch(origins, dirs, mesh)
    mask = (tri >= 0).reshape(h, w)
    ids = tri[tri >= 0]
    n_hit = len(ids)

    if n_hit == 0:
        return RenderBuffers(
            width=w,
            height=h,
            mask=mask,
            tri_id=tri.reshape(h, w),
            normals=np.zeros((0, 3)),
            ray_dir=(dx, dy, dz),
            intensity=np.zeros((h, w)),
            lit=np.zeros(0, dtype=bool),
            alpha=np.zeros(0),
        )

    sun = np.asarray(values3(sun_dir), dtype=float)
    hit_dirs = dirs[tri >= 0]
    if mesh.vertex_normals is None:
        normals = mesh.normals[ids]
    else:
        corners = mesh.triangles[ids]
        u = bary_u[tri >= 0, None]
        v = bary_v[tri >= 0, None]
        normals = (
            (1.0 - u - v) * mesh.vertex_normals[corners[:, 0]]
            + u * mesh.vertex_normals[corners[:, 1]]
            + v * mesh.vertex_normals[corners[:, 2]]
        )
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    flip = np.einsum("ij,ij->i", normals, hit_dirs) > 0.0
    normals = np.where(flip[:, None], -normals, normals)

    # Hard binary shadowing, primal only.
    points = origins[tri >= 0] + t[tri >= 0, None] * hit_dirs
    sh_origins = points + _SHADOW_OFFSET * normals
    sh_dirs = np.broadcast_to(sun, sh_origins.shape)
    _, sh_tri, _, _ = intersect_batch(sh_origins, sh_dirs, mesh)
    lit = sh_tri < 0

    alpha_by_tri = np.array([settings.alpha_for(m) for m in mesh.materials])
    alpha = alpha_by_tri[ids]

    ndotl = normals @ sun
    diffuse = np.maximum(0.0, ndotl)
    omega = 2.0 * ndotl[:, None] * normals - sun  # mirror of the sun about n

    nu = tuple(ad.gather(c, mask) for c in (dx, dy, dz))
    spec_dot = -(omega[:, 0] * nu[0] + omega[:, 1] * nu[1] + omega[:, 2] * nu[2])
    spec = ad.clamped_pow(spec_dot, alpha)

    scale = settings.e_sun * settings.gain
    shade = (spec * settings.k_s + settings.k_d * diffuse) * lit.astype(float) * scale
    intensity = ad.scatter(shade, mask, (h, w))

    return RenderBuffers(
        width=w,
        height=h,
        mask=mask,
        tri_id=tri.reshape(h, w),
        normals=normals,
        ray_dir=(dx, dy, dz),
        intensity=intensity,
        lit=lit,
        alpha=alpha,
    )


def saturation_fraction(buffers: RenderBuffers, full_well_intensity: float) -> float:
    """Share of target pixels at or above the sensor full well; 0 if none."""
    n = buffers.n_masked
    if n == 0:
        return 0.0
    values = buffers.intensity_values()[buffers.mask]
    return float(np.count_nonzero(values >= full_well_intensity)) / n


# -- exports -------------------------------------------------------------


def write_ppm(path, intensity: np.ndarray, full_well_intensity: float) -> None:
    """8-bit binary PPM of intensity/full-well through a 1/2.2 gamma."""
    tone = np.clip(np.asarray(intensity, dtype=float) / full_well_intensity, 0.0, 1.0)
    byte = (np.power(tone, 1.0 / 2.2) * 255.0 + 0.5).astype(np.uint8)
    h, w = byte.shape
    rgb = np.repeat(byte[:, :, None], 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def write_mask_ppm(path, mask: np.ndarray) -> None:
    byte = np.where(mask, 255, 0).astype(np.uint8)
    h, w = byte.shape
    rgb = np.repeat(byte[:, :, None], 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def write_intensity_csv(path, intensity: np.ndarray) -> None:
    """Raw per-pixel intensities as `row,col,intensity` lines."""
    arr = np.asarray(intensity, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("row,col,intensity\n")
        for i in range(arr.shape[0]):
            for j in range(arr.shape[1]):
                fh.write(f"{i},{j},{arr[i, j]:.9g}\n")
