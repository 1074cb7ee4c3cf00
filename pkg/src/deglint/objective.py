"""Inspection cost terms and their weighted sum over a snapshot window.

The specular term is the masked pixel average of the clamped, exponentiated
alignment between the mirror direction of the sun and the outgoing view
ray; the distance term is a squared error between chaser-target separation
and the desired imaging range.  Both are evaluated at N+1 evenly spaced
snapshots over the inspection window and accumulate with fixed ordering so
runs are bit-reproducible.

Gradients with respect to the seeded chaser elements flow through the
propagated chaser position into the camera pose and the per-pixel view
rays; the target track, sun direction and visibility masks are constants
of each snapshot.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .ephemeris import (
    JulianDate,
    is_eclipsed,
    relative_position,
    rtn_frame,
    sun_direction,
)
from .geometry import TriangleMesh
from .imaging import ImagingSettings, RenderBuffers, look_at, render
from .sgp4 import (
    GravityModel,
    MeanElements,
    PropagatorModel,
    WGS72,
    elements_from_tle,
)
from .tle import Tle
from .vec3 import dot3, norm3, sub3, values3

__all__ = [
    "CostWeights",
    "CostBreakdown",
    "InspectionConfig",
    "SnapshotContext",
    "TargetTrack",
    "reflection_vector",
    "specular_cost",
    "distance_cost",
    "build_target_track",
    "trajectory_cost",
]

_DEGENERATE_SEPARATION_M = 1e-6


@dataclass(frozen=True)
class CostWeights:
    """Trade-off weights and the related geometry constants."""

    d: float                      # desired imaging distance, m
    lambda_s: float = 1.0
    lambda_d: float | None = None  # m^-2; None picks 1/d^2 so both terms are O(1)
    alpha: float = 2.0             # global Phong exponent fallback

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("imaging distance d must be positive")
        if self.lambda_s < 0 or (self.lambda_d is not None and self.lambda_d < 0):
            raise ValueError("cost weights must be non-negative")
        if self.alpha < 1:
            raise ValueError("phong exponent must be >= 1")

    @property
    def lambda_d_value(self) -> float:
        return 1.0 / (self.d * self.d) if self.lambda_d is None else self.lambda_d


def reflection_vector(l_hat, n_hat):
    """Mirror the (unit) sun direction about the (unit) surface normal."""
    two_ln = 2.0 * dot3(l_hat, n_hat)
    return (
        two_ln * n_hat[0] - l_hat[0],
        two_ln * n_hat[1] - l_hat[1],
        two_ln * n_hat[2] - l_hat[2],
    )


def specular_cost(buffers: RenderBuffers, sun_dir, alpha=None):
    """Masked average of max(0, reflection . outgoing view)^alpha.

    The outgoing view direction is the negated pixel ray, so a reflection
    lobe centred on the camera scores 1 per pixel.  Per-material exponents
    from the render buffers apply unless ``alpha`` overrides them.  An
    empty mask scores 0 and warns.
    """
    if buffers.n_masked == 0:
        warnings.warn("specular cost over an empty target mask", stacklevel=2)
        return 0.0
    n = buffers.normals
    lx, ly, lz = sun_dir[0], sun_dir[1], sun_dir[2]
    ndotl = n[:, 0] * lx + n[:, 1] * ly + n[:, 2] * lz
    two_ln = 2.0 * ndotl
    wx = two_ln * n[:, 0] - lx
    wy = two_ln * n[:, 1] - ly
    wz = two_ln * n[:, 2] - lz
    nu = tuple(ad.gather(c, buffers.mask) for c in buffers.ray_dir)
    aligned = -(wx * nu[0] + wy * nu[1] + wz * nu[2])
    exponents = buffers.alpha if alpha is None else alpha
    return ad.dmean(ad.clamped_pow(aligned, exponents))


def distance_cost(r_c, r_t, d: float, convention: str = "norm"):
    """Squared error between separation and the desired imaging distance.

    ``convention`` selects what is compared against ``d``: the separation
    in metres ("norm", default) or its square ("norm_squared", the literal
    but dimensionally odd reading; kept selectable).
    """
    if d <= 0:
        raise ValueError("imaging distance d must be positive")
    sep_m = norm3(sub3(r_c, r_t)) * 1000.0
    if convention == "norm":
        err = sep_m - d
    elif convention == "norm_squared":
        err = sep_m * sep_m - d
    else:
        raise ValueError(f"unknown distance cost convention {convention!r}")
    return err * err


@dataclass(frozen=True)
class InspectionConfig:
    """Everything a trajectory evaluation needs besides the chaser elements."""

    target: Tle
    mesh: TriangleMesh
    weights: CostWeights
    imaging: ImagingSettings
    n_snapshots: int = 16          # N; snapshots run i = 0..N inclusive
    duration_s: float | None = None  # None -> one target orbital period
    window_start: JulianDate | None = None  # None -> target epoch
    attitude: np.ndarray = field(default_factory=lambda: np.eye(3))
    gravity: GravityModel = WGS72
    distance_convention: str = "norm"

    def __post_init__(self):
        if self.n_snapshots < 1:
            raise ValueError("need at least one snapshot interval (N >= 1)")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ValueError("inspection duration must be positive")

    @property
    def duration_seconds(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        return 86400.0 / self.target.mean_motion

    @property
    def start_jd(self) -> JulianDate:
        return self.window_start if self.window_start is not None else self.target.epoch


@dataclass(frozen=True)
class SnapshotContext:
    """Per-snapshot target-side quantities, all primal."""

    index: int
    t_s: float                 # seconds past window start
    jd: JulianDate
    r_t: tuple
    v_t: tuple
    sun_teme: tuple
    sun_render: tuple          # rotated into the target RTN frame
    eclipsed: bool


@dataclass(frozen=True)
class TargetTrack:
    """Precomputed target states, sun vectors and the render-frame mesh."""

    snapshots: tuple
    mesh_render: TriangleMesh


def build_target_track(config: InspectionConfig) -> TargetTrack:
    """Propagate the target and sun over the window once.

    Everything here is independent of the chaser elements, so optimisation
    loops reuse one track across all iterations.
    """
    model_t = PropagatorModel(elements_from_tle(config.target), config.gravity)
    start = config.start_jd
    t_offset_min = start.diff_days(config.target.epoch) * 1440.0
    duration = config.duration_seconds
    n = config.n_snapshots

    snapshots = []
    for i in range(n + 1):
        t_s = i * duration / n
        tsince = t_offset_min + t_s / 60.0
        state = model_t.propagate(tsince)
        jd_i = start.add_seconds(t_s)
        sun = sun_direction(jd_i)
        r_t = tuple(state.position)
        v_t = tuple(state.velocity)
        q = rtn_frame(values3(r_t), values3(v_t))
        sun_render = tuple(dot3(row, values3(sun.direction_teme)) for row in q)
        snapshots.append(
            SnapshotContext(
                index=i,
                t_s=t_s,
                jd=jd_i,
                r_t=r_t,
                v_t=v_t,
                sun_teme=sun.direction_teme,
                sun_render=sun_render,
                eclipsed=is_eclipsed(r_t, sun),
            )
        )
    return TargetTrack(
        snapshots=tuple(snapshots),
        mesh_render=config.mesh.transformed(config.attitude),
    )


@dataclass
class CostBreakdown:
    """Weighted trajectory cost with per-snapshot parts and its gradient."""

    total: float
    grad_total: np.ndarray
    specular: list          # per snapshot, dimensionless in [0, 1]
    distance: list          # per snapshot, m^2
    times_s: list
    eclipsed: list
    empty_mask: list
    degenerate: list
    lambda_s: float
    lambda_d: float

    @property
    def specular_sum(self) -> float:
        return float(sum(self.specular))

    @property
    def distance_sum(self) -> float:
        return float(sum(self.distance))


def trajectory_cost(
    elements_c: MeanElements,
    config: InspectionConfig,
    track: TargetTrack | None = None,
) -> CostBreakdown:
    """Weighted sum of specular and distance costs over the window.

    Eclipsed snapshots contribute zero specular cost (the distance term
    always counts); a coincident chaser/target or an empty target mask is
    flagged and likewise scores zero specular cost.
    """
    if track is None:
        track = build_target_track(config)
    model_c = PropagatorModel(elements_c, config.gravity)
    lam_s = config.weights.lambda_s
    lam_d = config.weights.lambda_d_value
    k = _dual_width(elements_c)

    total = 0.0
    spec_parts: list[float] = []
    dist_parts: list[float] = []
    eclipsed_flags: list[bool] = []
    empty_flags: list[bool] = []
    degen_flags: list[bool] = []

    for snap in track.snapshots:
        tsince_c = snap.jd.diff_days(elements_c.epoch) * 1440.0
        r_c = model_c.propagate(tsince_c).position

        l_d = distance_cost(r_c, snap.r_t, config.weights.d, config.distance_convention)

        l_s = 0.0
        empty = False
        degenerate = False
        if not snap.eclipsed:
            eye = relative_position(r_c, snap.r_t, snap.v_t)
            if float(ad.value_of(norm3(eye))) < _DEGENERATE_SEPARATION_M:
                degenerate = True
                warnings.warn(
                    f"chaser coincides with target at t={snap.t_s:.1f}s; "
                    "no view direction",
                    stacklevel=2,
                )
            else:
                camera = look_at(
                    eye,
                    (0.0, 0.0, 0.0),
                    vertical_fov_deg=config.imaging.vertical_fov_deg,
                    width=config.imaging.width,
                    height=config.imaging.height,
                )
                buffers = render(track.mesh_render, camera, snap.sun_render, config.imaging)
                if buffers.n_masked == 0:
                    empty = True
                else:
                    l_s = specular_cost(buffers, snap.sun_render)

        total = total + lam_s * l_s + lam_d * l_d
        spec_parts.append(float(ad.value_of(l_s)))
        dist_parts.append(float(ad.value_of(l_d)))
        eclipsed_flags.append(snap.eclipsed)
        empty_flags.append(empty)
        degen_flags.append(degenerate)

    return CostBreakdown(
        total=float(ad.value_of(total)),
        grad_total=ad.grad_of(total, k),
        specular=spec_parts,
        distance=dist_parts,
        times_s=[s.t_s for s in track.snapshots],
        eclipsed=eclipsed_flags,
        empty_mask=empty_flags,
        degenerate=degen_flags,
        lambda_s=lam_s,
        lambda_d=lam_d,
    )


def _dual_width(elements: MeanElements) -> int:
    for name in ("inclo", "mo", "ecco", "nodeo", "argpo", "no_kozai", "bstar"):
        value = getattr(elements, name)
        if isinstance(value, ad.Dual):
            return value.k
    return 3
