"""Chaser initialisation, Adam and the outer trajectory-design loop.

The chaser starts in the target's orbit trailed by the desired imaging
distance (a mean-anomaly shift of d/a radians), then the selected elements
are optimised in natural units (radians, dimensionless eccentricity) with
bias-corrected Adam at a deliberately small learning rate; the adaptive
normalisation is what copes with the wildly different sensitivities of the
cost to each element.

Each iteration seeds the decision variables into dual slots, evaluates the
weighted trajectory cost once, and steps.  Angles are re-wrapped and the
eccentricity re-clamped after every step.  The loop is sequential by
nature; a cancellation callback is honoured between iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .ephemeris import relative_position
from .imaging import look_at, render, saturation_fraction
from .objective import (
    CostBreakdown,
    InspectionConfig,
    TargetTrack,
    build_target_track,
    trajectory_cost,
)
from .sgp4 import (
    PropagationError,
    PropagatorModel,
    elements_from_tle,
    semi_major_axis,
)
from .tle import Tle, perturb

__all__ = [
    "AdamHyper",
    "AdamState",
    "OptimizerSettings",
    "HistoryRow",
    "OptimizationResult",
    "ReportBundle",
    "NonFiniteGradientError",
    "init_chaser",
    "adam_step",
    "optimize",
    "evaluate_report",
    "write_history_csv",
]

_TWOPI = 2.0 * math.pi
_DEG = math.pi / 180.0

#: decision variables optimised when none are named
DEFAULT_DECISION_VARIABLES = ("inclination", "mean_anomaly", "eccentricity")

_ANGLE_VARIABLES = ("inclination", "raan", "arg_perigee", "mean_anomaly")


class NonFiniteGradientError(RuntimeError):
    """Gradient went non-finite; carries the offending state for diagnosis."""

    def __init__(self, step: int, params: np.ndarray, grad: np.ndarray):
        self.step = step
        self.params = np.array(params)
        self.grad = np.array(grad)
        super().__init__(
            f"non-finite gradient at step {step}: params={params.tolist()} "
            f"grad={grad.tolist()}"
        )


def init_chaser(target: Tle, d: float) -> Tle:
    """Chaser TLE trailing the target by ``d`` metres along track.

    Same elements as the target except the mean anomaly, shifted back by
    the angle subtended by ``d`` at the target's semi-major axis.
    """
    if d < 0:
        raise ValueError("imaging distance must be non-negative")
    a_t = semi_major_axis(target)
    delta_m_deg = (d / 1000.0) / a_t / _DEG
    return perturb(target, {"mean_anomaly": -delta_m_deg})


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 4e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    hyper: AdamHyper = field(default_factory=AdamHyper)

    @classmethod
    def fresh(cls, k: int, hyper: AdamHyper | None = None) -> "AdamState":
        return cls(m=np.zeros(k), v=np.zeros(k), hyper=hyper or AdamHyper())


def adam_step(params: np.ndarray, grad: np.ndarray, state: AdamState):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError(state.step_count + 1, params, grad)
    h = state.hyper
    t = state.step_count + 1
    m = h.beta1 * state.m + (1.0 - h.beta1) * grad
    v = h.beta2 * state.v + (1.0 - h.beta2) * grad * grad
    m_hat = m / (1.0 - h.beta1**t)
    v_hat = v / (1.0 - h.beta2**t)
    new_params = params - h.lr * m_hat / (np.sqrt(v_hat) + h.eps)
    return new_params, AdamState(m=m, v=v, step_count=t, hyper=h)


@dataclass(frozen=True)
class OptimizerSettings:
    iterations: int = 200
    hyper: AdamHyper = field(default_factory=AdamHyper)
    decision_variables: tuple = DEFAULT_DECISION_VARIABLES
    window: int = 20              # stop when the total stalls over this many steps
    window_rel_tol: float = 1e-4
    scale: dict = field(default_factory=dict)  # per-variable preconditioning

    def __post_init__(self):
        for name in self.decision_variables:
            if name not in (
                "inclination",
                "raan",
                "eccentricity",
                "arg_perigee",
                "mean_anomaly",
                "mean_motion",
            ):
                raise ValueError(f"unknown decision variable {name!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        for name, s in self.scale.items():
            if s <= 0:
                raise ValueError(f"scale for {name!r} must be positive")


def _natural_value(tle: Tle, name: str) -> float:
    if name == "eccentricity":
        return tle.eccentricity
    if name == "mean_motion":
        return tle.mean_motion * _TWOPI / 1440.0
    return getattr(tle, name) * _DEG


def _tle_with(tle: Tle, names, values) -> Tle:
    changes = {}
    for name, value in zip(names, values):
        if name == "eccentricity":
            changes[name] = float(value)
        elif name == "mean_motion":
            changes[name] = float(value) * 1440.0 / _TWOPI
        else:
            changes[name] = float(value) / _DEG
    return replace(tle, **changes)


def _canonicalise(names, params: np.ndarray) -> np.ndarray:
    out = params.copy()
    for j, name in enumerate(names):
        if name == "inclination":
            x = out[j] % _TWOPI
            out[j] = _TWOPI - x if x > math.pi else x
        elif name in _ANGLE_VARIABLES:
            out[j] = out[j] % _TWOPI
        elif name == "eccentricity":
            out[j] = min(max(out[j], 0.0), 0.9999)
    return out


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    total: float
    specular_sum: float
    distance_sum: float
    inclination_rad: float
    mean_anomaly_rad: float
    eccentricity: float
    grad_norm: float


@dataclass
class OptimizationResult:
    initial_tle: Tle
    final_tle: Tle
    decision_variables: tuple
    history: list
    converged: bool
    aborted: bool = False
    abort_reason: str | None = None

    @property
    def iterations_run(self) -> int:
        return len(self.history)


def optimize(
    config: InspectionConfig,
    settings: OptimizerSettings | None = None,
    chaser0: Tle | None = None,
    track: TargetTrack | None = None,
    should_stop=None,
) -> OptimizationResult:
    """Minimise the trajectory cost over the chosen chaser elements.

    Runs at most ``settings.iterations`` evaluations, stopping early when
    the total cost moves less than the relative window tolerance.  A
    propagation failure or non-finite gradient aborts the run and returns
    everything up to the last good iterate.
    """
    settings = settings or OptimizerSettings()
    if chaser0 is None:
        chaser0 = init_chaser(config.target, config.weights.d)
    if track is None:
        track = build_target_track(config)

    names = tuple(settings.decision_variables)
    k = len(names)
    scales = np.array([settings.scale.get(name, 1.0) for name in names])
    params = np.array([_natural_value(chaser0, name) for name in names])
    state = AdamState.fresh(k, settings.hyper)

    history: list[HistoryRow] = []
    converged = False
    aborted = False
    abort_reason = None
    totals: list[float] = []

    for iteration in range(settings.iterations):
        if should_stop is not None and should_stop():
            break
        overrides = {name: ad.seed(params[j], j, k) for j, name in enumerate(names)}
        try:
            elements = elements_from_tle(chaser0, overrides)
            cost = trajectory_cost(elements, config, track)
            current = _tle_with(chaser0, names, params)
            history.append(_history_row(iteration, cost, current))
            totals.append(cost.total)

            grad = cost.grad_total * scales
            scaled, state = adam_step(params / scales, grad, state)
            params = _canonicalise(names, scaled * scales)
        except (PropagationError, NonFiniteGradientError) as exc:
            aborted = True
            abort_reason = f"{type(exc).__name__}: {exc}"
            break

        w = settings.window
        if len(totals) > w:
            window = totals[-(w + 1):]
            ref = max(abs(window[0]), 1e-30)
            if max(window) - min(window) < settings.window_rel_tol * ref:
                converged = True
                break

    final_tle = _tle_with(chaser0, names, params)
    return OptimizationResult(
        initial_tle=chaser0,
        final_tle=final_tle,
        decision_variables=names,
        history=history,
        converged=converged,
        aborted=aborted,
        abort_reason=abort_reason,
    )


def _history_row(iteration: int, cost: CostBreakdown, current: Tle) -> HistoryRow:
    return HistoryRow(
        iteration=iteration,
        total=cost.total,
        specular_sum=cost.specular_sum,
        distance_sum=cost.distance_sum,
        inclination_rad=current.inclination * _DEG,
        mean_anomaly_rad=current.mean_anomaly * _DEG,
        eccentricity=current.eccentricity,
        grad_norm=float(np.linalg.norm(cost.grad_total)),
    )


def write_history_csv(path, result: OptimizationResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("iter,total,L_S_sum,L_d_sum,i_c,M_c,e_c,grad_norm\n")
        for row in result.history:
            fh.write(
                f"{row.iteration},{row.total!r},{row.specular_sum!r},"
                f"{row.distance_sum!r},{row.inclination_rad!r},"
                f"{row.mean_anomaly_rad!r},{row.eccentricity!r},{row.grad_norm!r}\n"
            )


# -- report evaluation ---------------------------------------------------


@dataclass
class SaturationPoint:
    t_s: float
    eclipsed: bool
    initial: float | None
    optimized: float | None


@dataclass
class ReportBundle:
    """Derived artefacts of one optimisation run, all reproducible."""

    times_s: np.ndarray            # relative-orbit sample times
    window_mask: np.ndarray        # samples inside the inspection window
    rel_orbit_initial: np.ndarray  # (n, 3) RTN metres
    rel_orbit_optimized: np.ndarray
    saturation: list               # SaturationPoint per snapshot
    initial_cost: CostBreakdown
    optimized_cost: CostBreakdown
    max_cost_index_initial: int
    max_cost_index_optimized: int
    max_frame_initial: np.ndarray  # intensity grids at the worst snapshots
    max_frame_optimized: np.ndarray

    @property
    def saturation_sum_initial(self) -> float:
        return sum(p.initial for p in self.saturation if p.initial is not None)

    @property
    def saturation_sum_optimized(self) -> float:
        return sum(p.optimized for p in self.saturation if p.optimized is not None)


def _relative_trace(chaser: Tle, config: InspectionConfig, times_s: np.ndarray):
    model_c = PropagatorModel(elements_from_tle(chaser), config.gravity)
    model_t = PropagatorModel(elements_from_tle(config.target), config.gravity)
    start = config.start_jd
    offset_t = start.diff_days(config.target.epoch) * 1440.0
    offset_c = start.diff_days(chaser.epoch) * 1440.0
    out = np.zeros((len(times_s), 3))
    for i, t_s in enumerate(times_s):
        st = model_t.propagate(offset_t + t_s / 60.0)
        sc = model_c.propagate(offset_c + t_s / 60.0)
        out[i] = relative_position(sc.position, st.position, st.velocity)
    return out


def _snapshot_render(chaser: Tle, config: InspectionConfig, track, snap, imaging):
    model_c = PropagatorModel(elements_from_tle(chaser), config.gravity)
    tsince = snap.jd.diff_days(chaser.epoch) * 1440.0
    r_c = model_c.propagate(tsince).position
    eye = relative_position(r_c, snap.r_t, snap.v_t)
    camera = look_at(
        eye,
        (0.0, 0.0, 0.0),
        vertical_fov_deg=imaging.vertical_fov_deg,
        width=imaging.width,
        height=imaging.height,
    )
    return render(track.mesh_render, camera, snap.sun_render, imaging)


def evaluate_report(
    result: OptimizationResult,
    config: InspectionConfig,
    resolution: int | None = None,
    orbit_samples: int = 256,
    threads: int = 1,
) -> ReportBundle:
    """Relative-orbit traces, saturation series and worst-case frames.

    Pure function of the persisted result and configuration, so reports
    regenerate bit-identically; ``threads`` caps workers for the snapshot
    renders (results are assembled in index order either way).
    """
    imaging = config.imaging
    if resolution is not None:
        imaging = replace(imaging, width=resolution, height=resolution)

    period_s = 86400.0 / config.target.mean_motion
    horizon = max(period_s, config.duration_seconds)
    times = np.linspace(0.0, horizon, orbit_samples + 1)
    window_mask = times <= config.duration_seconds + 1e-9

    track = build_target_track(config)
    cost_initial = trajectory_cost(
        elements_from_tle(result.initial_tle), config, track
    )
    cost_final = trajectory_cost(elements_from_tle(result.final_tle), config, track)

    jobs = [
        (label, tle, snap)
        for snap in track.snapshots
        if not snap.eclipsed
        for label, tle in (("initial", result.initial_tle), ("optimized", result.final_tle))
    ]

    def run_job(job):
        label, tle, snap = job
        return _snapshot_render(tle, config, track, snap, imaging)

    if threads > 1 and jobs:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rendered = list(pool.map(run_job, jobs))
    else:
        rendered = [run_job(job) for job in jobs]

    saturation: list[SaturationPoint] = []
    full_well = imaging.full_well_intensity
    frames: dict[tuple[str, int], np.ndarray] = {}
    by_key = {
        (label, snap.index): buffers
        for (label, _, snap), buffers in zip(jobs, rendered)
    }
    for snap in track.snapshots:
        if snap.eclipsed:
            saturation.append(SaturationPoint(snap.t_s, True, None, None))
            continue
        values = {}
        for label in ("initial", "optimized"):
            buffers = by_key[(label, snap.index)]
            values[label] = saturation_fraction(buffers, full_well)
            frames[(label, snap.index)] = buffers.intensity_values()
        saturation.append(
            SaturationPoint(snap.t_s, False, values["initial"], values["optimized"])
        )

    idx_init = int(np.argmax(cost_initial.specular))
    idx_opt = int(np.argmax(cost_final.specular))

    def frame_for(label: str, index: int) -> np.ndarray:
        key = (label, index)
        if key not in frames:  # worst snapshot can be eclipsed: render it anyway
            tle = result.initial_tle if label == "initial" else result.final_tle
            buffers = _snapshot_render(tle, config, track, track.snapshots[index], imaging)
            frames[key] = buffers.intensity_values()
        return frames[key]

    return ReportBundle(
        times_s=times,
        window_mask=window_mask,
        rel_orbit_initial=_relative_trace(result.initial_tle, config, times),
        rel_orbit_optimized=_relative_trace(result.final_tle, config, times),
        saturation=saturation,
        initial_cost=cost_initial,
        optimized_cost=cost_final,
        max_cost_index_initial=idx_init,
        max_cost_index_optimized=idx_opt,
        max_frame_initial=frame_for("initial", idx_init),
        max_frame_optimized=frame_for("optimized", idx_opt),
    )
