"""Command-line surface: validate, render, optimize, report.

Configuration is a flat ``dotted.key = value`` text file; every run writes
the exact canonical snapshot of the configuration it used into its output
directory, so any report can be regenerated bit-identically later.

Exit codes: 0 ok, 2 configuration/input error, 3 numeric failure,
4 validation threshold exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import svgplot
from .ephemeris import (
    is_eclipsed,
    julian_day,
    relative_position,
    rtn_frame,
    sun_direction,
)
from .geometry import MeshError, load_mesh, panel_satellite
from .imaging import (
    ImagingSettings,
    look_at,
    render,
    saturation_fraction,
    write_intensity_csv,
    write_mask_ppm,
    write_ppm,
)
from .objective import (
    CostWeights,
    InspectionConfig,
    build_target_track,
    trajectory_cost,
)
from .optimizer import (
    AdamHyper,
    HistoryRow,
    OptimizationResult,
    OptimizerSettings,
    evaluate_report,
    init_chaser,
    optimize,
    write_history_csv,
)
from .sgp4 import (
    PropagationError,
    PropagatorModel,
    UnsupportedRegimeError,
    WGS72,
    WGS84,
    elements_from_tle,
)
from .tle import Tle, TleError, parse_file, serialize
from .vec3 import dot3, values3

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "target_tle",
    "mesh",
    "epoch",
    "out",
    "threads",
    "gravity",
    "distance_cost_convention",
    "inspection.T",
    "inspection.N",
    "inspection.d",
    "weights.lambda_S",
    "weights.lambda_d",
    "weights.alpha",
    "optimizer.lr",
    "optimizer.iterations",
    "optimizer.decision_variables",
    "optimizer.window",
    "optimizer.window_rel_tol",
    "imaging.resolution",
    "imaging.fov",
    "imaging.gain",
    "imaging.full_well",
    "imaging.k_d",
    "imaging.k_s",
    "report.resolution",
    "attitude.yaw_deg",
    "attitude.pitch_deg",
    "attitude.roll_deg",
}
_PREFIX_KEYS = ("imaging.material_alpha.",)


class RunConfig:
    """Parsed configuration plus the machinery it assembles."""

    def __init__(self, values: dict, base_dir: Path):
        self.values = dict(values)
        self.base_dir = base_dir
        for key in values:
            if key not in _KNOWN_KEYS and not key.startswith(_PREFIX_KEYS):
                raise ConfigError(f"unknown configuration key {key!r}")
        if "target_tle" not in values:
            raise ConfigError("missing required key 'target_tle'")
        self.target_path = self._resolve(values["target_tle"])
        if not self.target_path.is_file():
            raise ConfigError(f"target TLE file not found: {self.target_path}")
        self.mesh_source = values.get("mesh", "builtin:panel_satellite")
        if not self.mesh_source.startswith("builtin:"):
            if not self._resolve(self.mesh_source).is_file():
                raise ConfigError(f"mesh file not found: {self.mesh_source}")

    def _resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else (self.base_dir / path)

    # typed getters ------------------------------------------------------

    def _get(self, key, default=None):
        return self.values.get(key, default)

    def get_float(self, key, default=None):
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: not a number: {raw!r}") from None

    def get_int(self, key, default=None):
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: not an integer: {raw!r}") from None

    # assembled objects --------------------------------------------------

    def load_target(self) -> Tle:
        try:
            return parse_file(self.target_path.read_text())
        except TleError as exc:
            raise ConfigError(f"target TLE: {exc}") from exc

    def load_mesh(self):
        if self.mesh_source.startswith("builtin:"):
            name = self.mesh_source.split(":", 1)[1]
            if name != "panel_satellite":
                raise ConfigError(f"unknown builtin mesh {name!r}")
            return panel_satellite()
        try:
            return load_mesh(self._resolve(self.mesh_source).read_text())
        except MeshError as exc:
            raise ConfigError(f"mesh: {exc}") from exc

    def gravity(self):
        name = self._get("gravity", "wgs72").lower()
        if name == "wgs72":
            return WGS72
        if name == "wgs84":
            return WGS84
        raise ConfigError(f"unknown gravity model {name!r}")

    def imaging(self, resolution: int | None = None) -> ImagingSettings:
        res = resolution or self.get_int("imaging.resolution", 64)
        material_alpha = {}
        for key, raw in self.values.items():
            if key.startswith("imaging.material_alpha."):
                material_alpha[key.rsplit(".", 1)[1]] = float(raw)
        try:
            return ImagingSettings(
                width=res,
                height=res,
                vertical_fov_deg=self.get_float("imaging.fov", 25.0),
                e_sun=1361.0,
                gain=self.get_float("imaging.gain", 1.0),
                k_d=self.get_float("imaging.k_d", 0.6),
                k_s=self.get_float("imaging.k_s", 0.4),
                default_phong_alpha=self.get_float("weights.alpha", 2.0),
                material_alpha=material_alpha,
                full_well=self.get_float("imaging.full_well", None),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def weights(self) -> CostWeights:
        d = self.get_float("inspection.d", 100.0)
        try:
            return CostWeights(
                d=d,
                lambda_s=self.get_float("weights.lambda_S", 1.0),
                lambda_d=self.get_float("weights.lambda_d", None),
                alpha=self.get_float("weights.alpha", 2.0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def attitude(self) -> np.ndarray:
        yaw = math.radians(self.get_float("attitude.yaw_deg", 0.0))
        pitch = math.radians(self.get_float("attitude.pitch_deg", 0.0))
        roll = math.radians(self.get_float("attitude.roll_deg", 0.0))
        cz, sz = math.cos(yaw), math.sin(yaw)
        cy, sy = math.cos(pitch), math.sin(pitch)
        cx, sx = math.cos(roll), math.sin(roll)
        rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
        return rz @ ry @ rx

    def window_start(self):
        raw = self._get("epoch")
        if raw is None:
            return None
        try:
            stamp = datetime.fromisoformat(raw.replace("Z", ""))
        except ValueError:
            raise ConfigError(f"epoch: not an ISO timestamp: {raw!r}") from None
        return julian_day(stamp)

    def inspection(self, resolution: int | None = None) -> InspectionConfig:
        try:
            return InspectionConfig(
                target=self.load_target(),
                mesh=self.load_mesh(),
                weights=self.weights(),
                imaging=self.imaging(resolution),
                n_snapshots=self.get_int("inspection.N", 16),
                duration_s=self.get_float("inspection.T", None),
                window_start=self.window_start(),
                attitude=self.attitude(),
                gravity=self.gravity(),
                distance_convention=self._get("distance_cost_convention", "norm"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def optimizer_settings(self, iterations: int | None = None) -> OptimizerSettings:
        raw_vars = self._get(
            "optimizer.decision_variables", "inclination,mean_anomaly,eccentricity"
        )
        names = tuple(v.strip() for v in raw_vars.split(",") if v.strip())
        try:
            return OptimizerSettings(
                iterations=(
                    iterations
                    if iterations is not None
                    else self.get_int("optimizer.iterations", 200)
                ),
                hyper=AdamHyper(lr=self.get_float("optimizer.lr", 4e-6)),
                decision_variables=names,
                window=self.get_int("optimizer.window", 20),
                window_rel_tol=self.get_float("optimizer.window_rel_tol", 1e-4),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def canonical_text(self) -> str:
        """Sorted snapshot with file references made absolute, so a result
        directory can regenerate its report from anywhere."""
        values = dict(self.values)
        values["target_tle"] = str(self.target_path.resolve())
        if not self.mesh_source.startswith("builtin:"):
            values["mesh"] = str(self._resolve(self.mesh_source).resolve())
        lines = [f"{k} = {values[k]}" for k in sorted(values)]
        return "\n".join(lines) + "\n"


def parse_config_text(text: str, base_dir: Path) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"config line {lineno}: empty key or value")
        values[key] = value
    return RunConfig(values, base_dir)


def load_config(path: str) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), p.parent.resolve())


# -- commands -------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        tle = parse_file(Path(args.tle).read_text())
    except (OSError, TleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        model = PropagatorModel(elements_from_tle(tle))
    except UnsupportedRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        rows = Path(args.reference).read_text().strip().splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if rows and not rows[0][0].isdigit() and not rows[0].startswith("-"):
        rows = rows[1:]

    worst = 0.0
    sumsq = 0.0
    count = 0
    try:
        for row in rows:
            cols = [float(c) for c in row.split(",")]
            state = model.propagate(cols[0])
            dev = np.abs(state.position_km() - np.array(cols[1:4])).max()
            worst = max(worst, dev)
            sumsq += dev * dev
            count += 1
    except (ValueError, IndexError) as exc:
        print(f"error: bad reference row: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if count == 0:
        print("error: reference ephemeris is empty", file=sys.stderr)
        return EXIT_CONFIG

    rms = math.sqrt(sumsq / count)
    print(f"points={count}")
    print(f"max_deviation_km={worst:.9e}")
    print(f"rms_deviation_km={rms:.9e}")
    if worst > args.threshold:
        print(
            f"FAIL max deviation {worst:.3e} km exceeds threshold "
            f"{args.threshold:.3e} km",
            file=sys.stderr,
        )
        return EXIT_VALIDATION
    print("OK")
    return EXIT_OK


def _chaser_snapshot_render(inspection, chaser, t_s, imaging):
    snap_jd = inspection.start_jd.add_seconds(t_s)
    model_c = PropagatorModel(elements_from_tle(chaser), inspection.gravity)
    model_t = PropagatorModel(
        elements_from_tle(inspection.target), inspection.gravity
    )
    tsince_c = snap_jd.diff_days(chaser.epoch) * 1440.0
    tsince_t = snap_jd.diff_days(inspection.target.epoch) * 1440.0
    st = model_t.propagate(tsince_t)
    sc = model_c.propagate(tsince_c)
    sun = sun_direction(snap_jd)
    q = rtn_frame(st.position_km(), st.velocity_kms())
    sun_render = tuple(dot3(row, values3(sun.direction_teme)) for row in q)
    eye = relative_position(sc.position, st.position, st.velocity)
    camera = look_at(
        eye,
        (0.0, 0.0, 0.0),
        vertical_fov_deg=imaging.vertical_fov_deg,
        width=imaging.width,
        height=imaging.height,
    )
    mesh_render = inspection.mesh.transformed(inspection.attitude)
    buffers = render(mesh_render, camera, sun_render, imaging)
    eclipsed = is_eclipsed(st.position_km(), sun)
    return buffers, eclipsed, snap_jd


def cmd_render(args) -> int:
    config = load_config(args.config)
    inspection = config.inspection(args.resolution)
    imaging = inspection.imaging
    chaser = init_chaser(inspection.target, inspection.weights.d)
    out = Path(args.out or config.values.get("out", "render_out"))
    out.mkdir(parents=True, exist_ok=True)

    buffers, eclipsed, snap_jd = _chaser_snapshot_render(
        inspection, chaser, args.t, imaging
    )
    full_well = imaging.full_well_intensity
    write_ppm(out / "frame.ppm", buffers.intensity_values(), full_well)
    write_mask_ppm(out / "mask.ppm", buffers.mask)
    write_intensity_csv(out / "intensity.csv", buffers.intensity_values())
    (out / "meta.txt").write_text(
        f"t_s = {args.t!r}\n"
        f"jd = {snap_jd.to_float()!r}\n"
        f"eclipsed = {str(eclipsed).lower()}\n"
        f"mask_fraction = {buffers.mask_fraction()!r}\n"
        f"saturation_fraction = {saturation_fraction(buffers, full_well)!r}\n"
    )
    (out / "config").write_text(config.canonical_text())
    print(f"wrote {out}/frame.ppm mask.ppm intensity.csv meta.txt")
    return EXIT_OK


def _audit_gradient(inspection, chaser, settings) -> float:
    """Worst relative mismatch between dual and central-difference grads."""
    track = build_target_track(inspection)
    names = settings.decision_variables
    k = len(names)
    params = {name: None for name in names}
    base = {
        "inclination": chaser.inclination * math.pi / 180.0,
        "raan": chaser.raan * math.pi / 180.0,
        "eccentricity": chaser.eccentricity,
        "arg_perigee": chaser.arg_perigee * math.pi / 180.0,
        "mean_anomaly": chaser.mean_anomaly * math.pi / 180.0,
        "mean_motion": chaser.mean_motion * 2.0 * math.pi / 1440.0,
    }
    seeds = {name: ad.seed(base[name], j, k) for j, name in enumerate(names)}
    dual = trajectory_cost(elements_from_tle(chaser, seeds), inspection, track)

    steps = {"eccentricity": 1e-8, "mean_motion": 1e-9}
    worst = 0.0
    for j, name in enumerate(names):
        h = steps.get(name, 1e-7)
        up = dict(seeds)
        dn = dict(seeds)
        up[name] = base[name] + h
        dn[name] = base[name] - h
        for other in names:
            if other != name:
                up[other] = base[other]
                dn[other] = base[other]
        c_up = trajectory_cost(elements_from_tle(chaser, up), inspection, track)
        c_dn = trajectory_cost(elements_from_tle(chaser, dn), inspection, track)
        fd = (c_up.total - c_dn.total) / (2.0 * h)
        denom = max(abs(fd), abs(dual.grad_total[j]), 1e-12)
        worst = max(worst, abs(dual.grad_total[j] - fd) / denom)
    return worst


def _write_report(out: Path, result, inspection, resolution, threads) -> None:
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    bundle = evaluate_report(
        result, inspection, resolution=resolution, threads=max(1, threads)
    )

    history = result.history
    iters = [r.iteration for r in history]
    svgplot.line_plot(
        report_dir / "cost_history.svg",
        [
            svgplot.Series("total", zip(iters, [r.total for r in history]), "#000000"),
            svgplot.Series(
                "specular sum",
                zip(iters, [r.specular_sum for r in history]),
                "#cc0000",
            ),
            svgplot.Series(
                "distance sum (m^2)",
                zip(iters, [r.distance_sum for r in history]),
                "#0044cc",
            ),
        ],
        title="cost over iterations",
        xlabel="iteration",
        ylabel="cost",
    )

    def orbit_series(trace, mask, color):
        solid_pts = trace[mask]
        dash_pts = trace[~mask]
        return solid_pts, dash_pts

    panels = []
    axes = (("T", 1, "R", 0), ("N", 2, "R", 0), ("T", 1, "N", 2))
    for xl, xi, yl, yi in axes:
        series = []
        for label, trace, color in (
            ("initial", bundle.rel_orbit_initial, "#000000"),
            ("optimized", bundle.rel_orbit_optimized, "#cc0000"),
        ):
            w = bundle.window_mask
            series.append(
                svgplot.Series(label, zip(trace[w][:, xi], trace[w][:, yi]), color)
            )
            if (~w).any():
                series.append(
                    svgplot.Series(
                        None, zip(trace[~w][:, xi], trace[~w][:, yi]), color, dashed=True
                    )
                )
        panels.append((series, f"{yl} vs {xl} (m)", f"{xl} (m)", f"{yl} (m)"))
    svgplot.multi_panel(report_dir / "relative_orbit.svg", panels)

    sat_pts_init = [
        (p.t_s, p.initial) for p in bundle.saturation if p.initial is not None
    ]
    sat_pts_opt = [
        (p.t_s, p.optimized) for p in bundle.saturation if p.optimized is not None
    ]
    svgplot.line_plot(
        report_dir / "saturation.svg",
        [
            svgplot.Series("initial", sat_pts_init, "#000000"),
            svgplot.Series("optimized", sat_pts_opt, "#cc0000"),
        ],
        title="saturated fraction of target pixels (until eclipse)",
        xlabel="time (s)",
        ylabel="saturation fraction",
    )

    with open(report_dir / "saturation.csv", "w", newline="") as fh:
        fh.write("t_s,eclipsed,initial,optimized\n")
        for p in bundle.saturation:
            init = "" if p.initial is None else repr(p.initial)
            opt = "" if p.optimized is None else repr(p.optimized)
            fh.write(f"{p.t_s!r},{str(p.eclipsed).lower()},{init},{opt}\n")

    full_well = inspection.imaging.full_well_intensity
    write_ppm(report_dir / "max_cost_initial.ppm", bundle.max_frame_initial, full_well)
    write_ppm(report_dir / "max_cost_optimized.ppm", bundle.max_frame_optimized, full_well)
    (report_dir / "summary.txt").write_text(
        f"initial_total = {bundle.initial_cost.total!r}\n"
        f"optimized_total = {bundle.optimized_cost.total!r}\n"
        f"initial_specular_sum = {bundle.initial_cost.specular_sum!r}\n"
        f"optimized_specular_sum = {bundle.optimized_cost.specular_sum!r}\n"
        f"initial_saturation_sum = {bundle.saturation_sum_initial!r}\n"
        f"optimized_saturation_sum = {bundle.saturation_sum_optimized!r}\n"
        f"max_cost_snapshot_initial = {bundle.max_cost_index_initial}\n"
        f"max_cost_snapshot_optimized = {bundle.max_cost_index_optimized}\n"
    )


def _persist_tle(path: Path, tle: Tle) -> None:
    l1, l2 = serialize(tle)
    name = (tle.name + "\n") if tle.name else ""
    path.write_text(f"{name}{l1}\n{l2}\n")


_ELEMENT_FIELDS = (
    "inclination",
    "raan",
    "eccentricity",
    "arg_perigee",
    "mean_anomaly",
    "mean_motion",
)


def _persist_elements(path: Path, result) -> None:
    """Full-precision element sidecar: the fixed-width TLE files quantise
    angles to 1e-4 deg, which is coarse next to metre-level chaser shifts."""
    lines = []
    for label, tle in (("initial", result.initial_tle), ("final", result.final_tle)):
        for field in _ELEMENT_FIELDS:
            lines.append(f"{label}.{field} = {getattr(tle, field)!r}")
    path.write_text("\n".join(lines) + "\n")


def _load_elements(path: Path, carcass: Tle, label: str) -> Tle:
    from dataclasses import replace as dc_replace

    values = {}
    for line in path.read_text().splitlines():
        key, _, raw = line.partition(" = ")
        prefix, _, field = key.partition(".")
        if prefix == label and field in _ELEMENT_FIELDS:
            values[field] = float(raw)
    return dc_replace(carcass, **values)


def cmd_optimize(args) -> int:
    config = load_config(args.config)
    inspection = config.inspection(args.resolution)
    settings = config.optimizer_settings(args.iterations)
    chaser0 = init_chaser(inspection.target, inspection.weights.d)

    if args.seedless_check:
        worst = _audit_gradient(inspection, chaser0, settings)
        print(f"gradient_audit_worst_rel_err={worst:.3e}")
        if worst > args.audit_tol:
            print(
                f"error: gradient audit failed ({worst:.3e} > {args.audit_tol:.1e})",
                file=sys.stderr,
            )
            return EXIT_NUMERIC

    result = optimize(inspection, settings, chaser0=chaser0)
    out = Path(args.out or config.values.get("out", "optimize_out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "config").write_text(config.canonical_text())
    write_history_csv(out / "history.csv", result)
    _persist_tle(out / "initial.tle", result.initial_tle)
    _persist_tle(out / "optimized.tle", result.final_tle)
    _persist_elements(out / "elements.txt", result)

    report_res = args.report_resolution or config.get_int("report.resolution", 128)
    _write_report(out, result, inspection, report_res, args.threads)

    if result.aborted:
        print(f"aborted: {result.abort_reason}", file=sys.stderr)
        return EXIT_NUMERIC
    if result.history:
        print(
            f"iterations={result.iterations_run} converged={result.converged} "
            f"initial_total={result.history[0].total:.6g} "
            f"final_total={result.history[-1].total:.6g}"
        )
    else:
        print("iterations=0 (no optimisation requested)")
    print(f"results in {out}")
    return EXIT_OK


def _load_history(path: Path) -> list:
    rows = []
    lines = path.read_text().strip().splitlines()
    for line in lines[1:]:
        c = line.split(",")
        rows.append(
            HistoryRow(
                iteration=int(c[0]),
                total=float(c[1]),
                specular_sum=float(c[2]),
                distance_sum=float(c[3]),
                inclination_rad=float(c[4]),
                mean_anomaly_rad=float(c[5]),
                eccentricity=float(c[6]),
                grad_norm=float(c[7]),
            )
        )
    return rows


def cmd_report(args) -> int:
    result_dir = Path(args.result)
    config_path = result_dir / "config"
    if not config_path.is_file():
        raise ConfigError(f"no config snapshot in {result_dir}")
    config = parse_config_text(config_path.read_text(), result_dir)
    # The snapshot may reference scenario files relative to the original
    # config; fall back to stored absolute paths if present.
    inspection = config.inspection()
    initial = parse_file((result_dir / "initial.tle").read_text())
    final = parse_file((result_dir / "optimized.tle").read_text())
    elements_path = result_dir / "elements.txt"
    if elements_path.is_file():
        initial = _load_elements(elements_path, initial, "initial")
        final = _load_elements(elements_path, final, "final")
    settings = config.optimizer_settings()
    result = OptimizationResult(
        initial_tle=initial,
        final_tle=final,
        decision_variables=settings.decision_variables,
        history=_load_history(result_dir / "history.csv"),
        converged=False,
    )
    report_res = args.resolution or config.get_int("report.resolution", 128)
    _write_report(result_dir, result, inspection, report_res, args.threads)
    print(f"report regenerated in {result_dir / 'report'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deglint",
        description="design passive inspection orbits that avoid specular sun glint",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="compare the propagator against a reference ephemeris")
    p.add_argument("tle", help="TLE file for the satellite")
    p.add_argument("reference", help="reference ephemeris CSV (t_min,x_km,y_km,z_km,...)")
    p.add_argument("--threshold", type=float, default=1e-4, help="max deviation km")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="render one snapshot of the initial inspection orbit")
    p.add_argument("--config", required=True)
    p.add_argument("--t", type=float, default=0.0, help="seconds past the window start")
    p.add_argument("--out", default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("optimize", help="run the trajectory optimisation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--report-resolution", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--seedless-check",
        action="store_true",
        help="audit dual gradients against finite differences before optimising",
    )
    p.add_argument("--audit-tol", type=float, default=1e-2)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="regenerate report assets from a result directory")
    p.add_argument("--result", required=True)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, TleError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationError, ad.DomainError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
