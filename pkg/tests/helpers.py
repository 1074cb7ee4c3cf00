"""Test utilities: reference-implementation oracle drivers and fixtures.

The reference SGP4 (``reference/vallado_sgp4.py``) is an independent,
widely used implementation kept verbatim; these wrappers adapt it to the
element sets produced by this package's TLE parser.
"""

from __future__ import annotations

import math
import sys
import types
from pathlib import Path

import numpy as np

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
sys.path.insert(0, str(TESTS_DIR / "reference"))

import vallado_sgp4 as reference  # noqa: E402

from deglint.ephemeris import julian_day_from_year_doy  # noqa: E402
from deglint.sgp4 import elements_from_tle  # noqa: E402
from deglint.tle import Tle, parse, parse_file, serialize  # noqa: E402

_DEG = math.pi / 180.0


class OracleError(RuntimeError):
    def __init__(self, code, message):
        self.code = code
        super().__init__(f"oracle error {code}: {message}")


def oracle_init(tle: Tle, gravity: str = "wgs72"):
    """Initialise the reference propagator from a parsed TLE."""
    satrec = types.SimpleNamespace()
    satrec.error_message = None
    whichconst = reference.getgravconst(gravity)
    el = elements_from_tle(tle)
    reference.sgp4init(
        whichconst,
        "i",
        tle.catalog_number,
        el.epoch_days1950,
        tle.bstar,
        tle.mean_motion_dot,
        tle.mean_motion_ddot,
        tle.eccentricity,
        tle.arg_perigee * _DEG,
        tle.inclination * _DEG,
        tle.mean_anomaly * _DEG,
        tle.mean_motion * 2.0 * math.pi / 1440.0,
        tle.raan * _DEG,
        satrec,
    )
    if satrec.error != 0:
        raise OracleError(satrec.error, satrec.error_message)
    return satrec


def oracle_propagate(satrec, tsince_min: float):
    r, v = reference.sgp4(satrec, tsince_min)
    if satrec.error != 0:
        raise OracleError(satrec.error, satrec.error_message)
    return np.array(r), np.array(v)


def load_fixture_tle(name: str) -> Tle:
    return parse_file((DATA_DIR / name).read_text())


def load_catalogue() -> list[Tle]:
    """The bundled near-Earth verification set (name + two lines each)."""
    lines = (DATA_DIR / "verification.tle").read_text().splitlines()
    out = []
    for k in range(0, len(lines), 3):
        out.append(parse(lines[k + 1], lines[k + 2], name=lines[k]))
    return out


def catalogue_grid(tle: Tle) -> list[float]:
    """Published time grid for a catalogue entry (minutes past epoch)."""
    if "PERIGEE" in (tle.name or ""):
        return [120.0 * k for k in range(13)]
    return [360.0 * k for k in range(13)]


def make_tle(
    name="TEST",
    catalog="90000",
    year=2024,
    doy=100.5,
    inclination=51.6,
    raan=120.0,
    eccentricity=0.001,
    arg_perigee=45.0,
    mean_anomaly=300.0,
    mean_motion=15.2,
    bstar=1e-5,
    mean_motion_dot=1e-6,
) -> Tle:
    """Build a TLE through the serialiser so field quantisation applies."""
    t = Tle(
        name=name,
        catalog_number=catalog,
        classification="U",
        intl_designator="20001A",
        epoch=julian_day_from_year_doy(year, doy),
        mean_motion_dot=mean_motion_dot,
        mean_motion_ddot=0.0,
        bstar=bstar,
        element_set_no=999,
        inclination=inclination,
        raan=raan,
        eccentricity=eccentricity,
        arg_perigee=arg_perigee,
        mean_anomaly=mean_anomaly,
        mean_motion=mean_motion,
        rev_at_epoch=10000,
    )
    l1, l2 = serialize(t)
    return parse(l1, l2, name)


def dual_vs_fd_elements(tle, names_steps, evaluate, k=None):
    """Worst relative error between dual gradient and central differences.

    ``evaluate(overrides)`` maps element overrides (natural units) to a
    scalar cost and, for seeded inputs, must return a Dual.
    """
    from deglint import autodiff as ad

    base = {
        "inclination": tle.inclination * _DEG,
        "mean_anomaly": tle.mean_anomaly * _DEG,
        "eccentricity": tle.eccentricity,
        "raan": tle.raan * _DEG,
        "arg_perigee": tle.arg_perigee * _DEG,
        "mean_motion": tle.mean_motion * 2.0 * math.pi / 1440.0,
    }
    names = list(names_steps)
    k = k or len(names)
    seeds = {n: ad.seed(base[n], j, k) for j, n in enumerate(names)}
    dual = evaluate(seeds)
    grad = ad.grad_of(dual, k)
    worst = 0.0
    details = []
    for j, name in enumerate(names):
        h = names_steps[name]
        up = {n: base[n] for n in names}
        dn = {n: base[n] for n in names}
        up[name] += h
        dn[name] -= h
        fd = (ad.value_of(evaluate(up)) - ad.value_of(evaluate(dn))) / (2.0 * h)
        rel = abs(grad[j] - fd) / max(abs(fd), abs(grad[j]), 1e-12)
        worst = max(worst, rel)
        details.append((name, grad[j], fd, rel))
    return worst, details
