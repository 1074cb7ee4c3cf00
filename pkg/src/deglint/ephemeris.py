"""Time scales, sun geometry and target-relative frames.

Everything here treats TEME as the single pseudo-inertial frame: the
rotating-Earth (ECEF) picture is related to it by a rotation through
Greenwich mean sidereal time only.  The sun vector comes from the subsolar
point: solar declination from a trigonometric series in the day of year,
subsolar longitude from mean solar time corrected by the Equation of Time.
That construction is smooth in the Julian date, so derivative seeds pass
through it; accuracy is a few tenths of a degree, plenty for lighting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

from . import autodiff as ad
from .vec3 import cross3, dot3, norm3, scale3, sub3, values3

__all__ = [
    "JulianDate",
    "SunState",
    "julian_day",
    "julian_day_from_year_doy",
    "gmst",
    "sun_direction",
    "EARTH_RADIUS_KM",
    "is_eclipsed",
    "rtn_frame",
    "relative_position",
]

EARTH_RADIUS_KM = 6378.137

_TWOPI = 2.0 * math.pi
_DEG = math.pi / 180.0


@dataclass(frozen=True)
class JulianDate:
    """Julian date split into integer day and day fraction in [0, 1).

    The fraction may be a dual scalar so sun geometry stays differentiable
    in time; the integer day never carries derivative.
    """

    day: int
    fraction: float

    def __post_init__(self):
        f = ad.value_of(self.fraction)
        if not 0.0 <= f < 1.0:
            raise ValueError(f"fraction {f} outside [0, 1)")

    def to_float(self):
        return self.day + self.fraction

    def add_days(self, days) -> "JulianDate":
        frac = self.fraction + days
        shift = math.floor(ad.value_of(frac))
        return JulianDate(self.day + shift, frac - shift)

    def add_seconds(self, seconds) -> "JulianDate":
        return self.add_days(seconds / 86400.0)

    def diff_days(self, other: "JulianDate"):
        return (self.day - other.day) + (self.fraction - other.fraction)

    def to_year_doy(self) -> tuple[int, float]:
        """Calendar year and 1-based fractional day of year (UTC)."""
        year, _, _, civil_frac = _civil_from_jd(self.day, ad.value_of(self.fraction))
        jan1 = _jdn_from_civil(year, 1, 1)
        civil_jdn = self.day + (1 if ad.value_of(self.fraction) >= 0.5 else 0)
        return year, (civil_jdn - jan1) + 1 + civil_frac


def _jdn_from_civil(year: int, month: int, day: int) -> int:
    # Fliegel-Van Flandern day number; valid for the whole Gregorian range
    # used here.  Result is the JDN of the civil date (noon-based).
    a = (14 - month) // 12
    y = year + 4800 - a
    m = month + 12 * a - 3
    return day + (153 * m + 2) // 5 + 365 * y + y // 4 - y // 100 + y // 400 - 32045


def _civil_from_jd(day: int, fraction: float) -> tuple[int, int, int, float]:
    jdn = day + (1 if fraction >= 0.5 else 0)
    frac = fraction - 0.5 if fraction >= 0.5 else fraction + 0.5
    a = jdn + 32044
    b = (4 * a + 3) // 146097
    c = a - 146097 * b // 4
    d = (4 * c + 3) // 1461
    e = c - 1461 * d // 4
    m = (5 * e + 2) // 153
    dd = e - (153 * m + 2) // 5 + 1
    mm = m + 3 - 12 * (m // 10)
    yy = 100 * b + d - 4800 + m // 10
    return yy, mm, dd, frac


def julian_day(utc: datetime) -> JulianDate:
    """Astronomical Julian date of a calendar timestamp (UTC assumed)."""
    if not 1957 <= utc.year <= 2100:
        raise ValueError(f"year {utc.year} outside supported range [1957, 2100]")
    jdn = _jdn_from_civil(utc.year, utc.month, utc.day)
    frac = (
        (utc.hour - 12) / 24.0
        + utc.minute / 1440.0
        + (utc.second + utc.microsecond / 1e6) / 86400.0
    )
    if frac < 0.0:
        return JulianDate(jdn - 1, frac + 1.0)
    return JulianDate(jdn, frac)


def julian_day_from_year_doy(year: int, doy: float) -> JulianDate:
    """Julian date of a 1-based fractional day of year."""
    jdn = _jdn_from_civil(year, 1, 1)
    whole = math.floor(doy)
    frac = doy - whole  # fraction of the civil day, starting at midnight
    day = jdn + (whole - 1)
    if frac < 0.5:
        return JulianDate(day - 1, frac + 0.5)
    return JulianDate(day, frac - 0.5)


def gmst(jd: JulianDate):
    """Greenwich mean sidereal time, radians in [0, 2pi).

    IAU-82 polynomial in Julian centuries since J2000; generic over dual
    day fractions.
    """
    tut1 = ((jd.day - 2451545) + jd.fraction) / 36525.0
    seconds = (
        -6.2e-6 * tut1 * tut1 * tut1
        + 0.093104 * tut1 * tut1
        + (876600.0 * 3600 + 8640184.812866) * tut1
        + 67310.54841
    )
    theta = (seconds * _DEG / 240.0) % _TWOPI
    if ad.value_of(theta) < 0.0:
        theta = theta + _TWOPI
    return theta


@dataclass(frozen=True)
class SunState:
    """Sun direction in TEME plus the subsolar point that produced it."""

    direction_teme: tuple  # unit vector, components generic scalars
    subsolar_lat: float    # deg
    subsolar_lon: float    # deg


def sun_direction(jd: JulianDate) -> SunState:
    """Unit vector from Earth toward the Sun in TEME.

    Declination from the classic Fourier series in fractional year,
    Equation of Time from its companion series, longitude from mean solar
    time, then one GMST rotation from ECEF into TEME.
    """
    year, _, _, _ = _civil_from_jd(jd.day, ad.value_of(jd.fraction))
    jan1 = _jdn_from_civil(year, 1, 1)
    # Day-of-year and UTC hours, smooth in jd except at the year boundary
    # where the two jumps cancel.
    if ad.value_of(jd.fraction) >= 0.5:
        doy0 = (jd.day + 1 - jan1) + 1
        hours = (jd.fraction - 0.5) * 24.0
    else:
        doy0 = (jd.day - jan1) + 1
        hours = (jd.fraction + 0.5) * 24.0

    gamma = (_TWOPI / 365.0) * (doy0 - 1.0 + (hours - 12.0) / 24.0)

    decl = (
        0.006918
        - 0.399912 * ad.cos(gamma)
        + 0.070257 * ad.sin(gamma)
        - 0.006758 * ad.cos(2.0 * gamma)
        + 0.000907 * ad.sin(2.0 * gamma)
        - 0.002697 * ad.cos(3.0 * gamma)
        + 0.001480 * ad.sin(3.0 * gamma)
    )
    eot_min = 229.18 * (
        0.000075
        + 0.001868 * ad.cos(gamma)
        - 0.032077 * ad.sin(gamma)
        - 0.014615 * ad.cos(2.0 * gamma)
        - 0.040849 * ad.sin(2.0 * gamma)
    )

    lon = (180.0 - 15.0 * (hours + eot_min / 60.0)) * _DEG
    lat = decl

    clat = ad.cos(lat)
    ecef = (clat * ad.cos(lon), clat * ad.sin(lon), ad.sin(lat))

    theta = gmst(jd)
    ct, st = ad.cos(theta), ad.sin(theta)
    direction = (
        ct * ecef[0] - st * ecef[1],
        st * ecef[0] + ct * ecef[1],
        ecef[2],
    )

    lon_deg = ad.value_of(lon) / _DEG
    lon_deg = (lon_deg + 180.0) % 360.0 - 180.0
    return SunState(
        direction_teme=direction,
        subsolar_lat=ad.value_of(decl) / _DEG,
        subsolar_lon=lon_deg,
    )


def is_eclipsed(r_sat, sun: SunState) -> bool:
    """Cylindrical-umbra shadow test on primal values.

    Eclipsed when the satellite sits behind Earth along the sun line and
    inside the shadow cylinder of one Earth radius.
    """
    r = values3(r_sat)
    l = values3(sun.direction_teme)
    along = dot3(r, l)
    if along >= 0.0:
        return False
    perp = sub3(r, scale3(l, along))
    return norm3(perp) < EARTH_RADIUS_KM


def rtn_frame(r_t, v_t):
    """Rows of the TEME->RTN rotation: radial, along-track, cross-track."""
    rn = norm3(r_t)
    if rn == 0.0:
        raise ValueError("rtn_frame: zero position")
    rhat = scale3(r_t, 1.0 / rn)
    h = cross3(r_t, v_t)
    hn = norm3(h)
    if hn < 1e-12 * rn * max(norm3(v_t), 1e-30):
        raise ValueError("rtn_frame: position and velocity are parallel")
    nhat = scale3(h, 1.0 / hn)
    that = cross3(nhat, rhat)
    return (rhat, that, nhat)


def relative_position(r_c, r_t, v_t):
    """Chaser position relative to the target in RTN, metres.

    ``r_c`` may carry dual components; the frame itself is built from the
    target state and stays primal.
    """
    q = rtn_frame(r_t, v_t)
    d = sub3(r_c, r_t)
    return tuple(dot3(row, d) * 1000.0 for row in q)
