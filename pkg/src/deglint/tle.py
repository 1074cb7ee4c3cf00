"""Two-line element parsing, serialisation and element perturbation.

The fixed 69-column format is decoded bit-exactly: implied decimal points
(eccentricity, drag terms), exponent fields, two-digit years (57-99 map to
the 1900s) and the mod-10 line checksum.  Epochs are kept as a Julian-day
pair (integer day + day fraction) so that multi-day propagation windows
do not lose sub-millisecond precision to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .ephemeris import JulianDate, julian_day_from_year_doy

__all__ = [
    "Tle",
    "TleError",
    "TleLineLengthError",
    "TleLineNumberError",
    "TleFieldError",
    "TleChecksumError",
    "TleCatalogMismatchError",
    "parse",
    "parse_file",
    "checksum",
    "serialize",
    "perturb",
    "PERTURBABLE_ELEMENTS",
]


class TleError(ValueError):
    """Base class for TLE format violations."""


class TleLineLengthError(TleError):
    pass


class TleLineNumberError(TleError):
    pass


class TleFieldError(TleError):
    pass


class TleChecksumError(TleError):
    pass


class TleCatalogMismatchError(TleError):
    pass


@dataclass(frozen=True)
class Tle:
    """Mean elements and bookkeeping decoded from one TLE pair."""

    name: str | None
    catalog_number: str
    classification: str
    intl_designator: str
    epoch: JulianDate
    mean_motion_dot: float      # as encoded (rev/day^2 over 2)
    mean_motion_ddot: float     # as encoded (rev/day^3 over 6)
    bstar: float                # 1 / earth radii
    element_set_no: int
    inclination: float          # deg
    raan: float                 # deg
    eccentricity: float
    arg_perigee: float          # deg
    mean_anomaly: float         # deg
    mean_motion: float          # rev/day
    rev_at_epoch: int

    def lines(self) -> tuple[str, str]:
        return serialize(self)


def checksum(line: str) -> int:
    """Mod-10 checksum over a 68-character payload.

    Digits count their value, '-' counts 1, everything else 0.
    """
    if len(line) < 68:
        raise TleLineLengthError(f"checksum needs 68 characters, got {len(line)}")
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _field_float(line: str, start: int, end: int, what: str) -> float:
    raw = line[start:end]
    try:
        return float(raw)
    except ValueError:
        raise TleFieldError(f"{what}: cannot parse {raw!r}") from None


def _field_int(line: str, start: int, end: int, what: str, default: int = 0) -> int:
    raw = line[start:end].strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        raise TleFieldError(f"{what}: cannot parse {raw!r}") from None


def _implied_exp(raw: str, what: str) -> float:
    """Decode the '±XXXXX±E' implied-decimal exponent field."""
    raw = raw.replace(" ", "0")
    sign = -1.0 if raw[0] == "-" else 1.0
    mantissa = raw[1:6]
    exps, expd = raw[6], raw[7]
    if not mantissa.isdigit() or exps not in "+-0" or not expd.isdigit():
        raise TleFieldError(f"{what}: cannot parse {raw!r}")
    exponent = int(expd) * (-1 if exps == "-" else 1)
    return sign * int(mantissa) * 10.0 ** (exponent - 5)


def _check_line(line: str, expect_no: str) -> None:
    if len(line) != 69:
        raise TleLineLengthError(
            f"line {expect_no} must be 69 characters, got {len(line)}"
        )
    if line[0] != expect_no:
        raise TleLineNumberError(f"expected line {expect_no}, got {line[0]!r}")
    if not line[68].isdigit():
        raise TleChecksumError(f"line {expect_no} checksum column is {line[68]!r}")
    want = int(line[68])
    got = checksum(line)
    if got != want:
        raise TleChecksumError(f"line {expect_no} checksum {got} != printed {want}")


def parse(line1: str, line2: str, name: str | None = None) -> Tle:
    """Decode a TLE pair into mean elements."""
    line1 = line1.rstrip("\r\n")
    line2 = line2.rstrip("\r\n")
    _check_line(line1, "1")
    _check_line(line2, "2")

    cat1 = line1[2:7]
    cat2 = line2[2:7]
    if cat1 != cat2:
        raise TleCatalogMismatchError(f"catalog {cat1!r} on line 1 vs {cat2!r} on line 2")

    yy = _field_int(line1, 18, 20, "epoch year")
    year = 1900 + yy if yy >= 57 else 2000 + yy
    doy = _field_float(line1, 20, 32, "epoch day")

    ndot_raw = line1[33:43].replace(" ", "")
    try:
        ndot = float(ndot_raw)
    except ValueError:
        raise TleFieldError(f"mean motion dot: cannot parse {ndot_raw!r}") from None

    ecc_raw = line2[26:33]
    if not ecc_raw.strip().isdigit():
        raise TleFieldError(f"eccentricity: cannot parse {ecc_raw!r}")

    tle = Tle(
        name=name.strip() if name else None,
        catalog_number=cat1.strip(),
        classification=line1[7],
        intl_designator=line1[9:17].strip(),
        epoch=julian_day_from_year_doy(year, doy),
        mean_motion_dot=ndot,
        mean_motion_ddot=_implied_exp(line1[44:52], "mean motion ddot"),
        bstar=_implied_exp(line1[53:61], "bstar"),
        element_set_no=_field_int(line1, 64, 68, "element set number"),
        inclination=_field_float(line2, 8, 16, "inclination"),
        raan=_field_float(line2, 17, 25, "raan"),
        eccentricity=int(ecc_raw) / 1e7,
        arg_perigee=_field_float(line2, 34, 42, "argument of perigee"),
        mean_anomaly=_field_float(line2, 43, 51, "mean anomaly"),
        mean_motion=_field_float(line2, 52, 63, "mean motion"),
        rev_at_epoch=_field_int(line2, 63, 68, "rev number"),
    )
    if not 0.0 <= tle.eccentricity < 1.0:
        raise TleFieldError(f"eccentricity {tle.eccentricity} outside [0, 1)")
    if not 0.0 <= tle.inclination <= 180.0:
        raise TleFieldError(f"inclination {tle.inclination} outside [0, 180]")
    return tle


def parse_file(text: str) -> Tle:
    """Parse the first TLE in a file; a non-numeric lead line is the name."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) >= 3 and not lines[0].startswith(("1 ", "2 ")):
        return parse(lines[1], lines[2], name=lines[0])
    if len(lines) >= 2:
        return parse(lines[0], lines[1])
    raise TleError("need two element lines")


# -- serialisation -----------------------------------------------------


def _encode_exp(value: float) -> str:
    """Encode the '±XXXXX±E' implied-decimal exponent field."""
    mag = abs(value)
    if mag < 1e-14:  # below the representable range; canonical zero field
        return " 00000-0"
    sign = "-" if value < 0 else " "
    exponent = math.floor(math.log10(mag)) + 1
    mantissa = int(round(mag / 10.0 ** (exponent - 5)))
    if mantissa == 100000:
        mantissa //= 10
        exponent += 1
    if exponent > 9 or exponent < -9 or mantissa == 0:
        return " 00000-0"
    expsign = "-" if exponent < 0 else "+"
    return f"{sign}{mantissa:05d}{expsign}{abs(exponent)}"


def _encode_ndot(value: float) -> str:
    sign = "-" if value < 0 else " "
    body = f"{abs(value):.8f}"[1:]  # drop the leading 0, keep ".XXXXXXXX"
    return f"{sign}{body}"


def serialize(tle: Tle) -> tuple[str, str]:
    """Write the TLE pair back out, checksums recomputed."""
    year, doy = tle.epoch.to_year_doy()
    yy = year % 100
    line1 = (
        f"1 {tle.catalog_number:>5s}{tle.classification} {tle.intl_designator:<8s} "
        f"{yy:02d}{doy:012.8f} {_encode_ndot(tle.mean_motion_dot)} "
        f"{_encode_exp(tle.mean_motion_ddot)} {_encode_exp(tle.bstar)} 0 "
        f"{tle.element_set_no:>4d}"
    )
    line2 = (
        f"2 {tle.catalog_number:>5s} {tle.inclination:8.4f} {tle.raan:8.4f} "
        f"{round(tle.eccentricity * 1e7):07d} {tle.arg_perigee:8.4f} "
        f"{tle.mean_anomaly:8.4f} {tle.mean_motion:11.8f}{tle.rev_at_epoch:>5d}"
    )
    if len(line1) != 68 or len(line2) != 68:
        raise TleError(
            f"serialisation produced {len(line1)}/{len(line2)} character payloads"
        )
    return line1 + str(checksum(line1)), line2 + str(checksum(line2))


# -- perturbation ------------------------------------------------------

PERTURBABLE_ELEMENTS = (
    "inclination",
    "raan",
    "eccentricity",
    "arg_perigee",
    "mean_anomaly",
    "mean_motion",
)


def _wrap_deg(angle: float) -> float:
    return angle % 360.0


def perturb(tle: Tle, delta: dict[str, float]) -> Tle:
    """Copy with element deltas applied, re-canonicalised.

    Angles wrap into their standard ranges (inclination reflects back into
    [0, 180]); eccentricity clamps to [0, 0.9999].
    """
    changes: dict[str, float] = {}
    for name, d in delta.items():
        if name not in PERTURBABLE_ELEMENTS:
            raise TleError(f"unknown element {name!r}")
        changes[name] = getattr(tle, name) + d

    if "inclination" in changes:
        inc = _wrap_deg(changes["inclination"])
        if inc > 180.0:
            inc = 360.0 - inc
        changes["inclination"] = inc
    for angle in ("raan", "arg_perigee", "mean_anomaly"):
        if angle in changes:
            changes[angle] = _wrap_deg(changes[angle])
    if "eccentricity" in changes:
        changes["eccentricity"] = min(max(changes["eccentricity"], 0.0), 0.9999)
    return replace(tle, **changes)
