"""Near-Earth SGP4 propagation, generic over plain and dual scalars.

The algorithm follows the published Vallado/Spacetrack formulation
(initialisation constants, secular drag and gravity rates, long/short
period periodics, Newton solve of Kepler's equation) with the operation
order kept close to the widespread reference code so that results agree
with independent implementations to floating-point noise.

Orbital elements may be seeded dual scalars: the whole initialisation and
propagation then carry exact partial derivatives of TEME position and
velocity with respect to the seeded elements.  Branch guards (drag regime,
eccentricity clamps, Kepler stopping) read primal values only; the final
dual Newton iterate supplies the derivative of the Kepler solution.

Deep-space orbits (period >= 225 min) are rejected outright rather than
mis-propagated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .ephemeris import JulianDate
from .tle import Tle

__all__ = [
    "GravityModel",
    "WGS72",
    "WGS84",
    "MU_KM3_S2",
    "MeanElements",
    "StateVector",
    "PropagatorModel",
    "PropagationError",
    "UnsupportedRegimeError",
    "DecayError",
    "KeplerError",
    "elements_from_tle",
    "semi_major_axis",
    "write_ephemeris_csv",
]

_TWOPI = 2.0 * math.pi
_DEG = math.pi / 180.0

MU_KM3_S2 = 398600.4418  # convenience two-body value; SGP4 uses the model's own


class PropagationError(Exception):
    """SGP4 could not produce a valid state."""

    def __init__(self, message: str, code: int = 0):
        self.code = code
        super().__init__(message)


class UnsupportedRegimeError(PropagationError):
    """Deep-space element set: this propagator covers the near-Earth branch."""


class DecayError(PropagationError):
    """Propagated radius fell below the Earth's surface."""

    def __init__(self, message: str):
        super().__init__(message, code=6)


class KeplerError(PropagationError):
    """Newton solve of Kepler's equation did not converge."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"Kepler iteration did not converge in {iterations} steps")


@dataclass(frozen=True)
class GravityModel:
    name: str
    mu: float             # km^3 / s^2
    radiusearthkm: float
    xke: float
    j2: float
    j3: float
    j4: float

    @property
    def j3oj2(self) -> float:
        return self.j3 / self.j2

    @property
    def tumin(self) -> float:
        return 1.0 / self.xke


def _make_gravity(name, mu, re, j2, j3, j4):
    return GravityModel(name, mu, re, 60.0 / math.sqrt(re * re * re / mu), j2, j3, j4)


WGS72 = _make_gravity("wgs72", 398600.8, 6378.135, 0.001082616, -0.00000253881, -0.00000165597)
WGS84 = _make_gravity("wgs84", 398600.5, 6378.137, 0.00108262998905, -0.00000253215306, -0.00000161098761)


@dataclass(frozen=True)
class MeanElements:
    """SGP4 input elements in internal units; fields may be dual scalars."""

    epoch: JulianDate      # primal
    no_kozai: object       # rad/min
    ecco: object
    inclo: object          # rad
    nodeo: object          # rad
    argpo: object          # rad
    mo: object             # rad
    bstar: object          # 1/earth radii

    @property
    def epoch_days1950(self) -> float:
        return (self.epoch.day - 2433281) + (ad.value_of(self.epoch.fraction) - 0.5)


#: element names accepted for seeding/overriding, in spec order
ELEMENT_NAMES = (
    "inclination",
    "raan",
    "eccentricity",
    "arg_perigee",
    "mean_anomaly",
    "mean_motion",
)

_FIELD_OF = {
    "inclination": "inclo",
    "raan": "nodeo",
    "eccentricity": "ecco",
    "arg_perigee": "argpo",
    "mean_anomaly": "mo",
    "mean_motion": "no_kozai",
}


def elements_from_tle(tle: Tle, overrides: dict | None = None) -> MeanElements:
    """Convert parsed TLE fields to propagator units (radians, rad/min).

    ``overrides`` replaces named elements with caller-supplied scalars in
    those same natural units, which is how dual seeds and finite-difference
    perturbations enter the pipeline.
    """
    values = {
        "inclo": tle.inclination * _DEG,
        "nodeo": tle.raan * _DEG,
        "ecco": tle.eccentricity,
        "argpo": tle.arg_perigee * _DEG,
        "mo": tle.mean_anomaly * _DEG,
        "no_kozai": tle.mean_motion * _TWOPI / 1440.0,
    }
    if overrides:
        for name, value in overrides.items():
            if name not in _FIELD_OF:
                raise ValueError(f"unknown element {name!r}")
            values[_FIELD_OF[name]] = value
    return MeanElements(epoch=tle.epoch, bstar=tle.bstar, **values)


@dataclass(frozen=True)
class StateVector:
    """TEME state at ``t`` minutes past the element epoch."""

    t: float
    position: tuple  # km, generic scalars
    velocity: tuple  # km/s, generic scalars

    def position_km(self) -> np.ndarray:
        return np.array([ad.value_of(c) for c in self.position], dtype=float)

    def velocity_kms(self) -> np.ndarray:
        return np.array([ad.value_of(c) for c in self.velocity], dtype=float)

    def position_grad(self, k: int = 3) -> np.ndarray:
        """(3, K) Jacobian of position w.r.t. the seeded elements."""
        return np.stack([ad.grad_of(c, k) for c in self.position])


class PropagatorModel:
    """Initialised SGP4 constants for one element set."""

    def __init__(self, elements: MeanElements, gravity: GravityModel = WGS72):
        el = elements
        self.elements = el
        self.gravity = gravity

        ecco_v = ad.value_of(el.ecco)
        if not 0.0 <= ecco_v < 1.0:
            raise PropagationError(
                f"eccentricity {ecco_v} outside [0, 1)", code=1
            )
        no_v = ad.value_of(el.no_kozai)
        if no_v <= 0.0:
            raise PropagationError(f"mean motion {no_v} not positive", code=2)

        xke, j2 = gravity.xke, gravity.j2
        j3oj2 = gravity.j3oj2
        x2o3 = 2.0 / 3.0

        ecco, inclo, no_kozai = el.ecco, el.inclo, el.no_kozai

        # Recover the Brouwer mean motion from the Kozai value.
        eccsq = ecco * ecco
        omeosq = 1.0 - eccsq
        rteosq = ad.sqrt(omeosq)
        cosio = ad.cos(inclo)
        cosio2 = cosio * cosio
        ak = (xke / no_kozai) ** x2o3
        d1 = 0.75 * j2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq)
        del_ = d1 / (ak * ak)
        adel = ak * (1.0 - del_ * del_ - del_ * (1.0 / 3.0 + 134.0 * del_ * del_ / 81.0))
        del_ = d1 / (adel * adel)
        no_unkozai = no_kozai / (1.0 + del_)

        if _TWOPI / ad.value_of(no_unkozai) >= 225.0:
            raise UnsupportedRegimeError(
                f"period {_TWOPI / ad.value_of(no_unkozai):.1f} min >= 225 min "
                "is a deep-space orbit"
            )

        ao = (xke / no_unkozai) ** x2o3
        sinio = ad.sin(inclo)
        po = ao * omeosq
        con42 = 1.0 - 5.0 * cosio2
        con41 = -con42 - cosio2 - cosio2
        posq = po * po
        rp = ao * (1.0 - ecco)

        self.no_unkozai = no_unkozai
        self.con41 = con41

        ss = 78.0 / gravity.radiusearthkm + 1.0
        qzms2ttemp = (120.0 - 78.0) / gravity.radiusearthkm
        qzms2t = qzms2ttemp * qzms2ttemp * qzms2ttemp * qzms2ttemp

        self.isimp = 1 if ad.value_of(rp) < 220.0 / gravity.radiusearthkm + 1.0 else 0
        sfour = ss
        qzms24 = qzms2t
        perige = (ad.value_of(rp) - 1.0) * gravity.radiusearthkm

        if perige < 156.0:
            sfour = perige - 78.0
            if perige < 98.0:
                sfour = 20.0
            qzms24temp = (120.0 - sfour) / gravity.radiusearthkm
            qzms24 = qzms24temp * qzms24temp * qzms24temp * qzms24temp
            sfour = sfour / gravity.radiusearthkm + 1.0

        pinvsq = 1.0 / posq
        tsi = 1.0 / (ao - sfour)
        eta = ao * ecco * tsi
        etasq = eta * eta
        eeta = ecco * eta
        psisq = ad.fabs(1.0 - etasq)
        coef = qzms24 * tsi**4
        coef1 = coef / psisq**3.5
        cc2 = coef1 * no_unkozai * (
            ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
            + 0.375 * j2 * tsi / psisq * con41 * (8.0 + 3.0 * etasq * (8.0 + etasq))
        )
        self.cc1 = el.bstar * cc2
        cc3 = 0.0
        if ad.value_of(ecco) > 1.0e-4:
            cc3 = -2.0 * coef * tsi * j3oj2 * no_unkozai * sinio / ecco
        self.x1mth2 = 1.0 - cosio2
        self.cc4 = (
            2.0 * no_unkozai * coef1 * ao * omeosq
            * (
                eta * (2.0 + 0.5 * etasq)
                + ecco * (0.5 + 2.0 * etasq)
                - j2 * tsi / (ao * psisq)
                * (
                    -3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
                    + 0.75 * self.x1mth2 * (2.0 * etasq - eeta * (1.0 + etasq))
                    * ad.cos(2.0 * el.argpo)
                )
            )
        )
        self.cc5 = 2.0 * coef1 * ao * omeosq * (1.0 + 2.75 * (etasq + eeta) + eeta * etasq)
        cosio4 = cosio2 * cosio2
        temp1 = 1.5 * j2 * pinvsq * no_unkozai
        temp2 = 0.5 * temp1 * j2 * pinvsq
        temp3 = -0.46875 * gravity.j4 * pinvsq * pinvsq * no_unkozai
        self.mdot = (
            no_unkozai
            + 0.5 * temp1 * rteosq * con41
            + 0.0625 * temp2 * rteosq * (13.0 - 78.0 * cosio2 + 137.0 * cosio4)
        )
        self.argpdot = (
            -0.5 * temp1 * con42
            + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
            + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4)
        )
        xhdot1 = -temp1 * cosio
        self.nodedot = xhdot1 + (
            0.5 * temp2 * (4.0 - 19.0 * cosio2) + 2.0 * temp3 * (3.0 - 7.0 * cosio2)
        ) * cosio
        self.omgcof = el.bstar * cc3 * ad.cos(el.argpo)
        self.xmcof = 0.0
        if ad.value_of(ecco) > 1.0e-4:
            self.xmcof = -x2o3 * coef * el.bstar / eeta
        self.nodecf = 3.5 * omeosq * xhdot1 * self.cc1
        self.t2cof = 1.5 * self.cc1
        # Guard against divide-by-zero at 180 deg inclination.
        if ad.value_of(ad.fabs(cosio + 1.0)) > 1.5e-12:
            self.xlcof = -0.25 * j3oj2 * sinio * (3.0 + 5.0 * cosio) / (1.0 + cosio)
        else:
            self.xlcof = -0.25 * j3oj2 * sinio * (3.0 + 5.0 * cosio) / 1.5e-12
        self.aycof = -0.5 * j3oj2 * sinio
        delmotemp = 1.0 + eta * ad.cos(el.mo)
        self.delmo = delmotemp * delmotemp * delmotemp
        self.sinmao = ad.sin(el.mo)
        self.x7thm1 = 7.0 * cosio2 - 1.0

        self.eta = eta
        self.d2 = self.d3 = self.d4 = 0.0
        self.t3cof = self.t4cof = self.t5cof = 0.0
        if self.isimp != 1:
            cc1sq = self.cc1 * self.cc1
            self.d2 = 4.0 * ao * tsi * cc1sq
            temp = self.d2 * tsi * self.cc1 / 3.0
            self.d3 = (17.0 * ao + sfour) * temp
            self.d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * self.cc1
            self.t3cof = self.d2 + 2.0 * cc1sq
            self.t4cof = 0.25 * (3.0 * self.d3 + self.cc1 * (12.0 * self.d2 + 10.0 * cc1sq))
            self.t5cof = 0.2 * (
                3.0 * self.d4
                + 12.0 * self.cc1 * self.d3
                + 6.0 * self.d2 * self.d2
                + 15.0 * cc1sq * (2.0 * self.d2 + cc1sq)
            )

        # Recovered semi-major axis must clear the surface; surfacing this
        # at init matches the reference error behaviour for wild elements.
        self.propagate(0.0)

    # -- propagation ----------------------------------------------------

    def propagate(self, tsince: float) -> StateVector:
        """TEME position/velocity ``tsince`` minutes after epoch."""
        el = self.elements
        gravity = self.gravity
        vkmpersec = gravity.radiusearthkm * gravity.xke / 60.0
        x2o3 = 2.0 / 3.0
        t = tsince

        # Secular gravity and atmospheric drag.
        xmdf = el.mo + self.mdot * t
        argpdf = el.argpo + self.argpdot * t
        nodedf = el.nodeo + self.nodedot * t
        argpm = argpdf
        mm = xmdf
        t2 = t * t
        nodem = nodedf + self.nodecf * t2
        tempa = 1.0 - self.cc1 * t
        tempe = el.bstar * self.cc4 * t
        templ = self.t2cof * t2

        if self.isimp != 1:
            delomg = self.omgcof * t
            delmtemp = 1.0 + self.eta * ad.cos(xmdf)
            delm = self.xmcof * (delmtemp * delmtemp * delmtemp - self.delmo)
            temp = delomg + delm
            mm = xmdf + temp
            argpm = argpdf - temp
            t3 = t2 * t
            t4 = t3 * t
            tempa = tempa - self.d2 * t2 - self.d3 * t3 - self.d4 * t4
            tempe = tempe + el.bstar * self.cc5 * (ad.sin(mm) - self.sinmao)
            templ = templ + self.t3cof * t3 + t4 * (self.t4cof + t * self.t5cof)

        nm = self.no_unkozai
        em = el.ecco
        inclm = el.inclo

        if ad.value_of(nm) <= 0.0:
            raise PropagationError(f"mean motion {ad.value_of(nm)} is not positive", code=2)
        am = (gravity.xke / nm) ** x2o3 * tempa * tempa
        nm = gravity.xke / am**1.5
        em = em - tempe

        em_v = ad.value_of(em)
        if em_v >= 1.0 or em_v < -0.001:
            raise PropagationError(
                f"mean eccentricity {em_v} outside 0 <= e < 1 at t={tsince}", code=1
            )
        if em_v < 1.0e-6:
            em = 1.0e-6
        mm = mm + self.no_unkozai * templ
        xlm = mm + argpm + nodem

        nodem = nodem % _TWOPI if ad.value_of(nodem) >= 0.0 else -(-nodem % _TWOPI)
        argpm = argpm % _TWOPI
        xlm = xlm % _TWOPI
        mm = (xlm - argpm - nodem) % _TWOPI

        sinim = ad.sin(inclm)
        cosim = ad.cos(inclm)

        # No lunar/solar periodics on the near-Earth branch.
        ep = em
        xincp = inclm
        argpp = argpm
        nodep = nodem
        mp = mm
        sinip = sinim
        cosip = cosim

        # Long period periodics.
        axnl = ep * ad.cos(argpp)
        temp = 1.0 / (am * (1.0 - ep * ep))
        aynl = ep * ad.sin(argpp) + temp * self.aycof
        xl = mp + argpp + nodep + temp * self.xlcof * axnl

        # Kepler solve, Newton capped at 10 corrections; the loop control
        # reads primal values, the final dual iterate carries the exact
        # derivative of the converged anomaly.
        u = (xl - nodep) % _TWOPI
        eo1 = u
        tem5 = 9999.9
        ktr = 1
        while ad.value_of(ad.fabs(tem5)) >= 1.0e-12 and ktr <= 10:
            sineo1 = ad.sin(eo1)
            coseo1 = ad.cos(eo1)
            tem5 = 1.0 - coseo1 * axnl - sineo1 * aynl
            tem5 = (u - aynl * coseo1 + axnl * sineo1 - eo1) / tem5
            if ad.value_of(ad.fabs(tem5)) >= 0.95:
                tem5 = 0.95 if ad.value_of(tem5) > 0.0 else -0.95
            eo1 = eo1 + tem5
            ktr = ktr + 1
        if ktr > 10 and ad.value_of(ad.fabs(tem5)) >= 1.0e-12:
            raise KeplerError(iterations=10)
        sineo1 = ad.sin(eo1)
        coseo1 = ad.cos(eo1)

        # Short period preliminary quantities.
        ecose = axnl * coseo1 + aynl * sineo1
        esine = axnl * sineo1 - aynl * coseo1
        el2 = axnl * axnl + aynl * aynl
        pl = am * (1.0 - el2)
        if ad.value_of(pl) < 0.0:
            raise PropagationError(
                f"semilatus rectum {ad.value_of(pl)} is negative at t={tsince}", code=4
            )

        rl = am * (1.0 - ecose)
        rdotl = ad.sqrt(am) * esine / rl
        rvdotl = ad.sqrt(pl) / rl
        betal = ad.sqrt(1.0 - el2)
        temp = esine / (1.0 + betal)
        sinu = am / rl * (sineo1 - aynl - axnl * temp)
        cosu = am / rl * (coseo1 - axnl + aynl * temp)
        su = ad.atan2(sinu, cosu)
        sin2u = (cosu + cosu) * sinu
        cos2u = 1.0 - 2.0 * sinu * sinu
        temp = 1.0 / pl
        temp1 = 0.5 * gravity.j2 * temp
        temp2 = temp1 * temp

        mrt = rl * (1.0 - 1.5 * temp2 * betal * self.con41) + 0.5 * temp1 * self.x1mth2 * cos2u
        su = su - 0.25 * temp2 * self.x7thm1 * sin2u
        xnode = nodep + 1.5 * temp2 * cosip * sin2u
        xinc = xincp + 1.5 * temp2 * cosip * sinip * cos2u
        mvt = rdotl - nm * temp1 * self.x1mth2 * sin2u / gravity.xke
        rvdot = rvdotl + nm * temp1 * (self.x1mth2 * cos2u + 1.5 * self.con41) / gravity.xke

        # Orientation vectors and the TEME state.
        sinsu = ad.sin(su)
        cossu = ad.cos(su)
        snod = ad.sin(xnode)
        cnod = ad.cos(xnode)
        sini = ad.sin(xinc)
        cosi = ad.cos(xinc)
        xmx = -snod * cosi
        xmy = cnod * cosi
        ux = xmx * sinsu + cnod * cossu
        uy = xmy * sinsu + snod * cossu
        uz = sini * sinsu
        vx = xmx * cossu - cnod * sinsu
        vy = xmy * cossu - snod * sinsu
        vz = sini * cossu

        if ad.value_of(mrt) < 1.0:
            raise DecayError(
                f"radius {ad.value_of(mrt) * gravity.radiusearthkm:.1f} km is below "
                f"the surface at t={tsince}: satellite has decayed"
            )

        _mr = mrt * gravity.radiusearthkm
        r = (_mr * ux, _mr * uy, _mr * uz)
        v = (
            (mvt * ux + rvdot * vx) * vkmpersec,
            (mvt * uy + rvdot * vy) * vkmpersec,
            (mvt * uz + rvdot * vz) * vkmpersec,
        )
        return StateVector(t=tsince, position=r, velocity=v)


def semi_major_axis(tle: Tle, mu: float = MU_KM3_S2) -> float:
    """Two-body semi-major axis in km from the TLE mean motion."""
    n = tle.mean_motion
    if n <= 0.0:
        raise ValueError(f"mean motion {n} not positive")
    return (mu * (86400.0 / (_TWOPI * n)) ** 2) ** (1.0 / 3.0)


def write_ephemeris_csv(model: PropagatorModel, times_min, path) -> None:
    """Dump `t_min, x_km, y_km, z_km, vx, vy, vz` rows at 12 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("t_min,x_km,y_km,z_km,vx,vy,vz\n")
        for t in times_min:
            state = model.propagate(float(t))
            row = [float(t), *state.position_km(), *state.velocity_kms()]
            fh.write(",".join(f"{x:.12g}" for x in row) + "\n")
