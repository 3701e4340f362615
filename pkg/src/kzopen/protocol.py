"""Power-law ramps of temperature and parameter, ramp classes, and the
rescaling schemes that predict the Kibble-Zurek exponent."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

B_TOL = 1e-12      # relative tolerance for alpha/beta == nu z
NEAR_B_WARN = 1e-3  # proximity warning threshold


class UnsupportedRegimeError(ValueError):
    """Prediction requested outside the regime where it is derived."""


class RampClass(str, Enum):
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class RampSpec:
    """T(tau) = T_i tau^alpha, dmu(tau) = dmu_i tau^beta, tau = 1 - t/t_f."""

    alpha: float
    beta: float
    dmu_i: float
    T_i: float
    t_f: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("ramp.alpha and ramp.beta must be > 0")
        if not self.T_i >= 0:
            raise ValueError("ramp.T_i must be >= 0")
        if self.dmu_i == 0 and self.T_i == 0:
            raise ValueError("ramp needs dmu_i != 0 or T_i > 0")
        if not self.t_f > 0:
            raise ValueError("ramp.t_f must be > 0")

    def with_tf(self, t_f: float) -> "RampSpec":
        return replace(self, t_f=float(t_f))

    @property
    def stretch(self) -> float:
        """Exponent m of the substitution tau = (1 - s)^(1/m)."""
        m = 1.0
        if self.T_i > 0:
            m = min(m, self.alpha)
        if self.dmu_i != 0:
            m = min(m, self.beta)
        return m

    def fingerprint(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "dmu_i": self.dmu_i,
                "T_i": self.T_i}


@dataclass(frozen=True)
class SchemeParams:
    scheme_id: int
    r: float
    p: float
    s: float
    z: float

    @property
    def zeta(self) -> float:
        return self.p / (self.s * self.z)


def ramp_values(ramp: RampSpec, tau):
    """(dmu, T) at dimensionless time tau in [0, 1]."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    return ramp.dmu_i * tau ** ramp.beta, ramp.T_i * tau ** ramp.alpha


def ramp_velocities(ramp: RampSpec):
    """(v_mu, v_T) = (dmu_i t_f^-beta, T_i t_f^-alpha)."""
    return (ramp.dmu_i * ramp.t_f ** -ramp.beta,
            ramp.T_i * ramp.t_f ** -ramp.alpha)


def start_from_velocities(v_mu, v_T, alpha, beta, t_f):
    return v_mu * t_f ** beta, v_T * t_f ** alpha


def theta_start(radius: float, theta: float, side: str = "below"):
    """(dmu_i, T_i) = (-/+ R cos theta, R sin theta); tiny values snap to 0."""
    sign = -1.0 if side == "below" else 1.0
    dmu = sign * radius * math.cos(theta)
    T = radius * math.sin(theta)
    if abs(dmu) < 1e-12 * radius:
        dmu = 0.0
    if abs(T) < 1e-12 * radius:
        T = 0.0
    return dmu, T


def classify(ramp: RampSpec, nu_z: float) -> RampClass:
    if ramp.dmu_i == 0:
        return RampClass.A
    if ramp.T_i == 0:
        return RampClass.C
    ratio = ramp.alpha / ramp.beta
    d = ratio - nu_z
    if abs(d) <= B_TOL * nu_z:
        return RampClass.B
    if abs(d) <= NEAR_B_WARN * nu_z:
        warnings.warn(f"alpha/beta = {ratio!r} is within {NEAR_B_WARN:g} of nu z;"
                      " finite-t_f behaviour will look like class B",
                      stacklevel=2)
    return RampClass.A if d < 0 else RampClass.C


def predicted_exponent(cls, alpha, beta, nu, z, s, coherent=False,
                       conjectural=False) -> float:
    """Asymptotic exponent zeta for a class, or the unitary value if ``coherent``.

    For s > 1 the dissipative predictions are not derived; they are refused
    unless ``conjectural`` is set, in which case class C falls back to the
    unitary exponent.
    """
    cls = RampClass(cls)
    nz = nu * z
    zeta_coh = nu * beta / (1.0 + nz * beta)
    if coherent:
        return zeta_coh
    if s > 1:
        if not conjectural:
            raise UnsupportedRegimeError(
                "no scaling prediction for s > 1 (pass conjectural=True for "
                "the unitary-limit conjecture)")
        if cls is RampClass.C:
            return zeta_coh
    zeta_a = alpha / (z * (1.0 + s * alpha))
    zeta_c = nz * beta / (z * (1.0 + s * nz * beta))
    if cls is RampClass.A:
        return zeta_a
    if cls is RampClass.C:
        return zeta_c
    if abs(alpha / beta - nz) > B_TOL * nz:
        raise ValueError("class B needs alpha = nu z beta")
    assert abs(zeta_a - zeta_c) <= 1e-12 * max(zeta_a, zeta_c)
    return zeta_a


def ramp_exponent(ramp: RampSpec, nu, z, s, coherent=False, conjectural=False):
    cls = classify(ramp, nu * z)
    return predicted_exponent(cls, ramp.alpha, ramp.beta, nu, z, s,
                              coherent=coherent, conjectural=conjectural)


def scheme_params(scheme_id, alpha, beta, nu, z, s) -> SchemeParams:
    nzb = nu * z * beta
    if scheme_id == 1:
        r = p = s * alpha / (1.0 + s * alpha)
    elif scheme_id == 2:
        r = p = s * nzb / (1.0 + s * nzb)
    elif scheme_id == 3:
        r = alpha / (1.0 + alpha)
        p = s * r
    elif scheme_id == 4:
        r = nzb / (1.0 + nzb)
        p = s * r
    else:
        raise ValueError(f"unknown scheme {scheme_id!r}; expected 1-4")
    return SchemeParams(int(scheme_id), r, p, float(s), float(z))


def scheme_for_class(cls, alpha, beta, nu, z, s) -> SchemeParams:
    """Scheme 1 for class A and B, scheme 2 for class C."""
    sid = 2 if RampClass(cls) is RampClass.C else 1
    return scheme_params(sid, alpha, beta, nu, z, s)


@dataclass(frozen=True)
class Rescaled:
    t_f: float
    gamma: float
    kappa: float
    dmu_i: float
    T_i: float
    v_mu: float
    v_T: float


def rescale_parameters(t_f, gamma, kappa, dmu_i, T_i, t0, scheme: SchemeParams,
                       nu, z, s, alpha, beta) -> Rescaled:
    """Parameter map at f = t_f/t0 for a given (r, p) scheme."""
    if not t0 > 0:
        raise ValueError("t0 must be > 0")
    f = t_f / t0
    r, p = scheme.r, scheme.p
    nz = nu * z
    return Rescaled(
        t_f=t0 * f ** (1.0 - r),
        gamma=f ** (r - p) * gamma,
        kappa=f ** (r - p / s) * kappa,
        dmu_i=f ** (p / (s * nz)) * dmu_i,
        T_i=f ** (p / s) * T_i,
        v_mu=f ** (p / (s * nz) - beta * (1.0 - r)) * dmu_i * t0 ** -beta,
        v_T=f ** (p / s - alpha * (1.0 - r)) * T_i * t0 ** -alpha,
    )
