"""Quadratic fermionic chains in Bogoliubov-de Gennes form.

A chain is described by the two matrix elements ``a(dmu, k)`` (even in k) and
``b(dmu, k)`` (odd in k) of its momentum-space block, where ``dmu = mu - mu_c``
is the *signed* distance to the critical point. The quasiparticle energy is
``sqrt(a**2 + b**2)`` and the Bogoliubov angle is ``atan2(-b, a) / 2``.

Near the critical point every quantity reduces to a scaling form in the mode
energy ``eps = c1 |k|**z``; these are the "local" forms used by the critical
dynamics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
AffineFn = Callable[[np.ndarray], tuple]

# q values used to extrapolate local forms when no closed form exists
_RICHARDSON_Q = (1e-3, 1e-4, 1e-5)


class DegeneratePointError(ValueError):
    """Both matrix elements vanish, so the Bogoliubov angle is undefined."""


@dataclass(frozen=True)
class ModelSpec:
    """A BdG chain plus the critical data of its transition.

    ``affine`` and ``local_affine`` are optional fast paths. When given they
    return ``(a0, a1, b0, b1)`` such that ``a = a0 + a1*dmu`` and
    ``b = b0 + b1*dmu`` for a fixed mode (labelled by k, respectively by the
    local energy eps). Models without them are integrated by a generic solver.
    """

    mu_c: float
    nu: float
    z: float
    c1: float
    c2: float
    a_fn: ArrayFn
    b_fn: ArrayFn
    local_a_fn: Optional[ArrayFn] = None
    local_b_fn: Optional[ArrayFn] = None
    da_fn: Optional[ArrayFn] = None
    db_fn: Optional[ArrayFn] = None
    affine: Optional[AffineFn] = None
    local_affine: Optional[AffineFn] = None
    name: str = "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in ("nu", "z", "c1", "c2"):
            if not getattr(self, key) > 0:
                raise ValueError(f"model.{key} must be > 0")

    @property
    def nu_z(self) -> float:
        return self.nu * self.z

    def fingerprint(self) -> dict:
        d = {"kind": self.name, "mu_c": self.mu_c, "nu": self.nu, "z": self.z,
             "c1": self.c1, "c2": self.c2}
        d.update(self.params)
        return d


@dataclass(frozen=True)
class KitaevParams:
    J: float = 1.0
    Delta_p: float = 1.0

    def __post_init__(self):
        if not (self.J > 0 and self.Delta_p > 0):
            raise ValueError("Kitaev J and Delta_p must be > 0")

    def spec(self) -> ModelSpec:
        return kitaev(self.J, self.Delta_p)


def kitaev(J: float = 1.0, Delta_p: float = 1.0) -> ModelSpec:
    """Kitaev chain with hopping ``J`` and p-wave pairing ``Delta_p``.

    a = 2(dmu - J + J cos k), b = Delta_p sin k, critical point mu_c = -J.
    """
    J = float(J)
    Dp = float(Delta_p)
    if not (J > 0 and Dp > 0):
        raise ValueError("Kitaev J and Delta_p must be > 0")

    def a_fn(dmu, k):
        return 2.0 * (dmu - J + J * np.cos(k))

    def b_fn(dmu, k):
        return Dp * np.sin(k) + 0.0 * dmu

    def da_fn(dmu, k):
        return np.full(np.broadcast(dmu, k).shape, 2.0)[()]

    def db_fn(dmu, k):
        return np.zeros(np.broadcast(dmu, k).shape)[()]

    def local_a_fn(dmu, k):
        return 2.0 * dmu + 0.0 * k

    def local_b_fn(dmu, k):
        return Dp * k + 0.0 * dmu

    def affine(k):
        k = np.asarray(k, dtype=float)
        return (2.0 * J * (np.cos(k) - 1.0), np.full(k.shape, 2.0),
                Dp * np.sin(k), np.zeros(k.shape))

    def local_affine(eps):
        eps = np.asarray(eps, dtype=float)
        return (np.zeros(eps.shape), np.full(eps.shape, 2.0), eps.copy(),
                np.zeros(eps.shape))

    return ModelSpec(mu_c=-J, nu=1.0, z=1.0, c1=Dp, c2=2.0, a_fn=a_fn,
                     b_fn=b_fn, local_a_fn=local_a_fn, local_b_fn=local_b_fn,
                     da_fn=da_fn, db_fn=db_fn, affine=affine,
                     local_affine=local_affine, name="kitaev",
                     params={"J": J, "Delta_p": Dp})


def _half_angle(a, b):
    # -b + 0.0 turns -0.0 into +0.0, so b = 0, a < 0 lands on the +pi/2 branch
    return 0.5 * np.arctan2(-np.asarray(b) + 0.0, a)


def _check_degenerate(a, b, what):
    if np.any((np.asarray(a) == 0.0) & (np.asarray(b) == 0.0)):
        raise DegeneratePointError(f"{what}: both matrix elements vanish")


def dispersion(spec: ModelSpec, dmu, k):
    """Quasiparticle energy sqrt(a^2 + b^2)."""
    return np.hypot(spec.a_fn(dmu, k), spec.b_fn(dmu, k))


def bogoliubov_angle(spec: ModelSpec, dmu, k):
    """Half of atan2(-b, a); on the k = 0 line with a < 0 this is +pi/2."""
    a = spec.a_fn(dmu, k)
    b = spec.b_fn(dmu, k)
    _check_degenerate(a, b, "bogoliubov_angle")
    return _half_angle(a, b)


def angle_derivative(spec: ModelSpec, dmu, k):
    """d(beta)/d(dmu), analytic when the model supplies partials."""
    a = spec.a_fn(dmu, k)
    b = spec.b_fn(dmu, k)
    _check_degenerate(a, b, "bogoliubov_angle_rate")
    if spec.da_fn is not None and spec.db_fn is not None:
        da = spec.da_fn(dmu, k)
        db = spec.db_fn(dmu, k)
        return 0.5 * (b * da - a * db) / (a * a + b * b)
    h = np.maximum(1e-7, 1e-7 * np.abs(dmu))
    up = _half_angle(spec.a_fn(dmu + h, k), spec.b_fn(dmu + h, k))
    dn = _half_angle(spec.a_fn(dmu - h, k), spec.b_fn(dmu - h, k))
    # half-angles are defined modulo pi
    d = np.mod(up - dn + 0.5 * np.pi, np.pi) - 0.5 * np.pi
    return d / (2.0 * h)


def bogoliubov_angle_rate(spec: ModelSpec, dmu, k, dmu_dt):
    """Time derivative of the Bogoliubov angle for a given d(dmu)/dt."""
    return angle_derivative(spec, dmu, k) * dmu_dt


def _eps_to_k(spec: ModelSpec, eps):
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0):
        raise ValueError("eps must be >= 0")
    return (eps / spec.c1) ** (1.0 / spec.z)


def _richardson(fn, dmu, k, spec: ModelSpec):
    """lim_{q->0} fn(q^(1/nu z) dmu, q^(1/z) k) / q by Richardson extrapolation."""
    vals = [fn(q ** (1.0 / spec.nu_z) * dmu, q ** (1.0 / spec.z) * k) / q
            for q in _RICHARDSON_Q]
    # leading corrections assumed O(q); q ratio is 10 between levels
    r1 = (10.0 * vals[1] - vals[0]) / 9.0
    r2 = (10.0 * vals[2] - vals[1]) / 9.0
    return (100.0 * r2 - r1) / 99.0


def local_elements(spec: ModelSpec, dmu, eps):
    """Critical-region matrix elements at mode energy ``eps``."""
    k = _eps_to_k(spec, eps)
    if spec.local_a_fn is not None and spec.local_b_fn is not None:
        return spec.local_a_fn(dmu, k), spec.local_b_fn(dmu, k)
    return (_richardson(spec.a_fn, dmu, k, spec),
            _richardson(spec.b_fn, dmu, k, spec))


def local_dispersion(spec: ModelSpec, dmu, eps):
    a, b = local_elements(spec, dmu, eps)
    return np.hypot(a, b)


def local_angle(spec: ModelSpec, dmu, eps):
    a, b = local_elements(spec, dmu, eps)
    _check_degenerate(a, b, "local_angle")
    return _half_angle(a, b)


def local_dos(spec: ModelSpec, eps):
    """Density of states in eps, counting both +k and -k."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0):
        raise ValueError("eps must be >= 0")
    if spec.z > 1 and np.any(eps == 0):
        raise ValueError("local_dos diverges at eps = 0 for z > 1")
    z = spec.z
    return eps ** (1.0 / z - 1.0) / (math.pi * z * spec.c1 ** (1.0 / z))


def gap(spec: ModelSpec, dmu: float, n_scan: int = 4097) -> float:
    """min_k dispersion: coarse scan on [0, pi], then a bounded Brent/golden refine."""
    ks = np.linspace(0.0, math.pi, n_scan)
    lam = dispersion(spec, dmu, ks)
    i = int(np.argmin(lam))
    lo = ks[max(i - 1, 0)]
    hi = ks[min(i + 1, n_scan - 1)]
    res = minimize_scalar(lambda k: float(dispersion(spec, dmu, k)),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, lam[i]))
