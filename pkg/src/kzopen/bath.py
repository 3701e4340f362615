"""Thermal bath: occupations, jump rates and the mode relaxation rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SMALL = 1e-6   # series switch-over for small arguments
_COTH_SAT = 30.0  # coth(x) == 1 to double precision beyond this


@dataclass(frozen=True)
class BathParams:
    """Spectral exponent ``s``, amplitude ``delta`` and coupling ``gamma``."""

    gamma: float = 0.0
    delta: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("bath.gamma must be >= 0")
        if not self.delta > 0:
            raise ValueError("bath.delta must be > 0")
        if not self.s > 0:
            raise ValueError("bath.s must be > 0")


def bose_einstein(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bose_einstein needs x > 0")
    small = x < _SMALL
    xs = np.where(small, x, 1.0)
    series = 1.0 / xs - 0.5 + xs / 12.0
    with np.errstate(over="ignore"):
        direct = 1.0 / np.expm1(np.where(small, 1.0, x))
    return np.where(small, series, direct)[()]


def fermi_dirac(x):
    """1/(e^x + 1), overflow-safe; x = +inf gives 0."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, e / (1.0 + e), 1.0 / (1.0 + e))[()]


def thermal_occupation(lam, T):
    """Fermi-Dirac occupation of a mode at energy lam; exact at T = 0."""
    lam = np.asarray(lam, dtype=float)
    if np.ndim(T) == 0 and T <= 0:
        return np.where(lam > 0, 0.0, 0.5)[()]
    # lam/T may overflow to inf, which fermi_dirac maps to 0
    with np.errstate(divide="ignore", over="ignore"):
        return fermi_dirac(lam / T)


def _coth_factor(lam, T):
    """lam^0 * coth(lam / 2T) with the two asymptotic branches."""
    with np.errstate(over="ignore"):
        x = lam / (2.0 * T)
    out = np.ones_like(x)
    mid = (x >= _SMALL) & (x <= _COTH_SAT)
    out[mid] = 1.0 / np.tanh(x[mid])
    lo = x < _SMALL
    xl = x[lo]
    with np.errstate(divide="ignore"):
        out[lo] = 1.0 / xl + xl / 3.0
    return out


def relaxation_rate(bath: BathParams, lam, T):
    """R = 2 pi gamma delta lam^s coth(lam / 2T)."""
    lam, T = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                 np.asarray(T, dtype=float))
    if np.any(lam < 0) or np.any(T < 0):
        raise ValueError("relaxation_rate needs lam >= 0 and T >= 0")
    if bath.gamma == 0:
        return np.zeros(lam.shape)[()]
    pref = 2.0 * math.pi * bath.gamma * bath.delta
    shape = lam.shape
    lam = np.atleast_1d(lam).astype(float)
    T = np.atleast_1d(T).astype(float)
    out = np.empty(lam.shape)
    cold = T == 0
    out[cold] = pref * lam[cold] ** bath.s
    hot = ~cold
    lh = lam[hot]
    Th = T[hot]
    fac = _coth_factor(lh, Th)
    zero = lh == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = pref * lh ** bath.s * fac
    if np.any(zero):
        # lam^s coth(lam/2T) -> 2T lam^(s-1): finite only for s = 1
        val[zero] = pref * 2.0 * Th[zero] if bath.s == 1 else np.inf
    out[hot] = val
    return out.reshape(shape)[()]


def jump_rates(bath: BathParams, lam, T):
    """(Gamma_plus, Gamma_minus) = 2 pi delta lam^s (n_BE, n_BE + 1)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("jump_rates needs lam > 0")
    if np.any(np.asarray(T) < 0):
        raise ValueError("jump_rates needs T >= 0")
    base = 2.0 * math.pi * bath.delta * lam ** bath.s
    if np.ndim(T) == 0 and T == 0:
        n = np.zeros(lam.shape)
    else:
        with np.errstate(divide="ignore"):
            x = lam / np.asarray(T, dtype=float)
        n = np.where(np.isinf(x), 0.0, bose_einstein(np.where(np.isinf(x), 1.0, x)))
    return (base * n)[()], (base * (n + 1.0))[()]
