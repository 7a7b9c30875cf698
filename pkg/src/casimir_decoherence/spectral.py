"""Spectral functions of the vacuum field seen by a partially transparent mirror.

Units: c = 1 throughout, hbar is carried explicitly (default 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: below this |u| zeta is summed from its Taylor series
ZETA_SERIES_SWITCH = 0.1
_SERIES_TERMS = 10

#: recoil parameter hbar*omega0/M above which the weak-coupling expansion is doubtful
RECOIL_LIMIT = 1e-3


@dataclass(frozen=True)
class PhysicalParams:
    """Mirror mass, trap frequency, transparency frequency and hbar."""

    M: float = 1.0
    omega0: float = 1.0
    Omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("M", "omega0", "Omega", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")

    @property
    def recoil(self) -> float:
        """hbar*omega0/M, a squared velocity (c = 1)."""
        return self.hbar * self.omega0 / self.M

    @property
    def weak_coupling(self) -> bool:
        return self.recoil < RECOIL_LIMIT

    @property
    def transparency_ratio(self) -> float:
        """omega0/Omega; small means a nearly perfect reflector."""
        return self.omega0 / self.Omega

    @property
    def delta_q_sq(self) -> float:
        """Position variance of the oscillator ground state, hbar/(2 M omega0)."""
        return self.hbar / (2.0 * self.M * self.omega0)

    def diagnostics(self) -> list[str]:
        """Human-readable warnings about the parameter regime (empty when fine)."""
        notes = []
        if not self.weak_coupling:
            notes.append(
                f"recoil parameter hbar*omega0/M = {self.recoil:.3g} >= {RECOIL_LIMIT:g}:"
                " outside the weak-coupling regime"
            )
        return notes


def _zeta_series(u):
    # sum_k (-1)^(k+1) u^(2k-1) / (2k(2k+1)), Horner in u^2
    u2 = u * u
    acc = np.zeros_like(u)
    for k in range(_SERIES_TERMS, 0, -1):
        acc = acc * u2 + (-1.0) ** (k + 1) / (2 * k * (2 * k + 1))
    return acc * u


def _zeta_closed(u):
    return np.log1p(u * u) / (2 * u) + np.arctan(u) / (u * u) - 1.0 / u


def zeta(u):
    """Dimensionless spectral shape ln(1+u^2)/(2u) + arctan(u)/u^2 - 1/u.

    Odd in ``u``; ~u/6 for small ``u`` and ~ln(u)/u for large ``u``.
    Accepts scalars or arrays.
    """
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise DomainError("zeta is only defined for finite arguments")
    a = np.abs(arr)
    out = np.empty_like(a)
    small = a < ZETA_SERIES_SWITCH
    out[small] = _zeta_series(a[small])
    big = ~small
    out[big] = _zeta_closed(a[big])
    out = np.copysign(out, arr)
    out[arr == 0] = 0.0
    if np.ndim(u) == 0:
        return float(out[0])
    return out


def zeta_prime(u):
    """Derivative of :func:`zeta` (even in ``u``)."""
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    a = np.abs(arr)
    out = np.empty_like(a)
    small = a < ZETA_SERIES_SWITCH
    us = a[small]
    u2 = us * us
    acc = np.zeros_like(us)
    for k in range(_SERIES_TERMS, 0, -1):
        acc = acc * u2 + (-1.0) ** (k + 1) * (2 * k - 1) / (2 * k * (2 * k + 1))
    out[small] = acc
    ub = a[~small]
    out[~small] = (2.0 - 0.5 * np.log1p(ub * ub)) / (ub * ub) - 2.0 * np.arctan(ub) / ub**3
    if np.ndim(u) == 0:
        return float(out[0])
    return out


def spectral_density(omega, params: PhysicalParams):
    """Antisymmetric vacuum spectral density (2/pi) hbar^2 Omega zeta(omega/Omega)."""
    return (2.0 / math.pi) * params.hbar**2 * params.Omega * zeta(np.divide(omega, params.Omega))


def symmetric_spectral_density(omega, params: PhysicalParams):
    """sign(omega) times :func:`spectral_density`; even, with sign(0) = 0."""
    return np.sign(omega) * spectral_density(omega, params)


def reflection_amplitude(omega, Omega: float):
    """Reflection amplitude -i Omega/(omega + i Omega) of the mirror at rest."""
    if not Omega > 0:
        raise DomainError("Omega must be positive")
    return -1j * Omega / (np.asarray(omega) + 1j * Omega)
