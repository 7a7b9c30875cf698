"""First and second moments of q and p under the master equation.

Taking Tr(A rho') for A in {q, p, q^2, p^2, {q,p}} closes exactly:

    d<q>/dt     = <p>/M_eff - 2 Gamma <q>
    d<p>/dt     = -M omega0^2 <q>
    d var_q/dt  = cov_qp/M_eff - 4 Gamma var_q + 2 D1
    d var_p/dt  = -M omega0^2 cov_qp
    d cov_qp/dt = 2 var_p/M_eff - 2 M omega0^2 var_q - 2 Gamma cov_qp - 2 D2

with 1/M_eff = (1 - dM/M)/M and cov_qp = <{q,p}> - 2<q><p>.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np
from scipy import integrate, optimize

from .coefficients import CoefficientSet
from .errors import ConvergenceError, PreconditionError
from .spectral import PhysicalParams


@dataclass(frozen=True)
class MomentState:
    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    cov_qp: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, arr) -> "MomentState":
        return cls(*(float(x) for x in arr))

    def uncertainty_product(self) -> float:
        """var_q var_p - (cov_qp/2)^2, bounded below by (hbar/2)^2."""
        return self.var_q * self.var_p - 0.25 * self.cov_qp**2

    def check(self, hbar: float = 1.0):
        if not (self.var_q > 0 and self.var_p > 0):
            raise PreconditionError("variances must be positive")
        if self.uncertainty_product() < 0.25 * hbar**2 * (1 - 1e-9):
            raise PreconditionError("moments violate the uncertainty relation")
        return self


def coherent_moments(alpha: complex, params: PhysicalParams) -> MomentState:
    hb, M, w0 = params.hbar, params.M, params.omega0
    scale = math.sqrt(2 * M * hb * w0)
    return MomentState(
        mean_q=alpha.real * scale / (M * w0),
        mean_p=alpha.imag * scale,
        var_q=hb / (2 * M * w0),
        var_p=M * hb * w0 / 2,
        cov_qp=0.0,
    )


def squeezed_moments(r: float, params: PhysicalParams, alpha: complex = 0j) -> MomentState:
    """Coherent moments with var_q scaled by exp(-2r) and var_p by exp(+2r)."""
    c = coherent_moments(alpha, params)
    return MomentState(c.mean_q, c.mean_p, c.var_q * math.exp(-2 * r), c.var_p * math.exp(2 * r), 0.0)


def moment_rhs(state, coeffs: CoefficientSet, params: PhysicalParams) -> np.ndarray:
    """Derivative of (mean_q, mean_p, var_q, var_p, cov_qp)."""
    mq, mp_, vq, vp, c = state.as_array() if isinstance(state, MomentState) else np.asarray(state, dtype=float)
    M, w0 = params.M, params.omega0
    inv_m = (1.0 - (coeffs.delta_m2 or 0.0) / M) / M
    g, d1, d2 = coeffs.gamma, coeffs.d1, coeffs.d2 or 0.0
    k = M * w0 * w0
    return np.array(
        [
            mp_ * inv_m - 2 * g * mq,
            -k * mq,
            c * inv_m - 4 * g * vq + 2 * d1,
            -k * c,
            2 * vp * inv_m - 2 * k * vq - 2 * g * c - 2 * d2,
        ]
    )


def evolve_moments(initial: MomentState, coeffs_source, params: PhysicalParams, times, rtol=1e-12, atol=1e-15):
    """Integrate the moment equations; returns an array of shape (len(times), 5)."""
    from .fockdyn import coefficients_at_time

    times = np.asarray(times, dtype=float)
    sol = integrate.solve_ivp(
        lambda t, y: moment_rhs(y, coefficients_at_time(coeffs_source, t), params),
        (times[0], times[-1]),
        initial.as_array(),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise ConvergenceError(f"moment integration failed: {sol.message}")
    return sol.y.T


def _check_periods(T: float, params: PhysicalParams) -> int:
    period = 2 * math.pi / params.omega0
    n = T / period
    k = round(n)
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise PreconditionError(f"T = {T} is not a positive integer number of periods ({n:.6g})")
    return k


def entropy_production_avg(initial: MomentState, d1_asym: float, T: float, params: PhysicalParams) -> float:
    """Linear entropy after T = n 2pi/omega0 from the period-averaged diffusion rate."""
    _check_periods(T, params)
    hb, M, w0 = params.hbar, params.M, params.omega0
    return 2 * T * d1_asym / hb**2 * (initial.var_p + (M * w0) ** 2 * initial.var_q)


def entropy_production_min_uncertainty(var_q, d1_asym: float, T: float, params: PhysicalParams):
    """Same as :func:`entropy_production_avg` on the family var_q var_p = hbar^2/4."""
    _check_periods(T, params)
    hb, M, w0 = params.hbar, params.M, params.omega0
    var_q = np.asarray(var_q, dtype=float)
    return 2 * T * d1_asym / hb**2 * (hb**2 / (4 * var_q) + (M * w0) ** 2 * var_q)


def pointer_argmin(params: PhysicalParams, d1_asym: float, T: float) -> float:
    """var_q minimizing the entropy production among minimum-uncertainty Gaussians.

    Located as the root of the derivative in log(var_q); the analytic answer
    is hbar/(2 M omega0).
    """
    _check_periods(T, params)
    hb, M, w0 = params.hbar, params.M, params.omega0
    scale = hb / (M * w0)

    # d s / d log(var_q), divided by the positive prefactor 2 T D1 / hbar^2
    def slope(logx):
        x = math.exp(logx) * scale
        return -(hb**2) / (4 * x) + (M * w0) ** 2 * x

    lo, hi = math.log(1e-6), math.log(1e6)
    try:
        root, res = optimize.brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, full_output=True)
    except ValueError as exc:
        raise ConvergenceError(f"pointer search failed to bracket the minimum: {exc}") from exc
    if not res.converged:
        raise ConvergenceError("pointer search did not converge")
    return math.exp(root) * scale


def entropy_rate_free(initial: MomentState, coeffs: CoefficientSet, params: PhysicalParams, t):
    """Diffusive part of the entropy rate, 4 D1 var_p/hbar^2 + 2 D2 cov_qp/hbar^2, along free motion.

    Returns the (D1, D2) contributions separately, each an array over ``t``.
    """
    hb, M, w0 = params.hbar, params.M, params.omega0
    t = np.asarray(t, dtype=float)
    c, s = np.cos(w0 * t), np.sin(w0 * t)
    vq, vp, cq = initial.var_q, initial.var_p, initial.cov_qp
    k = M * w0
    # free harmonic flow of the covariance matrix
    var_p = vp * c * c + k * k * vq * s * s - k * cq * s * c
    cov = cq * (c * c - s * s) + 2 * s * c * (vp / k - k * vq)
    d2 = coeffs.d2 or 0.0
    return 4 * coeffs.d1 * var_p / hb**2, 2 * d2 * cov / hb**2
