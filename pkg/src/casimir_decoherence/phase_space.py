"""Wigner functions and decoherence of momentum cats.

Phase-space coordinates are the physical (q, p); the dimensionless amplitude
is alpha = q/(2 dq) + i p dq/hbar with dq^2 = hbar/(2 M omega0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .fockdyn import DensityMatrix, Trajectory, cat_vector, coherent_vector, mixture_density
from .gaussian import coherent_moments, evolve_moments
from .spectral import PhysicalParams

FIT_WINDOW = (0.5, 1.0)


@dataclass(frozen=True)
class WignerGrid:
    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # shape (len(p_axis), len(q_axis))

    def normalization(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.q_axis, axis=1), self.p_axis))

    def position_marginal(self) -> np.ndarray:
        return np.trapezoid(self.values, self.p_axis, axis=0)


@dataclass(frozen=True)
class CatSpec:
    """Momentum cat: alpha = i P0/sqrt(2 M hbar omega0)."""

    alpha: complex
    params: PhysicalParams

    @classmethod
    def from_momentum(cls, P0: float, params: PhysicalParams) -> "CatSpec":
        return cls(1j * P0 / math.sqrt(2 * params.M * params.hbar * params.omega0), params)

    @property
    def P0(self) -> float:
        return abs(self.alpha) * math.sqrt(2 * self.params.M * self.params.hbar * self.params.omega0)

    @property
    def delta_q(self) -> float:
        return math.sqrt(self.params.delta_q_sq)


def phase_space_amplitude(q, p, params: PhysicalParams):
    dq = math.sqrt(params.delta_q_sq)
    return np.asarray(q) / (2 * dq) + 1j * np.asarray(p) * dq / params.hbar


def default_axes(alpha: complex, params: PhysicalParams, n: int = 201, width: float = 6.0):
    """Symmetric window reaching ``width`` standard deviations past the outer peaks."""
    dq = math.sqrt(params.delta_q_sq)
    dp = params.hbar / (2 * dq)
    qc = 2 * dq * abs(alpha.real)
    pc = params.hbar * abs(alpha.imag) / dq
    qmax = qc + width * dq
    pmax = pc + width * dp
    return np.linspace(-qmax, qmax, n), np.linspace(-pmax, pmax, n)


def _coherent_gaussian(q, p, alpha, params):
    a = phase_space_amplitude(q, p, params)
    return np.exp(-2 * np.abs(a - alpha) ** 2) / (math.pi * params.hbar)


def cat_wigner_terms(spec: CatSpec, q_axis, p_axis):
    """(W_m, interference) on a grid, as in the large-|alpha| closed form.

    W_m is the average of the two coherent-state Gaussians; the interference
    term is exp[-q^2/(2dq^2) - 2 p^2 dq^2/hbar^2] cos(2 P0 q/hbar)/(pi hbar).
    """
    params = spec.params
    hb, dq = params.hbar, spec.delta_q
    Q, P = np.meshgrid(np.asarray(q_axis, float), np.asarray(p_axis, float))
    wm = 0.5 * (_coherent_gaussian(Q, P, spec.alpha, params) + _coherent_gaussian(Q, P, -spec.alpha, params))
    # a general complex alpha also displaces the fringe envelope; for the
    # momentum cat (real part zero) this reduces to the closed form above
    ar, ai = spec.alpha.real, spec.alpha.imag
    P0 = ai * hb / dq
    Q0 = 2 * dq * ar
    inter = (
        np.exp(-(Q**2) / (2 * dq**2) - 2 * P**2 * dq**2 / hb**2)
        * np.cos(2 * P0 * Q / hb - 2 * Q0 * P / hb)
        / (math.pi * hb)
    )
    return wm, inter


def cat_wigner_analytic(spec: CatSpec, q_axis, p_axis, normalized: bool = True) -> WignerGrid:
    """Wigner function of the even cat.

    ``normalized`` divides by 1 + exp(-2|alpha|^2), the exact norm of
    |alpha> + |-alpha>; without it the large-|alpha| form is returned.
    """
    wm, inter = cat_wigner_terms(spec, q_axis, p_axis)
    w = wm + inter
    if normalized:
        w = w / (1 + math.exp(-2 * abs(spec.alpha) ** 2))
    return WignerGrid(np.asarray(q_axis, float), np.asarray(p_axis, float), w)


def wigner_from_rho(rho: DensityMatrix, q_axis, p_axis, check_mass: bool = True) -> WignerGrid:
    """Wigner transform of a number-basis density matrix (Laguerre recursion)."""
    params = rho.params
    q_axis = np.asarray(q_axis, float)
    p_axis = np.asarray(p_axis, float)
    Q, P = np.meshgrid(q_axis, p_axis)
    A = phase_space_amplitude(Q, P, params)
    r = rho.data
    N = rho.dim
    wl = [np.exp(-2 * np.abs(A) ** 2) / (math.pi * params.hbar)]
    W = r[0, 0].real * wl[0]
    for n in range(1, N):
        wl.append(2 * A * wl[n - 1] / math.sqrt(n))
        W = W + 2 * np.real(r[0, n] * wl[n])
    for m in range(1, N):
        temp = wl[m].copy()
        wl[m] = (2 * np.conj(A) * temp - math.sqrt(m) * wl[m - 1]) / math.sqrt(m)
        W = W + np.real(r[m, m] * wl[m])
        for n in range(m + 1, N):
            temp2 = (2 * A * wl[n - 1] - math.sqrt(m) * temp) / math.sqrt(n)
            temp = wl[n].copy()
            wl[n] = temp2
            W = W + 2 * np.real(r[m, n] * wl[n])
    grid = WignerGrid(q_axis, p_axis, W)
    if check_mass:
        norm = grid.normalization()
        if abs(norm - 1) > 1e-3:
            raise PreconditionError(f"window holds Wigner mass {norm:.6f}; widen the axes")
    return grid


def position_density(rho: DensityMatrix, q_axis) -> np.ndarray:
    """<q|rho|q> from Hermite functions."""
    params = rho.params
    q = np.asarray(q_axis, float)
    x = q * math.sqrt(params.M * params.omega0 / params.hbar)
    N = rho.dim
    psi = np.empty((N, len(x)))
    psi[0] = (params.M * params.omega0 / (math.pi * params.hbar)) ** 0.25 * np.exp(-x * x / 2)
    if N > 1:
        psi[1] = math.sqrt(2) * x * psi[0]
    for n in range(2, N):
        psi[n] = math.sqrt(2 / n) * x * psi[n - 1] - math.sqrt((n - 1) / n) * psi[n - 2]
    return np.real(np.einsum("mx,mn,nx->x", psi, rho.data, psi))


# -- coherence of the cat ---------------------------------------------------


def cat_coherence(rho, alpha: complex) -> float:
    """Weight of the coherence dyads in rho.

    Least-squares (Frobenius) fit of rho by x D + y X with
    D = |a><a| + |-a><-a| and X = |a><-a| + |-a><a|; returns y.  Unlike the
    bare element <a|rho|-a>, y is not contaminated by the overlap
    exp(-2|a|^2) of the two components.
    """
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    N = r.shape[0]
    u, v = coherent_vector(alpha, N), coherent_vector(-alpha, N)
    D = np.outer(u, u.conj()) + np.outer(v, v.conj())
    X = np.outer(u, v.conj()) + np.outer(v, u.conj())
    G = np.array([[np.vdot(D, D), np.vdot(D, X)], [np.vdot(X, D), np.vdot(X, X)]]).real
    b = np.array([np.vdot(D, r), np.vdot(X, r)]).real
    if abs(np.linalg.det(G)) < 1e-14 * G[0, 0] * G[1, 1]:
        raise PreconditionError("cat components indistinguishable (alpha too small)")
    return float(np.linalg.solve(G, b)[1])


def fringe_amplitude(rho, alpha, rho0=None) -> float:
    """Coherence weight of ``rho`` relative to that of ``rho0`` (default: the pure even cat).

    ``alpha`` is a complex amplitude or a :class:`CatSpec`.
    """
    if isinstance(alpha, CatSpec):
        alpha = alpha.alpha
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if rho0 is None:
        v = cat_vector(alpha, r.shape[0])
        rho0 = np.outer(v, v.conj())
    first = cat_coherence(rho0, alpha)
    if abs(first) < 1e-12:
        raise PreconditionError("initial coherence below 1e-12")
    return abs(cat_coherence(r, alpha)) / abs(first)


def _component_track(spec: CatSpec, trajectory: Trajectory):
    """Interaction-frame amplitude of the |alpha> component along the damped mean motion."""
    params = trajectory.params
    mom = evolve_moments(coherent_moments(spec.alpha, params), trajectory.coeffs_source, params, trajectory.times)
    scale = math.sqrt(2 * params.M * params.hbar * params.omega0)
    a_lab = (params.M * params.omega0 * mom[:, 0] + 1j * mom[:, 1]) / scale
    return a_lab * np.exp(1j * params.omega0 * trajectory.times)


def fringe_series(trajectory: Trajectory, spec: CatSpec, track: bool = True) -> np.ndarray:
    """Coherence weight (see :func:`cat_coherence`) relative to its initial value.

    Measured in the frame co-rotating with H_M; with ``track`` the probe
    amplitude follows the damped classical motion of the components.
    """
    states = trajectory.interaction_states()
    alphas = _component_track(spec, trajectory) if track else np.full(len(states), spec.alpha)
    first = cat_coherence(states[0], alphas[0])
    if abs(first) < 1e-12:
        raise PreconditionError("initial coherence below 1e-12")
    return np.array([abs(cat_coherence(r, a)) for r, a in zip(states, alphas)]) / abs(first)


def mixture_distance_check(trajectory: Trajectory, spec: CatSpec, track: bool = False) -> list[tuple[float, float]]:
    """||rho(t) - rho_m||_F / ||rho(0) - rho_m||_F in the co-rotating frame.

    rho_m is the equal mixture of |alpha> and |-alpha>; with ``track`` its
    components follow the damped classical motion.
    """
    states = trajectory.interaction_states()
    N = states[0].shape[0]
    alphas = _component_track(spec, trajectory) if track else np.full(len(states), spec.alpha)
    rho_m0 = mixture_density(spec.alpha, N, trajectory.params).data
    d0 = np.linalg.norm(states[0] - rho_m0)
    if d0 < 1e-12:
        raise PreconditionError("initial state coincides with the mixture")
    out = []
    for t, r, a in zip(trajectory.times, states, alphas):
        if track:
            u, v = coherent_vector(a, N), coherent_vector(-a, N)
            rho_m = 0.5 * (np.outer(u, u.conj()) + np.outer(v, v.conj()))
        else:
            rho_m = rho_m0
        out.append((float(t), float(np.linalg.norm(r - rho_m) / d0)))
    return out


def decoherence_time_formula(spec: CatSpec, d1_asym: float, gamma_asym: float | None = None) -> float:
    """hbar^2/(2 P0^2 D1); cross-checked against 1/(4|alpha|^2 Gamma) when given."""
    if spec.alpha == 0:
        raise PreconditionError("decoherence time undefined for alpha = 0")
    params = spec.params
    td = params.hbar**2 / (2 * spec.P0**2 * d1_asym)
    if gamma_asym is not None:
        consistent = params.hbar * gamma_asym / (params.M * params.omega0)
        if abs(consistent - d1_asym) <= 1e-12 * abs(d1_asym):
            alt = 1.0 / (4 * abs(spec.alpha) ** 2 * gamma_asym)
            if abs(alt - td) > 1e-12 * td:
                raise ArithmeticError(f"decoherence time identity broken: {td!r} vs {alt!r}")
    return td


def decoherence_time_fit(series, window=FIT_WINDOW, min_samples: int = 5, curvature: bool = True):
    """Least-squares fit of amplitude = 1 - t/t_d on the early-time window.

    Returns (t_d, rms residual).  The intercept is pinned to 1.  With
    ``curvature`` a nuisance term c t^2 is fitted alongside, so that t_d is
    the initial (tangent) decay time even when the window reaches into the
    curved part of the decay; exactly linear data give the same t_d either way.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise PreconditionError("series must be a list of (t, amplitude) pairs")
    t, a = arr[:, 0], arr[:, 1]
    lo, hi = window
    sel = (a >= lo) & (a <= hi)
    # only the leading run of samples counts as early time
    if not sel[0]:
        raise PreconditionError("first sample lies outside the fit window")
    stop = np.argmin(sel) if not sel.all() else len(sel)
    t, a = t[:stop], a[:stop]
    if len(t) < min_samples:
        raise PreconditionError(f"{len(t)} early-time samples in window {window}; need {min_samples}")
    y = 1.0 - a
    X = np.c_[t, -(t**2)] if curvature else t[:, None]
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    slope = float(coef[0])
    if slope <= 0:
        raise PreconditionError("amplitude does not decrease over the fit window")
    resid = float(np.sqrt(np.mean((y - X @ coef) ** 2)))
    return 1.0 / slope, resid


def period_samples(t_end: float, params: PhysicalParams, per_period: int = 1) -> np.ndarray:
    """Times k*2pi/(omega0*per_period) from 0 up to t_end."""
    step = 2 * math.pi / params.omega0 / per_period
    n = int(math.floor(t_end / step + 1e-9))
    return step * np.arange(n + 1)
