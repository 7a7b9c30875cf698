"""Time-dependent mass shift, damping and diffusion coefficients.

Each coefficient is a prefactor times one of two frequency integrals over the
whole real axis::

    I_sin(t)  = int h(w) sin[(w0 - w) t] / (w0 - w) dw
    I_sin2(t) = int h(w) sin^2[(w0 - w) t / 2] / (w0 - w) dw

with ``h(w) = zeta(w/Omega)`` (odd) or ``zeta(|w|/Omega)`` (even).

The kernels concentrate into a peak of width ~1/t around w0, which defeats
plain adaptive quadrature at large t.  The peak is removed analytically:
``h(w) = h(w0) + (h(w) - h(w0))``, the first piece integrates to sine/cosine
integrals and the remainder ``(h(w) - h(w0))/(w0 - w)`` is smooth, so the
trigonometric factor can be handed to QUADPACK's Clenshaw-Curtis oscillatory
rules (QAWO on finite panels, QAWF on the two semi-infinite tails).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, DomainError, PreconditionError
from .spectral import ZETA_SERIES_SWITCH, PhysicalParams, zeta

_EULER_GAMMA = 0.5772156649015329
_PI = math.pi


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    cutoff_factor: float = 1e3
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.cutoff_factor < 10:
            raise DomainError("cutoff_factor must be >= 10")
        if self.max_subdivisions < 100:
            raise DomainError("max_subdivisions must be >= 100")


@dataclass(frozen=True)
class CoefficientSet:
    """Master-equation coefficients at one instant.

    ``asymptotic`` marks the t -> infinity limit (``t`` is then ``math.inf``).
    ``d2`` is ``None`` when no value is available (the late-time limit has no
    closed form).  ``delta_m2_valid`` is False when the reported mass shift is
    an approximation used outside its range.
    """

    t: float
    delta_m2: float
    gamma: float
    d1: float
    d2: float | None
    asymptotic: bool = False
    delta_m2_valid: bool = True

    def as_constant(self, include_mass_shift: bool = False, d2: float | None = None) -> "CoefficientSet":
        """Copy suitable for constant-coefficient evolution.

        The mass shift is dropped unless asked for (the mirror mass is taken as
        already renormalized), and a missing ``d2`` becomes ``d2`` or 0.
        """
        return CoefficientSet(
            t=self.t,
            delta_m2=self.delta_m2 if include_mass_shift else 0.0,
            gamma=self.gamma,
            d1=self.d1,
            d2=(self.d2 if self.d2 is not None else 0.0) if d2 is None else d2,
            asymptotic=self.asymptotic,
            delta_m2_valid=self.delta_m2_valid,
        )


ZERO_COEFFICIENTS = CoefficientSet(t=0.0, delta_m2=0.0, gamma=0.0, d1=0.0, d2=0.0)


@dataclass
class CoefficientSeries:
    params: PhysicalParams
    times: np.ndarray
    sets: list[CoefficientSet] = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise PreconditionError("times must be a non-empty 1-d grid")
        if np.any(np.diff(self.times) <= 0):
            raise PreconditionError("times must be strictly increasing")
        if len(self.sets) != len(self.times):
            raise PreconditionError("one CoefficientSet per grid time is required")

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(s, name) is None else getattr(s, name) for s in self.sets])

    def at(self, t: float) -> CoefficientSet:
        """Linear interpolation between grid samples."""
        times = self.times
        if t < times[0] - 1e-12 * max(1.0, abs(times[0])) or t > times[-1] * (1 + 1e-12):
            raise PreconditionError(f"t = {t} outside the series grid [{times[0]}, {times[-1]}]")
        t = min(max(t, times[0]), times[-1])
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), len(times) - 2) if len(times) > 1 else 0
        if len(times) == 1:
            return self.sets[0]
        t0, t1 = times[i], times[i + 1]
        w = (t - t0) / (t1 - t0)
        a, b = self.sets[i], self.sets[i + 1]

        def lerp(x, y):
            if x is None or y is None:
                return None
            return (1 - w) * x + w * y

        return CoefficientSet(
            t=t,
            delta_m2=lerp(a.delta_m2, b.delta_m2),
            gamma=lerp(a.gamma, b.gamma),
            d1=lerp(a.d1, b.d1),
            d2=lerp(a.d2, b.d2),
        )


# -- frequency integrals ----------------------------------------------------


def _zeta_scalar(u: float) -> float:
    a = abs(u)
    if a < ZETA_SERIES_SWITCH:
        u2 = a * a
        acc = 0.0
        for k in range(10, 0, -1):
            acc = acc * u2 + (-1.0) ** (k + 1) / (2 * k * (2 * k + 1))
        val = acc * a
    else:
        val = math.log1p(a * a) / (2 * a) + math.atan(a) / (a * a) - 1.0 / a
    return math.copysign(val, u) if u != 0 else 0.0


def _zeta_prime_scalar(u: float) -> float:
    a = abs(u)
    if a < ZETA_SERIES_SWITCH:
        u2 = a * a
        acc = 0.0
        for k in range(10, 0, -1):
            acc = acc * u2 + (-1.0) ** (k + 1) * (2 * k - 1) / (2 * k * (2 * k + 1))
        return acc
    return (2.0 - 0.5 * math.log1p(a * a)) / (a * a) - 2.0 * math.atan(a) / a**3


def _cin(z: float) -> float:
    """Entire cosine integral int_0^z (1 - cos s)/s ds, z >= 0."""
    if z == 0:
        return 0.0
    if z < 1e-3:
        z2 = z * z
        return z2 / 4 - z2 * z2 / 96
    return _EULER_GAMMA + math.log(z) - float(special.sici(z)[1])


class _Integrand:
    """h(w) and the pole-free remainder (h(w) - h(w0))/(w0 - w)."""

    def __init__(self, params: PhysicalParams, even: bool):
        self.Omega = params.Omega
        self.w0 = params.omega0
        self.even = even
        self.h0 = self.h(self.w0)
        self.dh0 = self.dh(self.w0)
        self.near = 1e-5 * self.w0

    def h(self, w):
        if self.even:
            return _zeta_scalar(abs(w) / self.Omega)
        return _zeta_scalar(w / self.Omega)

    def dh(self, w):
        d = _zeta_prime_scalar(w / self.Omega) / self.Omega
        if self.even and w < 0:
            return -d
        return d

    def remainder(self, w):
        d = self.w0 - w
        if abs(d) < self.near:
            return -self.dh(0.5 * (w + self.w0))
        return (self.h(w) - self.h0) / d

    def full(self, w):
        return self.h(w) / (self.w0 - w)


def _quad(f, a, b, quad: QuadratureConfig, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if "weight" in kw and b == np.inf:
            val, err = integrate.quad(f, a, b, epsabs=quad.abs_tol, limlst=200, limit=quad.max_subdivisions, **kw)
        else:
            val, err = integrate.quad(
                f, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions, **kw
            )
    return val, err


def _breakpoints(params: PhysicalParams, L: float) -> np.ndarray:
    w0, Om = params.omega0, params.Omega
    pts = {0.0, w0, 0.5 * w0, 1.5 * w0, 2.0 * w0, -w0, -2.0 * w0}
    for scale in (Om, w0):
        x = scale * 1e-2
        while x < L:
            pts.add(x)
            pts.add(-x)
            x *= 10.0
    pts = np.array(sorted(p for p in pts if -L < p < L))
    return np.concatenate(([-L], pts, [L]))


def _window(t: float, params: PhysicalParams, quad: QuadratureConfig) -> float:
    return quad.cutoff_factor * max(params.Omega, params.omega0, 1.0 / t)


def frequency_integral(kind: str, even: bool, t: float, params: PhysicalParams, quad: QuadratureConfig):
    """Return ``(value, error_estimate)`` of I_sin or I_sin2 at time ``t``.

    ``kind`` is ``"sin"`` or ``"sin2"``; ``even`` selects zeta(|w|/Omega).
    """
    if t < 0 or not math.isfinite(t):
        raise PreconditionError("t must be finite and non-negative")
    if t == 0:
        return 0.0, 0.0
    f = _Integrand(params, even)
    w0 = params.omega0
    s0, c0 = math.sin(w0 * t), math.cos(w0 * t)
    L = _window(t, params, quad)
    edges = _breakpoints(params, L)

    total = 0.0
    err = 0.0
    # peak: h(w0) times the kernel integrated exactly over [-L, L]
    if kind == "sin":
        si_a = special.sici((w0 + L) * t)[0]
        si_b = special.sici((w0 - L) * t)[0]
        total += f.h0 * float(si_a - si_b)
    else:
        total += f.h0 * 0.5 * (_cin(abs(w0 + L) * t) - _cin(abs(w0 - L) * t))

    r = f.remainder
    for a, b in zip(edges[:-1], edges[1:]):
        vc, ec = _quad(r, a, b, quad, weight="cos", wvar=t)
        vs, es = _quad(r, a, b, quad, weight="sin", wvar=t)
        if kind == "sin":
            # sin[(w0-w)t] = sin(w0 t) cos(wt) - cos(w0 t) sin(wt)
            total += s0 * vc - c0 * vs
        else:
            # (1 - cos[(w0-w)t]) / 2, cos[(w0-w)t] = cos(w0 t)cos(wt) + sin(w0 t)sin(wt)
            vp, ep = _quad(r, a, b, quad)
            total += 0.5 * vp - 0.5 * (c0 * vc + s0 * vs)
            err += 0.5 * ep
        err += abs(s0) * ec + abs(c0) * es if kind == "sin" else 0.5 * (abs(c0) * ec + abs(s0) * es)

    # tails |w| > L with the original integrand at w = +L*y and w = -L*y;
    # rescaling keeps QUADPACK's [1, inf) mapping well conditioned
    def g_pos(y):
        return L * f.full(L * y)

    def g_neg(y):
        return L * f.full(-L * y)

    wt = t * L
    vc_p, ec_p = _quad(g_pos, 1.0, np.inf, quad, weight="cos", wvar=wt)
    vs_p, es_p = _quad(g_pos, 1.0, np.inf, quad, weight="sin", wvar=wt)
    vc_n, ec_n = _quad(g_neg, 1.0, np.inf, quad, weight="cos", wvar=wt)
    vs_n, es_n = _quad(g_neg, 1.0, np.inf, quad, weight="sin", wvar=wt)
    if kind == "sin":
        # at w = -v: sin[(w0+v)t] = s0 cos(vt) + c0 sin(vt)
        total += s0 * vc_p - c0 * vs_p + s0 * vc_n + c0 * vs_n
    else:
        vp_p, ep_p = _quad(g_pos, 1.0, np.inf, quad)
        vp_n, ep_n = _quad(g_neg, 1.0, np.inf, quad)
        # at w = -v: cos[(w0+v)t] = c0 cos(vt) - s0 sin(vt)
        total += 0.5 * (vp_p + vp_n) - 0.5 * (c0 * vc_p + s0 * vs_p) - 0.5 * (c0 * vc_n - s0 * vs_n)
        err += 0.5 * (ep_p + ep_n)
    err += ec_p + es_p + ec_n + es_n

    if not math.isfinite(total):
        raise ConvergenceError(f"non-finite frequency integral at t={t}", error_estimate=err, t=t)
    return total, err


def _checked(kind, even, t, params, quad, what):
    val, err = frequency_integral(kind, even, t, params, quad)
    budget = max(quad.abs_tol * 1e3, quad.rel_tol * 1e2 * abs(val))
    if err > budget:
        raise ConvergenceError(
            f"{what}(t={t}) quadrature error estimate {err:.3g} exceeds budget {budget:.3g}",
            error_estimate=err,
            t=t,
        )
    return val


def gamma_t(t: float, params: PhysicalParams, quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Damping rate Gamma(t) (1/time)."""
    pre = params.hbar * params.Omega * params.omega0 / (2 * _PI**2 * params.M)
    return pre * _checked("sin", False, t, params, quad, "gamma")


def d1_t(t: float, params: PhysicalParams, quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Position-diffusion coefficient D1(t) (length^2/time)."""
    pre = params.hbar**2 * params.Omega / (2 * _PI**2 * params.M**2)
    return pre * _checked("sin", True, t, params, quad, "d1")


def d2_t(t: float, params: PhysicalParams, quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Mixed diffusion coefficient D2(t) (units of hbar/time)."""
    pre = params.hbar**2 * params.omega0 * params.Omega / (_PI**2 * params.M)
    return pre * _checked("sin2", True, t, params, quad, "d2")


def delta_m2_t(t: float, params: PhysicalParams, quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Second-order mass shift Delta M_2(t) (mass)."""
    # the mass-shift kernel carries 1/(w - w0), the opposite sign of I_sin2
    pre = 2 * params.hbar * params.Omega / _PI**2
    return -pre * _checked("sin2", False, t, params, quad, "delta_m2") + 0.0  # no signed zero at t = 0


def coefficients_at(t: float, params: PhysicalParams, quad: QuadratureConfig = QuadratureConfig()) -> CoefficientSet:
    try:
        return CoefficientSet(
            t=t,
            delta_m2=delta_m2_t(t, params, quad),
            gamma=gamma_t(t, params, quad),
            d1=d1_t(t, params, quad),
            d2=d2_t(t, params, quad),
        )
    except ConvergenceError as exc:
        exc.t = t
        raise


def asymptotic_coefficients(params: PhysicalParams) -> CoefficientSet:
    """Late-time limits (omega0 t >> 1, Omega t >> 1).

    The mass shift hbar*Omega/(2 pi) is the perfect-reflector value and is
    flagged invalid when omega0/Omega > 1e-2.  D2 has no closed limit.
    """
    hb, M, w0, Om = params.hbar, params.M, params.omega0, params.Omega
    gamma = hb * Om * w0 * zeta(w0 / Om) / (2 * _PI * M)
    return CoefficientSet(
        t=math.inf,
        delta_m2=hb * Om / (2 * _PI),
        gamma=gamma,
        d1=hb * gamma / (M * w0),
        d2=None,
        asymptotic=True,
        delta_m2_valid=params.transparency_ratio <= 1e-2,
    )


def perfect_reflector_limit(params: PhysicalParams) -> tuple[float, float]:
    """(Gamma, D1) to leading order in omega0/Omega << 1."""
    hb, M, w0 = params.hbar, params.M, params.omega0
    return hb * w0**2 / (12 * _PI * M), hb**2 * w0 / (12 * _PI * M**2)


def high_transmission_limit(params: PhysicalParams) -> tuple[float, float]:
    """(Gamma, D1) to leading logarithmic order in omega0/Omega >> 1."""
    hb, M, w0, Om = params.hbar, params.M, params.omega0, params.Omega
    log = math.log(w0 / Om)
    return hb * Om**2 * log / (2 * _PI * M), hb**2 * Om**2 * log / (2 * _PI * M**2 * w0)


def coefficient_series(
    params: PhysicalParams,
    times,
    quad: QuadratureConfig = QuadratureConfig(),
    which: tuple[str, ...] = ("delta_m2", "gamma", "d1", "d2"),
    workers: int = 1,
) -> CoefficientSeries:
    """Coefficients on a grid; coefficients not listed in ``which`` are NaN."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise PreconditionError("times must be a non-empty 1-d grid")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise PreconditionError("times must be non-negative and strictly increasing")
    funcs = {"delta_m2": delta_m2_t, "gamma": gamma_t, "d1": d1_t, "d2": d2_t}
    unknown = set(which) - set(funcs)
    if unknown:
        raise DomainError(f"unknown coefficients {sorted(unknown)}")

    def one(t):
        vals = {}
        for name, fn in funcs.items():
            if name not in which:
                vals[name] = math.nan
                continue
            try:
                vals[name] = fn(float(t), params, quad)
            except ConvergenceError as exc:
                exc.t = float(t)
                raise
        return CoefficientSet(t=float(t), **vals)

    sets: list[CoefficientSet | None] = [None] * len(times)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for i, res in enumerate(pool.map(one, times)):
                sets[i] = res
    else:
        for i, t in enumerate(times):
            sets[i] = one(t)
    return CoefficientSeries(params=params, times=times, sets=sets)
