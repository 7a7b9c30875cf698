"""Independent reference computations used to freeze expected values."""
import math

import mpmath as mp
import numpy as np
from scipy.integrate import simpson


def zeta_mp(u, dps=50):
    with mp.workdps(dps):
        u = mp.mpf(u)
        if u == 0:
            return mp.mpf(0)
        a = abs(u)
        v = mp.log(1 + a * a) / (2 * a) + mp.atan(a) / a**2 - 1 / a
        return v if u > 0 else -v


def _zeta_np(u):
    a = np.abs(u)
    out = np.where(a > 0, np.log1p(a * a) / (2 * np.where(a > 0, a, 1)) + np.arctan(a) / np.where(a > 0, a, 1) ** 2 - 1 / np.where(a > 0, a, 1), 0.0)
    small = a < 1e-2
    out = np.where(small, a / 6 - a**3 / 20 + a**5 / 42, out)
    return np.sign(u) * out


def brute_frequency_integral(kind, even, t, omega0, Omega, L=None, pts_per_period=40):
    """Dense composite Simpson on [-L, L] plus the non-oscillating tail by mpmath.

    The oscillating part of the tail enters through its leading
    integration-by-parts term; the remainder is O(g'(L)/t^2).
    """
    if L is None:
        L = 400 * max(omega0, Omega, 1 / t)
    n = int(2 * L * t / (2 * math.pi) * pts_per_period) | 1
    # n = 4k + 1 puts w = 0 (the kink of the even kernel) on a Simpson panel edge
    n = 4 * (max(n, 200_001) // 4) + 1
    w = np.linspace(-L, L, n)
    h = _zeta_np(np.abs(w) / Omega) if even else _zeta_np(w / Omega)
    x = omega0 - w
    if kind == "sin":
        k = t * np.sinc(x * t / math.pi)
    else:
        k = np.sin(x * t / 2) * (t / 2) * np.sinc(x * t / (2 * math.pi))
    core = simpson(h * k, x=w)
    hL = _zeta_np(np.array([L / Omega]))[0]
    hmL = hL if even else -hL
    gp, gm = hL / (omega0 - L), hmL / (omega0 + L)
    if kind == "sin":
        return core - gp * math.cos((omega0 - L) * t) / t + gm * math.cos((omega0 + L) * t) / t
    osc = gp * math.sin((omega0 - L) * t) / t - gm * math.sin((omega0 + L) * t) / t
    core -= 0.5 * osc
    with mp.workdps(20):
        def g(v):
            hv = zeta_mp(abs(v) / Omega, 20) if even else zeta_mp(v / Omega, 20)
            return hv / (2 * (omega0 - v))
        tail = mp.quad(g, [L, 10 * L, mp.inf]) + mp.quad(g, [-mp.inf, -10 * L, -L])
    return core + float(tail)
