"""Dormand-Prince 5(4) stepping for array-valued (complex) ODEs.

Small and explicit on purpose: the density-matrix solver needs a hook after
every accepted step (re-Hermitization, health checks), which generic ODE
drivers do not expose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrationError

# Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B_LOW = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b - bl for b, bl in zip(_B, _B_LOW))


@dataclass(frozen=True)
class StepControl:
    """Error control for :func:`integrate`.

    With ``fixed_step`` set, every step has that size and no error control is
    applied (used for convergence-order checks).
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    first_step: float | None = None
    min_step: float = 1e-12
    max_step: float = math.inf
    fixed_step: float | None = None
    safety: float = 0.9


def _dp_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y
        for a, k in zip(_A[i], ks):
            if a:
                yi = yi + (h * a) * k
        ks.append(f(t + _C[i] * h, yi))
    y_new = y
    for b, k in zip(_B, ks):
        if b:
            y_new = y_new + (h * b) * k
    err = None
    for e, k in zip(_E, ks):
        if e:
            err = (h * e) * k if err is None else err + (h * e) * k
    return y_new, err, ks[-1]


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_samples,
    control: StepControl = StepControl(),
    after_step: Callable[[float, np.ndarray], np.ndarray] | None = None,
):
    """Integrate ``y' = f(t, y)`` from ``t_samples[0]`` and return states at every sample.

    ``after_step(t, y)`` may return a modified state; it runs after each
    accepted step.  Returns ``(states, n_steps)``.
    """
    ts = np.asarray(t_samples, dtype=float)
    if np.any(np.diff(ts) < 0):
        raise IntegrationError("sample times must be non-decreasing")
    t = float(ts[0])
    y = np.array(y0, dtype=complex)
    out = [y.copy()]
    k1 = f(t, y)
    n_steps = 0
    if control.fixed_step is not None:
        h = control.fixed_step
    elif control.first_step is not None:
        h = control.first_step
    else:
        scale = control.atol + control.rtol * np.max(np.abs(y))
        d1 = np.max(np.abs(k1)) / scale
        h = 0.01 / d1 if d1 > 1e-5 else 1e-3 * max(1.0, abs(ts[-1] - t))
        h = min(h, control.max_step)

    for target in ts[1:]:
        while t < target:
            step = min(h, target - t)
            last = step >= target - t
            y_new, err, k_last = _dp_step(f, t, y, step, k1)
            if control.fixed_step is None:
                scale = control.atol + control.rtol * np.maximum(np.max(np.abs(y)), np.max(np.abs(y_new)))
                err_norm = float(np.max(np.abs(err)) / scale)
                if err_norm > 1.0:
                    h = step * max(0.2, control.safety * err_norm ** (-0.2))
                    if h < control.min_step:
                        raise IntegrationError(f"step size underflow at t={t:.6g} (h={h:.3g})")
                    continue
                grow = 5.0 if err_norm == 0 else min(5.0, control.safety * err_norm ** (-0.2))
                if not last:
                    h = min(step * grow, control.max_step)
                else:
                    h = min(max(h, step * grow), control.max_step)
            t = float(target) if last else t + step
            y = y_new
            n_steps += 1
            if after_step is not None:
                y = after_step(t, y)
                k1 = f(t, y)
            else:
                k1 = k_last
        out.append(y.copy())
    return out, n_steps
