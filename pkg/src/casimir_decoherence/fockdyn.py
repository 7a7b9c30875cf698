"""Reduced density matrix of the mirror in a truncated number basis.

The master equation integrated here is

    i hbar rho' = [H_M - (dM/M) p^2/(2M), rho] - Gamma [p, {q, rho}]
                  - (i/hbar) D1 [p, [p, rho]] - (i/hbar) D2 [p, [q, rho]]

with H_M = hbar omega0 (n + 1/2).  All dissipative terms are a single outer
commutator with p, which makes the trace of rho' vanish identically.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .coefficients import CoefficientSeries, CoefficientSet
from .errors import IntegrationError, PreconditionError, TruncationError
from .integrator import StepControl, integrate
from .spectral import PhysicalParams

log = logging.getLogger(__name__)

TAIL_BUDGET = 1e-8
TRACE_BUDGET = 1e-6
HERMITICITY_TOL = 1e-12
#: eigenvalues below this are recorded; below the budget they are also warned about
POSITIVITY_LOG = -1e-8
POSITIVITY_BUDGET = -1e-6


def min_basis_size(alpha: complex) -> int:
    a = abs(alpha)
    return math.ceil(a * a + 8 * a + 20)


@dataclass
class Operators:
    """Truncated position/momentum matrices for one basis size."""

    N: int
    params: PhysicalParams
    a: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)
    p: np.ndarray = field(init=False, repr=False)
    p2: np.ndarray = field(init=False, repr=False)
    energies: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        hb, M, w0 = self.params.hbar, self.params.M, self.params.omega0
        self.a = np.diag(np.sqrt(np.arange(1, self.N, dtype=float)), 1).astype(complex)
        self.x0 = math.sqrt(hb / (2 * M * w0))
        self.p0 = math.sqrt(hb * M * w0 / 2)
        self.q = self.position(0.0)
        self.p = self.momentum(0.0)
        self.p2 = self.p @ self.p
        self.energies = hb * w0 * (np.arange(self.N) + 0.5)

    def position(self, t: float) -> np.ndarray:
        """q in the frame co-rotating with H_M at time t (t = 0: Schrodinger q)."""
        ph = np.exp(-1j * self.params.omega0 * t)
        at = self.a * ph
        return self.x0 * (at + at.conj().T)

    def momentum(self, t: float) -> np.ndarray:
        ph = np.exp(-1j * self.params.omega0 * t)
        at = self.a * ph
        return 1j * self.p0 * (at.conj().T - at)


class DensityMatrix:
    """Number-basis density matrix <m|rho|n> of the mirror."""

    def __init__(self, data, params: PhysicalParams, check: bool = True):
        data = np.array(data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise PreconditionError("density matrix must be square")
        self.data = data
        self.params = params
        if check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def purity(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    def hermiticity_defect(self) -> float:
        scale = max(float(np.max(np.abs(self.data))), 1e-300)
        return float(np.max(np.abs(self.data - self.data.conj().T))) / scale

    def tail_occupation(self) -> float:
        return float(self.data[-1, -1].real)

    def validate(self, trace_budget: float = TRACE_BUDGET, tail_budget: float = TAIL_BUDGET):
        if self.hermiticity_defect() > HERMITICITY_TOL:
            raise PreconditionError(f"density matrix not Hermitian (defect {self.hermiticity_defect():.2e})")
        if abs(self.trace() - 1) > trace_budget:
            raise PreconditionError(f"trace {self.trace():.12g} differs from 1")
        if abs(self.tail_occupation()) > tail_budget:
            raise TruncationError(f"tail occupation {self.tail_occupation():.2e} exceeds {tail_budget:g}")
        return self

    def moments(self, ops: Operators | None = None) -> dict:
        """<q>, <p>, variances and the symmetrized covariance <{q,p}> - 2<q><p>."""
        ops = ops or Operators(self.dim, self.params)
        r = self.data
        q, p = ops.q, ops.p
        mq = np.trace(q @ r).real
        mp_ = np.trace(p @ r).real
        qq = np.trace(q @ q @ r).real
        pp = np.trace(ops.p2 @ r).real
        qp = np.trace((q @ p + p @ q) @ r).real
        return {
            "mean_q": mq,
            "mean_p": mp_,
            "var_q": qq - mq * mq,
            "var_p": pp - mp_ * mp_,
            "cov_qp": qp - 2 * mq * mp_,
        }

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])


def coherent_vector(alpha: complex, N: int) -> np.ndarray:
    """Truncated, renormalized number-basis amplitudes of |alpha>."""
    n = np.arange(N)
    if alpha == 0:
        v = np.zeros(N, dtype=complex)
        v[0] = 1.0
        return v
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    v = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return v / np.linalg.norm(v)


def _check_basis(alpha, N):
    need = min_basis_size(alpha)
    if N < need:
        raise TruncationError(f"basis size {N} too small for |alpha|={abs(alpha):.3g}; need N >= {need}")


def coherent_density(alpha: complex, N: int, params: PhysicalParams) -> DensityMatrix:
    _check_basis(alpha, N)
    v = coherent_vector(alpha, N)
    return DensityMatrix(np.outer(v, v.conj()), params)


def cat_vector(alpha: complex, N: int) -> np.ndarray:
    """Even cat (|alpha> + |-alpha>)/sqrt(2(1 + exp(-2|alpha|^2)))."""
    v = coherent_vector(alpha, N) + coherent_vector(-alpha, N)
    v = v / math.sqrt(2 * (1 + math.exp(-2 * abs(alpha) ** 2)))
    return v / np.linalg.norm(v)


def cat_density(alpha: complex, N: int, params: PhysicalParams) -> DensityMatrix:
    _check_basis(alpha, N)
    v = cat_vector(alpha, N)
    return DensityMatrix(np.outer(v, v.conj()), params)


def mixture_density(alpha: complex, N: int, params: PhysicalParams) -> DensityMatrix:
    """(|alpha><alpha| + |-alpha><-alpha|)/2."""
    _check_basis(alpha, N)
    a, b = coherent_vector(alpha, N), coherent_vector(-alpha, N)
    return DensityMatrix(0.5 * (np.outer(a, a.conj()) + np.outer(b, b.conj())), params)


def _dissipator(r, q, p, p2, c: CoefficientSet, hbar: float, M: float):
    """Everything in rho' except the free -i/hbar [H_M, rho] rotation."""
    d2 = c.d2 or 0.0
    qr, rq = q @ r, r @ q
    pr, rp = p @ r, r @ p
    z = (1j * c.gamma / hbar) * (qr + rq) - (c.d1 / hbar**2) * (pr - rp) - (d2 / hbar**2) * (qr - rq)
    out = p @ z - z @ p
    if c.delta_m2:
        out += (1j * c.delta_m2 / (2 * M * M * hbar)) * (p2 @ r - r @ p2)
    return out


def liouville_rhs(rho, coeffs: CoefficientSet, params: PhysicalParams, ops: Operators | None = None) -> np.ndarray:
    """Time derivative of rho (Schrodinger picture)."""
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise PreconditionError("rho must be a square matrix")
    ops = ops or Operators(r.shape[0], params)
    if ops.N != r.shape[0]:
        raise PreconditionError(f"operator dimension {ops.N} != rho dimension {r.shape[0]}")
    E = ops.energies
    free = (-1j / params.hbar) * (E[:, None] - E[None, :]) * r
    return free + _dissipator(r, ops.q, ops.p, ops.p2, coeffs, params.hbar, params.M)


def to_interaction_frame(data: np.ndarray, t: float, params: PhysicalParams) -> np.ndarray:
    """exp(iH_M t/hbar) rho exp(-iH_M t/hbar)."""
    n = np.arange(data.shape[0])
    return data * np.exp(1j * params.omega0 * t * (n[:, None] - n[None, :]))


def to_lab_frame(data: np.ndarray, t: float, params: PhysicalParams) -> np.ndarray:
    n = np.arange(data.shape[0])
    return data * np.exp(-1j * params.omega0 * t * (n[:, None] - n[None, :]))


@dataclass
class Trajectory:
    """Sampled evolution; ``states`` are Schrodinger-picture density matrices."""

    params: PhysicalParams
    times: np.ndarray
    states: list[DensityMatrix]
    coeffs_source: object
    n_steps: int = 0
    max_hermiticity_defect: float = 0.0
    max_trace_drift: float = 0.0
    positivity_violations: list[tuple[float, float]] = field(default_factory=list)

    def interaction_states(self) -> list[np.ndarray]:
        return [to_interaction_frame(s.data, t, self.params) for s, t in zip(self.states, self.times)]


def _coeff_lookup(source, t_final):
    if isinstance(source, CoefficientSet):
        return lambda t: source
    if isinstance(source, CoefficientSeries):
        if source.times[0] > 0 or source.times[-1] < t_final * (1 - 1e-12):
            raise PreconditionError("coefficient series must cover [0, t_final]")
        return source.at
    raise PreconditionError("coeffs_source must be a CoefficientSet or CoefficientSeries")


def coefficients_at_time(source, t: float) -> CoefficientSet:
    if isinstance(source, CoefficientSet):
        return source
    return source.at(t)


def evolve(
    rho0: DensityMatrix,
    params: PhysicalParams,
    coeffs_source,
    t_final: float,
    dt_control: StepControl = StepControl(),
    samples=None,
    frame: str = "interaction",
    trace_budget: float = TRACE_BUDGET,
    tail_budget: float = TAIL_BUDGET,
    check_positivity: bool = True,
) -> Trajectory:
    """Integrate the master equation and return states at the sample times.

    ``samples`` defaults to ``[0, t_final]``.  With ``frame="interaction"``
    the free rotation is removed analytically and only the dissipative part
    is stepped; ``frame="lab"`` steps the full Schrodinger-picture equation.
    Trace is monitored, never renormalized.
    """
    if t_final < 0:
        raise PreconditionError("t_final must be non-negative")
    if frame not in ("interaction", "lab"):
        raise PreconditionError("frame must be 'interaction' or 'lab'")
    rho0.validate(trace_budget=trace_budget, tail_budget=tail_budget)
    times = np.array([0.0, t_final] if samples is None else samples, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0) or times[-1] > t_final * (1 + 1e-12):
        raise PreconditionError("samples must start at 0, increase strictly and end by t_final")
    lookup = _coeff_lookup(coeffs_source, times[-1])
    for probe in (0.0, times[-1]):
        c = lookup(probe)
        if c.delta_m2 and abs(c.delta_m2 / params.M) >= 1:
            raise PreconditionError(
                "mass shift exceeds the bare mass; pass renormalized coefficients (CoefficientSet.as_constant)"
            )

    N = rho0.dim
    ops = Operators(N, params)
    hb, M = params.hbar, params.M
    E = ops.energies
    omega_mat = (E[:, None] - E[None, :]) / hb

    if frame == "interaction":

        def f(t, r):
            q, p = ops.position(t), ops.momentum(t)
            return _dissipator(r, q, p, p @ p if lookup(t).delta_m2 else None, lookup(t), hb, M)

    else:

        def f(t, r):
            return -1j * omega_mat * r + _dissipator(r, ops.q, ops.p, ops.p2, lookup(t), hb, M)

    stats = {"herm": 0.0, "drift": 0.0}

    def after_step(t, r):
        scale = max(float(np.max(np.abs(r))), 1e-300)
        stats["herm"] = max(stats["herm"], float(np.max(np.abs(r - r.conj().T))) / scale)
        r = 0.5 * (r + r.conj().T)
        drift = abs(np.trace(r) - 1)
        stats["drift"] = max(stats["drift"], drift)
        if drift > trace_budget:
            raise IntegrationError(f"trace drift {drift:.2e} exceeds budget {trace_budget:g} at t={t:.6g}")
        if abs(r[-1, -1].real) > tail_budget:
            raise TruncationError(f"tail occupation {r[-1, -1].real:.2e} exceeds {tail_budget:g} at t={t:.6g}")
        return r

    raw, n_steps = integrate(f, rho0.data, times, dt_control, after_step)
    states = []
    violations = []
    for t, r in zip(times, raw):
        data = to_lab_frame(r, t, params) if frame == "interaction" else r
        dm = DensityMatrix(data, params, check=False)
        if check_positivity:
            lam = dm.min_eigenvalue()
            if lam < POSITIVITY_LOG:
                violations.append((float(t), lam))
                log.info("negative eigenvalue %.3e at t=%.6g", lam, t)
        states.append(dm)
    worst = min((lam for _, lam in violations), default=0.0)
    if worst < POSITIVITY_BUDGET:
        log.warning("%d samples with negative eigenvalues, worst %.3e", len(violations), worst)
    return Trajectory(
        params=params,
        times=times,
        states=states,
        coeffs_source=coeffs_source,
        n_steps=n_steps,
        max_hermiticity_defect=stats["herm"],
        max_trace_drift=stats["drift"],
        positivity_violations=violations,
    )


def linear_entropy(rho) -> float:
    """1 - Tr(rho^2), clamped to [0, 1)."""
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    s = 1.0 - float(np.vdot(r, r).real)
    return min(max(s, 0.0), np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class EntropyRecord:
    t: float
    s: float
    ds_dt_direct: float
    ds_dt_formula: float


def entropy_rate_formula(rho: DensityMatrix, coeffs: CoefficientSet, ops: Operators | None = None) -> float:
    """2 Gamma (s - 1) + 4 D1 (dp)^2 / hbar^2 + 2 D2 sigma_qp / hbar^2 (exact for pure states)."""
    hb = rho.params.hbar
    m = rho.moments(ops)
    s = linear_entropy(rho)
    d2 = coeffs.d2 or 0.0
    return 2 * coeffs.gamma * (s - 1) + 4 * coeffs.d1 * m["var_p"] / hb**2 + 2 * d2 * m["cov_qp"] / hb**2


def entropy_rate_check(trajectory: Trajectory, coeffs_source=None) -> list[EntropyRecord]:
    """Finite-difference entropy rate next to the moment formula, per sample."""
    if len(trajectory.times) < 3:
        raise PreconditionError("need at least 3 samples")
    source = coeffs_source if coeffs_source is not None else trajectory.coeffs_source
    ts = trajectory.times
    s = np.array([linear_entropy(r) for r in trajectory.states])
    direct = np.gradient(s, ts, edge_order=2)
    ops = Operators(trajectory.states[0].dim, trajectory.params)
    out = []
    for t, st, sd, rho in zip(ts, s, direct, trajectory.states):
        formula = entropy_rate_formula(rho, coefficients_at_time(source, t), ops)
        out.append(EntropyRecord(float(t), float(st), float(sd), float(formula)))
    return out
