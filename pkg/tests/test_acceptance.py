"""Acceptance criteria 1 to 10, one verdict line each (see the summary section)."""
import math
import time

import numpy as np
import pytest

from casimir_decoherence.coefficients import (
    asymptotic_coefficients,
    coefficient_series,
    d1_t,
    delta_m2_t,
    gamma_t,
    high_transmission_limit,
)
from casimir_decoherence.fockdyn import (
    Operators,
    cat_density,
    coherent_density,
    entropy_rate_check,
    evolve,
    min_basis_size,
)
from casimir_decoherence.gaussian import coherent_moments, entropy_production_min_uncertainty, evolve_moments, pointer_argmin
from casimir_decoherence.integrator import StepControl
from casimir_decoherence.phase_space import (
    CatSpec,
    cat_wigner_analytic,
    decoherence_time_fit,
    decoherence_time_formula,
    default_axes,
    fringe_series,
    mixture_distance_check,
    period_samples,
    wigner_from_rho,
)
from casimir_decoherence.spectral import PhysicalParams, zeta

REFLECTOR = PhysicalParams(M=1.0, omega0=1.0, Omega=1e4, hbar=1.0)
TRANSPARENT = PhysicalParams(M=1.0, omega0=1e4, Omega=1.0, hbar=1.0)
# weak coupling for the cat runs: hbar omega0 / M = 5e-4
CAT = PhysicalParams(M=2e3, omega0=1.0, Omega=1e4, hbar=1.0)
PERIOD = 2 * math.pi


def test_criterion_01_spectral_asymptotics(criterion):
    t0 = time.perf_counter()
    small = np.geomspace(1e-9, 1e-3, 61)
    low = float(np.max(np.abs(zeta(small) / (small / 6) - 1)))
    high = {u: abs(zeta(u) * u / math.log(u) - 1) / (2 / math.log(u)) for u in (1e3, 1e6)}
    dt = time.perf_counter() - t0
    ok = low < 1e-6 and all(v <= 1 for v in high.values()) and dt < 1
    criterion(1, ok, f"max|zeta/(u/6)-1|={low:.2e}; tail misfit/bound={max(high.values()):.3f}; {dt:.3f}s")


def test_criterion_02_perfect_reflector(criterion):
    g_ref = REFLECTOR.hbar * REFLECTOR.omega0**2 / (12 * math.pi * REFLECTOR.M)
    d_ref = REFLECTOR.hbar**2 * REFLECTOR.omega0 / (12 * math.pi * REFLECTOR.M**2)
    t50 = 50 / REFLECTOR.omega0
    eg = abs(gamma_t(t50, REFLECTOR) / g_ref - 1)
    ed = abs(d1_t(t50, REFLECTOR) / d_ref - 1)
    t0 = time.perf_counter()
    coefficient_series(REFLECTOR, np.linspace(0, 50, 500), which=("gamma", "d1"))
    dt = time.perf_counter() - t0
    criterion(2, eg < 0.02 and ed < 0.02 and dt < 30, f"Gamma err {eg:.2%}, D1 err {ed:.2%}; 500-point grid {dt:.1f}s")


def _transparent_period_average(periods_in=40, nodes=32):
    period = 2 * math.pi / TRANSPARENT.omega0
    ts = periods_in * period + np.linspace(0, period, nodes + 1)[:-1]
    return np.mean([gamma_t(t, TRANSPARENT) for t in ts]), np.mean([d1_t(t, TRANSPARENT) for t in ts])


def test_criterion_03_high_transmission_leading_log(criterion):
    # Stated as written; the leading-log closed form drops the O(1) part of
    # zeta at u = 1e4, so the computed averages sit about 11% below it.
    t0 = time.perf_counter()
    g, d = _transparent_period_average()
    g_log, d_log = high_transmission_limit(TRANSPARENT)
    eg, ed = abs(g / g_log - 1), abs(d / d_log - 1)
    dt = time.perf_counter() - t0
    criterion(3, eg < 0.05 and ed < 0.05 and dt < 60, f"period-averaged Gamma/D1 vs leading log: err {eg:.2%} / {ed:.2%}; {dt:.1f}s")


def test_criterion_03_high_transmission_zeta_and_spacing(criterion):
    t0 = time.perf_counter()
    g, d = _transparent_period_average()
    a = asymptotic_coefficients(TRANSPARENT)
    eg, ed = abs(g / a.gamma - 1), abs(d / a.d1 - 1)
    period = 2 * math.pi / TRANSPARENT.omega0
    ts = 20 * period + np.linspace(0, 6 * period, 6 * 24 + 1)
    gs = np.array([gamma_t(t, TRANSPARENT) for t in ts])
    peaks = [i for i in range(1, len(gs) - 1) if gs[i] > gs[i - 1] and gs[i] >= gs[i + 1]]
    spacing = np.diff(ts[peaks]) / period
    sp_err = float(np.max(np.abs(spacing - 1))) if len(spacing) >= 4 else math.inf
    dt = time.perf_counter() - t0
    ok = eg < 0.05 and ed < 0.05 and sp_err < 0.05 and dt < 60
    criterion(3, ok, f"averages vs full zeta asymptote: err {eg:.2%} / {ed:.2%}; spacing err {sp_err:.2%}; {dt:.1f}s")


def test_criterion_04_mass_shift(criterion):
    target = REFLECTOR.hbar * REFLECTOR.Omega / (2 * math.pi)
    err = abs(delta_m2_t(1e3 / REFLECTOR.Omega, REFLECTOR) / target - 1)
    criterion(4, err < 0.02, f"DeltaM2 at Omega t = 1e3 err {err:.2%}")


def test_criterion_05_classical_damping(criterion):
    t0 = time.perf_counter()
    c = asymptotic_coefficients(REFLECTOR).as_constant()
    ts = np.arange(0, 31) * PERIOD
    tr = evolve(coherent_density(1.0, 40, REFLECTOR), REFLECTOR, c, ts[-1], samples=ts)
    ops = Operators(40, REFLECTOR)
    qs = np.array([s.moments(ops)["mean_q"] for s in tr.states])
    rate = -np.polyfit(ts, np.log(np.abs(qs)), 1)[0]
    err = abs(rate / c.gamma - 1)
    dt = time.perf_counter() - t0
    criterion(5, err < 0.05 and dt < 60, f"<q> envelope rate {rate:.6f} vs Gamma {c.gamma:.6f} (err {err:.2%}); {dt:.1f}s")


def test_criterion_06_entropy_rate(criterion):
    p = PhysicalParams(M=1e3, omega0=1.0, Omega=1e4, hbar=1.0)
    t0 = time.perf_counter()
    c = asymptotic_coefficients(p).as_constant()
    ts = np.linspace(0, PERIOD, 129)
    tr = evolve(cat_density(2j, 60, p), p, c, PERIOD, samples=ts, dt_control=StepControl(rtol=1e-12, atol=1e-14))
    rec = entropy_rate_check(tr)
    direct = np.array([r.ds_dt_direct for r in rec])
    formula = np.array([r.ds_dt_formula for r in rec])
    rel = float(np.max(np.abs(direct - formula)) / np.max(np.abs(formula)))
    dt = time.perf_counter() - t0
    criterion(6, rel <= 1e-2 and dt < 120, f"max|fd - formula| / peak = {rel:.2e}; {dt:.1f}s")


def test_criterion_07_pointer_states(criterion):
    t0 = time.perf_counter()
    p = REFLECTOR
    d1 = asymptotic_coefficients(p).d1
    x = pointer_argmin(p, d1, 2 * PERIOD)
    target = p.hbar / (2 * p.M * p.omega0)
    err = abs(x / target - 1)
    grid = np.linspace(0.2, 2.0, 181) * target
    s = entropy_production_min_uncertainty(grid, d1, 2 * PERIOD, p)
    convex = bool(np.all(np.diff(s, 2) > 0))
    dt = time.perf_counter() - t0
    criterion(7, err <= 1e-6 and convex and dt < 1, f"argmin {x:.9f} vs hbar/(2 M omega0) {target} (rel {err:.1e}); {dt:.3f}s")


@pytest.fixture(scope="module")
def cat_runs():
    c = asymptotic_coefficients(CAT).as_constant()
    runs = {}
    t0 = time.perf_counter()
    for a in (1j, 2j, 3j):
        spec = CatSpec(a, CAT)
        td = decoherence_time_formula(spec, c.d1, c.gamma)
        ts = period_samples(0.8 * td, CAT)
        tr = evolve(cat_density(a, min_basis_size(a), CAT), CAT, c, ts[-1], samples=ts)
        runs[abs(a)] = (tr, spec, td)
    return runs, c, time.perf_counter() - t0


def test_criterion_08_decoherence_time(cat_runs, criterion):
    runs, c, dt = cat_runs
    ratios = {}
    for k, (tr, spec, td) in runs.items():
        fit, _ = decoherence_time_fit(np.c_[tr.times, fringe_series(tr, spec)])
        ratios[k] = fit / td
    # algebraic identity with D1 = hbar Gamma / (M omega0)
    spec = CatSpec(2j, CAT)
    d1 = CAT.hbar * c.gamma / (CAT.M * CAT.omega0)
    lhs = CAT.hbar**2 / (2 * spec.P0**2 * d1)
    rhs = 1 / (4 * abs(spec.alpha) ** 2 * c.gamma)
    ident = abs(lhs / rhs - 1)
    ok = all(abs(r - 1) <= 0.15 for r in ratios.values()) and ident <= 1e-12 and dt < 300
    shown = ", ".join(f"|a|={k:g}: {r:.3f}" for k, r in ratios.items())
    criterion(8, ok, f"fitted/formula t_d {shown}; identity rel {ident:.1e}; {dt:.1f}s")


def test_criterion_09_linear_decay_to_mixture(cat_runs, criterion):
    runs, _, _ = cat_runs
    tr, spec, td = runs[2.0]
    dist = np.array(mixture_distance_check(tr, spec))
    fit, _ = decoherence_time_fit(dist)
    slope = -1 / fit
    err = abs(slope * td + 1)
    criterion(9, err <= 0.15, f"early slope {slope:.4e} vs -1/t_d {-1 / td:.4e} (err {err:.2%})")


def test_criterion_10_structural_invariants(criterion):
    c = asymptotic_coefficients(REFLECTOR).as_constant()
    tr = evolve(coherent_density(1.0, 40, REFLECTOR), REFLECTOR, c, 10 * PERIOD, samples=np.linspace(0, 10 * PERIOD, 11))
    drift, herm = tr.max_trace_drift, tr.max_hermiticity_defect

    p = PhysicalParams(M=1e3, omega0=1.0, Omega=1e4, hbar=1.0)
    ch = asymptotic_coefficients(p).as_constant()
    ts = np.linspace(0, 5 * PERIOD, 11)
    track = evolve_moments(coherent_moments(1 + 0.5j, p), ch, p, ts)
    ftr = evolve(coherent_density(1 + 0.5j, 60, p), p, ch, ts[-1], samples=ts, dt_control=StepControl(rtol=1e-11, atol=1e-13))
    ops = Operators(60, p)
    moment_err = 0.0
    for row, rho in zip(track, ftr.states):
        m = rho.moments(ops)
        fock = np.array([m["mean_q"], m["mean_p"], m["var_q"], m["var_p"], m["cov_qp"]])
        scale = np.array([abs(row[0]) + math.sqrt(row[2]), abs(row[1]) + math.sqrt(row[3]), row[2], row[3], math.sqrt(row[2] * row[3])])
        moment_err = max(moment_err, float(np.max(np.abs(fock - row) / scale)))

    norm_err, wig_err = 0.0, 0.0
    for a in (1j, 2j, 3j):
        q, pp = default_axes(a, REFLECTOR, n=121)
        num = wigner_from_rho(cat_density(a, min_basis_size(a), REFLECTOR), q, pp)
        ana = cat_wigner_analytic(CatSpec(a, REFLECTOR), q, pp)
        norm_err = max(norm_err, abs(num.normalization() - 1))
        wig_err = max(wig_err, float(np.max(np.abs(num.values - ana.values))) * math.pi * REFLECTOR.hbar)

    ok = drift < 1e-6 and herm < 1e-9 and moment_err <= 1e-3 and norm_err <= 1e-3 and wig_err <= 1e-4
    criterion(
        10,
        ok,
        f"trace drift {drift:.1e}; hermiticity {herm:.1e}; moments rel {moment_err:.1e}; "
        f"Wigner norm err {norm_err:.1e}; analytic diff {wig_err:.1e}/(pi hbar)",
    )
