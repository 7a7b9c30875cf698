import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casimir_decoherence.errors import DomainError
from casimir_decoherence.spectral import (
    ZETA_SERIES_SWITCH,
    PhysicalParams,
    _zeta_closed,
    _zeta_series,
    reflection_amplitude,
    spectral_density,
    symmetric_spectral_density,
    zeta,
    zeta_prime,
)

from oracles import zeta_mp

ZETA_ONE = float(mp.log(2) / 2 + mp.pi / 4 - 1)


def test_zeta_zero():
    assert zeta(0.0) == 0.0


def test_zeta_one_against_closed_form():
    assert zeta(1.0) == pytest.approx(ZETA_ONE, rel=1e-15)
    assert ZETA_ONE == pytest.approx(0.1319717, abs=1e-7)


def test_zeta_tiny_is_ohmic():
    assert zeta(1e-6) == pytest.approx(1e-6 / 6, rel=1e-11)


def test_zeta_large_log_tail():
    # the ratio approaches 1 only like 1 - 1/ln(u); check the oracle value and the log bound
    u = 1e6
    ratio = zeta(u) * u / math.log(u)
    assert ratio == pytest.approx(float(zeta_mp(u) * u / mp.log(u)), rel=1e-13)
    assert ratio == pytest.approx(1 - 1 / math.log(u), abs=1e-6)
    assert abs(ratio - 1) <= 2 / math.log(u)


@pytest.mark.parametrize("u", [1e-9, 1e-5, 3e-3, 0.05, 0.0999, 0.1, 0.3, 1.0, 7.0, 1e3, 1e7, 1e12])
def test_zeta_matches_arbitrary_precision(u):
    assert zeta(u) == pytest.approx(float(zeta_mp(u)), rel=1e-13)


def test_zeta_series_coefficients():
    # leading Taylor coefficients as high-precision limits at small u
    with mp.workdps(120):
        u = mp.mpf("1e-8")
        z = zeta_mp(u, 120)
        c1 = z / u
        c3 = (z - u / 6) / u**3
        c5 = (z - u / 6 + u**3 / 20) / u**5
    assert float(c1) == pytest.approx(1 / 6, rel=1e-15)
    assert float(c3) == pytest.approx(-1 / 20, rel=1e-15)
    assert float(c5) == pytest.approx(1 / 42, rel=1e-12)


def test_branches_agree_at_switch():
    u = np.array([ZETA_SERIES_SWITCH * (1 - 1e-12), ZETA_SERIES_SWITCH])
    s, c = _zeta_series(u), _zeta_closed(u)
    assert np.all(np.abs(s - c) <= 1e-12 * np.abs(c))


def test_zeta_rejects_non_finite():
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(DomainError):
            zeta(bad)
    with pytest.raises(DomainError):
        zeta(np.array([1.0, math.nan]))


def test_zeta_odd_bitwise():
    rng = np.random.default_rng(7)
    u = rng.uniform(-1e3, 1e3, 10_000)
    assert np.all(zeta(-u) + zeta(u) == 0)


def test_ohmic_limit_bound():
    u = np.geomspace(1e-12, 1e-3, 200)
    assert np.all(np.abs(zeta(u) - u / 6) <= 1e-6 * u)


@pytest.mark.parametrize("u", [1e3, 1e6, 1e9])
def test_high_frequency_bound(u):
    assert abs(zeta(u) * u / math.log(u) - 1) <= 2 / math.log(u)


def test_positive_on_log_grid():
    u = np.geomspace(1e-8, 1e8, 2000)
    assert np.all(zeta(u) > 0)


def test_vectorized_shape_and_scalar_type():
    assert isinstance(zeta(0.5), float)
    assert zeta(np.ones((3, 2))).shape == (3, 2)


def test_zeta_prime_matches_finite_difference():
    for u in (1e-4, 0.05, 0.5, 3.0, 200.0):
        h = 1e-6 * max(u, 1e-3)
        fd = (float(zeta_mp(u + h)) - float(zeta_mp(u - h))) / (2 * h)
        assert zeta_prime(u) == pytest.approx(fd, rel=1e-6)


def test_spectral_density_examples():
    p = PhysicalParams(M=1, omega0=1, Omega=1, hbar=1)
    assert spectral_density(0.0, p) == 0.0
    assert spectral_density(1.0, p) == pytest.approx(2 / math.pi * ZETA_ONE, rel=1e-14)
    assert spectral_density(-0.37, p) == -spectral_density(0.37, p)


def test_spectral_density_scales_with_hbar_and_Omega():
    p = PhysicalParams(M=1, omega0=1, Omega=3.0, hbar=2.0)
    assert spectral_density(3.0, p) == pytest.approx(2 / math.pi * 4 * 3 * ZETA_ONE, rel=1e-14)


def test_symmetric_density():
    p = PhysicalParams(Omega=1.0)
    assert symmetric_spectral_density(0.0, p) == 0.0
    assert symmetric_spectral_density(2.0, p) == symmetric_spectral_density(-2.0, p)
    assert symmetric_spectral_density(1.0, p) == pytest.approx(2 / math.pi * ZETA_ONE, rel=1e-14)
    assert symmetric_spectral_density(-1.0, p) == symmetric_spectral_density(1.0, p)


def test_reflection_amplitude():
    assert reflection_amplitude(0.0, 2.0) == pytest.approx(-1.0)
    assert abs(reflection_amplitude(5.0, 5.0)) ** 2 == pytest.approx(0.5)
    assert abs(reflection_amplitude(1e6, 1.0)) ** 2 == pytest.approx(1e-12, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e8, 1e8), st.floats(1e-3, 1e3))
def test_reflection_bounded(w, Om):
    assert abs(reflection_amplitude(w, Om)) ** 2 <= 1 + 1e-15


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_zeta_odd_property(u):
    assert zeta(-u) == -zeta(u)


def test_params_validation_and_regime():
    with pytest.raises(DomainError):
        PhysicalParams(M=0.0)
    with pytest.raises(DomainError):
        PhysicalParams(hbar=math.inf)
    p = PhysicalParams(M=1.0, omega0=1.0, Omega=1.0)
    assert p.recoil == 1.0 and not p.weak_coupling and p.diagnostics()
    q = PhysicalParams(M=1e5, omega0=1.0, Omega=1.0)
    assert q.weak_coupling and q.diagnostics() == []
    assert q.delta_q_sq == pytest.approx(0.5e-5)
