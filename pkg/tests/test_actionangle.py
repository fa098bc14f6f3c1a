import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonint.actionangle import (
    FourierSpectrum,
    check_poincare_point,
    common_frequency,
    detect_resonant_actions,
    fourier_coeffs,
    jacobian_rank_omega,
    resonance_lattice,
    resonant_integral_fourier,
    resonant_integral_quadrature,
)
from nonint.errors import DomainError, NotResonantError
from nonint.melnikov import ResonancePair, solve_resonance
from nonint.systems import ActionAngleSystem, catalog_get, duffing_frequency_system

PENDULUM = catalog_get("pendulum_torque", beta=0.7)
COUPLED = catalog_get("coupled_oscillators", ell=2, delta=0.5, Omega=[1.0, 0.5], coupling={(1, 1): 1.0})
KURAMOTO = catalog_get("coupled_oscillators", ell=2, delta=0.0, Omega=[0.0, 0.0], coupling={(1, 1): 1.0})
RICH = catalog_get(
    "coupled_oscillators", ell=2, delta=0.2, Omega=[0.3, 0.1],
    coupling={(1, 1): 0.8, (2, 1): 0.4, (1, 2): 0.3, (3, 3): 0.1},
)
SILENT = catalog_get("coupled_oscillators", ell=2)

# Ten resonances across the catalog for the dual-method identity.
RESONANCES = [
    (PENDULUM, [1.0]), (PENDULUM, [2.0]), (PENDULUM, [0.75]),
    (COUPLED, [1.0, 1.0]), (COUPLED, [1.0, 2.0]), (COUPLED, [1.5, 2.5]),
    (KURAMOTO, [1.0, 1.0]), (KURAMOTO, [2.0, 3.0]),
    (RICH, [1.0, 2.0]), (RICH, [1.2, 0.8]),
]


def frequency_only(omega, ell=1, m=2, box=((0.5, 3.0),)):
    return ActionAngleSystem(ell=ell, m=m, omega=omega, h=None, g=None, case_tag="generic", action_box=box)


def test_pendulum_spectrum():
    spectrum = fourier_coeffs(PENDULUM, [1.3], R=2)
    assert spectrum.coeff((0,))[0] == pytest.approx(1.0, abs=1e-12)
    assert spectrum.coeff((1,))[0] == pytest.approx(-0.35j, abs=1e-12)
    assert spectrum.coeff((-1,))[0] == pytest.approx(0.35j, abs=1e-12)
    assert abs(spectrum.coeff((2,))[0]) < 1e-12
    assert np.all(spectrum.coeff((5,)) == 0)


def test_coupled_mean_coefficient():
    I = np.array([1.2, 2.1])
    spectrum = fourier_coeffs(COUPLED, I, R=4)
    assert np.allclose(spectrum.coeff((0, 0)), -0.5 * I + [1.0, 0.5], atol=1e-12)


def test_zero_perturbation_spectrum():
    assert np.max(np.abs(fourier_coeffs(SILENT, [1.0, 1.0], R=3).coeffs)) == 0.0


def test_spectrum_errors():
    with pytest.raises(DomainError):
        fourier_coeffs(PENDULUM, [5.0])
    with pytest.raises(DomainError):
        fourier_coeffs(PENDULUM, [1.0], R=0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0))
def test_spectrum_is_hermitian_and_reconstructs(i1, i2):
    spectrum = fourier_coeffs(RICH, [i1, i2], R=6)
    flipped = np.conj(spectrum.coeffs[:, ::-1, ::-1])
    assert np.allclose(spectrum.coeffs, flipped, atol=1e-13)
    theta = np.random.default_rng(7).uniform(0, 2 * math.pi, size=(2, 50))
    assert np.max(np.abs(spectrum.evaluate(theta) - RICH.h(np.array([i1, i2]), theta))) < 1e-9


def test_lattice_examples():
    lat = resonance_lattice([1.0, 2.0], R=3)
    assert set(lat.members) == {(0, 0), (2, -1), (-2, 1)}
    assert lat.omega0 == pytest.approx(1.0)
    assert lat.direction == (1, 2)
    lat3 = resonance_lattice([2.0, 4.0, 6.0], R=1)
    assert lat3.omega0 == pytest.approx(2.0)
    assert lat3.direction == (1, 2, 3)
    irr = resonance_lattice([1.0, math.sqrt(2)], R=10)
    assert irr.members == ((0, 0),) and irr.omega0 is None
    with pytest.raises(NotResonantError):
        irr.period


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=3), st.floats(0.1, 10.0))
def test_lattice_closed_under_negation(ints, scale):
    if not any(ints):
        return
    lat = resonance_lattice(np.array(ints, dtype=float) * scale, R=4)
    members = set(lat.members)
    assert (0,) * len(ints) in members
    assert all(tuple(-v for v in r) in members for r in members)
    assert lat.omega0 is not None
    assert np.allclose(np.array(lat.direction) * lat.omega0, np.array(ints) * scale, atol=1e-9)


def test_common_frequency_rejects_degenerate_input():
    with pytest.raises(DomainError):
        common_frequency([0.0, 0.0])
    assert common_frequency([1.0, math.pi]) == (None, None)


def test_pendulum_collapse_to_mean_over_frequency():
    for I in (0.5, 1.0, 2.7):
        spectrum = fourier_coeffs(PENDULUM, [I])
        curve = resonant_integral_fourier(spectrum, resonance_lattice([I]))
        assert np.allclose(curve.values, 2 * math.pi / I, rtol=0, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.5, 3.0))
def test_single_angle_curve_is_constant(beta, I):
    p = catalog_get("pendulum_torque", beta=beta)
    spectrum = fourier_coeffs(p, [I])
    curve = resonant_integral_quadrature(p, [I])
    expected = 2 * math.pi * spectrum.coeff((0,))[0].real / I
    assert np.max(np.abs(curve.values - expected)) < 1e-10


def test_mean_only_spectrum_gives_constant_curve():
    coeffs = np.zeros((2, 5, 5), dtype=complex)
    coeffs[:, 2, 2] = [0.3, -1.1]
    spectrum = FourierSpectrum(2, coeffs)
    for omega in ([1.0, 1.0], [1.0, 3.0], [2.0, 5.0]):
        lat = resonance_lattice(omega, R=2)
        curve = resonant_integral_fourier(spectrum, lat, 16)
        assert np.allclose(curve.values[0], lat.period * 0.3, atol=1e-15)
        assert np.allclose(curve.values[1], lat.period * -1.1, atol=1e-15)


def test_kuramoto_curve_contains_difference_harmonic():
    I = [1.0, 1.0]
    spectrum = fourier_coeffs(KURAMOTO, I)
    lat = resonance_lattice(KURAMOTO.frequencies(I))
    assert (1, -1) in lat.members
    fourier = resonant_integral_fourier(spectrum, lat)
    quad = resonant_integral_quadrature(KURAMOTO, I)
    assert np.max(np.abs(fourier.values - quad.values)) < 1e-8
    assert np.ptp(fourier.values) > 1.0
    axis = fourier.tau_axis
    expected = 2 * math.pi * np.sin(np.subtract.outer(axis, axis))
    assert np.allclose(fourier.values[0], expected, atol=1e-10)


def test_quadrature_examples():
    p0 = catalog_get("pendulum_torque", beta=0.0)
    assert np.allclose(resonant_integral_quadrature(p0, [2.0]).values, math.pi, rtol=0, atol=1e-12)
    assert np.all(resonant_integral_quadrature(SILENT, [1.0, 2.0]).values == 0.0)
    with pytest.raises(NotResonantError):
        resonant_integral_quadrature(COUPLED, [1.0, math.sqrt(2)])
    with pytest.raises(NotResonantError):
        resonant_integral_fourier(fourier_coeffs(COUPLED, [1.0, 1.0]), resonance_lattice([1.0, math.sqrt(2)]))


@pytest.mark.parametrize("system,I", RESONANCES)
def test_dual_method_identity(system, I):
    spectrum = fourier_coeffs(system, I)
    lat = resonance_lattice(system.frequencies(I))
    fourier = resonant_integral_fourier(spectrum, lat)
    quad = resonant_integral_quadrature(system, I)
    assert fourier.period == pytest.approx(quad.period, rel=1e-15)
    assert np.max(np.abs(fourier.values - quad.values)) < 1e-8


@pytest.mark.parametrize("I", [[1.0, 1.0], [1.0, 2.0], [1.5, 2.5]])
def test_torus_flow_invariance(I):
    # Shifts by omega s with s on the grid spacing become exact index rolls.
    curve = resonant_integral_quadrature(RICH, I)
    _, direction = common_frequency(RICH.frequencies(I))
    for j in (1, 5, 13):
        rolled = np.roll(curve.values, shift=(-j * direction[0], -j * direction[1]), axis=(1, 2))
        assert np.max(np.abs(rolled - curve.values)) < 1e-8


def test_poincare_points():
    spectrum = fourier_coeffs(PENDULUM, [1.0])
    assert check_poincare_point([1.0], spectrum, resonance_lattice([1.0]), 0) is True
    zero = fourier_coeffs(SILENT, [1.0, 1.0])
    assert check_poincare_point([1.0, 1.0], zero, resonance_lattice([1.0, 1.0]), 0) is False
    irr_I = [1.0, math.sqrt(2)]
    irr = resonance_lattice(irr_I)
    assert check_poincare_point(irr_I, fourier_coeffs(COUPLED, irr_I), irr, 0) is False
    assert check_poincare_point(irr_I, fourier_coeffs(COUPLED, irr_I), irr, 1) is True
    res_I = [1.0, 1.0]
    lat = resonance_lattice(res_I)
    assert check_poincare_point(res_I, fourier_coeffs(COUPLED, res_I), lat, 0) is True
    assert check_poincare_point(res_I, fourier_coeffs(COUPLED, res_I), lat, 0, cap=0) is None
    with pytest.raises(DomainError):
        check_poincare_point(res_I, fourier_coeffs(COUPLED, res_I), lat, 2)


def test_jacobian_ranks():
    assert jacobian_rank_omega(PENDULUM, [1.0]) == 1
    assert jacobian_rank_omega(COUPLED, [1.0, 2.0]) == 2
    const = frequency_only(lambda I: np.array([1.0, 2.0]))
    assert jacobian_rank_omega(const, [1.0]) == 0


def test_detect_matches_resonance_solver():
    duff = catalog_get("duffing", a=1, beta=1.0, delta=0.2, nu=1.0)
    view = duffing_frequency_system(duff, "duffing_interior_plus")
    found = detect_resonant_actions(view, box=((0.05, 0.999999),), denom_bound=4)
    assert len(found) >= 3
    for I, lat in found:
        l, n = lat.direction
        k = solve_resonance("duffing_interior_plus", 1.0, ResonancePair(l, n))
        assert I[0] == pytest.approx(k.k, abs=1e-9)
    assert [max(lat.direction) for _, lat in found] == sorted(max(lat.direction) for _, lat in found)


def test_detect_proportional_frequencies():
    prop = frequency_only(lambda I: np.array([I[0], 2 * I[0]]))
    found = detect_resonant_actions(prop, max_points=10)
    assert len(found) == 10
    for I, lat in found:
        assert lat.omega0 == pytest.approx(I[0])
        assert lat.direction == (1, 2)


def test_detect_irrational_box_is_empty():
    irr = frequency_only(lambda I: np.array([1.0, math.sqrt(2) + I[0]]), box=((0.0, 0.01),))
    assert detect_resonant_actions(irr, denom_bound=5) == []
    with pytest.raises(DomainError):
        detect_resonant_actions(irr, box=((0.1, 0.0),))
