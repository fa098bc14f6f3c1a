import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonint.errors import DomainError
from nonint.specfun import EllipticModulus, ellip_K
from nonint.systems import (
    ActionAngleSystem,
    ForcedPlanarSystem,
    catalog_get,
    orbit_family,
    orbit_residual,
)

A_PLUS = catalog_get("duffing", a=1, beta=1.0, delta=0.2, nu=1.0)
A_MINUS = catalog_get("duffing", a=-1, beta=1.0, delta=0.2, nu=1.0)

RESIDUAL_CASES = [
    (A_PLUS, "duffing_interior_plus", 0.5),
    (A_PLUS, "duffing_interior_minus", 0.9),
    (A_PLUS, "duffing_exterior", 0.8),
    (A_MINUS, "duffing_soft", 0.4),
    (A_PLUS, "homoclinic_plus", None),
    (A_PLUS, "homoclinic_minus", None),
]


def test_duffing_hamiltonian():
    x = np.array([[0.3, -1.1], [0.7, 0.2]])
    expected = -x[0] ** 2 / 2 + x[0] ** 4 / 4 + x[1] ** 2 / 2
    assert np.allclose(A_PLUS.H(x), expected, atol=1e-15)
    assert A_PLUS.case_tag == "duffing_a_plus"
    assert A_MINUS.case_tag == "duffing_a_minus"


def test_duffing_gradient_and_periodic_forcing():
    x = np.array([0.4, -0.6])
    h = 1e-6
    fd = [(A_PLUS.H(x + e) - A_PLUS.H(x - e)) / (2 * h) for e in (np.array([h, 0]), np.array([0, h]))]
    assert np.allclose(A_PLUS.grad_H(x), fd, atol=1e-6)
    assert np.allclose(A_PLUS.u(x, 0.3), A_PLUS.u(x, 0.3 + 2 * math.pi), rtol=0, atol=1e-15)


def test_pendulum_catalog_entry():
    p = catalog_get("pendulum_torque", beta=0.0)
    assert isinstance(p, ActionAngleSystem)
    theta = np.linspace(0, 2 * math.pi, 7)[None]
    assert np.all(p.h(np.array([1.3]), theta) == 1.0)
    assert p.frequencies([1.7])[0] == 1.7


def test_coupled_oscillators_reduce_to_kuramoto():
    c = catalog_get("coupled_oscillators", ell=2, delta=0.0, Omega=[1.0, 1.0], coupling={(1, 1): 1.0})
    assert (c.ell, c.m) == (2, 2)
    theta = np.array([[0.3], [1.1]])
    h = c.h(np.array([1.0, 1.0]), theta)[:, 0]
    expected = [1 + math.sin(0.0) + math.sin(0.3 - 1.1), 1 + math.sin(1.1 - 0.3) + math.sin(0.0)]
    assert np.allclose(h, expected, atol=1e-15)


def test_catalog_errors():
    with pytest.raises(DomainError):
        catalog_get("lorenz")
    with pytest.raises(DomainError):
        catalog_get("coupled_oscillators", ell=2, coupling={(1, 1): 1.0}, M=1.0, decay=0.5)
    with pytest.raises(DomainError):
        catalog_get("duffing", a=2)
    with pytest.raises(DomainError):
        catalog_get("pendulum_torque", gamma=1.0)


def test_family_compatibility():
    with pytest.raises(DomainError):
        orbit_family(A_MINUS, "duffing_interior_plus")
    with pytest.raises(DomainError):
        orbit_family(A_PLUS, "duffing_soft")
    with pytest.raises(DomainError):
        orbit_family(A_PLUS, "spiral")


def test_family_ranges_and_limits():
    fam = orbit_family(A_PLUS, "interior_plus")
    assert fam.k_range == (0.0, 1.0)
    assert fam.period(1e-9) == pytest.approx(math.pi * math.sqrt(2), rel=1e-12)
    assert orbit_family(A_PLUS, "exterior").k_range == pytest.approx((1 / math.sqrt(2), 1.0))
    assert orbit_family(A_MINUS, "soft").k_range == pytest.approx((0.0, 1 / math.sqrt(2)))
    hom = orbit_family(A_PLUS, "homoclinic_plus")
    assert np.allclose(hom.orbit(None, 0.0), [math.sqrt(2), 0.0], atol=1e-15)
    assert np.linalg.norm(hom.orbit(None, 40.0)) < 1e-16


def test_soft_period_formula():
    fam = orbit_family(A_MINUS, "soft")
    k = 0.3
    assert fam.period(k) == pytest.approx(4 * ellip_K(k) * math.sqrt(1 - 2 * k * k), rel=1e-15)


@pytest.mark.parametrize("system,kind,k", RESIDUAL_CASES)
def test_orbit_residual(system, kind, k):
    assert orbit_residual(orbit_family(system, kind), system, k, 256) < 1e-6


def test_residual_rejects_out_of_range_modulus():
    with pytest.raises(DomainError):
        orbit_residual(orbit_family(A_PLUS, "exterior"), A_PLUS, 0.5)


periodic_cases = st.sampled_from(
    [(A_PLUS, "duffing_interior_plus", 0.01, 0.999), (A_PLUS, "duffing_interior_minus", 0.01, 0.999),
     (A_PLUS, "duffing_exterior", 0.71, 0.999), (A_MINUS, "duffing_soft", 0.01, 0.7)]
)


@settings(max_examples=60, deadline=None)
@given(periodic_cases, st.floats(0.0, 1.0), st.floats(-20.0, 20.0))
def test_orbits_are_periodic_with_constant_energy(case, u, t):
    system, kind, lo, hi = case
    fam = orbit_family(system, kind)
    k = lo + u * (hi - lo)
    x = fam.orbit(k, t)
    assert np.allclose(fam.orbit(k, t + fam.period(k)), x, atol=1e-10)
    ts = np.linspace(0, fam.period(k), 50)
    energy = system.H(fam.orbit(k, ts))
    assert np.ptp(energy) < 1e-10


def test_interior_energy_tends_to_separatrix_level():
    fam = orbit_family(A_PLUS, "interior_plus")
    hom = orbit_family(A_PLUS, "homoclinic_plus")
    assert np.max(np.abs(A_PLUS.H(hom.orbit(None, np.linspace(-10, 10, 101))))) < 1e-14
    k = EllipticModulus.from_kprime(math.sqrt(2e-6 - 1e-12))  # k = 1 - 1e-6
    assert abs(A_PLUS.H(fam.orbit(k, 0.0))) < 1e-4


def test_exterior_orbits_approach_homoclinic_loop():
    ext = orbit_family(A_PLUS, "exterior")
    hom = orbit_family(A_PLUS, "homoclinic_plus")
    t = np.linspace(-5, 5, 2001)
    sups = [np.max(np.linalg.norm(ext.orbit(k, t) - hom.orbit(None, t), axis=0)) for k in (0.95, 0.99, 0.999)]
    assert sups[0] > sups[1] > sups[2]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.6, 2.9), st.floats(-10, 10), st.floats(-10, 10))
def test_action_angle_fields_are_two_pi_periodic(i, t1, t2):
    systems = [
        catalog_get("pendulum_torque", beta=0.7),
        catalog_get("coupled_oscillators", ell=2, delta=0.5, Omega=[1.0, 0.5], coupling={(1, 1): 1.0, (2, 1): 0.3}),
    ]
    for s in systems:
        theta = np.array([t1, t2][: s.m])[:, None]
        I = np.full(s.ell, i)
        for j in range(s.m):
            shifted = theta.copy()
            shifted[j] += 2 * math.pi
            assert np.allclose(s.h(I, theta), s.h(I, shifted), rtol=0, atol=1e-13)
            assert np.array_equal(s.g(I, theta), s.g(I, shifted))


def test_forced_system_validation():
    with pytest.raises(DomainError):
        ForcedPlanarSystem(a=1, nu=-1.0, beta=1.0, delta=0.0)
