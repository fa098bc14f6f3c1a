"""Catalog of example systems and their exact unperturbed orbit families.

Two kinds of system live here:

* :class:`ForcedPlanarSystem` -- ``x' = J grad H(x) + eps u(x, nu t)`` on the
  plane, currently the forced Duffing oscillator with ``a = +1`` or ``a = -1``;
* :class:`ActionAngleSystem` -- ``I' = eps h(I, theta)``,
  ``theta' = omega(I) + eps g(I, theta)``: the pendulum with constant torque
  and the second-order coupled oscillators.

Arrays of planar states use a leading axis of length 2, so ``x[0]`` and
``x[1]`` broadcast over any trailing shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError
from .specfun import EllipticModulus, as_modulus, ellip_K, jacobi_sncndn

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2


@dataclass(frozen=True)
class ForcedPlanarSystem:
    """Forced Duffing oscillator ``x1'' = a x1 - x1**3 + eps (beta cos(phase) - delta x1')``."""

    a: int
    nu: float
    beta: float
    delta: float

    def __post_init__(self):
        if self.a not in (1, -1):
            raise DomainError("Duffing parameter a must be +1 or -1")
        if not self.nu > 0:
            raise DomainError("forcing frequency nu must be positive")
        if self.beta < 0 or self.delta < 0:
            raise DomainError("beta and delta must be nonnegative")

    @property
    def case_tag(self) -> str:
        return "duffing_a_plus" if self.a == 1 else "duffing_a_minus"

    def H(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -0.5 * self.a * x[0] ** 2 + 0.25 * x[0] ** 4 + 0.5 * x[1] ** 2

    def grad_H(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([-self.a * x[0] + x[0] ** 3, x[1]])

    def hamiltonian_field(self, x) -> np.ndarray:
        """``J grad H`` with ``J = [[0, 1], [-1, 0]]``."""
        g = self.grad_H(x)
        return np.stack([g[1], -g[0]])

    def u(self, x, phase) -> np.ndarray:
        """Perturbation ``(0, beta cos(phase) - delta x2)``, broadcasting ``x`` against ``phase``."""
        x = np.asarray(x, dtype=float)
        second = self.beta * np.cos(phase) - self.delta * x[1]
        return np.stack(np.broadcast_arrays(np.zeros_like(second), second))

    def energy_flux(self, x, phase) -> np.ndarray:
        """Melnikov integrand ``grad H(x) . u(x, phase)``."""
        g = self.grad_H(x)
        uu = self.u(x, phase)
        x = np.asarray(x, dtype=float)
        g = g.reshape(g.shape + (1,) * (uu.ndim - g.ndim))
        return g[0] * uu[0] + g[1] * uu[1]

    def saddle(self) -> np.ndarray | None:
        return np.zeros(2) if self.a == 1 else None


@dataclass(frozen=True)
class ActionAngleSystem:
    """Nearly integrable system written in action-angle variables.

    ``h`` and ``g`` are the leading perturbations of the actions and angles;
    ``h(I, theta)`` takes ``theta`` with a leading axis of length ``m`` and
    returns an array with a leading axis of length ``ell``.  ``h`` may be
    ``None`` for systems known only through their frequency map.
    """

    ell: int
    m: int
    omega: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    g: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    case_tag: str
    action_box: tuple[tuple[float, float], ...]
    params: Mapping = field(default_factory=dict)
    hamiltonian: bool = False

    def frequencies(self, I) -> np.ndarray:
        return np.asarray(self.omega(np.asarray(I, dtype=float)), dtype=float).reshape(self.m)


# -- orbit families ---------------------------------------------------------

FAMILY_KINDS = (
    "duffing_interior_plus",
    "duffing_interior_minus",
    "duffing_exterior",
    "duffing_soft",
    "homoclinic_plus",
    "homoclinic_minus",
)
_KIND_ALIASES = {
    "interior_plus": "duffing_interior_plus",
    "interior_minus": "duffing_interior_minus",
    "interior": "duffing_interior_plus",
    "exterior": "duffing_exterior",
    "soft": "duffing_soft",
}


@dataclass(frozen=True)
class OrbitFamily:
    """One-parameter family of unperturbed orbits ``orbit(k, t)``.

    Periodic families are anchored at ``t = 0`` on the ``x2 = 0`` crossing
    with ``x1`` extremal (dn peak for interior orbits, cn peak otherwise).
    """

    kind: str
    orbit: Callable
    period: Callable
    k_range: tuple[float, float]
    dperiod_dk_sign: str
    periodic: bool = True

    @property
    def case(self) -> str:
        """Closed-form case label: interior, exterior, soft or homoclinic."""
        return self.kind.split("_")[1] if self.kind.startswith("duffing") else "homoclinic"

    @property
    def sign(self) -> int:
        return -1 if self.kind.endswith("minus") else 1

    def contains(self, k) -> bool:
        m = as_modulus(k)
        lo, hi = self.k_range
        if hi == 1.0:
            return m.k > lo and m.kprime > 0.0
        return lo < m.k < hi


def _interior(sign):
    def orbit(k, t):
        m = as_modulus(k)
        s = math.sqrt(1.0 + m.kprime2)  # sqrt(2 - k**2)
        sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) / s, m)
        return np.stack([sign * SQRT2 / s * dn, -sign * SQRT2 * m.k2 / (s * s) * sn * cn])

    def period(k):
        m = as_modulus(k)
        return 2.0 * ellip_K(m) * math.sqrt(1.0 + m.kprime2)

    return orbit, period


def _exterior_orbit(k, t):
    m = as_modulus(k)
    s = math.sqrt(1.0 - 2.0 * m.kprime2)  # sqrt(2 k**2 - 1)
    sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) / s, m)
    return np.stack([SQRT2 * m.k / s * cn, -SQRT2 * m.k / (s * s) * sn * dn])


def _exterior_period(k):
    m = as_modulus(k)
    return 4.0 * ellip_K(m) * math.sqrt(1.0 - 2.0 * m.kprime2)


def _soft_orbit(k, t):
    m = as_modulus(k)
    s = math.sqrt(1.0 - 2.0 * m.k2)
    sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) / s, m)
    return np.stack([SQRT2 * m.k / s * cn, -SQRT2 * m.k / (s * s) * sn * dn])


def _soft_period(k):
    m = as_modulus(k)
    return 4.0 * ellip_K(m) * math.sqrt(1.0 - 2.0 * m.k2)


def _homoclinic(sign):
    def orbit(k, t):
        t = np.asarray(t, dtype=float)
        sech = 1.0 / np.cosh(np.minimum(np.abs(t), 700.0))
        return np.stack([sign * SQRT2 * sech, -sign * SQRT2 * sech * np.tanh(t)])

    return orbit, lambda k: math.inf


def orbit_family(system: ForcedPlanarSystem, kind: str) -> OrbitFamily:
    """Exact unperturbed orbit family ``kind`` of a Duffing system."""
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in FAMILY_KINDS:
        raise DomainError(f"unknown orbit family {kind!r}")
    if (kind == "duffing_soft") != (system.a == -1):
        raise DomainError(f"family {kind} does not exist for a = {system.a}")
    if kind == "duffing_interior_plus":
        return OrbitFamily(kind, *_interior(1), (0.0, 1.0), "+")
    if kind == "duffing_interior_minus":
        return OrbitFamily(kind, *_interior(-1), (0.0, 1.0), "+")
    if kind == "duffing_exterior":
        return OrbitFamily(kind, _exterior_orbit, _exterior_period, (INV_SQRT2, 1.0), "+")
    if kind == "duffing_soft":
        return OrbitFamily(kind, _soft_orbit, _soft_period, (0.0, INV_SQRT2), "-")
    sign = 1 if kind == "homoclinic_plus" else -1
    return OrbitFamily(kind, *_homoclinic(sign), (0.0, 1.0), "none", periodic=False)


def orbit_residual(family: OrbitFamily, system: ForcedPlanarSystem, k=None, samples: int = 256) -> float:
    """Max over sample times of ``|d/dt orbit - J grad H(orbit)|``.

    The time derivative is a central difference with step ``1e-5``.  Periodic
    families are sampled over one period, homoclinic orbits over ``[-10, 10]``.
    """
    if family.periodic:
        if k is None or not family.contains(k):
            raise DomainError(f"modulus {k!r} outside {family.kind} range {family.k_range}")
        t = np.arange(samples) * family.period(k) / samples
    else:
        t = np.linspace(-10.0, 10.0, samples)
    h = 1e-5
    deriv = (family.orbit(k, t + h) - family.orbit(k, t - h)) / (2 * h)
    return float(np.max(np.linalg.norm(deriv - system.hamiltonian_field(family.orbit(k, t)), axis=0)))


# -- action-angle catalog -----------------------------------------------------


def _pendulum(beta: float = 0.0) -> ActionAngleSystem:
    beta = float(beta)

    def h(I, theta):
        theta = np.asarray(theta, dtype=float)
        return (beta * np.sin(theta[0]) + 1.0)[None]

    def g(I, theta):
        return np.zeros((1,) + np.shape(theta)[1:])

    return ActionAngleSystem(
        ell=1, m=1, omega=lambda I: np.asarray(I, dtype=float).reshape(1), h=h, g=g,
        case_tag="pendulum_torque", action_box=((0.5, 3.0),), params={"beta": beta},
    )


def _parse_coupling(coupling) -> dict[tuple[int, int], float]:
    if isinstance(coupling, Mapping):
        items = coupling.items()
    else:
        items = coupling
    out = {}
    for key, value in items:
        k1, k2 = (int(v) for v in key)
        if k1 < 0 or k2 < 0 or (k1, k2) == (0, 0):
            raise DomainError(f"coupling index must be a nonzero pair of nonnegative integers, got {key}")
        if float(value) != 0.0:
            out[(k1, k2)] = out.get((k1, k2), 0.0) + float(value)
    return dict(sorted(out.items()))


def _coupled_oscillators(
    ell: int = 2,
    delta: float = 0.0,
    Omega=None,
    coupling=None,
    M: float | None = None,
    decay: float | None = None,
    R_sys: int = 12,
) -> ActionAngleSystem:
    ell = int(ell)
    if ell < 1:
        raise DomainError("need at least one oscillator")
    Omega = np.zeros(ell) if Omega is None else np.asarray(Omega, dtype=float).reshape(-1)
    if Omega.size == 1 and ell > 1:
        Omega = np.full(ell, float(Omega[0]))
    if Omega.size != ell:
        raise DomainError(f"Omega needs {ell} entries")
    if delta < 0 or np.any(Omega < 0):
        raise DomainError("delta and Omega_j must be nonnegative")
    coeffs = _parse_coupling(coupling or {})
    for (k1, k2), a in coeffs.items():
        if k1 + k2 > R_sys:
            raise DomainError(f"coupling mode {(k1, k2)} exceeds truncation k1+k2 <= {R_sys}")
        if M is not None and decay is not None and abs(a) > M * math.exp(-(k1 + k2) * decay):
            raise DomainError(
                f"|a_{(k1, k2)}| = {abs(a)} violates the analyticity bound "
                f"{M} exp(-{k1 + k2}*{decay})"
            )
    modes = np.array(list(coeffs), dtype=float).reshape(-1, 2)
    amps = np.array(list(coeffs.values()), dtype=float)
    delta = float(delta)

    def h(I, theta):
        I = np.asarray(I, dtype=float).reshape(ell)
        theta = np.asarray(theta, dtype=float)
        shape = theta.shape[1:]
        out = np.empty((ell,) + shape)
        for j in range(ell):
            acc = np.full(shape, -delta * I[j] + Omega[j])
            for (k1, k2), a in zip(modes, amps):
                for i in range(ell):
                    acc = acc + a * np.sin(k1 * theta[j] - k2 * theta[i])
            out[j] = acc
        return out

    def g(I, theta):
        return np.zeros((ell,) + np.shape(theta)[1:])

    params = {
        "ell": ell, "delta": delta, "Omega": [float(v) for v in Omega],
        "coupling": {f"{k1},{k2}": a for (k1, k2), a in coeffs.items()},
        "M": M, "decay": decay, "R_sys": int(R_sys),
    }
    return ActionAngleSystem(
        ell=ell, m=ell, omega=lambda I: np.asarray(I, dtype=float).reshape(ell), h=h, g=g,
        case_tag="coupled_oscillators", action_box=tuple((0.5, 3.0) for _ in range(ell)),
        params=params,
    )


def catalog_get(name: str, **params):
    """Build a catalog system by name.

    ``duffing`` takes ``a, beta, delta, nu``; ``pendulum_torque`` takes
    ``beta``; ``coupled_oscillators`` takes ``ell, delta, Omega, coupling``
    (a mapping ``(k1, k2) -> a_k``) and optionally ``M, decay, R_sys``.  The
    analyticity bound ``|a_k| <= M exp(-(k1 + k2) decay)`` is enforced when
    both ``M`` and ``decay`` are given.
    """
    if name == "duffing":
        allowed = {"a", "beta", "delta", "nu"}
        _reject_unknown(name, params, allowed)
        sys_ = ForcedPlanarSystem(
            a=int(params.get("a", 1)), nu=float(params.get("nu", 1.0)),
            beta=float(params.get("beta", 0.0)), delta=float(params.get("delta", 0.0)),
        )
        _check_planar(sys_)
        return sys_
    if name in ("pendulum_torque", "pendulum"):
        _reject_unknown(name, params, {"beta"})
        return _pendulum(**params)
    if name == "coupled_oscillators":
        _reject_unknown(name, params, {"ell", "delta", "Omega", "coupling", "M", "decay", "R_sys"})
        return _coupled_oscillators(**params)
    raise DomainError(f"unknown system {name!r}")


def _reject_unknown(name, params, allowed):
    extra = set(params) - allowed
    if extra:
        raise DomainError(f"unknown parameters for {name}: {sorted(extra)}")


def _check_planar(system: ForcedPlanarSystem) -> None:
    pts = np.array([[0.3, -1.2, 1.7, 0.0], [0.8, 0.4, -0.9, 1.1]])
    h = 1e-6
    fd = np.stack([
        (system.H(pts + [[h], [0]]) - system.H(pts - [[h], [0]])) / (2 * h),
        (system.H(pts + [[0], [h]]) - system.H(pts - [[0], [h]])) / (2 * h),
    ])
    if np.max(np.abs(fd - system.grad_H(pts))) > 1e-6:
        raise AssertionError("grad_H disagrees with finite differences of H")


def duffing_frequency_system(system: ForcedPlanarSystem, kind: str) -> ActionAngleSystem:
    """Frequency-only action-angle view of a Duffing orbit family.

    The action is the modulus ``k`` and ``omega(k) = (2 pi / T(k), nu)``.
    """
    fam = orbit_family(system, kind)
    if not fam.periodic:
        raise DomainError("the homoclinic orbit has no action-angle representation")

    def omega(I):
        k = float(np.asarray(I).reshape(-1)[0])
        return np.array([2 * math.pi / fam.period(k), system.nu])

    lo, hi = fam.k_range
    return ActionAngleSystem(
        ell=1, m=2, omega=omega, h=None, g=None, case_tag="generic",
        action_box=((lo + 1e-6, min(hi, 1.0 - 1e-9) - 1e-6),),
        params={"family": fam.kind, "nu": system.nu},
    )


def modulus(k) -> EllipticModulus:
    """Coerce ``k`` (float or pair) to an :class:`EllipticModulus`."""
    return as_modulus(k)
