"""Complete elliptic integrals and Jacobi elliptic functions.

Everything here is built on the arithmetic-geometric mean.  ``K`` and ``E``
use the AGM sequence directly, and ``sn, cn, dn`` use the descending Landen
(AGM) recurrence of Abramowitz & Stegun 16.4.

Moduli close to one are the normal case for orbits near a separatrix, so the
modulus is carried as the pair ``(k, k')``.  A raw float ``k`` is accepted up
to ``1 - 1e-12``; beyond that, build the modulus from its complement with
:meth:`EllipticModulus.from_kprime`, which keeps ``k'`` exact even when
``k`` rounds to 1.0 in double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

K_MAX = 1.0 - 1e-12
AGM_RTOL = 1e-15
AGM_MAXITER = 64


@dataclass(frozen=True)
class EllipticModulus:
    """Elliptic modulus ``k`` with its complement ``kprime = sqrt(1 - k**2)``."""

    k: float
    kprime: float

    def __post_init__(self):
        if not (0.0 <= self.k <= 1.0 and 0.0 <= self.kprime <= 1.0):
            raise DomainError(f"invalid modulus pair k={self.k!r}, k'={self.kprime!r}")

    @classmethod
    def of(cls, k: float) -> EllipticModulus:
        k = float(k)
        if not math.isfinite(k) or k < 0.0 or k > K_MAX:
            raise DomainError(f"elliptic modulus must lie in [0, {K_MAX}], got {k!r}")
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @classmethod
    def from_kprime(cls, kprime: float) -> EllipticModulus:
        kprime = float(kprime)
        if not math.isfinite(kprime) or kprime <= 0.0 or kprime > 1.0:
            raise DomainError(f"complementary modulus must lie in (0, 1], got {kprime!r}")
        return cls(math.sqrt((1.0 - kprime) * (1.0 + kprime)), kprime)

    @property
    def k2(self) -> float:
        return self.k * self.k

    @property
    def kprime2(self) -> float:
        return self.kprime * self.kprime

    def complement(self) -> EllipticModulus:
        return EllipticModulus(self.kprime, self.k)


def as_modulus(k) -> EllipticModulus:
    if isinstance(k, EllipticModulus):
        if k.kprime == 0.0:
            raise DomainError("K diverges at k = 1")
        return k
    return EllipticModulus.of(k)


def _agm(a: float, b: float, c: float) -> tuple[float, list[float], list[float]]:
    """Run the AGM from ``(a, b)``; return the mean and the ``a_n, c_n`` levels.

    ``c = sqrt(a**2 - b**2)`` is passed in exactly; later levels use
    ``c_{n+1} = c_n**2 / (4 a_{n+1})`` rather than ``(a_n - b_n) / 2``.
    """
    a_levels = [a]
    c_levels = [c]
    for _ in range(AGM_MAXITER):
        if abs(a - b) < AGM_RTOL * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        a_levels.append(a)
        c_levels.append(c_levels[-1] ** 2 / (4.0 * a))
    return a, a_levels, c_levels


def ellip_K(k) -> float:
    """Complete elliptic integral of the first kind, ``K(k)``."""
    m = as_modulus(k)
    mean, _, _ = _agm(1.0, m.kprime, m.k)
    return math.pi / (2.0 * mean)


def ellip_E(k) -> float:
    """Complete elliptic integral of the second kind, ``E(k)``.

    Defined on the closed interval; ``E(1) = 1``.
    """
    if isinstance(k, EllipticModulus):
        m = k
    else:
        k = float(k)
        if not math.isfinite(k) or k < 0.0 or k > 1.0:
            raise DomainError(f"E(k) needs k in [0, 1], got {k!r}")
        if k == 1.0:
            return 1.0
        m = EllipticModulus(k, math.sqrt((1.0 - k) * (1.0 + k)))
    if m.kprime == 0.0:
        return 1.0
    mean, _, c_levels = _agm(1.0, m.kprime, m.k)
    s = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(c_levels))
    return math.pi / (2.0 * mean) * (1.0 - s)


def ellip_K_complement(k) -> float:
    """``K(k')``, the complementary complete integral; infinite at ``k = 0``."""
    m = as_modulus(k)
    if m.k == 0.0:
        return math.inf
    return ellip_K(m.complement())


def _modulus_arrays(k):
    if isinstance(k, EllipticModulus):
        if k.kprime == 0.0:
            raise DomainError("Jacobi functions need k < 1")
        return np.float64(k.k), np.float64(k.kprime)
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)) or np.any(k < 0.0) or np.any(k > K_MAX):
        raise DomainError(f"elliptic modulus must lie in [0, {K_MAX}]")
    return k, np.sqrt((1.0 - k) * (1.0 + k))


def jacobi_sncndn(t, k):
    """Jacobi elliptic functions ``sn, cn, dn`` at argument ``t``.

    ``t`` may be an array; ``k`` may be an :class:`EllipticModulus`, a float
    or an array broadcastable against ``t``.  The argument is first reduced
    modulo ``4K`` so large ``t`` costs no accuracy.
    """
    k, kp = _modulus_arrays(k)
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("Jacobi functions need a finite argument")
    t, k, kp = np.broadcast_arrays(t, k, kp)

    a = np.ones_like(kp)
    b = kp.copy()
    c = k.copy()
    a_levels, c_levels = [a], [c]
    for _ in range(AGM_MAXITER):
        if np.all(np.abs(a - b) < AGM_RTOL * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        c = c * c / (4.0 * a)
        a_levels.append(a)
        c_levels.append(c)

    quarter = np.pi / (2.0 * a)
    u = t - 4.0 * quarter * np.round(t / (4.0 * quarter))
    n = len(a_levels) - 1
    phi = 2.0**n * a * u
    for j in range(n, 0, -1):
        ratio = c_levels[j] / a_levels[j]
        phi = 0.5 * (phi + np.arcsin(np.clip(ratio * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn**2 = k'**2 + k**2 cn**2 has no cancellation, unlike 1 - k**2 sn**2.
    dn = np.sqrt(kp * kp + k * k * cn * cn)
    if sn.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def sech(x):
    """Hyperbolic secant with an underflow guard for large ``|x|``."""
    x = np.minimum(np.abs(np.asarray(x, dtype=float)), 700.0)
    out = np.where(x >= 700.0, 0.0, 2.0 * np.exp(-x) / (1.0 + np.exp(-2.0 * x)))
    return float(out) if out.ndim == 0 else out


def csch(x):
    """Hyperbolic cosecant; ``x`` must be nonzero."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError("csch is singular at 0")
    ax = np.minimum(np.abs(x), 700.0)
    out = np.where(np.abs(x) > 700.0, 0.0, np.sign(x) * 2.0 * np.exp(-ax) / -np.expm1(-2.0 * ax))
    return float(out) if out.ndim == 0 else out
