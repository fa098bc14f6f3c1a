"""Subharmonic and homoclinic Melnikov functions for the forced Duffing oscillator.

Resonances are labelled by a coprime pair ``(l, n)``: ``l`` periods of the
unperturbed orbit span ``n`` periods of the forcing, ``l T(k) = 2 pi n / nu``.
The subharmonic Melnikov function integrates the energy flux
``grad H . u`` along the orbit over that common period,

    M(phi) = int_0^{l T(k)} grad H(x^k(t)) . u(x^k(t), nu t + phi) dt,

and the homoclinic one integrates over the whole real line along the
separatrix, with the forcing phase written ``nu t + phi`` in both cases.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, NoResonanceError, ResonanceMismatchError
from .odecore import ShootingResult, newton_shoot_periodic
from .specfun import (
    EllipticModulus,
    as_modulus,
    csch,
    ellip_E,
    ellip_K,
    ellip_K_complement,
    sech,
)
from .systems import ForcedPlanarSystem, OrbitFamily, orbit_family

SQRT2 = math.sqrt(2.0)
TRAPEZOID_NODES = 2048
TRAPEZOID_TOL = 1e-10
MAX_NODES = 2**18
RESONANCE_TOL = 1e-10
HOMOCLINIC_T_MAX = 60.0


@dataclass(frozen=True)
class ResonancePair:
    """``l`` orbit periods = ``n`` forcing periods, with ``gcd(l, n) = 1``."""

    l: int
    n: int

    def __post_init__(self):
        if self.l < 1 or self.n < 1:
            raise DomainError("resonance integers must be positive")
        if math.gcd(self.l, self.n) != 1:
            raise DomainError(f"resonance ({self.l}, {self.n}) is not coprime")


@dataclass(frozen=True)
class MelnikovCurve:
    """A Melnikov function sampled on the uniform grid ``2 pi i / N``."""

    phi: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.phi.shape != self.values.shape or self.phi.size < 16:
            raise ValueError("curve needs matching phi/values of length >= 16")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def oscillation(self) -> np.ndarray:
        return self.values - self.mean

    def _coeffs(self):
        return np.fft.rfft(self.values) / self.values.size

    def evaluate(self, phi, derivative: bool = False):
        """Trigonometric interpolant of the samples (or its derivative) at ``phi``."""
        c = self._coeffs()
        n = self.values.size
        phi = np.asarray(phi, dtype=float)
        j = np.arange(c.size)
        w = np.full(c.size, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        e = np.exp(1j * np.multiply.outer(phi, j))
        if derivative:
            out = (e * (1j * j) * c * w).real.sum(axis=-1)
        else:
            out = (e * c * w).real.sum(axis=-1)
        return float(out) if out.ndim == 0 else out


def phi_grid(size: int) -> np.ndarray:
    if size < 16:
        raise DomainError("phi grid needs at least 16 points")
    return 2.0 * np.pi * np.arange(size) / size


def _periodic_trapezoid(integrand, period, n0=TRAPEZOID_NODES, tol=TRAPEZOID_TOL):
    """Trapezoid rule for a ``period``-periodic integrand, doubling nodes to convergence.

    ``integrand(t)`` takes a 1-D array of nodes and returns shape
    ``(len(t), ...)``.  The stopping test is relative to ``max(1, |result|)``.
    """
    n = n0
    total = integrand(period * np.arange(n) / n).sum(axis=0)
    estimate = total * period / n
    while n < MAX_NODES:
        mid = period * (np.arange(n) + 0.5) / n
        total = total + integrand(mid).sum(axis=0)
        n *= 2
        refined = total * period / n
        if np.max(np.abs(refined - estimate)) < tol * max(1.0, float(np.max(np.abs(refined)))):
            return refined, n
        estimate = refined
    return estimate, n


def resonant_frequency(family: OrbitFamily, k, res: ResonancePair) -> float:
    """Forcing frequency that puts orbit ``k`` in ``(l, n)`` resonance."""
    return 2.0 * math.pi * res.n / (res.l * family.period(k))


def subharmonic_melnikov(
    system: ForcedPlanarSystem,
    family: OrbitFamily,
    k,
    res: ResonancePair,
    phi_grid_size: int = 64,
    time_shift: float = 0.0,
) -> MelnikovCurve:
    """Subharmonic Melnikov function along orbit ``k`` of ``family`` by quadrature.

    ``k`` must put the orbit in ``res`` resonance with ``system.nu`` to within
    1e-10 (relative); use :func:`solve_resonance` to find it.
    ``time_shift`` starts the orbit at ``t = time_shift`` instead of 0.
    """
    if not family.periodic:
        raise DomainError("subharmonic Melnikov functions need a periodic family")
    m = as_modulus(k)
    if not family.contains(m):
        raise DomainError(f"modulus outside the {family.kind} range")
    period = family.period(m)
    window = res.l * period
    mismatch = system.nu * window / (2.0 * math.pi * res.n) - 1.0
    if abs(mismatch) > RESONANCE_TOL:
        raise ResonanceMismatchError(
            f"orbit is not in ({res.l}, {res.n}) resonance with nu={system.nu}: relative mismatch {mismatch:.3e}"
        )
    phi = phi_grid(phi_grid_size)
    nu = system.nu

    def integrand(t):
        x = family.orbit(m, t + time_shift)[:, :, None]
        return system.energy_flux(x, nu * t[:, None] + phi[None, :])

    values, nodes = _periodic_trapezoid(integrand, window)
    meta = {
        "kind": "subharmonic", "family": family.kind, "l": res.l, "n": res.n,
        "k": m.k, "kprime": m.kprime, "nu": nu, "beta": system.beta, "delta": system.delta,
        "method": "quadrature", "nodes": nodes,
    }
    return MelnikovCurve(phi, values, meta)


def homoclinic_truncation(beta: float, delta: float, tail_tol: float) -> float:
    """Half-width ``T*`` making the discarded tails of the homoclinic integral < ``tail_tol``.

    On the separatrix ``|x2(t)| <= 2 sqrt(2) e^{-|t|}``, so the forcing term
    decays at rate 1 and the damping term at rate 2.  Each is given half the
    tail budget.
    """
    if not tail_tol > 0:
        raise DomainError("tail_tol must be positive")
    budget = 0.5 * tail_tol
    t_star = 1.0
    if beta > 0:
        # 2 * int_T^inf beta 2 sqrt(2) e^{-t} dt
        t_star = max(t_star, math.log(4.0 * SQRT2 * beta / budget))
    if delta > 0:
        # 2 * int_T^inf delta 8 e^{-2t} dt
        t_star = max(t_star, 0.5 * math.log(8.0 * delta / budget))
    if t_star > HOMOCLINIC_T_MAX:
        raise DomainError(f"tail bound {tail_tol} needs T* = {t_star:.1f} > {HOMOCLINIC_T_MAX}")
    return t_star


def homoclinic_melnikov(
    system: ForcedPlanarSystem, sign: int = 1, phi_grid_size: int = 64, tail_tol: float = 1e-12
) -> MelnikovCurve:
    """Homoclinic Melnikov function along the ``sign`` separatrix loop of ``a = 1``."""
    if system.a != 1:
        raise DomainError("homoclinic orbits exist only for a = 1")
    fam = orbit_family(system, "homoclinic_plus" if sign > 0 else "homoclinic_minus")
    t_star = homoclinic_truncation(system.beta, system.delta, tail_tol)
    phi = phi_grid(phi_grid_size)
    nu = system.nu

    def integrand(s):
        t = s - t_star
        x = fam.orbit(None, t)[:, :, None]
        return system.energy_flux(x, nu * t[:, None] + phi[None, :])

    # The integrand is negligible at both ends, so the trapezoid rule on the
    # truncated window behaves like the periodic rule.
    values, nodes = _periodic_trapezoid(integrand, 2.0 * t_star)
    meta = {
        "kind": "homoclinic", "sign": int(np.sign(sign)), "nu": nu,
        "beta": system.beta, "delta": system.delta, "method": "quadrature",
        "t_star": t_star, "nodes": nodes,
    }
    return MelnikovCurve(phi, values, meta)


# -- closed forms -------------------------------------------------------------


def _J_interior(m: EllipticModulus, res: ResonancePair, nu: float):
    K, E = ellip_K(m), ellip_E(m)
    s2 = 1.0 + m.kprime2  # 2 - k**2
    j1 = 4.0 * res.l * (s2 * E - 2.0 * m.kprime2 * K) / (3.0 * s2**1.5)
    j2 = SQRT2 * math.pi * nu * sech(res.n * math.pi * ellip_K_complement(m) / K) if res.l == 1 else 0.0
    return j1, j2


def _J_exterior(m: EllipticModulus, res: ResonancePair, nu: float):
    K, E = ellip_K(m), ellip_E(m)
    s2 = 1.0 - 2.0 * m.kprime2  # 2 k**2 - 1
    j1 = 8.0 * res.l * (s2 * E + m.kprime2 * K) / (3.0 * s2**1.5)
    if res.l == 1 and res.n % 2 == 1:
        j2 = 2.0 * SQRT2 * math.pi * nu * sech(res.n * math.pi * ellip_K_complement(m) / (2.0 * K))
    else:
        j2 = 0.0
    return j1, j2


def _J_soft(m: EllipticModulus, res: ResonancePair, nu: float):
    K, E = ellip_K(m), ellip_E(m)
    s2 = 1.0 - 2.0 * m.k2
    j1 = 8.0 * res.l * ((2.0 * m.k2 - 1.0) * E + m.kprime2 * K) / (3.0 * s2**1.5)
    if res.l == 1 and res.n % 2 == 1:
        j2 = (SQRT2 * math.pi**2 * res.n / (K * math.sqrt(s2))
              * sech(math.pi * res.n * ellip_K_complement(m) / (2.0 * K)))
    else:
        j2 = 0.0
    return j1, j2


def melnikov_coefficients(case: str, k=None, res: ResonancePair | None = None, nu: float = 1.0,
                          hyperbolic: str = "csch") -> tuple[float, float]:
    """Damping and forcing coefficients ``(J1, J2)`` with ``M = -delta J1 +- beta J2 sin(phi)``.

    For the homoclinic case ``J1 = 4/3`` and ``J2 = sqrt(2) pi nu h(pi nu / 2)``
    with ``h = csch`` (the printed closed form, the default) or ``h = sech``
    (what direct quadrature of the Duffing separatrix integral returns).
    """
    if case == "homoclinic":
        if hyperbolic not in ("csch", "sech"):
            raise DomainError("hyperbolic must be 'csch' or 'sech'")
        kern = csch if hyperbolic == "csch" else sech
        return 4.0 / 3.0, SQRT2 * math.pi * nu * kern(math.pi * nu / 2.0)
    if k is None or res is None:
        raise DomainError(f"case {case!r} needs a modulus and a resonance pair")
    m = as_modulus(k)
    if case == "interior":
        if not 0.0 < m.k:
            raise DomainError("interior family needs 0 < k < 1")
        return _J_interior(m, res, nu)
    if case == "exterior":
        if not m.kprime2 < 0.5:
            raise DomainError("exterior family needs 1/sqrt(2) < k < 1")
        return _J_exterior(m, res, nu)
    if case == "soft":
        if not 0.0 < m.k2 < 0.5:
            raise DomainError("soft family needs 0 < k < 1/sqrt(2)")
        return _J_soft(m, res, nu)
    raise DomainError(f"unknown closed-form case {case!r}")


def closed_form_duffing(case: str, sign: int, k, res, delta: float, beta: float, nu: float, phi,
                        hyperbolic: str = "csch"):
    """Closed-form Melnikov function ``-delta J1 + sign beta J2 sin(phi)``.

    ``case`` is one of interior, exterior, soft, homoclinic; ``k`` and ``res``
    are ignored for the homoclinic case.  The exterior family has no sign.
    """
    j1, j2 = melnikov_coefficients(case, k, res, nu, hyperbolic)
    s = 1 if case == "exterior" else (1 if sign >= 0 else -1)
    out = -delta * j1 + s * beta * j2 * np.sin(np.asarray(phi, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def closed_form_curve(case: str, sign: int, k, res, delta, beta, nu, phi_grid_size: int = 64,
                      hyperbolic: str = "csch") -> MelnikovCurve:
    phi = phi_grid(phi_grid_size)
    values = closed_form_duffing(case, sign, k, res, delta, beta, nu, phi, hyperbolic)
    meta = {
        "kind": "homoclinic" if case == "homoclinic" else "subharmonic", "case": case, "sign": sign,
        "nu": nu, "beta": beta, "delta": delta, "method": "closed_form",
    }
    if case == "homoclinic":
        meta["hyperbolic"] = hyperbolic
    else:
        m = as_modulus(k)
        meta.update({"l": res.l, "n": res.n, "k": m.k, "kprime": m.kprime})
    return MelnikovCurve(phi, np.asarray(values, dtype=float), meta)


def chaos_threshold(nu: float, hyperbolic: str = "csch") -> float:
    """Largest ``delta / beta`` for which the homoclinic closed form keeps simple zeros.

    Equals ``(3/4) sqrt(2) pi nu h(pi nu / 2)``; see :func:`melnikov_coefficients`
    for the choice of ``h``.
    """
    if not nu > 0:
        raise DomainError("nu must be positive")
    j1, j2 = melnikov_coefficients("homoclinic", nu=nu, hyperbolic=hyperbolic)
    return j2 / j1


# -- resonance solving -----------------------------------------------------------

# Each family is parametrised by a monotone variable ``s`` that reaches moduli
# far closer to 1 than a float ``k`` can express.
def _interior_modulus(s):
    return EllipticModulus.from_kprime(math.exp(-s))


def _exterior_modulus(s):
    return EllipticModulus.from_kprime(math.exp(-s) / SQRT2)


def _soft_modulus(s):
    return EllipticModulus.of(s)


_PARAMETRISATIONS = {
    # family kind: (modulus(s), s_lo, s_hi)
    "duffing_interior_plus": (_interior_modulus, -0.5 * math.log1p(-1e-18), 34.5),
    "duffing_interior_minus": (_interior_modulus, -0.5 * math.log1p(-1e-18), 34.5),
    "duffing_exterior": (_exterior_modulus, 1e-12, 34.0),
    "duffing_soft": (_soft_modulus, 1e-9, 1.0 / SQRT2 - 1e-12),
}
_MONOTONE_CHECKED: set[str] = set()


def _family_for(kind: str) -> OrbitFamily:
    a = -1 if kind in ("soft", "duffing_soft") else 1
    return orbit_family(ForcedPlanarSystem(a=a, nu=1.0, beta=0.0, delta=0.0), kind)


def _check_monotone(kind: str, fam: OrbitFamily) -> None:
    if kind in _MONOTONE_CHECKED:
        return
    modulus, lo, hi = _PARAMETRISATIONS[kind]
    periods = np.array([fam.period(modulus(s)) for s in np.linspace(lo, hi, 200)])
    d = np.diff(periods)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise AssertionError(f"period of {kind} is not monotone on its range")
    _MONOTONE_CHECKED.add(kind)


def solve_resonance(kind: str, nu: float, res: ResonancePair, max_iter: int = 200) -> EllipticModulus:
    """Modulus ``k`` in the family range with ``l T(k) = 2 pi n / nu``, by bisection."""
    if not nu > 0:
        raise DomainError("nu must be positive")
    fam = _family_for(kind)
    if not fam.periodic:
        raise DomainError("homoclinic orbits carry no resonance")
    modulus, lo, hi = _PARAMETRISATIONS[fam.kind]
    _check_monotone(fam.kind, fam)
    target = 2.0 * math.pi * res.n / (res.l * nu)

    def f(s):
        return fam.period(modulus(s)) - target

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise NoResonanceError(
            f"no {fam.kind} orbit with period {target:.6g} (resonance {res.l}:{res.n}, nu={nu})"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_hi > 0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    s = lo if abs(f_lo) <= abs(f_hi) else hi
    return modulus(s)


# -- derived checks ----------------------------------------------------------------


@dataclass(frozen=True)
class LimitCheck:
    forcing_periods: tuple[int, ...]
    moduli: tuple[EllipticModulus, ...]
    sup_differences: tuple[float, ...]
    monotone: bool


def melnikov_limit_check(
    system: ForcedPlanarSystem,
    nu: float | None = None,
    l_list=(1, 2, 3, 5, 8),
    phi_grid_size: int = 64,
    family_kind: str = "duffing_interior_plus",
) -> LimitCheck:
    """Distance between subharmonic and homoclinic Melnikov functions along a resonance sequence.

    Entry ``j`` of ``l_list`` selects the orbit whose period spans that many
    forcing periods (resonance pair ``(1, j)``).  As it grows the orbit
    approaches the separatrix.  A non-monotone sequence triggers a warning.
    """
    sys_ = system if nu is None else replace(system, nu=float(nu))
    fam = orbit_family(sys_, family_kind)
    sign = fam.sign
    hom = homoclinic_melnikov(sys_, sign, phi_grid_size)
    diffs, moduli = [], []
    for j in l_list:
        res = ResonancePair(1, int(j))
        k = solve_resonance(fam.kind, sys_.nu, res)
        sub = subharmonic_melnikov(sys_, fam, k, res, phi_grid_size)
        diffs.append(float(np.max(np.abs(sub.values - hom.values))))
        moduli.append(k)
    monotone = all(b <= a for a, b in zip(diffs, diffs[1:]))
    if not monotone:
        warnings.warn(f"subharmonic-to-homoclinic distances are not monotone: {diffs}", RuntimeWarning)
    return LimitCheck(tuple(int(j) for j in l_list), tuple(moduli), tuple(diffs), monotone)


@dataclass(frozen=True)
class Zero:
    phi: float
    is_simple: bool
    slope: float


def simple_zero_scan(curve: MelnikovCurve, xtol: float = 1e-10, merge_tol: float = 1e-6) -> list[Zero]:
    """Zeros of the curve's trigonometric interpolant on ``[0, 2 pi)``.

    Sign changes between grid neighbours are refined by bisection.  Grid-local
    minima of ``|M|`` without a sign change are also refined, and kept as
    non-simple zeros when they reach zero to within ``1e-9`` of the
    amplitude.  A zero is simple when ``|M'| > 1e-6 * amplitude``.  An
    identically zero curve yields an empty list.
    """
    amp = curve.amplitude
    if amp == 0.0:
        return []
    v = curve.values
    phi = curve.phi
    n = v.size
    step = 2.0 * np.pi / n
    f = curve.evaluate

    found: list[float] = []
    for i in range(n):
        a, b = phi[i], phi[i] + step
        fa, fb = v[i], v[(i + 1) % n]
        if fa == 0.0:
            found.append(a)
            continue
        if fa * fb < 0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fm == 0.0 or b - a < xtol:
                    break
                if (fm > 0) == (fa > 0):
                    a, fa = mid, fm
                else:
                    b = mid
            found.append(0.5 * (a + b))

    absv = np.abs(v)
    for i in range(n):
        prev, nxt = absv[i - 1], absv[(i + 1) % n]
        if not (absv[i] <= prev and absv[i] <= nxt) or v[i] == 0.0:
            continue
        if v[i - 1] * v[i] < 0 or v[i] * v[(i + 1) % n] < 0:
            continue
        lo, hi = phi[i] - step, phi[i] + step
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
        while hi - lo > xtol:
            if abs(f(c)) < abs(f(d)):
                hi = d
            else:
                lo = c
            c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
        at = 0.5 * (lo + hi)
        if abs(f(at)) < 1e-9 * amp:
            found.append(at)

    found = sorted(p % (2.0 * np.pi) for p in found)
    merged: list[float] = []
    for p in found:
        if merged and min(abs(p - merged[-1]), 2 * np.pi - abs(p - merged[-1])) < merge_tol:
            continue
        merged.append(p)
    if len(merged) > 1 and 2 * np.pi - merged[-1] + merged[0] < merge_tol:
        merged.pop()

    zeros = []
    for p in merged:
        slope = float(curve.evaluate(p, derivative=True))
        zeros.append(Zero(float(p), abs(slope) > 1e-6 * amp, slope))
    return zeros


# -- persistence ----------------------------------------------------------------


@dataclass(frozen=True)
class PersistedOrbit:
    """Newton shooting seeded from one zero of a subharmonic Melnikov function."""

    zero: Zero
    eps: float
    shooting: ShootingResult
    orbit_phase: float
    phase_error: float


def _nearest_orbit_time(family: OrbitFamily, k, point, samples: int = 20000) -> float:
    period = family.period(k)
    t = np.arange(samples) * period / samples
    d = np.linalg.norm(family.orbit(k, t) - np.asarray(point, dtype=float)[:, None], axis=0)
    return float(t[int(np.argmin(d))])


def persistence_check(
    system: ForcedPlanarSystem,
    family_kind: str,
    res: ResonancePair,
    eps: float,
    k=None,
    phi_grid_size: int = 64,
    tol: float = 1e-9,
) -> list[PersistedOrbit]:
    """Shoot for the perturbed periodic orbits predicted by each simple zero.

    A zero at ``phi0`` predicts an orbit through ``x^k(t)`` when the forcing
    phase is ``nu t + phi0``.  Every search is posed on the common section
    ``phase = 0``, seeded at ``x^k(-phi0 / nu)``, as a fixed point of the
    ``n``-fold stroboscopic map.  The phase of the orbit found is read back
    from the nearest point of the unperturbed orbit.
    """
    fam = orbit_family(system, family_kind)
    if k is None:
        k = solve_resonance(fam.kind, system.nu, res)
    curve = subharmonic_melnikov(system, fam, k, res, phi_grid_size)
    nu = system.nu
    out = []
    for z in simple_zero_scan(curve):
        if not z.is_simple:
            continue
        guess = fam.orbit(k, -z.phi / nu)
        shot = newton_shoot_periodic(system, eps, guess, 0.0, periods=res.n, tol=tol)
        phase = (-nu * _nearest_orbit_time(fam, k, shot.point)) % (2.0 * np.pi)
        err = abs((phase - z.phi + np.pi) % (2.0 * np.pi) - np.pi)
        out.append(PersistedOrbit(z, float(eps), shot, float(phase), float(err)))
    return out


def distinct_fixed_points(orbits, atol: float = 1e-6) -> int:
    """Number of distinct converged shooting points among ``orbits``."""
    pts: list[np.ndarray] = []
    for o in orbits:
        if not o.shooting.converged:
            continue
        if all(np.linalg.norm(o.shooting.point - p) > atol for p in pts):
            pts.append(o.shooting.point)
    return len(pts)
