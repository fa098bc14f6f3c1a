"""Fourier spectra, resonance lattices and torus-averaged obstruction integrals.

For a system ``I' = eps h(I, theta)``, ``theta' = omega(I)`` on a resonant
torus (``omega = omega0 * w`` with ``w`` an integer vector) the integral of
``h`` along the unperturbed flow over one period ``T = 2 pi / omega0`` is

    Int(tau) = int_0^T h(I, omega t + tau) dt = T sum_{r . omega = 0} h_r(I) e^{i r . tau}.

Both sides are computed here independently: the right-hand side from an FFT
of ``h`` restricted to the resonance lattice, the left-hand side by direct
quadrature along the flow.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, NotResonantError
from .systems import ActionAngleSystem

RESONANCE_RTOL = 1e-10
DEFAULT_R = 12
DEFAULT_DENOM = 64
SUBSET_CAP = 1000


@dataclass(frozen=True)
class FourierSpectrum:
    """Coefficients ``h_r`` for ``|r|_inf <= R``, stored densely with offset ``R``.

    ``coeffs`` has shape ``(ell,) + (2R + 1,) * m``; the coefficient of
    ``exp(i r . theta)`` sits at index ``(:, r_1 + R, ..., r_m + R)``.
    """

    R: int
    coeffs: np.ndarray
    I: tuple[float, ...] = ()

    @property
    def ell(self) -> int:
        return self.coeffs.shape[0]

    @property
    def m(self) -> int:
        return self.coeffs.ndim - 1

    def coeff(self, r) -> np.ndarray:
        r = tuple(int(v) for v in r)
        if len(r) != self.m:
            raise DomainError(f"mode {r} has the wrong dimension for m={self.m}")
        if max(abs(v) for v in r) > self.R:
            return np.zeros(self.ell, dtype=complex)
        return self.coeffs[(slice(None),) + tuple(v + self.R for v in r)]

    def evaluate(self, theta) -> np.ndarray:
        """Real part of the truncated Fourier series at angles ``theta`` (leading axis ``m``)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros((self.ell,) + theta.shape[1:], dtype=complex)
        for idx in itertools.product(range(2 * self.R + 1), repeat=self.m):
            c = self.coeffs[(slice(None),) + idx]
            if not np.any(c):
                continue
            phase = sum((i - self.R) * theta[d] for d, i in enumerate(idx))
            out += c.reshape((self.ell,) + (1,) * (theta.ndim - 1)) * np.exp(1j * phase)
        return out.real


def _check_in_box(system: ActionAngleSystem, I) -> np.ndarray:
    I = np.asarray(I, dtype=float).reshape(system.ell)
    for v, (lo, hi) in zip(I, system.action_box):
        if not lo <= v <= hi:
            raise DomainError(f"action {I.tolist()} outside the box {system.action_box}")
    return I


def _angle_grid(m: int, n: int) -> np.ndarray:
    axis = 2.0 * np.pi * np.arange(n) / n
    return np.stack(np.meshgrid(*([axis] * m), indexing="ij"))


def fourier_coeffs(system: ActionAngleSystem, I, R: int = DEFAULT_R) -> FourierSpectrum:
    """Fourier coefficients of ``h(I, .)`` from an FFT on a ``(4R)^m`` angle grid."""
    if R < 1:
        raise DomainError("truncation R must be at least 1")
    if system.h is None:
        raise DomainError("system has no angle-dependent perturbation to transform")
    I = _check_in_box(system, I)
    n = 4 * R
    values = np.asarray(system.h(I, _angle_grid(system.m, n)), dtype=float)
    spectrum = np.fft.fftn(values, axes=tuple(range(1, system.m + 1))) / n**system.m
    idx = np.r_[np.arange(n - R, n), np.arange(0, R + 1)]  # modes -R..R
    coeffs = spectrum[np.ix_(range(system.ell), *([idx] * system.m))]
    return FourierSpectrum(R, coeffs, tuple(float(v) for v in I))


@dataclass(frozen=True)
class ResonanceLattice:
    """Integer vectors ``r`` with ``|r|_inf <= R`` and ``r . omega = 0``."""

    omega: tuple[float, ...]
    R: int
    members: tuple[tuple[int, ...], ...]
    omega0: float | None = None
    direction: tuple[int, ...] | None = None

    @property
    def resonant(self) -> bool:
        return self.omega0 is not None

    @property
    def period(self) -> float:
        if self.omega0 is None:
            raise NotResonantError("frequency vector has no common frequency")
        return 2.0 * math.pi / self.omega0


def common_frequency(omega, denom_bound: int = DEFAULT_DENOM):
    """Largest ``omega0 > 0`` with ``omega / omega0`` integral, or ``(None, None)``.

    Ratios to the largest component are matched by continued-fraction
    convergents with denominators up to ``denom_bound`` and accepted when
    the residual is below 1e-10.
    """
    w = np.asarray(omega, dtype=float).reshape(-1)
    if not np.all(np.isfinite(w)) or not np.any(w):
        raise DomainError("frequency vector must be finite and not all zero")
    j = int(np.argmax(np.abs(w)))
    fracs = []
    for v in w:
        ratio = v / w[j]
        f = Fraction(ratio).limit_denominator(denom_bound)
        if abs(ratio - f.numerator / f.denominator) > RESONANCE_RTOL:
            return None, None
        fracs.append(f)
    lcm = math.lcm(*(f.denominator for f in fracs))
    ints = [f.numerator * (lcm // f.denominator) for f in fracs]
    g = math.gcd(*ints)
    sign = 1 if w[j] > 0 else -1
    direction = tuple(sign * v // g for v in ints)
    return abs(w[j]) * g / lcm, direction


def resonance_lattice(omega, R: int = DEFAULT_R, denom_bound: int = DEFAULT_DENOM) -> ResonanceLattice:
    """Exhaustive enumeration of the resonance lattice within ``|r|_inf <= R``."""
    w = np.asarray(omega, dtype=float).reshape(-1)
    omega0, direction = common_frequency(w, denom_bound)
    scale = float(np.linalg.norm(w))
    box = np.array(list(itertools.product(range(-R, R + 1), repeat=w.size)), dtype=np.int64)
    hits = np.abs(box @ w) < RESONANCE_RTOL * scale
    members = tuple(sorted((tuple(int(v) for v in r) for r in box[hits]), key=_mode_order))
    return ResonanceLattice(tuple(float(v) for v in w), R, members, omega0, direction)


def _mode_order(r):
    return (max((abs(v) for v in r), default=0), sum(abs(v) for v in r), r)


@dataclass(frozen=True)
class IntegralCurve:
    """Obstruction integral sampled on a product grid over the angle torus.

    ``values`` has shape ``(ell,) + (N,) * m``.
    """

    tau_axis: np.ndarray
    values: np.ndarray
    period: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tau_axis.size < 16:
            raise ValueError("tau grid needs at least 16 points per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("integral values must be finite")


def _tau_grid(m: int, n: int) -> np.ndarray:
    if n < 16:
        raise DomainError("tau grid needs at least 16 points per axis")
    return _angle_grid(m, n)


def resonant_integral_fourier(
    spectrum: FourierSpectrum, lattice: ResonanceLattice, tau_grid_size: int = 32
) -> IntegralCurve:
    """``T sum_{r in lattice} h_r e^{i r . tau}`` on a product grid."""
    if lattice.omega0 is None:
        raise NotResonantError("frequency vector is not resonant; no common period")
    if len(lattice.omega) != spectrum.m:
        raise DomainError("spectrum and lattice disagree on the number of angles")
    T = lattice.period
    tau = _tau_grid(spectrum.m, tau_grid_size)
    acc = np.zeros((spectrum.ell,) + tau.shape[1:], dtype=complex)
    for r in lattice.members:
        if max((abs(v) for v in r), default=0) > spectrum.R:
            continue
        c = spectrum.coeff(r)
        if not np.any(c):
            continue
        phase = sum(rv * tau[d] for d, rv in enumerate(r)) if any(r) else np.zeros(tau.shape[1:])
        acc += c.reshape((spectrum.ell,) + (1,) * spectrum.m) * np.exp(1j * phase)
    acc *= T
    residue = float(np.max(np.abs(acc.imag))) if acc.size else 0.0
    if residue > RESONANCE_RTOL * max(1.0, float(np.max(np.abs(acc.real)))):
        raise ValueError(f"imaginary residue {residue:.3e}: spectrum is not Hermitian")
    meta = {"method": "fourier", "omega0": lattice.omega0, "members": len(lattice.members)}
    axis = 2.0 * np.pi * np.arange(tau_grid_size) / tau_grid_size
    return IntegralCurve(axis, acc.real, T, meta)


def resonant_integral_quadrature(
    system: ActionAngleSystem,
    I,
    tau_grid_size: int = 32,
    denom_bound: int = DEFAULT_DENOM,
    tol: float = 1e-12,
    chunk: int = 64,
) -> IntegralCurve:
    """``int_0^T h(I, omega t + tau) dt`` by the periodic trapezoid rule in ``t``.

    Nodes start at 64 and double until successive results differ by less
    than ``tol`` relative to ``max(1, |result|)``.  ``h`` is evaluated in
    chunks of ``chunk`` time nodes.
    """
    if system.h is None:
        raise DomainError("system has no perturbation to integrate")
    I = _check_in_box(system, I)
    omega = system.frequencies(I)
    omega0, _ = common_frequency(omega, denom_bound)
    if omega0 is None:
        raise NotResonantError(f"omega={omega.tolist()} is not resonant within denominator {denom_bound}")
    T = 2.0 * math.pi / omega0
    tau = _tau_grid(system.m, tau_grid_size)
    w = omega.reshape((system.m, 1) + (1,) * system.m)
    tau = tau[:, None]

    def node_sum(times):
        total = 0.0
        for start in range(0, times.size, chunk):
            t = times[start:start + chunk].reshape((1, -1) + (1,) * system.m)
            total = total + np.asarray(system.h(I, w * t + tau), dtype=float).sum(axis=1)
        return total

    n = 64
    total = node_sum(T * np.arange(n) / n)
    estimate = total * T / n
    while n < 2**16:
        total = total + node_sum(T * (np.arange(n) + 0.5) / n)
        n *= 2
        refined = total * T / n
        if np.max(np.abs(refined - estimate)) < tol * max(1.0, float(np.max(np.abs(refined)))):
            estimate = refined
            break
        estimate = refined
    meta = {"method": "quadrature", "omega0": omega0, "nodes": n}
    axis = 2.0 * np.pi * np.arange(tau_grid_size) / tau_grid_size
    return IntegralCurve(axis, np.asarray(estimate, dtype=float), T, meta)


def check_poincare_point(I, spectrum: FourierSpectrum, lattice: ResonanceLattice, s: int,
                         cap: int = SUBSET_CAP, rank_tol: float = 1e-10):
    """Whether ``ell - s`` lattice modes with independent coefficient vectors exist at ``I``.

    The modes must be linearly independent as integer vectors, except that
    the zero mode may be one of them.  Subsets are tried in order of
    increasing ``|r|``; returns ``None`` (inconclusive) when more than
    ``cap`` subsets are tried without success.
    """
    need = spectrum.ell - int(s)
    if need < 1:
        raise DomainError("need ell - s >= 1")
    candidates = []
    for r in lattice.members:
        if max((abs(v) for v in r), default=0) > spectrum.R:
            continue
        c = spectrum.coeff(r)
        if np.max(np.abs(c)) > rank_tol:
            candidates.append((r, c))
    if len(candidates) < need:
        return False
    tried = 0
    for subset in itertools.combinations(candidates, need):
        tried += 1
        if tried > cap:
            return None
        nonzero = [r for r, _ in subset if any(r)]
        if nonzero and _rank(np.array(nonzero, dtype=float), rank_tol) < len(nonzero):
            continue
        if _rank(np.array([c for _, c in subset]), rank_tol) == need:
            return True
    return False


def _rank(a: np.ndarray, tol: float) -> int:
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(sv > tol))


def jacobian_rank_omega(system: ActionAngleSystem, I, rel_tol: float = 1e-8) -> int:
    """Numerical rank of ``D omega(I)`` by central differences."""
    I = np.asarray(I, dtype=float).reshape(system.ell)
    jac = np.empty((system.m, system.ell))
    for j in range(system.ell):
        h = 1e-6 * (1.0 + abs(I[j]))
        e = np.zeros(system.ell)
        e[j] = h
        jac[:, j] = (system.frequencies(I + e) - system.frequencies(I - e)) / (2.0 * h)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


# -- resonant actions ---------------------------------------------------------


def _directions(bound: int):
    """Primitive integer directions ``(a, b)`` in a half plane with entries up to ``bound``."""
    out = []
    for a in range(0, bound + 1):
        for b in range(-bound, bound + 1):
            if (a, b) == (0, 0) or (a == 0 and b < 0) or math.gcd(a, b) != 1:
                continue
            out.append((a, b))
    return out


def detect_resonant_actions(
    system: ActionAngleSystem,
    box=None,
    denom_bound: int = 8,
    max_points: int = 32,
    samples: int = 400,
    lines: int = 4,
    R: int = DEFAULT_R,
) -> list[tuple[np.ndarray, ResonanceLattice]]:
    """Actions in ``box`` whose frequency vector is an integer multiple of ``omega0``.

    Integer vectors ``w`` with entries up to ``denom_bound`` are matched
    along grid lines parallel to the first action axis: the sign changes
    of ``omega_0 w_1 - omega_1 w_0`` are bracketed on ``samples`` points
    and refined by bisection; the remaining components must then be
    resonant too.  If ``omega`` is resonant with a fixed direction at every
    probe point, the whole box is resonant and a uniform sample is
    returned.  Results are sorted by the largest entry of ``omega / omega0``.
    """
    box = tuple(system.action_box if box is None else box)
    if len(box) != system.ell or any(not hi > lo for lo, hi in box):
        raise DomainError("box must give a nonempty interval per action")
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])

    def lattice_at(I):
        w = system.frequencies(I)
        if not np.any(w):
            return None
        lat = resonance_lattice(w, R, denom_bound)
        if lat.omega0 is None or max(abs(v) for v in lat.direction) > denom_bound:
            return None
        return lat

    probes = [lo + (hi - lo) * f for f in (0.13, 0.37, 0.5, 0.71, 0.94)]
    lats = [lattice_at(p) for p in probes]
    if system.m == 1 or (all(lats) and len({lat.direction for lat in lats}) == 1):
        pts = [lo + (hi - lo) * (i + 0.5) / max_points for i in range(max_points)]
        found = [(p, lattice_at(p)) for p in pts]
        found = [(p, lat) for p, lat in found if lat is not None]
        return sorted(found, key=lambda it: (max(abs(v) for v in it[1].direction), tuple(it[0])))[:max_points]

    if system.m < 2:
        return []
    if system.ell > 1:
        offsets = [np.linspace(lo[d], hi[d], lines + 2)[1:-1] for d in range(1, system.ell)]
        bases = [np.array((0.0,) + c) for c in itertools.product(*offsets)]
    else:
        bases = [np.zeros(1)]
    s_grid = np.linspace(lo[0], hi[0], samples)
    found = []
    for base in bases:
        def point(s, base=base):
            p = base.copy()
            p[0] = s
            return p

        om = np.array([system.frequencies(point(s))[:2] for s in s_grid])
        for a, b in _directions(denom_bound):
            f = om[:, 0] * b - om[:, 1] * a
            for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0)[0]:
                s0, s1, f0 = s_grid[i], s_grid[i + 1], f[i]
                if f0 == 0.0:
                    s1 = s0
                for _ in range(200):
                    mid = 0.5 * (s0 + s1)
                    if mid in (s0, s1):
                        break
                    w = system.frequencies(point(mid))
                    fm = w[0] * b - w[1] * a
                    if fm == 0.0:
                        s0 = s1 = mid
                        break
                    if (fm > 0) == (f0 > 0):
                        s0, f0 = mid, fm
                    else:
                        s1 = mid
                p = point(0.5 * (s0 + s1))
                lat = lattice_at(p)
                if lat is not None and not any(np.allclose(p, q, rtol=0, atol=1e-12) for q, _ in found):
                    found.append((p, lat))
    found.sort(key=lambda it: (max(abs(v) for v in it[1].direction), tuple(it[0])))
    return found[:max_points]
