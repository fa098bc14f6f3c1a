"""Verdicts on the nonexistence of first integrals and on nonintegrability.

A verdict names the criterion applied, lists each hypothesis with a
pass/fail/inconclusive status and the numbers behind it, and states a
conclusion only when every hypothesis passes.  The density requirement on
the resonance set cannot be checked numerically; it is replaced by
accumulation evidence (at least eight resonant parameters approaching a
limit with shrinking spacing) and every positive conclusion says so.

Criterion labels:

* ``single_frequency_first_integrals`` -- one angle: ``omega != 0`` and a
  nonzero mean of ``h`` rule out a full set of analytic first integrals.
* ``resonant_fourier_first_integrals`` / ``resonant_fourier_nonintegrable``
  -- several angles: the resonant Fourier integral is not identically zero
  (resp. not constant, with a full-rank frequency map) on an accumulating
  set of resonant tori.
* ``subharmonic_first_integrals`` / ``subharmonic_nonintegrable`` -- the
  subharmonic Melnikov functions along an orbit family.
* ``homoclinic_first_integrals`` / ``homoclinic_nonintegrable`` -- the
  homoclinic Melnikov function, approached by the subharmonic ones.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .actionangle import (
    IntegralCurve,
    fourier_coeffs,
    jacobian_rank_omega,
    resonance_lattice,
    resonant_integral_fourier,
    resonant_integral_quadrature,
)
from .errors import DomainError, NoResonanceError
from .melnikov import (
    LimitCheck,
    MelnikovCurve,
    ResonancePair,
    homoclinic_melnikov,
    melnikov_limit_check,
    solve_resonance,
    subharmonic_melnikov,
)
from .systems import ActionAngleSystem, ForcedPlanarSystem, catalog_get, orbit_family

REL_TOL = 1e-7
MIN_ACCUMULATION = 8
SIG_DIGITS = 10

THEOREMS = (
    "single_frequency_first_integrals",
    "resonant_fourier_first_integrals",
    "resonant_fourier_nonintegrable",
    "subharmonic_first_integrals",
    "subharmonic_nonintegrable",
    "homoclinic_first_integrals",
    "homoclinic_nonintegrable",
)
NO_FIRST_INTEGRALS = "no_n_minus_q_first_integrals"
NONINTEGRABLE = "not_real_analytically_integrable"
NO_CONCLUSION = "no_conclusion"
STATUSES = ("pass", "fail", "inconclusive")

KEY_SET_CAVEAT = "subject to the key-set hypothesis (evidenced by resonance accumulation, not proven)"
NO_CONCLUSION_NOTE = "failing or inconclusive hypotheses prove nothing; no integrability is claimed"


@dataclass(frozen=True)
class Hypothesis:
    name: str
    status: str
    evidence: dict

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if not any(_is_numeric(v) for v in self.evidence.values()):
            raise ValueError(f"hypothesis {self.name} carries no numeric evidence")


@dataclass(frozen=True)
class Verdict:
    theorem: str
    hypotheses: tuple[Hypothesis, ...]
    conclusion: str
    scope_note: str
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown criterion {self.theorem!r}")
        if self.conclusion != NO_CONCLUSION and not all(h.status == "pass" for h in self.hypotheses):
            raise ValueError("a conclusion needs every hypothesis to pass")

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "conclusion": self.conclusion,
            "scope_note": self.scope_note,
            "hypotheses": [
                {"name": h.name, "status": h.status, "evidence": _rounded(h.evidence)} for h in self.hypotheses
            ],
            "notes": list(self.notes),
        }


def _is_numeric(v) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float, np.floating, np.integer)):
        return True
    if isinstance(v, (list, tuple)):
        return len(v) > 0 and all(_is_numeric(x) for x in v)
    return False


def _rounded(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0.0 else x
    if isinstance(obj, dict):
        return {str(k): _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _conclude(theorem, hyps, positive, scope, notes=()) -> Verdict:
    ok = bool(hyps) and all(h.status == "pass" for h in hyps)
    notes = tuple(notes)
    if not ok:
        notes = notes + (NO_CONCLUSION_NOTE,)
    return Verdict(theorem, tuple(hyps), positive if ok else NO_CONCLUSION, scope, notes)


# -- curve tests -----------------------------------------------------------------


def curve_scale(curve) -> float:
    """``max(1, beta + delta)`` for Melnikov curves, ``max(1, meta['scale'])`` otherwise."""
    meta = getattr(curve, "meta", {}) or {}
    if "beta" in meta or "delta" in meta:
        return max(1.0, abs(meta.get("beta", 0.0)) + abs(meta.get("delta", 0.0)))
    return max(1.0, float(meta.get("scale", 1.0)))


def _component_values(curve) -> np.ndarray:
    v = np.asarray(curve.values, dtype=float)
    if isinstance(curve, IntegralCurve):
        return v.reshape(v.shape[0], -1)
    return v.reshape(1, -1)


def test_identically_zero(curve, rel_tol: float = REL_TOL) -> tuple[bool, float]:
    """``(max |values| < rel_tol * scale, max |values|)``."""
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    peak = float(np.max(np.abs(_component_values(curve))))
    return peak < rel_tol * curve_scale(curve), peak


def test_constant(curve, rel_tol: float = REL_TOL) -> tuple[bool, float]:
    """``(max - min < rel_tol * scale, max - min)``, taken per component."""
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    v = _component_values(curve)
    spread = float(np.max(v.max(axis=1) - v.min(axis=1)))
    return spread < rel_tol * curve_scale(curve), spread


# Keep pytest from collecting the two tests above when imported into a test module.
test_identically_zero.__test__ = False
test_constant.__test__ = False


# -- evidence ----------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceEvidence:
    """One resonant torus or orbit with the curve computed on it.

    ``distance`` is the distance of the resonance parameter from the point
    the evidence sequence accumulates at.
    """

    parameter: tuple[float, ...]
    distance: float
    curve: MelnikovCurve | IntegralCurve
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HomoclinicEvidence:
    sign: int
    curve: MelnikovCurve
    limit: LimitCheck | None = None


def accumulation_chain(distances) -> list[int]:
    """Longest index chain with distances decreasing and successive spacing shrinking.

    Points are taken in order of decreasing distance.  Adding points can
    only lengthen the longest chain.
    """
    order = sorted(range(len(distances)), key=lambda i: (-distances[i], i))
    d = [distances[i] for i in order]
    n = len(d)
    if n == 0:
        return []
    # best[j][i]: longest chain ending with the pair (i, j), i < j.
    best = [[0] * n for _ in range(n)]
    prev = [[-1] * n for _ in range(n)]
    top, end = 1, (-1, 0)
    for j in range(n):
        for i in range(j):
            gap = d[i] - d[j]
            if not gap > 0:
                continue
            best[j][i], prev[j][i] = 2, -1
            for h in range(i):
                if best[i][h] and d[h] - d[i] > gap and best[i][h] + 1 > best[j][i]:
                    best[j][i], prev[j][i] = best[i][h] + 1, h
            if best[j][i] > top:
                top, end = best[j][i], (i, j)
    if top == 1:
        return [order[0]]
    i, j = end
    chain = [j, i]
    while prev[j][i] >= 0:
        i, j = prev[j][i], i
        chain.append(i)
    return [order[c] for c in reversed(chain)]


def _accumulation_hypothesis(name, evidence, predicate, extra=None) -> Hypothesis:
    """Pass when the points satisfying ``predicate`` carry an accumulation chain of length >= 8."""
    if not evidence:
        return Hypothesis(name, "inconclusive", {"points": 0})
    passing = [e for e in evidence if predicate(e)]
    chain = accumulation_chain([e.distance for e in passing])
    dist = [passing[i].distance for i in chain] if passing else []
    ev = {
        "points": len(evidence),
        "passing_points": len(passing),
        "chain_length": len(chain),
        "chain_distances": dist if dist else [0.0],
        "required_chain_length": MIN_ACCUMULATION,
    }
    if extra:
        ev.update(extra)
    return Hypothesis(name, "pass" if len(chain) >= MIN_ACCUMULATION else "fail", ev)


def _not_zero(e, rel_tol):
    return not test_identically_zero(e.curve, rel_tol)[0]


def _not_constant(e, rel_tol):
    return not test_constant(e.curve, rel_tol)[0]


# -- verdict rules -------------------------------------------------------------------


def verdict_for_system(name: str, params: dict, resonances, curves=(), rel_tol: float = REL_TOL,
                       report: str | None = None) -> list[Verdict]:
    """Apply the decision table for catalog system ``name`` to precomputed evidence.

    ``resonances`` is a list of :class:`ResonanceEvidence`; ``curves`` a list
    of :class:`HomoclinicEvidence` (Duffing with ``a = 1`` only).  ``report``
    selects ``first_integrals`` or ``nonintegrable`` verdicts; ``None``
    returns both.
    """
    name = "pendulum_torque" if name == "pendulum" else name
    want_fi = report in (None, "first_integrals")
    want_ni = report in (None, "nonintegrable")
    out: list[Verdict] = []
    if name == "pendulum_torque":
        if want_fi:
            out.append(_single_frequency(resonances, rel_tol))
    elif name == "coupled_oscillators":
        if want_fi:
            out.append(_fourier_first_integrals(resonances, rel_tol))
        if want_ni:
            out.append(_fourier_nonintegrable(resonances, rel_tol))
    elif name == "duffing":
        families = sorted({e.extras["family"] for e in resonances})
        for fam in families:
            ev = [e for e in resonances if e.extras["family"] == fam]
            if want_fi:
                out.append(_subharmonic(fam, ev, rel_tol, nonintegrable=False))
            if want_ni:
                out.append(_subharmonic(fam, ev, rel_tol, nonintegrable=True))
        for hom in sorted(curves, key=lambda h: -h.sign):
            if want_fi:
                out.append(_homoclinic(hom, rel_tol, nonintegrable=False))
            if want_ni:
                out.append(_homoclinic(hom, rel_tol, nonintegrable=True))
    else:
        raise DomainError(f"no verdict rules for system {name!r}")
    return out


def _single_frequency(evidence, rel_tol) -> Verdict:
    scope = "a neighbourhood of the circle {I} x S^1 near eps = 0, for the sampled action I"
    if not evidence:
        hyps = [Hypothesis("frequency_nonzero", "inconclusive", {"points": 0}),
                Hypothesis("mean_perturbation_nonzero", "inconclusive", {"points": 0})]
        return _conclude("single_frequency_first_integrals", hyps, NO_FIRST_INTEGRALS, scope)
    chosen = next((e for e in evidence if e.extras["omega_norm"] > 0 and _not_zero(e, rel_tol)), evidence[0])
    omega = chosen.extras["omega_norm"]
    zero, peak = test_identically_zero(chosen.curve, rel_tol)
    hyps = [
        Hypothesis("frequency_nonzero", "pass" if omega > 0 else "fail",
                   {"I": list(chosen.parameter), "omega": omega}),
        Hypothesis("mean_perturbation_nonzero", "fail" if zero else "pass",
                   {"I": list(chosen.parameter), "h0_norm": chosen.extras["h0_norm"], "integral_max_abs": peak,
                    "dual_method_max_diff": chosen.extras["dual_method_max_diff"]}),
    ]
    scope = f"a neighbourhood of the circle {{I = {_fmt(chosen.parameter)}}} x S^1 near eps = 0"
    return _conclude("single_frequency_first_integrals", hyps, NO_FIRST_INTEGRALS, scope)


def _fourier_first_integrals(evidence, rel_tol) -> Verdict:
    hyps = [
        _resonant_tori(evidence),
        _accumulation_hypothesis("integral_not_identically_zero_on_accumulating_set", evidence,
                                 lambda e: _not_zero(e, rel_tol)),
    ]
    scope = f"a neighbourhood of the sampled resonant tori near eps = 0, {KEY_SET_CAVEAT}"
    return _conclude("resonant_fourier_first_integrals", hyps, NO_FIRST_INTEGRALS, scope)


def _fourier_nonintegrable(evidence, rel_tol) -> Verdict:
    if evidence:
        ranks = [e.extras["omega_rank"] for e in evidence]
        ell = evidence[0].extras["ell"]
        rank_h = Hypothesis("frequency_map_full_rank", "pass" if min(ranks) == ell else "fail",
                            {"min_rank": min(ranks), "ell": ell})
    else:
        rank_h = Hypothesis("frequency_map_full_rank", "inconclusive", {"points": 0})
    hyps = [
        _resonant_tori(evidence),
        rank_h,
        _accumulation_hypothesis("integral_not_constant_on_accumulating_set", evidence,
                                 lambda e: _not_constant(e, rel_tol)),
    ]
    scope = f"the action box near the sampled resonant tori, for small eps != 0, {KEY_SET_CAVEAT}"
    return _conclude("resonant_fourier_nonintegrable", hyps, NONINTEGRABLE, scope)


def _resonant_tori(evidence) -> Hypothesis:
    if not evidence:
        return Hypothesis("resonant_tori", "inconclusive", {"points": 0})
    omega0 = [e.extras["omega0"] for e in evidence]
    ok = all(w is not None and w > 0 for w in omega0)
    return Hypothesis("resonant_tori", "pass" if ok else "fail",
                      {"points": len(evidence), "min_omega0": min(w or 0.0 for w in omega0)})


def _subharmonic(family, evidence, rel_tol, nonintegrable) -> Verdict:
    periods = [e.extras["period"] for e in sorted(evidence, key=lambda e: -e.distance)]
    d = np.diff(periods)
    monotone = bool(len(d) > 0 and (np.all(d > 0) or np.all(d < 0)))
    period_h = Hypothesis("period_varies_with_modulus", "pass" if monotone else
                          ("inconclusive" if len(d) == 0 else "fail"),
                          {"periods": periods})
    if nonintegrable:
        theorem, positive = "subharmonic_nonintegrable", NONINTEGRABLE
        curve_h = _accumulation_hypothesis("melnikov_not_constant_on_accumulating_set", evidence,
                                           lambda e: _not_constant(e, rel_tol))
        scope = (f"regions of the plane bounded by the separatrix and containing the {family} orbits, "
                 f"times S^1, for small eps != 0, {KEY_SET_CAVEAT}")
    else:
        theorem, positive = "subharmonic_first_integrals", NO_FIRST_INTEGRALS
        curve_h = _accumulation_hypothesis("melnikov_not_identically_zero_on_accumulating_set", evidence,
                                           lambda e: _not_zero(e, rel_tol))
        scope = (f"neighbourhoods of the resonant {family} orbit cylinders at the sampled moduli, "
                 f"near eps = 0, {KEY_SET_CAVEAT}")
    notes = []
    if nonintegrable and curve_h.status == "fail":
        higher = [e for e in evidence if e.extras["l"] != 1]
        l_one = [e for e in evidence if e.extras["l"] == 1]
        if higher and all(not _not_constant(e, rel_tol) for e in higher) and len(l_one) < MIN_ACCUMULATION:
            notes.append(
                "not applicable: every sampled subharmonic Melnikov function with l != 1 is constant, "
                f"and only {len(l_one)} resonance(s) with l = 1 exist in this family at this forcing "
                "frequency, so no accumulating set of non-constant functions is available"
            )
    return _conclude(theorem, [period_h, curve_h], positive, scope, notes)


def _homoclinic(hom: HomoclinicEvidence, rel_tol, nonintegrable) -> Verdict:
    side = "plus" if hom.sign > 0 else "minus"
    saddle = Hypothesis("hyperbolic_saddle", "pass", {"eigenvalues": [-1.0, 1.0]})
    if hom.limit is None:
        limit_h = Hypothesis("subharmonic_limit", "inconclusive", {"points": 0})
    else:
        sd = list(hom.limit.sup_differences)
        ok = len(sd) >= 2 and sd[-1] < sd[0] / 4.0
        limit_h = Hypothesis("subharmonic_limit", "pass" if ok else "fail",
                             {"forcing_periods": list(hom.limit.forcing_periods), "sup_differences": sd})
    if nonintegrable:
        flag, value = test_constant(hom.curve, rel_tol)
        curve_h = Hypothesis("melnikov_not_constant", "fail" if flag else "pass", {"max_minus_min": value})
        theorem, positive = "homoclinic_nonintegrable", NONINTEGRABLE
        scope = f"a region bounded by the {side} separatrix loop, times S^1, for small eps != 0"
    else:
        flag, value = test_identically_zero(hom.curve, rel_tol)
        curve_h = Hypothesis("melnikov_not_identically_zero", "fail" if flag else "pass", {"max_abs": value})
        theorem, positive = "homoclinic_first_integrals", NO_FIRST_INTEGRALS
        scope = f"a neighbourhood of the {side} separatrix loop times S^1, near eps = 0"
    return _conclude(theorem, [saddle, limit_h, curve_h], positive, scope)


def _fmt(values) -> str:
    return ", ".join(f"{v:.6g}" for v in values)


# -- evidence collection for the catalog ------------------------------------------------


def action_angle_evidence(system: ActionAngleSystem, actions, target, R: int = 12,
                          tau_grid_size: int = 32) -> list[ResonanceEvidence]:
    """Fourier-formula integrals at ``actions``, cross-checked by quadrature."""
    out = []
    scale = _system_scale(system)
    for I in actions:
        I = np.asarray(I, dtype=float)
        omega = system.frequencies(I)
        lat = resonance_lattice(omega, R)
        spectrum = fourier_coeffs(system, I, R)
        curve = resonant_integral_fourier(spectrum, lat, tau_grid_size)
        quad = resonant_integral_quadrature(system, I, tau_grid_size)
        curve = IntegralCurve(curve.tau_axis, curve.values, curve.period, {**curve.meta, "scale": scale})
        out.append(ResonanceEvidence(
            tuple(float(v) for v in I),
            float(np.linalg.norm(I - np.asarray(target, dtype=float))),
            curve,
            {
                "omega0": lat.omega0, "omega_norm": float(np.linalg.norm(omega)),
                "h0_norm": float(np.linalg.norm(spectrum.coeff((0,) * system.m))),
                "omega_rank": jacobian_rank_omega(system, I), "ell": system.ell,
                "dual_method_max_diff": float(np.max(np.abs(curve.values - quad.values))),
            },
        ))
    return out


def _system_scale(system: ActionAngleSystem) -> float:
    p = system.params
    total = abs(p.get("beta", 0.0)) + abs(p.get("delta", 0.0))
    total += sum(abs(v) for v in p.get("Omega", []))
    total += sum(abs(v) for v in p.get("coupling", {}).values())
    return max(1.0, total)


def duffing_evidence(system: ForcedPlanarSystem, family_kind: str, pairs, phi_grid_size: int = 64):
    """Subharmonic Melnikov curves on the resonances ``pairs`` of one orbit family."""
    fam = orbit_family(system, family_kind)
    target_k = 1.0 if fam.case in ("interior", "exterior") else 1.0 / math.sqrt(2.0)
    out = []
    for res in pairs:
        try:
            k = solve_resonance(fam.kind, system.nu, res)
        except NoResonanceError:
            continue
        curve = subharmonic_melnikov(system, fam, k, res, phi_grid_size)
        distance = k.kprime2 / (1.0 + k.k) if target_k == 1.0 else target_k - k.k
        out.append(ResonanceEvidence(
            (k.k, k.kprime), float(distance), curve,
            {"family": fam.kind, "l": res.l, "n": res.n, "period": fam.period(k)},
        ))
    return out


# Resonance sequences used by the catalog reports.
_INTERIOR_PAIRS = tuple(ResonancePair(1, n) for n in range(1, 11))
_EXTERIOR_PAIRS = tuple(ResonancePair(1, n) for n in range(1, 17))
_SOFT_PAIRS = tuple(ResonancePair(l, 1) for l in range(1, 11)) + (ResonancePair(1, 3), ResonancePair(1, 5))
_LIMIT_LIST = (1, 2, 3, 5, 8)


def catalog_evidence(name: str, params: dict):
    """Evidence ``(resonances, homoclinic curves)`` for a catalog system."""
    system = catalog_get(name, **params)
    if isinstance(system, ActionAngleSystem):
        if system.m == 1:
            actions = [[1.0 + 1.0 / j] for j in range(1, 11)]
            target = [1.0]
        else:
            actions = [[1.0 + 1.0 / j] + [1.0] * (system.ell - 1) for j in range(1, 11)]
            target = [1.0] * system.ell
        return action_angle_evidence(system, actions, target), []
    if system.a == 1:
        res = (duffing_evidence(system, "duffing_interior_plus", _INTERIOR_PAIRS)
               + duffing_evidence(system, "duffing_interior_minus", _INTERIOR_PAIRS)
               + duffing_evidence(system, "duffing_exterior", _EXTERIOR_PAIRS))
        homs = []
        for sign, kind in ((1, "duffing_interior_plus"), (-1, "duffing_interior_minus")):
            curve = homoclinic_melnikov(system, sign)
            limit = melnikov_limit_check(system, None, _LIMIT_LIST, family_kind=kind)
            homs.append(HomoclinicEvidence(sign, curve, limit))
        return res, homs
    return duffing_evidence(system, "duffing_soft", _SOFT_PAIRS), []


def catalog_report(name: str, params: dict, report: str | None = None, rel_tol: float = REL_TOL) -> dict:
    """Full verdict report for a catalog system as a JSON-ready dict."""
    resonances, curves = catalog_evidence(name, params)
    verdicts = verdict_for_system(name, params, resonances, curves, rel_tol, report)
    return {
        "system": name,
        "params": _rounded(_jsonable_params(params)),
        "report": report or "all",
        "rel_tol": rel_tol,
        "verdicts": [v.to_dict() for v in verdicts],
    }


def _jsonable_params(params: dict) -> dict:
    out = {}
    for k, v in sorted(params.items()):
        if isinstance(v, dict):
            v = {(",".join(str(i) for i in key) if isinstance(key, tuple) else str(key)): val
                 for key, val in sorted(v.items())}
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        out[k] = v
    return out


def report_json(report: dict) -> str:
    """Canonical JSON text for a report: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# The six catalog reports checked in as golden files.
GOLDEN_REPORTS = {
    "pendulum": ("pendulum_torque", {"beta": 0.7}, None),
    "coupled_i": ("coupled_oscillators", {"ell": 2, "delta": 0.5, "Omega": [1.0, 0.5],
                                          "coupling": {(1, 1): 1.0}, "R_sys": 12}, None),
    "coupled_ii": ("coupled_oscillators", {
        "ell": 2, "delta": 0.0, "Omega": [0.0, 0.0],
        "coupling": {(j, j + 1): 0.5 * math.exp(-0.1 * (2 * j + 1)) for j in range(1, 11)},
        "M": 1.0, "decay": 0.1, "R_sys": 24}, None),
    "duffing_a1_first_integrals": ("duffing", {"a": 1, "beta": 1.0, "delta": 0.2, "nu": 1.0}, "first_integrals"),
    "duffing_a1_nonintegrable": ("duffing", {"a": 1, "beta": 1.0, "delta": 0.2, "nu": 1.0}, "nonintegrable"),
    "duffing_a_minus1": ("duffing", {"a": -1, "beta": 1.0, "delta": 0.2, "nu": 2.0}, None),
}


def golden_report(key: str) -> str:
    name, params, report = GOLDEN_REPORTS[key]
    return report_json(catalog_report(name, params, report))
