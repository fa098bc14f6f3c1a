import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonint.actionangle import IntegralCurve
from nonint.criteria import (
    GOLDEN_REPORTS,
    MIN_ACCUMULATION,
    NO_CONCLUSION,
    NO_FIRST_INTEGRALS,
    NONINTEGRABLE,
    Hypothesis,
    ResonanceEvidence,
    Verdict,
    accumulation_chain,
    catalog_evidence,
    catalog_report,
    duffing_evidence,
    golden_report,
    report_json,
    verdict_for_system,
)
from nonint.criteria import test_constant as check_constant
from nonint.criteria import test_identically_zero as check_zero
from nonint.melnikov import MelnikovCurve, ResonancePair, phi_grid
from nonint.systems import catalog_get

GOLDEN = Path(__file__).parent / "golden"
PHI = phi_grid(64)


def curve(values, beta=0.0, delta=0.0):
    return MelnikovCurve(PHI, np.asarray(values, dtype=float), {"beta": beta, "delta": delta})


def test_zero_and_constant_examples():
    assert check_zero(curve(np.zeros(64))) == (True, 0.0)
    flag, peak = check_zero(curve(np.full(64, -4 / 3), delta=1.0))
    assert not flag and peak == pytest.approx(4 / 3)
    flag, spread = check_constant(curve(np.full(64, -4 / 3), delta=1.0))
    assert flag and spread < 1e-12
    flag, spread = check_constant(curve(np.sin(PHI + 0.1)))
    assert not flag and spread == pytest.approx(2.0, abs=1e-3)


def test_duffing_catalog_examples():
    duff = catalog_get("duffing", a=1, beta=1.0, delta=0.0, nu=0.5)
    (ev,) = duffing_evidence(duff, "duffing_interior_plus", [ResonancePair(2, 1)])
    flag, peak = check_zero(ev.curve)
    assert flag and peak < 1e-8
    soft = catalog_get("duffing", a=-1, beta=1.0, delta=0.2, nu=2.0)
    for e in duffing_evidence(soft, "duffing_soft", [ResonancePair(l, 1) for l in (2, 3, 4)]):
        flag, spread = check_constant(e.curve)
        assert flag and spread < 1e-8


def test_tests_reject_bad_tolerance():
    from nonint.errors import DomainError

    with pytest.raises(DomainError):
        check_zero(curve(np.zeros(64)), 0.0)
    with pytest.raises(DomainError):
        check_constant(curve(np.zeros(64)), -1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(-3, 3))
def test_tests_scale_invariance(beta, delta, shift):
    sys_curve = curve(-delta * 1.3 + beta * 0.7 * np.sin(PHI + shift), beta, delta)
    big = curve(sys_curve.values * 1e3, beta * 1e3, delta * 1e3)
    if beta + delta >= 1.0 or (beta == 0.0 and delta == 0.0):
        assert check_zero(sys_curve)[0] == check_zero(big)[0]
        assert check_constant(sys_curve)[0] == check_constant(big)[0]


def test_catalog_flags_scale_invariant():
    for params in ({"a": 1, "beta": 1.0, "delta": 0.2, "nu": 1.0}, {"a": -1, "beta": 1.0, "delta": 0.2, "nu": 2.0}):
        small, _ = catalog_evidence("duffing", params)
        big, _ = catalog_evidence("duffing", {**params, "beta": 1e3, "delta": 200.0})
        assert len(small) == len(big)
        for a, b in zip(small, big):
            assert check_zero(a.curve)[0] == check_zero(b.curve)[0]
            assert check_constant(a.curve)[0] == check_constant(b.curve)[0]


def test_accumulation_chain():
    assert accumulation_chain([]) == []
    assert accumulation_chain([1.0]) == [0]
    d = [2.0 ** -j for j in range(10)]
    assert accumulation_chain(d) == list(range(10))
    # Evenly spaced points only admit short subsequences with shrinking gaps (10, 6, 3, 1).
    assert len(accumulation_chain([10.0 - j for j in range(10)])) == 4
    shuffled = [d[i] for i in (3, 0, 7, 1, 9, 2, 5, 4, 8, 6)]
    assert len(accumulation_chain(shuffled)) == 10


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 10.0), max_size=14), st.lists(st.floats(1e-6, 10.0), max_size=4))
def test_accumulation_chain_monotone_under_additions(base, extra):
    chain = accumulation_chain(base)
    grown = accumulation_chain(base + extra)
    assert len(grown) >= len(chain)
    dist = [(base + extra)[i] for i in grown]
    assert all(a > b for a, b in zip(dist, dist[1:]))
    gaps = np.diff(dist)
    assert all(abs(g2) < abs(g1) for g1, g2 in zip(gaps, gaps[1:]))


def _synthetic_evidence(count, value=1.0):
    return [
        ResonanceEvidence((1.0 - 2.0 ** -j,), 2.0 ** -j, curve(value * np.sin(PHI), beta=1.0),
                          {"family": "duffing_interior_plus", "l": 1, "n": j + 1, "period": 10.0 + j})
        for j in range(count)
    ]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.integers(0, 6))
def test_verdict_monotone_in_evidence(count, more):
    base = verdict_for_system("duffing", {}, _synthetic_evidence(count))
    grown = verdict_for_system("duffing", {}, _synthetic_evidence(count + more))
    for a, b in zip(base, grown):
        if a.conclusion != NO_CONCLUSION:
            assert b.conclusion == a.conclusion
    assert (base[0].conclusion != NO_CONCLUSION) == (count >= MIN_ACCUMULATION)


def test_verdict_invariants():
    with pytest.raises(ValueError):
        Hypothesis("x", "pass", {"note": "words only"})
    with pytest.raises(ValueError):
        Hypothesis("x", "maybe", {"v": 1.0})
    failing = Hypothesis("x", "fail", {"v": 1.0})
    with pytest.raises(ValueError):
        Verdict("subharmonic_first_integrals", (failing,), NO_FIRST_INTEGRALS, "scope")
    with pytest.raises(ValueError):
        Verdict("made_up", (), NO_CONCLUSION, "scope")


def test_pendulum_verdict():
    report = catalog_report("pendulum_torque", {"beta": 0.7})
    (v,) = report["verdicts"]
    assert v["theorem"] == "single_frequency_first_integrals"
    assert v["conclusion"] == NO_FIRST_INTEGRALS
    assert all(h["status"] == "pass" for h in v["hypotheses"])


def test_unperturbed_coupled_oscillators_give_no_conclusion():
    report = catalog_report("coupled_oscillators", {"ell": 2, "delta": 0.0, "Omega": [0.0, 0.0]})
    for v in report["verdicts"]:
        assert v["conclusion"] == NO_CONCLUSION
        assert any(h["status"] == "fail" for h in v["hypotheses"])
        assert any("prove nothing" in n for n in v["notes"])


def test_soft_duffing_verdicts():
    report = catalog_report("duffing", {"a": -1, "beta": 1.0, "delta": 0.2, "nu": 2.0})
    fi, ni = report["verdicts"]
    assert fi["theorem"] == "subharmonic_first_integrals" and fi["conclusion"] == NO_FIRST_INTEGRALS
    assert ni["theorem"] == "subharmonic_nonintegrable" and ni["conclusion"] == NO_CONCLUSION
    assert any(n.startswith("not applicable") for n in ni["notes"])


def test_hard_duffing_verdicts_all_positive():
    report = catalog_report("duffing", {"a": 1, "beta": 1.0, "delta": 0.2, "nu": 1.0})
    assert len(report["verdicts"]) == 10
    for v in report["verdicts"]:
        assert v["conclusion"] in (NO_FIRST_INTEGRALS, NONINTEGRABLE)
        assert v["scope_note"]


def test_integral_curve_scale_from_meta():
    values = np.full((1, 16, 16), 5e-5)
    ic = IntegralCurve(phi_grid(16), values, 2 * math.pi, {"scale": 1e3})
    assert check_zero(ic)[0]
    assert not check_zero(IntegralCurve(phi_grid(16), values, 2 * math.pi))[0]


def test_report_json_is_canonical():
    text = report_json({"b": 1, "a": [1.5, 2]})
    assert text == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'


@pytest.mark.parametrize("key", sorted(GOLDEN_REPORTS))
def test_golden_reports(key):
    expected = (GOLDEN / f"{key}.json").read_bytes()
    first = golden_report(key).encode()
    assert first == expected
    assert golden_report(key).encode() == first
    json.loads(expected)
