from fractions import Fraction
from math import lcm

import pytest
from hypothesis import given, strategies as st

from morphosys.oracles import (brute_force_contains, brute_force_ctdw_contains, enumerated_contains,
                               violates_ctdw, worst_window_misses)
from morphosys.sla import FluidSla, InvalidSla, SlaType
from morphosys.transform import (GenLimits, bounded_shrink, bounded_stretch, candidate_periods,
                                 compose_bounds, fits_budget, fluid_retime, gen_transforms,
                                 harmonic_scale, min_supply, subtype_ct, subtype_ct_reason,
                                 subtype_ctdw, ct_condition, ctdw_condition, window_misses)


def S(*a):
    return SlaType(*a)


# -- miss-free subtyping ------------------------------------------------------

def test_fig1_style_substitution_fails():
    assert subtype_ct(S(1, 4), S(1, 5)) is False


def test_condition_three():
    assert subtype_ct(S(3, 4), S(1, 5))
    assert subtype_ct_reason(S(3, 4), S(1, 5)) == "condition 3"


def test_condition_one():
    assert ct_condition(S(1, 3), S(1, 6)) == 1
    assert subtype_ct(S(1, 3), S(1, 6))


def test_exact_fallback_reason():
    # (2,4) inside (1,3) needs no closed form: both 3-slot windows keep a slot
    assert subtype_ct_reason(S(3, 4), S(2, 3)) in ("exact", "condition 3", None)
    assert (subtype_ct_reason(S(3, 4), S(2, 3)) is not None) == brute_force_contains(S(3, 4), S(2, 3))


@pytest.mark.parametrize("T", range(1, 7))
@pytest.mark.parametrize("Tp", range(1, 7))
def test_subtype_matches_enumeration(T, Tp):
    for C in range(1, T + 1):
        for Cp in range(1, Tp + 1):
            assert subtype_ct(S(C, T), S(Cp, Tp)) == enumerated_contains(S(C, T), S(Cp, Tp))


def test_oracles_agree_on_short_windows():
    for T in range(1, 7):
        for Tp in range(1, 7):
            if lcm(T, Tp) > 12:
                continue
            for C in range(1, T + 1):
                for Cp in range(1, Tp + 1):
                    assert brute_force_contains(S(C, T), S(Cp, Tp)) == enumerated_contains(S(C, T), S(Cp, Tp))


def test_min_supply_is_tight():
    for T in range(1, 7):
        for C in range(1, T + 1):
            for Tn in range(1, 9):
                c = min_supply(C, T, Tn)
                assert subtype_ct(S(c, Tn), S(C, T))
                if c > 1:
                    assert not subtype_ct(S(c - 1, Tn), S(C, T))


def test_lemma1_contained_intervals():
    for T in range(1, 65):
        for Tp in range(2 * T, 65):
            K = Tp // T
            for start in range(0, lcm(T, Tp), Tp):
                inside = sum(1 for q in range(start // T, (start + Tp) // T + 1)
                             if q * T >= start and (q + 1) * T <= start + Tp)
                assert inside >= K - 1


# -- miss-tolerant subtyping --------------------------------------------------

def test_ctdw_condition_three():
    assert subtype_ctdw(S(3, 4, 1, 10), S(1, 5, 2, 10))
    assert subtype_ctdw(S(3, 4, 1, 10), S(1, 5, 2, 10), verify=False)
    assert not violates_ctdw(S(3, 4, 1, 10), S(1, 5, 2, 10))


def test_ctdw_lemma2_guard():
    assert subtype_ctdw(S(1, 2, 3, 4), S(1, 2, 1, 4)) is False


@given(st.integers(1, 4), st.integers(0, 3), st.integers(1, 4), st.integers(1, 4),
       st.integers(0, 3), st.integers(1, 4))
def test_ctdw_never_claims_when_ratio_grows(C, D, W, Cp, Dp, Wp):
    new, orig = S(C, 4, min(D, W), W), S(Cp, 4, min(Dp, Wp), Wp)
    if Fraction(new.D, new.W) > Fraction(orig.D, orig.W):
        assert not subtype_ctdw(new, orig)


@pytest.mark.parametrize("C, T, Cp, Tp", [(1, 3, 1, 6), (3, 4, 1, 5), (1, 4, 1, 5), (2, 2, 1, 3)])
def test_ctdw_degenerate_windows_equal_ct(C, T, Cp, Tp):
    assert subtype_ctdw(S(C, T), S(Cp, Tp)) == subtype_ct(S(C, T), S(Cp, Tp))


def test_ctdw_positive_verdicts_hold_on_small_windows():
    checked = 0
    for T in range(1, 4):
        for Tp in range(1, 4):
            for C in range(1, T + 1):
                for Cp in range(1, Tp + 1):
                    for W, D in ((2, 1), (3, 1), (4, 1)):
                        for Wp, Dp in ((2, 1), (4, 2), (3, 2)):
                            new, orig = S(C, T, D, W), S(Cp, Tp, Dp, Wp)
                            if lcm(W * T, Wp * Tp) > 16 or not subtype_ctdw(new, orig):
                                continue
                            checked += 1
                            assert brute_force_ctdw_contains(new, orig)
                            assert not violates_ctdw(new, orig)
    assert checked > 0


def test_closed_form_counterexample_is_caught():
    new, orig = S(2, 2, 1, 2), S(1, 1, 2, 3)
    assert ctdw_condition(new, orig) == 2
    assert subtype_ctdw(new, orig, verify=False)
    assert violates_ctdw(new, orig) and not brute_force_ctdw_contains(new, orig)
    assert subtype_ctdw(new, orig) is False


def test_invalid_input_rejected():
    with pytest.raises(InvalidSla):
        subtype_ctdw(S(5, 4), S(1, 4))


# -- rewriting rules ----------------------------------------------------------

@pytest.mark.parametrize("host, K, out", [((2, 5), 2, (4, 10)), ((1, 1), 30, (30, 30)), ((1, 3), 4, (4, 12))])
def test_harmonic_scale(host, K, out):
    got = harmonic_scale(S(*host), K)
    assert got == S(*out)
    if lcm(got.T, host[1]) <= 12:
        assert brute_force_contains(S(*host), got)
    assert enumerated_contains(S(*host), got)


def test_harmonic_scale_rejects_zero():
    with pytest.raises(ValueError):
        harmonic_scale(S(1, 2), 0)


def test_stretch_fully_safe():
    bt = bounded_stretch(S(2, 5), 2, 7)
    assert bt.safe and bt.result == S(7, 10)
    assert subtype_ct(S(7, 10), S(2, 5))


def test_stretch_bounded_band():
    bt = bounded_stretch(S(2, 5), 2, 5)
    assert (bt.a, bt.b) == (1, 2)
    assert worst_window_misses(bt.result, 2, 5, 2) <= 1


def test_stretch_below_band_rejected():
    assert bounded_stretch(S(2, 5), 2, 2) is None


def test_stretch_argument_checks():
    with pytest.raises(ValueError):
        bounded_stretch(S(2, 5), 1, 3)
    with pytest.raises(ValueError):
        bounded_stretch(S(2, 5), 2, 11)


@pytest.mark.parametrize("orig, Tn, want", [((2, 6), 5, (5, 6, 2, 2, 3, 5)), ((1, 4), 3, (3, 4, 2, 2, 1, 3))])
def test_shrink_bounds(orig, Tn, want):
    bt = bounded_shrink(S(*orig), Tn)
    d = bt.detail
    assert (d.m, d.n, d.s, d.l, bt.a, bt.b) == want
    assert worst_window_misses(bt.result, orig[0], orig[1], bt.b) <= bt.a


def test_shrink_outside_band():
    with pytest.raises(ValueError):
        bounded_shrink(S(2, 6), 4)


def test_compose_examples():
    assert compose_bounds((1, 3), (1, 4)) == (6, 12)
    assert compose_bounds((0, 1), (2, 7)) == (2, 7)
    assert compose_bounds((2, 7), (0, 1)) == (2, 7)
    with pytest.raises(ValueError):
        compose_bounds((3, 2), (0, 1))


@given(st.integers(1, 50), st.integers(1, 50), st.data())
def test_compose_bounded_and_symmetric(b, y, data):
    a, x = data.draw(st.integers(0, b)), data.draw(st.integers(0, y))
    c, d = compose_bounds((a, b), (x, y))
    assert 0 <= c <= d == b * y
    assert compose_bounds((x, y), (a, b)) == (c, d)


@pytest.mark.parametrize("T, out", [(8, (4, 8, 0, 1)), (4, (2, 4, 0, 1))])
def test_fluid_retime(T, out):
    assert fluid_retime(FluidSla(2, 4, 2, 8), T) == S(*out)


def test_fluid_retime_ceiling():
    got = fluid_retime(FluidSla(2, 4, 2, 8, 1, 5), 3)
    assert got == S(2, 3, 1, 5) and got.util >= Fraction(2, 4)


def test_fluid_retime_out_of_range():
    with pytest.raises(ValueError):
        fluid_retime(FluidSla(2, 4, 2, 8), 9)


@given(st.integers(1, 10), st.integers(1, 40), st.data())
def test_fluid_retime_never_lowers_util(C, T, data):
    C = min(C, T)
    Tl = data.draw(st.integers(1, T))
    Tu = data.draw(st.integers(T, 3 * T))
    Tn = data.draw(st.integers(Tl, Tu))
    f = FluidSla(C, T, Tl, Tu)
    r = fluid_retime(f, Tn)
    if r.C <= r.T:
        assert r.util >= f.util


def test_window_misses_and_budget():
    assert window_misses(1, 2, 2) == 1
    assert window_misses(1, 3, 4) == 2
    assert fits_budget(0, 1, 0, 1)
    assert not fits_budget(1, 2, 0, 1)
    assert fits_budget(1, 2, 1, 2)
    assert not fits_budget(1, 3, 1, 4)


def test_candidate_periods():
    ps = candidate_periods(4, [6], 2)
    assert ps == [2, 3, 6, 8]
    assert max(ps) <= 8


# -- generator ----------------------------------------------------------------

def test_hard_rigid_task_gets_no_bounded_rewrites():
    out = gen_transforms(FluidSla.rigid(S(1, 5)), {5})
    assert out[0].source == "identity" and out[0].result == S(1, 5)
    assert all(bt.safe for bt in out)


def test_fluid_task_retimed_onto_context():
    out = gen_transforms(FluidSla(2, 4, 2, 8), {8})
    assert out[0].source == "identity"
    results = [bt.result for bt in out]
    assert S(4, 8) in results
    hit = out[results.index(S(4, 8))]
    assert hit.overhead == 0
    assert [bt.overhead for bt in out[1:]] == sorted(bt.overhead for bt in out[1:])


def test_soft_task_gets_bounded_stretch_candidate():
    task = FluidSla(2, 5, 2, 5, 1, 2)
    out = gen_transforms(task, {10})
    stretched = [bt for bt in out if bt.source.startswith("stretch") and bt.result.T == 10 and not bt.safe]
    assert stretched
    for bt in stretched:
        assert fits_budget(bt.a, bt.b, 1, 2)
        assert worst_window_misses(bt.result, 2, 5, bt.b) <= bt.a


def test_modes():
    task = FluidSla(2, 4, 2, 8)
    assert [bt.source for bt in gen_transforms(task, {8}, mode="none")] == ["identity"]
    assert all(bt.source.startswith(("identity", "fluid")) for bt in gen_transforms(task, {8}, mode="fluid"))
    assert not any(bt.source.startswith("fluid") for bt in gen_transforms(task, {8}, mode="nonfluid"))
    with pytest.raises(ValueError):
        gen_transforms(task, mode="bogus")


def test_candidate_cap():
    out = gen_transforms(FluidSla(1, 6, 2, 12, 1, 4), {4, 5, 7}, GenLimits(max_k=6, max_candidates=5))
    assert len(out) <= 5


def test_generator_soundness_small():
    for T in range(1, 7):
        for C in range(1, T + 1):
            for D, W in ((0, 1), (1, 2), (1, 3)):
                task = FluidSla(C, T, max(1, T - 1), T + 1, D, W)
                for bt in gen_transforms(task, range(1, 7), GenLimits(max_k=2, max_candidates=64)):
                    r = bt.result
                    assert r.C <= r.T
                    if bt.source.startswith("fluid"):
                        assert r.util >= task.util
                    elif bt.safe:
                        assert enumerated_contains(r, S(C, T))
                    else:
                        assert fits_budget(bt.a, bt.b, D, W)
                        if lcm(r.T, bt.b * T) <= 96:
                            assert worst_window_misses(r, C, T, bt.b) <= bt.a
