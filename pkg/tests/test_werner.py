import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repchain.werner import (
    LinkSample,
    ProtocolParams,
    decay,
    distill_links,
    distill_success_prob,
    distilled_werner,
    fidelity_from_werner,
    swap_links,
    swap_links_with_comm,
    swap_time,
    swap_werner,
    swap_werner_decayed,
    werner_from_fidelity,
)

unit = st.floats(min_value=0.0, max_value=1.0)


def test_fidelity_endpoints():
    assert fidelity_from_werner(1.0) == 1.0
    assert fidelity_from_werner(0.0) == 0.25


def test_fidelity_of_nineteen_twentieths():
    w0 = (4 * 0.95 - 1) / 3
    assert abs(w0 - 0.9333333333333332) < 1e-15
    assert abs(fidelity_from_werner(w0) - 0.95) < 1e-15


def test_werner_from_fidelity_endpoints():
    assert werner_from_fidelity(1.0) == 1.0
    assert werner_from_fidelity(0.25) == 0.0


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_fidelity_rejects_out_of_range_werner(bad):
    with pytest.raises(ValueError):
        fidelity_from_werner(bad)


@pytest.mark.parametrize("bad", [0.2, 1.01])
def test_werner_rejects_out_of_range_fidelity(bad):
    with pytest.raises(ValueError):
        werner_from_fidelity(bad)


@given(unit)
def test_fidelity_round_trip(w):
    assert abs(werner_from_fidelity(fidelity_from_werner(w)) - w) < 1e-15


def test_decay_no_elapsed_time():
    assert decay(0.9, 0.0, 5.0) == 0.9


def test_decay_one_coherence_time():
    assert abs(decay(1.0, 7.0, 7.0) - math.exp(-1)) < 1e-15


def test_decay_infinite_coherence():
    assert decay(0.8, 1e6, math.inf) == 0.8


def test_decay_rejects_negative_interval():
    with pytest.raises(ValueError):
        decay(0.5, -1.0, 10.0)


@given(unit, st.floats(min_value=0.0, max_value=100.0),
       st.floats(min_value=0.0, max_value=100.0))
def test_decay_is_multiplicative(w, s, t):
    combined = decay(w, s + t, 13.0)
    stepped = decay(decay(w, s, 13.0), t, 13.0)
    assert abs(combined - stepped) < 1e-14
    assert combined <= decay(w, s, 13.0) + 1e-15


def test_swap_time_is_the_maximum():
    assert swap_time(3, 5) == 5
    assert swap_time(4, 4) == 4
    assert swap_time(1, 100) == 100


def test_swap_werner_products():
    assert swap_werner(1.0, 1.0) == 1.0
    assert swap_werner(0.37, 0.0) == 0.0
    assert abs(swap_werner(0.9, 0.8) - 0.72) < 1e-15


def test_swap_werner_decayed_simultaneous_perfect():
    assert swap_werner_decayed(LinkSample(4, 1.0), LinkSample(4, 1.0), 9.0) == 1.0


def test_swap_werner_decayed_one_coherence_time_apart():
    got = swap_werner_decayed(LinkSample(1, 0.9), LinkSample(6, 0.8), 5.0)
    assert abs(got - 0.72 * math.exp(-1)) < 1e-15


def test_swap_werner_decayed_no_decay_limit():
    a, b = LinkSample(1, 0.9), LinkSample(50, 0.8)
    assert swap_werner_decayed(a, b, math.inf) == swap_werner(a.w, b.w)


@given(st.integers(1, 50), st.integers(1, 50), unit, unit)
def test_swap_werner_decayed_is_symmetric(ta, tb, wa, wb):
    a, b = LinkSample(ta, wa), LinkSample(tb, wb)
    assert swap_werner_decayed(a, b, 7.0) == swap_werner_decayed(b, a, 7.0)


def test_swap_links_takes_later_time():
    assert swap_links(LinkSample(2, 1.0), LinkSample(5, 1.0), math.inf) == (5, 1.0)


def test_swap_links_simultaneous_squares_werner():
    out = swap_links(LinkSample(3, 0.9), LinkSample(3, 0.9), 4.0)
    assert out.t == 3
    assert abs(out.w - 0.81) < 1e-15


def test_swap_links_composes_time_and_decay():
    out = swap_links(LinkSample(1, 0.9), LinkSample(3, 0.8), 2.0)
    assert out.t == 3
    assert abs(out.w - 0.72 * math.exp(-1)) < 1e-15


def test_swap_with_comm_adds_one_step_at_bottom_level():
    out = swap_links_with_comm(LinkSample(1, 1.0), LinkSample(1, 1.0), math.inf, 0)
    assert out == (2, 1.0)


def test_swap_with_comm_charges_span_crossing():
    out = swap_links_with_comm(LinkSample(3, 1.0), LinkSample(3, 1.0), 4.0, 2)
    assert out.t == 7
    assert abs(out.w - math.exp(-1)) < 1e-15


@given(st.integers(1, 30), st.integers(1, 30), unit, unit, st.integers(0, 6))
def test_swap_with_comm_only_delays_and_decays(ta, tb, wa, wb, level):
    a, b = LinkSample(ta, wa), LinkSample(tb, wb)
    plain = swap_links(a, b, math.inf)
    comm = swap_links_with_comm(a, b, math.inf, level)
    assert comm.t == plain.t + 2**level
    assert comm.w == plain.w


def test_distill_success_prob_values():
    assert distill_success_prob(1.0, 1.0) == 1.0
    assert distill_success_prob(0.0, 0.77) == 0.5
    assert distill_success_prob(0.5, 0.5) == 0.625


def test_distilled_werner_fixed_points():
    assert distilled_werner(1.0, 1.0) == 1.0
    assert abs(distilled_werner(0.0, 0.0)) < 1e-15


def test_distilled_werner_half_inputs():
    assert abs(distilled_werner(0.5, 0.5) - (3.25 / 3.75 - 1 / 3)) < 1e-15


def test_distillation_gain_threshold():
    # Equal inputs improve above 1/3 and degrade below it.
    for k in range(1, 333):
        w = k / 1000
        assert distilled_werner(w, w) < w
    for k in range(335, 1000):
        w = k / 1000
        assert distilled_werner(w, w) > w


def test_fidelity_space_formulas_agree():
    # Independent cross-check: the same update written in fidelity space.
    # Success: FA*FB + FA(1-FB)/3 + (1-FA)FB/3 + 5(1-FA)(1-FB)/9;
    # output: [FA*FB + (1-FA)(1-FB)/9] / success.
    for ka in range(0, 101, 7):
        for kb in range(0, 101, 9):
            wa, wb = ka / 100, kb / 100
            fa, fb = fidelity_from_werner(wa), fidelity_from_werner(wb)
            p_f = (
                fa * fb
                + fa * (1 - fb) / 3
                + (1 - fa) * fb / 3
                + 5 * (1 - fa) * (1 - fb) / 9
            )
            f_out = (fa * fb + (1 - fa) * (1 - fb) / 9) / p_f
            assert abs(p_f - distill_success_prob(wa, wb)) < 1e-12
            assert abs(werner_from_fidelity(f_out) - distilled_werner(wa, wb)) < 1e-12


def test_distill_links_tie_means_no_decay():
    out = distill_links(LinkSample(4, 1.0), LinkSample(4, 1.0), 3.0)
    assert out == (4, 1.0)
    half = distill_links(LinkSample(1, 0.5), LinkSample(1, 0.5), math.inf)
    assert half.t == 1
    assert abs(half.w - distilled_werner(0.5, 0.5)) < 1e-15


def test_distill_links_decays_the_earlier_link():
    out = distill_links(LinkSample(1, 0.8), LinkSample(3, 0.9), 2.0)
    assert out.t == 3
    assert abs(out.w - distilled_werner(0.8 * math.exp(-1), 0.9)) < 1e-15


@given(st.integers(1, 40), st.integers(1, 40), unit, unit)
def test_distill_links_is_symmetric(ta, tb, wa, wb):
    a, b = LinkSample(ta, wa), LinkSample(tb, wb)
    assert distill_links(a, b, 11.0) == distill_links(b, a, 11.0)


@given(st.integers(1, 40), st.integers(1, 40), unit, unit,
       st.floats(min_value=0.5, max_value=1e6))
def test_combined_updates_stay_in_range(ta, tb, wa, wb, t_coh):
    a, b = LinkSample(ta, wa), LinkSample(tb, wb)
    for out in (
        swap_links(a, b, t_coh),
        swap_links_with_comm(a, b, t_coh, 3),
        distill_links(a, b, t_coh),
    ):
        assert out.t >= 1
        assert 0.0 <= out.w <= 1.0


def test_params_validation():
    good = ProtocolParams(p_gen=0.1, p_swap=0.5, w0=0.9, T_coh=50.0, n=3, d=1)
    assert good.segments == 8
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.0, p_swap=0.5)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=1.2)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=0.5, w0=-0.2)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=0.5, T_coh=0.0)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=0.5, n=-1)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=0.5, d=-2)
    with pytest.raises(ValueError):
        ProtocolParams(p_gen=0.1, p_swap=0.5, t_trunc=-5)


def test_params_allow_zero_truncation():
    # t_trunc = 0 is the degenerate "keep nothing" domain the mean-bound
    # bracket accepts.
    assert ProtocolParams(p_gen=0.5, p_swap=0.5, t_trunc=0).t_trunc == 0
