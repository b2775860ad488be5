from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from switchstab import (
    ADT,
    Dwell,
    Ergodic,
    Graph,
    HorizonError,
    InfeasibleSpecError,
    Intersection,
    SetValuedMap,
    SignalError,
    SwitchingSignal,
    generate,
    validate,
)
from switchstab.signals import count_switches, next_switch_time, shift, spec_from_json, spec_to_json

CHAIN = SetValuedMap({1: frozenset({2}), 2: frozenset({3, 1}), 3: frozenset({1})})


@st.composite
def lattice_signals(draw, max_switches=25):
    """Signals on [0, 20] with switches on a 1/16 s lattice and modes from {1, 2, 3}."""
    ticks = sorted(draw(st.sets(st.integers(1, 319), max_size=max_switches)))
    first = draw(st.integers(1, 3))
    modes = [first]
    for _ in ticks:
        modes.append(draw(st.sampled_from([m for m in (1, 2, 3) if m != modes[-1]])))
    return SwitchingSignal(0.0, 20.0, first, tuple((k / 16, m) for k, m in zip(ticks, modes[1:]))), ticks


specs = st.one_of(
    st.builds(ADT, st.sampled_from([0.25, 0.5, 1.0]), st.integers(1, 4)),
    st.builds(Dwell, st.sampled_from([0.125, 0.5, 1.0])),
    st.builds(Ergodic, st.sampled_from([2.0, 4.0]), st.just((1, 2, 3))),
    st.just(Graph(CHAIN)),
)


# -- signal basics ----------------------------------------------------------


def test_signal_is_right_continuous():
    sig = SwitchingSignal(0.0, 3.0, 1, ((1.0, 2), (2.0, 1)))
    assert sig(0.0) == 1 and sig(0.999) == 1
    assert sig(1.0) == 2 and sig.mode_before(1.0) == 1
    assert sig(2.0) == 1 and sig(3.0) == 1


@pytest.mark.parametrize("switches", [((0.0, 2),), ((1.0, 1),), ((2.0, 2), (1.0, 1)), ((3.0, 2),)])
def test_malformed_signals_rejected(switches):
    with pytest.raises(SignalError):
        SwitchingSignal(0.0, 3.0, 1, switches)


def test_evaluation_outside_horizon():
    sig = SwitchingSignal.constant(1, 0.0, 1.0)
    with pytest.raises(HorizonError):
        sig(1.5)
    with pytest.raises(HorizonError):
        next_switch_time(sig, 1.0)


def test_next_switch_and_count():
    sig = SwitchingSignal(0.0, 5.0, 1, ((1.0, 2), (2.0, 1), (3.0, 2)))
    assert next_switch_time(sig, 0.0) == 1.0
    assert next_switch_time(sig, 1.0) == 2.0
    assert next_switch_time(sig, 3.5) == float("inf")
    assert count_switches(sig, 1.0, 3.0) == 1
    assert count_switches(sig, 0.5, 3.5) == 3


@given(lattice_signals(), st.floats(-50, 50))
def test_shift_translates_the_signal(data, s):
    sig, _ = data
    moved = shift(sig, s)
    for t in np.linspace(sig.t_begin, sig.t_end, 37):
        assert moved(t - s) == sig(t)


@given(lattice_signals())
def test_json_round_trip(data):
    sig, _ = data
    assert SwitchingSignal.from_json(sig.to_json()) == sig


@given(specs)
def test_spec_json_round_trip(spec):
    assert spec_from_json(spec_to_json(spec)) == spec


# -- validators -------------------------------------------------------------


@given(lattice_signals(), st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(1)]), st.integers(1, 4))
def test_adt_validator_agrees_with_exact_oracle(data, tau_d, n0):
    sig, ticks = data
    expected = oracles.adt_violation_exact(ticks, tau_d * 16, n0) is None
    assert validate(sig, ADT(float(tau_d), n0)).ok == expected


@given(lattice_signals(max_switches=12), st.sampled_from([Fraction(1, 2), Fraction(1)]), st.integers(1, 3))
def test_offset_grid_violations_are_reported(data, tau_d, n0):
    # intervals with endpoints between lattice points only ever witness genuine violations
    sig, ticks = data
    if oracles.adt_violation_grid(ticks, tau_d * 16, n0, 320):
        assert not validate(sig, ADT(float(tau_d), n0)).ok


@given(lattice_signals(), st.sampled_from([0.125, 0.5, 1.0]))
def test_dwell_is_adt_with_one_token(data, tau_d):
    sig, _ = data
    assert validate(sig, Dwell(tau_d)).ok == validate(sig, ADT(tau_d, 1)).ok


@given(lattice_signals(), st.sampled_from([0.125, 0.5, 1.0]))
def test_dwell_matches_minimum_gap(data, tau_d):
    sig, _ = data
    gaps = np.diff(sig.times)
    assert validate(sig, Dwell(tau_d)).ok == bool(np.all(gaps >= tau_d - 1e-12))


@given(lattice_signals(), specs, st.sampled_from([-7.5, 0.0, 3.25, 100.0]))
def test_membership_is_shift_invariant(data, spec, s):
    sig, _ = data
    assert validate(shift(sig, s), spec).ok == validate(sig, spec).ok


@given(lattice_signals(), st.lists(specs, min_size=1, max_size=3))
def test_intersection_is_conjunction(data, members):
    sig, _ = data
    assert validate(sig, Intersection(tuple(members))).ok == all(validate(sig, m).ok for m in members)


@given(lattice_signals(), st.sampled_from([2.0, 4.0]))
def test_ergodic_against_dense_windows(data, T):
    sig, _ = data
    # every window [a, a + T] must contain each mode; check a fine grid of starts
    ok = True
    for a in np.arange(0.0, 20.0 - T + 1e-9, 1 / 32):
        seen = {sig(a)} | {m for t, m in sig.switches if a < t <= a + T}
        if seen != {1, 2, 3}:
            ok = False
            break
    assert validate(sig, Ergodic(T, (1, 2, 3))).ok == ok


def test_adt_example_witness():
    sig = SwitchingSignal(-1.0, 3.0, 1, ((0.0, 2), (0.5, 1)))
    rep = validate(sig, ADT(2.0, 1))
    assert not rep.ok
    assert rep.witness is not None


def test_graph_rejects_illegal_jump():
    sig = SwitchingSignal(0.0, 3.0, 1, ((1.0, 3),))
    rep = validate(sig, Graph(CHAIN))
    assert not rep.ok and "3" in rep.reason


def test_set_valued_map_requires_closed_domain():
    with pytest.raises(ValueError):
        SetValuedMap({1: frozenset({2})})
    assert SetValuedMap({1: frozenset({2}), 2: frozenset()})(2) == frozenset()


# -- generator --------------------------------------------------------------


@given(specs, st.integers(0, 2**32 - 1))
def test_generated_signals_validate(spec, seed):
    sig = generate(spec, (0.0, 20.0), seed, modes=[1, 2, 3])
    assert validate(sig, spec).ok


@given(st.integers(0, 10_000))
def test_generator_is_deterministic(seed):
    spec = Intersection((Dwell(0.5), Ergodic(2.0, (1, 2, 3))))
    a = generate(spec, (0.0, 20.0), seed, modes=[1, 2, 3])
    b = generate(spec, (0.0, 20.0), seed, modes=[1, 2, 3])
    assert a == b


def test_generator_reports_empty_classes():
    with pytest.raises(InfeasibleSpecError):
        generate(Intersection((Dwell(2.0), Ergodic(1.0, (1, 2)))), (0.0, 10.0), 0, modes=[1, 2])


def test_generator_respects_initial_mode():
    sig = generate(Dwell(0.5), (0.0, 5.0), 3, modes=[1, 2], initial_mode=2)
    assert sig.initial_mode == 2
