import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cdsprobe.display_model import WidgetKind
from cdsprobe.errors import EmptySchedule, ProfileGap, SchemaError
from cdsprobe.flightsim import (FaultSpec, FlightProfile, parse_faults, samples_from_json,
                                samples_to_json, simulate)
from cdsprobe.pathgen import SimScript

from oracles import linear_value

TAXI = SimScript("t", (("Taxiing", 0, 30),))
TAXI_PROFILE = FlightProfile({"Taxiing": {"airspeed": (0, 45), "roll": (0, 0)}})


def test_linear_interpolation():
    samples = simulate(TAXI, TAXI_PROFILE, interval_sec=1)
    assert len(samples) == 30
    assert [s.true_values["airspeed"] for s in samples[:4]] == [0, 1.5, 3.0, 4.5]
    assert samples[-1].t_sec == 29
    for s in samples:
        assert s.true_values["airspeed"] == linear_value(0, 45, s.t_sec, 0, 30)
        assert s.displayed_values == s.true_values


def test_offset_fault_example():
    fault = FaultSpec(WidgetKind.AIRSPEED_INDICATOR, "offset", 20, frozenset({"Taxiing"}))
    profile = FlightProfile({"Taxiing": {"airspeed": (40, 40)}})
    (s, *_) = simulate(TAXI, profile, [fault])
    assert s.true_values["airspeed"] == 40
    assert s.displayed_values["airspeed"] == 60


def test_fault_modes_in_order():
    faults = [FaultSpec(WidgetKind.AIRSPEED_INDICATOR, "offset", 10),
              FaultSpec(WidgetKind.AIRSPEED_INDICATOR, "scale", 2)]
    profile = FlightProfile({"Taxiing": {"airspeed": (5, 5)}})
    assert simulate(TAXI, profile, faults)[0].displayed_values["airspeed"] == 30
    stuck = [FaultSpec(WidgetKind.AIRSPEED_INDICATOR, "stuck", 7)] + faults
    assert simulate(TAXI, profile, stuck)[0].displayed_values["airspeed"] == 34


def test_state_boundaries():
    script = SimScript("s", (("A", 0, 2), ("B", 2, 3)))
    profile = FlightProfile({"A": {"v": (0, 10)}, "B": {"v": (100, 130)}})
    samples = simulate(script, profile)
    assert [(s.t_sec, s.state, s.true_values["v"]) for s in samples] == [
        (0, "A", 0), (1, "A", 5), (2, "B", 100), (3, "B", 110), (4, "B", 120)]


def test_fractional_interval_is_exact():
    samples = simulate(SimScript("s", (("A", 0, 1),)), FlightProfile({"A": {"v": (0, 1)}}), (), 0.1)
    assert len(samples) == 10
    assert samples[3].t_sec == 0.3
    assert samples[3].true_values["v"] == 0.3


def test_errors():
    with pytest.raises(EmptySchedule):
        simulate(SimScript("e", ()), TAXI_PROFILE)
    with pytest.raises(ProfileGap):
        simulate(SimScript("s", (("Climb", 0, 3),)), TAXI_PROFILE)
    with pytest.raises(ProfileGap):
        simulate(TAXI, TAXI_PROFILE, required=["altitude"])
    two = SimScript("s", (("A", 0, 1), ("B", 1, 1)))
    with pytest.raises(ProfileGap):
        simulate(two, FlightProfile({"A": {"v": (0, 1)}, "B": {"w": (0, 1)}}))
    with pytest.raises(SchemaError):
        FaultSpec(WidgetKind.ALTIMETER, "scale", 0)
    with pytest.raises(ValueError):
        simulate(TAXI, TAXI_PROFILE, interval_sec=0)


def test_parse_faults_file(seeded_faults):
    assert [(f.widget, f.mode, f.amount) for f in seeded_faults] == [
        (WidgetKind.AIRSPEED_INDICATOR, "offset", 20),
        (WidgetKind.ALTIMETER, "offset", 800),
        (WidgetKind.ATTITUDE_INDICATOR, "offset", 15)]
    (f,) = parse_faults(json.dumps([{"widget": "Altimeter", "mode": {"stuck": 0}}]))
    assert f.states is None and f.active_in("anything")


def test_samples_json_round_trip(profile):
    script = SimScript("s", (("Climb", 0, 5), ("Cruise", 5, 5)))
    samples = simulate(script, profile, interval_sec=1)
    assert samples_from_json(samples_to_json(samples)) == samples


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 4))
    states = [f"S{i}" for i in range(n)]
    durations = [draw(st.integers(1, 20)) for _ in states]
    start, schedule = 0, []
    for s, d in zip(states, durations):
        schedule.append((s, start, d))
        start += d
    value = st.integers(-5000, 5000)
    profile = FlightProfile({s: {"airspeed": (draw(value), draw(value)),
                                 "altitude": (draw(value), draw(value))} for s in states})
    faults = [FaultSpec(draw(st.sampled_from([WidgetKind.AIRSPEED_INDICATOR, WidgetKind.ALTIMETER])),
                        draw(st.sampled_from(["offset", "stuck", "scale"])),
                        draw(st.integers(1, 50)),
                        frozenset(draw(st.lists(st.sampled_from(states), max_size=n))))
              for _ in range(draw(st.integers(0, 3)))]
    interval = draw(st.sampled_from([0.5, 1, 2, 3]))
    return SimScript("p", tuple(schedule)), profile, faults, interval


@given(scenarios())
def test_determinism_locality_continuity(scenario):
    script, profile, faults, interval = scenario
    a = simulate(script, profile, faults, interval)
    assert a == simulate(script, profile, faults, interval)
    clean = simulate(script, profile, (), interval)
    active = {s for f in faults for s in f.states}
    for faulty, ok in zip(a, clean):
        assert faulty.true_values == ok.true_values
        if faulty.state not in active:
            assert faulty.displayed_values == ok.displayed_values
    for s0, s1 in zip(clean, clean[1:]):
        if s0.state != s1.state:
            continue
        (_, _, dwell), = [e for e in script.schedule if e[0] == s0.state]
        for p, (start, end) in profile.per_state[s0.state].items():
            step = Fraction(str(s1.t_sec)) - Fraction(str(s0.t_sec))
            bound = abs(end - start) * step / dwell
            assert abs(Fraction(s1.true_values[p]) - Fraction(s0.true_values[p])) <= bound + Fraction(1, 10**9)
