"""Deterministic flight-data stub with display-layer fault injection.

Each state of a script's schedule interpolates every profile property
linearly from its start to its end value over the state's dwell time.
Arithmetic runs on :class:`fractions.Fraction` so sample times and values
are exact and platform independent; floats are produced only at the end.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .display_model import WidgetKind
from .errors import EmptySchedule, ParseError, ProfileGap, SchemaError
from .pathgen import SimScript

FAULT_MODES = ("offset", "stuck", "scale")


@dataclass(frozen=True)
class FlightProfile:
    # state -> property -> (start, end)
    per_state: dict

    def properties(self, state):
        return self.per_state.get(state, {})


@dataclass(frozen=True)
class FaultSpec:
    widget: WidgetKind
    mode: str
    amount: float
    states: frozenset | None = None  # None means every state

    def __post_init__(self):
        if self.mode not in FAULT_MODES:
            raise SchemaError(f"unknown fault mode {self.mode!r}")
        if self.mode == "scale" and self.amount == 0:
            raise SchemaError("scale fault factor must be non-zero")

    def active_in(self, state):
        return self.states is None or state in self.states

    def apply(self, value: Fraction) -> Fraction:
        amount = Fraction(str(self.amount))
        if self.mode == "offset":
            return value + amount
        if self.mode == "stuck":
            return amount
        return value * amount


@dataclass(frozen=True)
class Sample:
    t_sec: float
    state: str
    true_values: dict
    displayed_values: dict


def parse_profile(text) -> FlightProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed profile JSON: {exc.msg}", exc.lineno, exc.colno) from None
    per_state = {}
    for state, props in doc.items():
        per_state[state] = {}
        for prop, pair in props.items():
            if not isinstance(pair, list) or len(pair) != 2:
                raise SchemaError(f"profile {state}.{prop} must be [start, end]")
            per_state[state][prop] = (pair[0], pair[1])
    return FlightProfile(per_state)


def parse_faults(text) -> list[FaultSpec]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed faults JSON: {exc.msg}", exc.lineno, exc.colno) from None
    faults = []
    for entry in doc:
        mode = entry.get("mode")
        if not isinstance(mode, dict) or len(mode) != 1:
            raise SchemaError(f"fault mode must be a single-key object, got {mode!r}")
        (name, amount), = mode.items()
        states = entry.get("states", "ALL")
        faults.append(FaultSpec(
            widget=WidgetKind.parse(entry["widget"]),
            mode=name,
            amount=amount,
            states=None if states == "ALL" else frozenset(states),
        ))
    return faults


def faults_to_list(faults) -> list[dict]:
    return [
        {
            "widget": f.widget.value,
            "states": "ALL" if f.states is None else sorted(f.states),
            "mode": {f.mode: f.amount},
        }
        for f in faults
    ]


def sample_times(total_sec, interval_sec):
    """Exact sample instants 0, interval, 2*interval, ... strictly below total."""
    step = Fraction(str(interval_sec))
    if step <= 0:
        raise ValueError("sampling interval must be positive")
    t = Fraction(0)
    k = 0
    while t < total_sec:
        yield t
        k += 1
        t = k * step


def simulate(script: SimScript, profile: FlightProfile, faults=(), interval_sec=1,
             required=()) -> list[Sample]:
    """Sample the scripted flight at a fixed interval.

    ``required`` lists properties that must be present for every scheduled
    state in addition to those the profile already declares anywhere in the
    schedule.
    """
    if not script.schedule or script.total_sec <= 0:
        raise EmptySchedule(f"script {script.name!r} has an empty schedule")
    needed = set(required)
    for state, _, _ in script.schedule:
        if state not in profile.per_state:
            raise ProfileGap(f"profile has no entry for state {state!r}")
        needed.update(profile.per_state[state])
    for state, _, _ in script.schedule:
        missing = needed - set(profile.per_state[state])
        if missing:
            raise ProfileGap(f"profile for {state!r} lacks {sorted(missing)}")

    starts = [start for _, start, _ in script.schedule]
    props = sorted(needed)
    samples = []
    for t in sample_times(script.total_sec, interval_sec):
        state, t0, dwell = script.schedule[bisect_right(starts, t) - 1]
        frac = (t - t0) / dwell
        true, shown = {}, {}
        for p in props:
            a, b = profile.per_state[state][p]
            a, b = Fraction(str(a)), Fraction(str(b))
            v = a + (b - a) * frac
            true[p] = v
            shown[p] = v
        for fault in faults:
            prop = fault.widget.target_property
            if fault.active_in(state) and prop in shown:
                shown[prop] = fault.apply(shown[prop])
        samples.append(Sample(
            t_sec=float(t),
            state=state,
            true_values={p: float(v) for p, v in true.items()},
            displayed_values={p: float(v) for p, v in shown.items()},
        ))
    return samples


def samples_to_json(samples) -> str:
    rows = [
        {"tSec": s.t_sec, "state": s.state, "trueValues": s.true_values,
         "displayedValues": s.displayed_values}
        for s in samples
    ]
    return json.dumps(rows, indent=1, sort_keys=True) + "\n"


def samples_from_json(text) -> list[Sample]:
    try:
        return [Sample(r["tSec"], r["state"], r["trueValues"], r["displayedValues"])
                for r in json.loads(text)]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid samples JSON: {exc}") from None
