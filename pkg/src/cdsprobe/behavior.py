"""Flattened flight state machines loaded from JSON."""
from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass

from .errors import NoInitial, NondeterministicMachine, ParseError, SchemaError, UnknownState

STATE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")


@dataclass(frozen=True)
class Transition:
    source: str
    event: str
    target: str


@dataclass(frozen=True)
class StateMachine:
    name: str
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    transitions: tuple[Transition, ...]

    def outgoing(self, state: str) -> list[Transition]:
        """Transitions leaving ``state`` in declaration order."""
        return [t for t in self.transitions if t.source == state]

    def validate(self):
        seen = set()
        for s in self.states:
            if not STATE_NAME.match(s):
                raise SchemaError(f"invalid state name {s!r}")
            if s in seen:
                raise SchemaError(f"state {s!r} declared twice")
            seen.add(s)
        if not self.initial:
            raise NoInitial("state machine has no initial state")
        if self.initial not in seen:
            raise UnknownState(f"initial state {self.initial!r} is not declared")
        for f in self.finals:
            if f not in seen:
                raise UnknownState(f"final state {f!r} is not declared")
        keys = set()
        for t in self.transitions:
            if not t.event:
                raise SchemaError(f"transition {t.source}->{t.target} has an empty event")
            for end in (t.source, t.target):
                if end not in seen:
                    raise UnknownState(f"transition {t.source} --{t.event}--> {t.target}: "
                                       f"{end!r} is not declared")
            if (t.source, t.event) in keys:
                raise NondeterministicMachine(f"event {t.event!r} leaves {t.source!r} twice")
            keys.add((t.source, t.event))
        return self


def parse_state_machine(data) -> StateMachine:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed state machine JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise SchemaError("state machine must be a JSON object")
    if not doc.get("initial"):
        raise NoInitial("state machine has no initial state")
    try:
        sm = StateMachine(
            name=str(doc.get("name", "machine")),
            states=tuple(doc["states"]),
            initial=doc["initial"],
            finals=frozenset(doc.get("finals", ())),
            transitions=tuple(
                Transition(t["source"], t["event"], t["target"]) for t in doc.get("transitions", ())
            ),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"state machine JSON is missing a field: {exc}") from None
    return sm.validate()


def machine_to_dict(sm: StateMachine) -> dict:
    return {
        "name": sm.name,
        "states": list(sm.states),
        "initial": sm.initial,
        # finals keep state declaration order so the output is stable
        "finals": [s for s in sm.states if s in sm.finals],
        "transitions": [{"source": t.source, "event": t.event, "target": t.target}
                        for t in sm.transitions],
    }


def serialize_state_machine(sm: StateMachine) -> str:
    return json.dumps(machine_to_dict(sm), indent=2) + "\n"


def reachable_states(sm: StateMachine) -> set[str]:
    seen = {sm.initial}
    queue = deque([sm.initial])
    while queue:
        s = queue.popleft()
        for t in sm.outgoing(s):
            if t.target not in seen:
                seen.add(t.target)
                queue.append(t.target)
    return seen
