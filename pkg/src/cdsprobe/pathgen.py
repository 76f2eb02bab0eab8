"""Transition-tree test paths and simulator script emission.

The tree is built depth first from the initial state. A child whose state
already lies on its root path is kept as a leaf (the one permitted
repetition) and not expanded, so every cycle is walked at most once.
"""
from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .behavior import StateMachine
from .errors import MissingDuration, ParseError, SchemaError

log = logging.getLogger(__name__)

AIRCRAFT = "c172x"
INITIALIZE = "reset00"
SIM_DT = "0.0083"


@dataclass
class TreeNode:
    state: str
    via_event: str | None = None
    children: list["TreeNode"] = field(default_factory=list)
    is_repeat_leaf: bool = False

    def leaves(self):
        if not self.children:
            yield self
        for c in self.children:
            yield from c.leaves()

    def edges(self):
        for c in self.children:
            yield (self.state, c.via_event, c.state)
            yield from c.edges()


@dataclass(frozen=True)
class TestPath:
    states: tuple[str, ...]
    events: tuple[str, ...]
    reaches_final: bool

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class SimScript:
    name: str
    schedule: tuple[tuple[str, int, int], ...]  # (state, start_sec, duration_sec)
    actions: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()

    @property
    def total_sec(self) -> int:
        return sum(d for _, _, d in self.schedule)


def build_transition_tree(sm: StateMachine) -> TreeNode:
    root = TreeNode(sm.initial)
    # explicit stack keeps deep machines clear of the recursion limit
    stack = [(root, (sm.initial,))]
    while stack:
        node, on_path = stack.pop()
        for t in sm.outgoing(node.state):
            child = TreeNode(t.target, t.event)
            node.children.append(child)
            if t.target in on_path:
                child.is_repeat_leaf = True
            else:
                stack.append((child, on_path + (t.target,)))
    return root


def extract_paths(tree: TreeNode, sm: StateMachine) -> list[TestPath]:
    paths = []

    def walk(node, states, events):
        states = states + (node.state,)
        if node.via_event is not None:
            events = events + (node.via_event,)
        if not node.children:
            paths.append(TestPath(states, events, states[-1] in sm.finals))
        for c in node.children:
            walk(c, states, events)

    walk(tree, (), ())
    return paths


def tree_to_dict(node: TreeNode) -> dict:
    d = {"state": node.state, "viaEvent": node.via_event}
    if node.is_repeat_leaf:
        d["isRepeatLeaf"] = True
    if node.children:
        d["children"] = [tree_to_dict(c) for c in node.children]
    return d


def paths_to_json(paths: list[TestPath]) -> str:
    rows = [{"states": list(p.states), "events": list(p.events), "reachesFinal": p.reaches_final}
            for p in paths]
    return json.dumps(rows, indent=2) + "\n"


def paths_from_json(text) -> list[TestPath]:
    try:
        rows = json.loads(text)
        return [TestPath(tuple(r["states"]), tuple(r["events"]), bool(r["reachesFinal"]))
                for r in rows]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid path list: {exc}") from None


# -- scripts -------------------------------------------------------------------

@dataclass(frozen=True)
class ScriptTables:
    durations: dict
    actions: dict = field(default_factory=dict)


def parse_tables(text) -> ScriptTables:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed tables JSON: {exc.msg}", exc.lineno, exc.colno) from None
    durations = {}
    for state, secs in doc.get("durations", {}).items():
        if isinstance(secs, bool) or not isinstance(secs, int) or secs <= 0:
            raise SchemaError(f"duration for {state!r} must be a positive whole number of seconds")
        durations[state] = secs
    actions = {}
    for state, acts in doc.get("actions", {}).items():
        actions[state] = tuple((a["prop"], a["value"]) for a in acts)
    return ScriptTables(durations, actions)


def generate_scripts(paths, tables: ScriptTables, warnings: list | None = None) -> list[SimScript]:
    """One script per path that ends in a final state.

    Script names carry the 1-based index of the path in ``paths`` so that a
    script can be traced back to the path report.
    """
    scripts = []
    for index, path in enumerate(paths, 1):
        if not path.reaches_final:
            continue
        schedule, actions = [], []
        start = 0
        for state in path.states:
            if state not in tables.durations:
                raise MissingDuration(f"no duration for state {state!r}")
            dur = tables.durations[state]
            schedule.append((state, start, dur))
            start += dur
            acts = tables.actions.get(state)
            if acts is None:
                msg = f"path_{index:03d}: state {state!r} has no actions"
                log.debug(msg)
                if warnings is not None:
                    warnings.append(msg)
                acts = ()
            actions.append((state, tuple(acts)))
        scripts.append(SimScript(f"path_{index:03d}", tuple(schedule), tuple(actions)))
    return scripts


def _num(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def script_to_xml(script: SimScript) -> bytes:
    root = ET.Element("runscript", {"name": script.name})
    ET.SubElement(root, "use", {"aircraft": AIRCRAFT, "initialize": INITIALIZE})
    run = ET.SubElement(root, "run", {"start": "0", "end": str(script.total_sec), "dt": SIM_DT})
    # one event per schedule entry; a cycle may enter the same state twice
    for i, (state, start, _dur) in enumerate(script.schedule):
        acts = script.actions[i][1] if script.actions else ()
        ev = ET.SubElement(run, "event", {"name": f"enter_{state}"})
        ET.SubElement(ev, "condition").text = f"simulation/sim-time-sec >= {start}"
        for prop, value in acts:
            ET.SubElement(ev, "set", {"name": prop, "value": _num(value)})
        ET.SubElement(ev, "notify")
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def parse_script_xml(data: bytes) -> SimScript:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed script XML: {exc}", *exc.position) from None
    run = root.find("run")
    if root.tag != "runscript" or run is None:
        raise SchemaError("expected <runscript> with a <run> element")
    total = int(run.get("end"))
    entries = []
    for ev in run.findall("event"):
        name = ev.get("name", "")
        if not name.startswith("enter_"):
            raise SchemaError(f"unexpected event {name!r}")
        cond = ev.findtext("condition", "")
        start = int(cond.rsplit(">=", 1)[1])
        acts = tuple((s.get("name"), float(s.get("value"))) for s in ev.findall("set"))
        entries.append((name[len("enter_"):], start, acts))
    schedule = []
    for i, (state, start, _) in enumerate(entries):
        end = entries[i + 1][1] if i + 1 < len(entries) else total
        schedule.append((state, start, end - start))
    return SimScript(root.get("name"), tuple(schedule), tuple((s, a) for s, _, a in entries))
