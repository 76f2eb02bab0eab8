"""Independent reference computations used to derive and check expected values.

Nothing here calls the code under test's algorithms; each oracle reaches
the answer by a different route (enumeration, matrix closure, bit-parallel
truth tables, direct arithmetic).
"""
import itertools

import numpy as np

from cdsprobe import constraints as ocl


def reachable_by_closure(states, initial, transitions):
    """Warshall closure of the adjacency matrix."""
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    reach = np.eye(n, dtype=bool)
    for t in transitions:
        reach[idx[t.source], idx[t.target]] = True
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    return {s for s in states if reach[idx[initial], idx[s]]}


def enumerate_test_paths(sm):
    """All maximal walks whose states are distinct except possibly the last.

    A walk qualifies when its last state repeats an earlier one, or when it
    is new and has no outgoing transitions. Walks are grown only from
    prefixes of distinct states, which any qualifying walk must have.
    Returns a set of (states, events) tuples.
    """
    out_edges = {s: [t for t in sm.transitions if t.source == s] for s in sm.states}
    found = set()
    frontier = [((sm.initial,), ())]
    while frontier:
        nxt = []
        for states, events in frontier:
            last = states[-1]
            repeated = last in states[:-1]
            if repeated or not out_edges[last]:
                found.add((states, events))
            if repeated:
                continue
            for t in out_edges[last]:
                nxt.append((states + (t.target,), events + (t.event,)))
        frontier = nxt
    return found


def truth_table(expr, atoms):
    """Bit-parallel truth table: bit i is the value under assignment i.

    Assignment i gives atom k the value of bit k of i.
    """
    n = len(atoms)
    rows = 1 << n
    mask = (1 << rows) - 1
    columns = {}
    for k, a in enumerate(atoms):
        col = 0
        for i in range(rows):
            if (i >> k) & 1:
                col |= 1 << i
        columns[a] = col

    def go(e):
        if isinstance(e, ocl.PropRef):
            return columns[e.name]
        if isinstance(e, ocl.BoolLit):
            return mask if e.value else 0
        if isinstance(e, ocl.Not):
            return ~go(e.operand) & mask
        if isinstance(e, ocl.And):
            return go(e.left) & go(e.right)
        if isinstance(e, ocl.Or):
            return go(e.left) | go(e.right)
        if isinstance(e, ocl.Implies):
            return (~go(e.left) & mask) | go(e.right)
        if isinstance(e, ocl.Rel) and e.op == "=":
            return ~(go(e.left) ^ go(e.right)) & mask
        if isinstance(e, ocl.Rel) and e.op == "<>":
            return go(e.left) ^ go(e.right)
        raise TypeError(e)

    return go(expr)


def random_bool_ast(rng, atoms, depth):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.1:
            return ocl.BoolLit(rng.random() < 0.5)
        return ocl.PropRef(rng.choice(atoms))
    kind = rng.choice(("not", "and", "or", "implies", "eq", "ne"))
    if kind == "not":
        return ocl.Not(random_bool_ast(rng, atoms, depth - 1))
    left = random_bool_ast(rng, atoms, depth - 1)
    right = random_bool_ast(rng, atoms, depth - 1)
    return {
        "and": lambda: ocl.And(left, right),
        "or": lambda: ocl.Or(left, right),
        "implies": lambda: ocl.Implies(left, right),
        "eq": lambda: ocl.Rel("=", left, right),
        "ne": lambda: ocl.Rel("<>", left, right),
    }[kind]()


def all_assignments(atoms):
    for i in range(1 << len(atoms)):
        yield i, {a: bool((i >> k) & 1) for k, a in enumerate(atoms)}


def random_machine(rng, max_states=8, max_transitions=16):
    """Deterministic random machine; events are drawn so (source, event) stays unique."""
    from cdsprobe.behavior import StateMachine, Transition

    n = rng.randint(1, max_states)
    states = tuple(f"S{i}" for i in range(n))
    m = rng.randint(0, max_transitions)
    transitions = []
    used = set()
    for _ in range(m):
        src, dst = rng.choice(states), rng.choice(states)
        event = f"e{rng.randint(0, 5)}"
        if (src, event) in used:
            continue
        used.add((src, event))
        transitions.append(Transition(src, event, dst))
    finals = frozenset(s for s in states if rng.random() < 0.3)
    return StateMachine("random", states, states[0], finals, tuple(transitions)).validate()


def linear_value(start, end, t, t0, dwell):
    return start + (end - start) * (t - t0) / dwell


def expected_per_state_frames(path_states, durations, interval):
    """Frames per state for one script: samples k*interval landing in each dwell window."""
    counts = {}
    start = 0
    total = sum(durations[s] for s in path_states)
    k = 0
    for s in path_states:
        end = start + durations[s]
        while k * interval < min(end, total):
            counts[s] = counts.get(s, 0) + 1
            k += 1
        start = end
    return counts


