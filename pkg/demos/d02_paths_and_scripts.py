"""
Test paths from a flight state machine
======================================

The flight phases form a small state machine. Unrolling it depth first,
and stopping whenever a state repeats on the current branch, yields a
transition tree whose root-to-leaf paths cover every transition.
"""

from cdsprobe import data_path
from cdsprobe.behavior import parse_state_machine
from cdsprobe.pathgen import build_transition_tree, extract_paths, generate_scripts, parse_tables, script_to_xml

sm = parse_state_machine(data_path("flight_machine.json").read_bytes())
print(sm.states)
for t in sm.transitions:
    print(f"  {t.source} --{t.event}--> {t.target}")

###############################################################################
# Print the tree with repeat leaves marked.

tree = build_transition_tree(sm)


def show(node, depth=0):
    mark = "  (repeat)" if node.is_repeat_leaf else ""
    via = f"[{node.via_event}] " if node.via_event else ""
    print("  " * depth + via + node.state + mark)
    for child in node.children:
        show(child, depth + 1)


show(tree)

###############################################################################
# Only paths that end in a final state become simulator scripts.

paths = extract_paths(tree, sm)
for i, p in enumerate(paths, 1):
    print(i, " -> ".join(p.states), "(final)" if p.reaches_final else "")

scripts = generate_scripts(paths, parse_tables(data_path("tables.json").read_bytes()))
print([(s.name, s.total_sec) for s in scripts])
print(script_to_xml(scripts[0]).decode()[:600])
