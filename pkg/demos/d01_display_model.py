"""
From a display definition to a widget model
===========================================

A cockpit display is described twice: once as a list of drawable objects
with geometry, once as a mapping that says which object is which kind of
instrument. Combining the two gives a typed widget model.
"""

from cdsprobe import data_path
from cdsprobe.display_model import generate_model, model_to_json, parse_display_xml, parse_mapping

definition = parse_display_xml(data_path("pfd.xml").read_bytes())
mapping = parse_mapping(data_path("pfd.map").read_bytes())
print(definition.name, definition.width, "x", definition.height, "-", len(definition.objects), "objects")

###############################################################################
# Each widget knows the flight property it shows. The property index is
# what later turns a failing constraint back into a widget.

model = generate_model(definition, mapping)
for w in model.widgets:
    print(f"{w.name:18s} {w.kind.value:24s} {w.target_property:14s} {w.region} {w.format}")

print(model.property_index())

###############################################################################
# The canonical JSON form is stable byte for byte, so it can be diffed and
# checked into version control.

print(model_to_json(model)[:400], "...")
