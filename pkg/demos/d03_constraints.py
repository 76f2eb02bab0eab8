"""
Writing and evaluating display constraints
==========================================

Expected display values are stated as invariants guarded by the flight
state. A constraint that does not apply in the current state holds
vacuously.
"""

from cdsprobe import constraints as ocl
from cdsprobe import data_path
from cdsprobe.harness import InstanceModel

src = ("context Aircraft inv taxi_speed: self.oclIsInState(Taxiing) implies "
       "self.airspeed >= 0 and self.airspeed <= 50")
(taxi,) = ocl.parse_constraints(src)
print(taxi.body)
print(ocl.constraint_source(taxi))

for state, speed in [("Taxiing", 30), ("Taxiing", 60), ("Cruise", 60)]:
    inst = InstanceModel(state, 0, 0.0, {"airspeed": speed})
    print(state, speed, "->", ocl.evaluate(taxi, inst))

###############################################################################
# A missing reading is an error verdict, distinct from a failure.

cs = ocl.parse_constraints(data_path("pfd.ocl").read_bytes())
inst = InstanceModel("Taxiing", 0, 0.0, {"airspeed": 12, "altitude": 1000, "verticalSpeed": 0,
                                         "heading": 90, "pressure": 29.9})
verdicts = dict(ocl.evaluate_set(cs, inst))
print({k: v for k, v in verdicts.items() if v != ocl.PASS})

###############################################################################
# Parse errors carry a position.

try:
    ocl.parse_expr("self.airspeed > > 3")
except Exception as exc:
    print(type(exc).__name__, exc)
