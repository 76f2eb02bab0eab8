"""
Rendering frames and reading them back
======================================

Frames are grayscale rasters with each widget's value drawn in a fixed
bitmap font. Because the font is known exactly, template matching can read
every character back with no uncertainty.
"""

import numpy as np

from cdsprobe import data_path
from cdsprobe.display_model import generate_model, parse_display_xml, parse_mapping
from cdsprobe.extract import extract_frame, segment
from cdsprobe.flightsim import Sample
from cdsprobe.render import DEFAULT_GLYPHS, encode_pgm, render_frame

model = generate_model(parse_display_xml(data_path("pfd.xml").read_bytes()),
                       parse_mapping(data_path("pfd.map").read_bytes()))

values = {"airspeed": 160, "altitude": 2183.4, "roll": -12.5, "verticalSpeed": 700,
          "heading": 95, "pressure": 29.92}
frame = render_frame(model, Sample(12.0, "Climb", values, values))
print(frame.pixels.shape, frame.pixels.dtype, int(frame.pixels.astype(bool).sum()), "lit pixels")

###############################################################################
# The altimeter region as ASCII art.

(alt,) = [c for c in segment(frame.pixels, model) if c.widget_name == "AltitudeTape"]
for row in alt.pixels[:18, :60]:
    print("".join("#" if v else "." for v in row))

###############################################################################
# Reading the frame back gives the values at display precision: roll -12.5
# rounds half away from zero to -13, pressure shows one decimal.

obs, failures = extract_frame(frame.pixels, model)
for o in obs:
    print(f"{o.widget_name:18s} {o.raw_text:>6s} -> {o.value!r}")

###############################################################################
# Frames are stored as binary PGM.

data = encode_pgm(frame.pixels)
print(data[:15], len(data), "bytes")
print("glyph pitch", DEFAULT_GLYPHS.pitch, "px;", "font", sorted(DEFAULT_GLYPHS.bitmaps))
print(np.unique(frame.pixels))
