"""Model-guided segmentation and exact template OCR of recorded frames."""
from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .display_model import DisplayModel, WidgetModel
from .errors import CdsError, DimensionMismatch, FormatMismatch, NoGlyphs, UnrecognizedGlyph
from .render import DEFAULT_GLYPHS, MANIFEST, TEXT_INSET, GlyphSet, read_manifest, read_pgm

THRESHOLD = 128


@dataclass(frozen=True)
class RegionCrop:
    widget_name: str
    pixels: np.ndarray
    origin: tuple[int, int]


@dataclass(frozen=True)
class Observation:
    widget_name: str
    target_property: str
    raw_text: str
    value: int | float
    confidence: str = "exact"


def segment(pixels: np.ndarray, model: DisplayModel) -> list[RegionCrop]:
    """Cut the interior (region minus its 1-pixel border) of every visible widget."""
    if pixels.shape != (model.height, model.width):
        raise DimensionMismatch(
            f"frame is {pixels.shape[1]}x{pixels.shape[0]}, model expects {model.width}x{model.height}"
        )
    crops = []
    for w in model.widgets:
        if not w.is_visible:
            continue
        x0, y0 = w.x + 1, w.y + 1
        crops.append(RegionCrop(w.name, pixels[y0:w.y + w.height - 1, x0:w.x + w.width - 1], (x0, y0)))
    return crops


@functools.lru_cache(maxsize=8)
def _templates(glyphs: GlyphSet):
    """Column-trimmed scaled glyphs keyed by (shape, packed bits)."""
    index = {}
    for ch, bm in glyphs.scaled.items():
        cols = np.flatnonzero(bm.any(axis=0))
        trimmed = bm[:, cols[0]:cols[-1] + 1]
        key = (trimmed.shape, trimmed.tobytes())
        if key in index:
            raise ValueError(f"glyphs {index[key]!r} and {ch!r} are indistinguishable")
        index[key] = ch
    return index


def _runs(mask):
    """(start, stop) of each run of True values."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2], edges[1::2]))


def ocr(crop: RegionCrop, glyphs: GlyphSet = DEFAULT_GLYPHS, preprocess=None) -> str:
    pixels = crop.pixels if preprocess is None else preprocess(crop.pixels)
    ink = pixels >= THRESHOLD
    if not ink.any():
        raise NoGlyphs(f"{crop.widget_name}: region is blank")
    top = TEXT_INSET - 1  # crop starts one pixel inside the border
    band = ink[top:top + glyphs.glyph_height]
    if ink.sum() != band.sum() or band.shape[0] != glyphs.glyph_height:
        raise UnrecognizedGlyph(f"{crop.widget_name}: ink outside the text line")

    # group ink columns; blank runs narrower than the glyph gap stay inside a cell
    cells = []
    for start, stop in _runs(band.any(axis=0)):
        if cells and start - cells[-1][1] < glyphs.gap_width:
            cells[-1] = (cells[-1][0], stop)
        else:
            cells.append((start, stop))

    index = _templates(glyphs)
    chars = []
    for start, stop in cells:
        cell = band[:, start:stop]
        ch = index.get((cell.shape, cell.tobytes()))
        if ch is None:
            raise UnrecognizedGlyph(f"{crop.widget_name}: no template matches columns {start}-{stop}")
        chars.append(ch)
    return "".join(chars)


_PATTERNS = {"%d": re.compile(r"-?\d+\Z"), "%.1f": re.compile(r"-?\d+\.\d\Z")}


def decode(raw_text: str, widget: WidgetModel) -> Observation:
    if not _PATTERNS[widget.format].match(raw_text):
        raise FormatMismatch(f"{widget.name}: {raw_text!r} does not match {widget.format!r}")
    value = int(raw_text) if widget.format == "%d" else float(raw_text)
    if value == 0:
        value = abs(value)  # "-0" / "-0.0"
    return Observation(widget.name, widget.target_property, raw_text, value)


def extract_frame(pixels, model: DisplayModel, glyphs=DEFAULT_GLYPHS, preprocess=None):
    """Return (observations, failures) for one frame.

    ``failures`` holds (widget, error) for widgets whose text could not be
    read; they simply contribute no observation.
    """
    observations, failures = [], []
    for crop in segment(pixels, model):
        w = model.widget(crop.widget_name)
        try:
            observations.append(decode(ocr(crop, glyphs, preprocess), w))
        except (NoGlyphs, UnrecognizedGlyph, FormatMismatch) as exc:
            failures.append((w, exc))
    return observations, failures


def observation_rows(seq, state, t_ms, observations, failures, run=None):
    rows = []
    for o in observations:
        row = {"seq": seq, "state": state, "t_ms": t_ms, "widget": o.widget_name,
               "property": o.target_property, "raw": o.raw_text, "value": o.value}
        rows.append(row)
    for w, exc in failures:
        rows.append({"seq": seq, "state": state, "t_ms": t_ms, "widget": w.name,
                     "property": w.target_property, "raw": None, "value": None,
                     "error": f"{type(exc).__name__}: {exc}"})
    if run is not None:
        for row in rows:
            row["run"] = run
    return rows


def extract_dir(frames_dir, model: DisplayModel, glyphs=DEFAULT_GLYPHS, run=None) -> list[dict]:
    """Extract every frame listed in ``<frames_dir>/manifest.csv``, in seq order."""
    frames_dir = Path(frames_dir)
    rows = []
    for ref in sorted(read_manifest(frames_dir / MANIFEST), key=lambda r: r.seq):
        pixels = read_pgm(frames_dir / ref.path)
        obs, failures = extract_frame(pixels, model, glyphs)
        rows.extend(observation_rows(ref.seq, ref.state, ref.t_ms, obs, failures, run))
    return rows


def rows_to_jsonl(rows) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)


def rows_from_jsonl(text) -> list[dict]:
    try:
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise CdsError(f"invalid JSON lines: {exc}") from None
