"""Synthetic cockpit frames: glyph raster, PGM files and the frame recorder."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .display_model import DisplayModel, WidgetModel
from .errors import MissingValue, OverlappingWidgets, ParseError, StorageError, TextOverflow

INK = 255
TEXT_INSET = 3  # text origin relative to the widget's outer corner

_FONT = {
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
    "-": (".....", ".....", ".....", "#####", ".....", ".....", "....."),
    ".": (".....", ".....", ".....", ".....", ".....", ".##..", ".##.."),
}


class GlyphSet:
    """Fixed 5x7 bitmap font drawn at an integer scale."""

    cols, rows = 5, 7

    def __init__(self, scale=2, gap=1, font=_FONT):
        self.scale = scale
        self.gap = gap
        self.bitmaps = {
            ch: np.array([[c == "#" for c in row] for row in rows], dtype=bool)
            for ch, rows in font.items()
        }
        self.scaled = {
            ch: np.kron(bm, np.ones((scale, scale), dtype=bool)) for ch, bm in self.bitmaps.items()
        }

    @property
    def glyph_width(self):
        return self.cols * self.scale

    @property
    def glyph_height(self):
        return self.rows * self.scale

    @property
    def gap_width(self):
        return self.gap * self.scale

    @property
    def pitch(self):
        return self.glyph_width + self.gap_width

    def text_width(self, text):
        if not text:
            return 0
        return len(text) * self.pitch - self.gap_width

    def raster(self, text) -> np.ndarray:
        out = np.zeros((self.glyph_height, self.text_width(text)), dtype=bool)
        for i, ch in enumerate(text):
            x = i * self.pitch
            out[:, x:x + self.glyph_width] = self.scaled[ch]
        return out


DEFAULT_GLYPHS = GlyphSet()

_QUANTUM = {"%d": Decimal(1), "%.1f": Decimal("0.1")}


def quantize(value, fmt) -> Decimal:
    """Round to the widget format, halves away from zero, never negative zero."""
    q = Decimal(repr(float(value))).quantize(_QUANTUM[fmt], rounding=ROUND_HALF_UP)
    return q.copy_abs() if q == 0 else q


def format_value(value, fmt) -> str:
    return str(quantize(value, fmt))


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray  # (height, width) uint8, row-major
    state: str = ""
    t_sec: float = 0.0
    seq: int = 0

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


def _check_disjoint(model):
    ws = model.widgets
    for i, a in enumerate(ws):
        for b in ws[i + 1:]:
            if a.overlaps(b):
                raise OverlappingWidgets(f"{a.name} overlaps {b.name}")


def draw_widget(pixels, w: WidgetModel, value, glyphs=DEFAULT_GLYPHS):
    text = format_value(value, w.format)
    ink = glyphs.raster(text)
    # room between the text origin and the inside of the far border
    room_w = w.width - TEXT_INSET - 1
    room_h = w.height - TEXT_INSET - 1
    if ink.shape[1] > room_w or ink.shape[0] > room_h:
        raise TextOverflow(f"{w.name}: {text!r} does not fit a {w.width}x{w.height} region")
    x0, y0, x1, y1 = w.region
    pixels[y0, x0:x1] = INK
    pixels[y1 - 1, x0:x1] = INK
    pixels[y0:y1, x0] = INK
    pixels[y0:y1, x1 - 1] = INK
    tx, ty = x0 + TEXT_INSET, y0 + TEXT_INSET
    region = pixels[ty:ty + ink.shape[0], tx:tx + ink.shape[1]]
    region[ink] = INK


def render_frame(model: DisplayModel, sample, glyphs=DEFAULT_GLYPHS, seq=0) -> Frame:
    _check_disjoint(model)
    pixels = np.zeros((model.height, model.width), dtype=np.uint8)
    for w in model.widgets:
        if not w.is_visible:
            continue
        try:
            value = sample.displayed_values[w.target_property]
        except KeyError:
            raise MissingValue(f"sample has no displayed {w.target_property!r} for {w.name}") from None
        draw_widget(pixels, w, value, glyphs)
    return Frame(pixels, sample.state, sample.t_sec, seq)


# -- PGM -----------------------------------------------------------------------

def encode_pgm(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    """Read a binary P5 greymap with maxval 255 (comments allowed in the header)."""
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    if fields[0] != b"P5":
        raise ParseError(f"not a binary PGM (magic {fields[0]!r})")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ParseError("non-numeric PGM header field") from None
    if maxval != 255:
        raise ParseError(f"only maxval 255 is supported, got {maxval}")
    raster = data[pos:pos + w * h]
    if len(raster) != w * h:
        raise ParseError(f"PGM raster is {len(raster)} bytes, expected {w * h}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


def write_pgm(path, pixels):
    Path(path).write_bytes(encode_pgm(pixels))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


# -- recorder ------------------------------------------------------------------

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ("seq", "state", "t_ms", "path")


@dataclass(frozen=True)
class RecordingPlan:
    per_state_duration: dict
    interval_sec: float
    output_dir: Path

    def __post_init__(self):
        if self.interval_sec <= 0:
            raise ValueError("recording interval must be positive")
        if any(d <= 0 for d in self.per_state_duration.values()):
            raise ValueError("state durations must be positive")


@dataclass(frozen=True)
class FrameRef:
    seq: int
    state: str
    t_ms: int
    path: str  # relative to the output directory, '/' separated


def frame_path(state, seq, t_ms) -> str:
    return f"{state}/{seq:06d}_{t_ms}.pgm"


def record(model: DisplayModel, samples, plan: RecordingPlan, glyphs=DEFAULT_GLYPHS) -> list[FrameRef]:
    out = Path(plan.output_dir)
    refs = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for seq, sample in enumerate(samples):
            frame = render_frame(model, sample, glyphs, seq)
            t_ms = round(sample.t_sec * 1000)
            rel = frame_path(sample.state, seq, t_ms)
            target = out / rel
            target.parent.mkdir(exist_ok=True)
            write_pgm(target, frame.pixels)
            refs.append(FrameRef(seq, sample.state, t_ms, rel))
        write_manifest(out / MANIFEST, refs)
    except OSError as exc:
        raise StorageError(f"cannot write frames under {out}: {exc}") from exc
    return refs


def write_manifest(path, refs):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for r in refs:
        writer.writerow((r.seq, r.state, r.t_ms, r.path))
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_manifest(path) -> list[FrameRef]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != MANIFEST_HEADER:
            raise ParseError(f"{os.fspath(path)}: unexpected manifest header {reader.fieldnames}")
        return [FrameRef(int(r["seq"]), r["state"], int(r["t_ms"]), r["path"]) for r in reader]
