"""Display definitions, widget mapping and the generated display model.

A display definition is the raw object inventory exported by a display
design tool. The mapping file ties those objects to the fixed widget
profile, and :func:`generate_model` turns both into a typed
:class:`DisplayModel` that the renderer, the extractor and the populator
share.
"""
from __future__ import annotations

import enum
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import (
    DanglingPropertyMapping,
    DuplicateName,
    OverlappingWidgets,
    ParseError,
    RegionOutOfBounds,
    SchemaError,
    TypeConversionError,
    UnknownProfileProperty,
    UnknownWidgetKind,
)

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
MIN_DISPLAY_SIZE = 64
FORMATS = ("%d", "%.1f")


class WidgetKind(enum.Enum):
    ALTIMETER = "Altimeter"
    AIRSPEED_INDICATOR = "AirspeedIndicator"
    ATTITUDE_INDICATOR = "AttitudeIndicator"
    VERTICAL_SPEED_INDICATOR = "VerticalSpeedIndicator"
    HEADING_INDICATOR = "HeadingIndicator"
    BAROMETRIC_PRESSURE = "BarometricPressure"

    @property
    def target_property(self) -> str:
        return _TARGETS[self][0]

    @property
    def unit(self) -> str:
        return _TARGETS[self][1]

    @classmethod
    def parse(cls, name: str) -> "WidgetKind":
        try:
            return cls(name)
        except ValueError:
            raise UnknownWidgetKind(f"unknown widget kind {name!r}") from None


_TARGETS = {
    WidgetKind.ALTIMETER: ("altitude", "feet"),
    WidgetKind.AIRSPEED_INDICATOR: ("airspeed", "knots"),
    WidgetKind.ATTITUDE_INDICATOR: ("roll", "degrees"),
    WidgetKind.VERTICAL_SPEED_INDICATOR: ("verticalSpeed", "feet/min"),
    WidgetKind.HEADING_INDICATOR: ("heading", "degrees"),
    WidgetKind.BAROMETRIC_PRESSURE: ("pressure", "inHg"),
}

PROFILE_PROPERTIES = ("isVisible", "x", "y", "width", "height", "format")
PROFILE_DEFAULTS = {"isVisible": True, "format": "%d"}


@dataclass(frozen=True)
class RawObject:
    name: str
    properties: tuple[tuple[str, str], ...] = ()

    def get(self, prop: str):
        for key, value in self.properties:
            if key == prop:
                return value
        return None


@dataclass(frozen=True)
class DisplayDefinition:
    name: str
    width: int
    height: int
    objects: tuple[RawObject, ...] = ()


@dataclass(frozen=True)
class MappingFile:
    object_mappings: tuple[tuple[str, WidgetKind], ...] = ()
    # ((source_object, source_prop), profile_prop)
    property_mappings: tuple[tuple[tuple[str, str], str], ...] = ()

    def kind_of(self, obj: str):
        return dict(self.object_mappings).get(obj)

    def props_for(self, obj: str) -> list[tuple[str, str]]:
        return [(src, dst) for (o, src), dst in self.property_mappings if o == obj]


@dataclass(frozen=True)
class WidgetModel:
    name: str
    kind: WidgetKind
    is_visible: bool
    x: int
    y: int
    width: int
    height: int
    format: str
    target_property: str
    # profile field -> source property name, or "default"
    sources: tuple[tuple[str, str], ...] = ()

    @property
    def region(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.x + self.width, self.y + self.height)

    def overlaps(self, other: "WidgetModel") -> bool:
        ax0, ay0, ax1, ay1 = self.region
        bx0, by0, bx1, by1 = other.region
        return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1


@dataclass(frozen=True)
class DisplayModel:
    name: str
    width: int
    height: int
    widgets: tuple[WidgetModel, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def widget(self, name: str) -> WidgetModel:
        for w in self.widgets:
            if w.name == name:
                return w
        raise KeyError(name)

    def property_index(self) -> dict[str, str]:
        """Map each target property to the name of the widget displaying it."""
        return {w.target_property: w.name for w in self.widgets}


# -- display definition XML --------------------------------------------------

def _positive_int(text, what):
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise SchemaError(f"{what} must be an integer, got {text!r}") from None
    return value


def parse_display_xml(data: bytes) -> DisplayDefinition:
    """Parse a ``<DisplayDefinition>`` document, keeping document order."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed display XML: {exc}", line, col) from None
    if root.tag != "DisplayDefinition":
        raise SchemaError(f"unexpected root element <{root.tag}>")
    _check_attrs(root, {"name", "width", "height"})
    name = _required_name(root)
    width = _positive_int(root.get("width"), "width")
    height = _positive_int(root.get("height"), "height")
    if width < MIN_DISPLAY_SIZE or height < MIN_DISPLAY_SIZE:
        raise SchemaError(f"display must be at least {MIN_DISPLAY_SIZE}x{MIN_DISPLAY_SIZE}")

    objects = []
    seen = set()
    for obj in root:
        if obj.tag != "Object":
            raise SchemaError(f"unknown element <{obj.tag}> in DisplayDefinition")
        _check_attrs(obj, {"name"})
        obj_name = _required_name(obj)
        if obj_name in seen:
            raise DuplicateName(f"object {obj_name!r} defined twice")
        seen.add(obj_name)
        props = []
        prop_names = set()
        for prop in obj:
            if prop.tag != "Property":
                raise SchemaError(f"unknown element <{prop.tag}> in Object {obj_name!r}")
            _check_attrs(prop, {"name"})
            if len(prop):
                raise SchemaError(f"Property in {obj_name!r} must not have children")
            pname = _required_name(prop)
            if pname in prop_names:
                raise DuplicateName(f"property {pname!r} repeated in object {obj_name!r}")
            prop_names.add(pname)
            props.append((pname, (prop.text or "").strip()))
        objects.append(RawObject(obj_name, tuple(props)))
    return DisplayDefinition(name, width, height, tuple(objects))


def _check_attrs(elem, allowed):
    extra = set(elem.attrib) - allowed
    if extra:
        raise SchemaError(f"unknown attribute(s) {sorted(extra)} on <{elem.tag}>")


def _required_name(elem):
    name = elem.get("name")
    if not name or not IDENT.match(name):
        raise SchemaError(f"<{elem.tag}> needs a valid name attribute, got {name!r}")
    return name


def serialize_display_xml(defn: DisplayDefinition) -> bytes:
    root = ET.Element(
        "DisplayDefinition",
        {"name": defn.name, "width": str(defn.width), "height": str(defn.height)},
    )
    for obj in defn.objects:
        o = ET.SubElement(root, "Object", {"name": obj.name})
        for key, value in obj.properties:
            ET.SubElement(o, "Property", {"name": key}).text = value
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


# Front-ends other than the XML schema above register here.
FRONT_ENDS = {"xml": parse_display_xml}


def parse_display(data: bytes, front_end: str = "xml") -> DisplayDefinition:
    try:
        parser = FRONT_ENDS[front_end]
    except KeyError:
        raise SchemaError(f"no display front-end named {front_end!r}") from None
    return parser(data)


# -- mapping file ------------------------------------------------------------

_OBJECT_LINE = re.compile(r"object\s+(\S+)\s*=>\s*(\S+)\Z")
_PROP_LINE = re.compile(r"prop\s+([^\s.]+)\.(\S+)\s*=>\s*(\S+)\Z")


def parse_mapping(data: bytes) -> MappingFile:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"mapping file is not UTF-8: {exc}") from None
    objects: dict[str, WidgetKind] = {}
    props: dict[tuple[str, str], str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _OBJECT_LINE.match(line):
            src, kind = m.groups()
            _check_ident(src, lineno)
            if src in objects:
                raise DuplicateName(f"object {src!r} mapped twice (line {lineno})")
            objects[src] = WidgetKind.parse(kind)
        elif m := _PROP_LINE.match(line):
            obj, src_prop, dst = m.groups()
            _check_ident(obj, lineno)
            _check_ident(src_prop, lineno)
            if dst not in PROFILE_PROPERTIES:
                raise UnknownProfileProperty(f"{dst!r} is not a profile property (line {lineno})")
            if (obj, src_prop) in props:
                raise DuplicateName(f"property {obj}.{src_prop} mapped twice (line {lineno})")
            props[(obj, src_prop)] = dst
        else:
            raise ParseError(f"cannot parse mapping line {line!r}", lineno, 1)
    for obj, src_prop in props:
        if obj not in objects:
            raise DanglingPropertyMapping(f"prop {obj}.{src_prop} has no object mapping for {obj!r}")
    return MappingFile(tuple(objects.items()), tuple(props.items()))


def _check_ident(name, lineno):
    if not IDENT.match(name):
        raise ParseError(f"invalid identifier {name!r}", lineno, 1)


# -- model generation --------------------------------------------------------

def _convert(field_name, text, obj_name):
    if field_name == "isVisible":
        lowered = text.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise TypeConversionError(f"{obj_name}: {text!r} is not a boolean")
    if field_name == "format":
        if text not in FORMATS:
            raise TypeConversionError(f"{obj_name}: unsupported format {text!r}")
        return text
    try:
        return int(text)
    except ValueError:
        raise TypeConversionError(f"{obj_name}: {field_name} value {text!r} is not an integer") from None


def generate_model(defn: DisplayDefinition, mapping: MappingFile) -> DisplayModel:
    """Build the typed widget model; unmapped objects only produce warnings."""
    warnings = []
    widgets = []
    mapped = dict(mapping.object_mappings)
    kinds_seen = {}
    for obj in defn.objects:
        kind = mapped.get(obj.name)
        if kind is None:
            warnings.append(f"object {obj.name!r} has no widget mapping; ignored")
            continue
        if kind in kinds_seen:
            raise SchemaError(f"objects {kinds_seen[kind]!r} and {obj.name!r} both map to {kind.value}")
        kinds_seen[kind] = obj.name

        values, sources = {}, {}
        for src_prop, dst in mapping.props_for(obj.name):
            text = obj.get(src_prop)
            if text is None:
                continue
            values[dst] = _convert(dst, text, obj.name)
            sources[dst] = src_prop
        for dst in PROFILE_PROPERTIES:
            if dst in values:
                continue
            if dst not in PROFILE_DEFAULTS:
                raise SchemaError(f"{obj.name}: no value for required property {dst!r}")
            values[dst] = PROFILE_DEFAULTS[dst]
            sources[dst] = "default"
            warnings.append(f"{obj.name}: {dst} defaulted to {PROFILE_DEFAULTS[dst]!r}")

        w = WidgetModel(
            name=obj.name,
            kind=kind,
            is_visible=values["isVisible"],
            x=values["x"],
            y=values["y"],
            width=values["width"],
            height=values["height"],
            format=values["format"],
            target_property=kind.target_property,
            sources=tuple(sorted(sources.items())),
        )
        _check_region(w, defn.width, defn.height)
        for other in widgets:
            if w.overlaps(other):
                raise OverlappingWidgets(f"{w.name} overlaps {other.name}")
        widgets.append(w)
    for obj_name, _ in mapping.object_mappings:
        if all(o.name != obj_name for o in defn.objects):
            warnings.append(f"mapping names object {obj_name!r} absent from the display file")
    return DisplayModel(defn.name, defn.width, defn.height, tuple(widgets), tuple(warnings))


def _check_region(w: WidgetModel, width: int, height: int):
    if w.width <= 0 or w.height <= 0:
        raise RegionOutOfBounds(f"{w.name}: empty region {w.width}x{w.height}")
    if w.x < 0 or w.y < 0 or w.x + w.width > width or w.y + w.height > height:
        raise RegionOutOfBounds(
            f"{w.name}: region ({w.x},{w.y},{w.width}x{w.height}) exceeds display {width}x{height}"
        )


# -- JSON form ---------------------------------------------------------------

def model_to_dict(model: DisplayModel) -> dict:
    return {
        "name": model.name,
        "width": model.width,
        "height": model.height,
        "widgets": [
            {
                "name": w.name,
                "kind": w.kind.value,
                "isVisible": w.is_visible,
                "x": w.x,
                "y": w.y,
                "width": w.width,
                "height": w.height,
                "format": w.format,
                "targetProperty": w.target_property,
                "sources": dict(w.sources),
            }
            for w in model.widgets
        ],
        "warnings": list(model.warnings),
    }


def model_to_json(model: DisplayModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n"


def model_from_dict(d: dict) -> DisplayModel:
    widgets = []
    for w in d["widgets"]:
        kind = WidgetKind.parse(w["kind"])
        widgets.append(
            WidgetModel(
                name=w["name"],
                kind=kind,
                is_visible=bool(w["isVisible"]),
                x=int(w["x"]),
                y=int(w["y"]),
                width=int(w["width"]),
                height=int(w["height"]),
                format=w["format"],
                target_property=kind.target_property,
                sources=tuple(sorted(w.get("sources", {}).items())),
            )
        )
    return DisplayModel(d["name"], int(d["width"]), int(d["height"]), tuple(widgets),
                        tuple(d.get("warnings", ())))


def model_from_json(text) -> DisplayModel:
    try:
        return model_from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid display model JSON: {exc}") from None
