"""Instance population, per-frame evaluation, reporting and the full pipeline."""
from __future__ import annotations

import contextlib
import json
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from . import constraints as ocl
from .behavior import parse_state_machine, reachable_states
from .display_model import (DisplayModel, generate_model, model_to_json, parse_display,
                            parse_mapping)
from .errors import CdsError, DuplicateProperty, PipelineError, SchemaError, UnresolvableWidget
from .extract import Observation, extract_dir, extract_frame, rows_to_jsonl
from .flightsim import faults_to_list, parse_faults, parse_profile, samples_to_json, simulate
from .pathgen import (build_transition_tree, extract_paths, generate_scripts, parse_tables,
                      paths_to_json, script_to_xml, tree_to_dict)
from .render import RecordingPlan, record, render_frame

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceModel:
    current_state: str
    seq: int
    t_sec: float
    properties: dict


def populate(model: DisplayModel | None, observations, state, seq, t_sec) -> InstanceModel:
    """Fill an instance model from one frame's observations.

    With a model, each observation is checked against its widget's target
    property; pass ``None`` to trust the observations as they are.
    """
    props = {}
    for obs in observations:
        w = None
        if model is not None:
            try:
                w = model.widget(obs.widget_name)
            except KeyError:
                raise SchemaError(f"observation names unknown widget {obs.widget_name!r}") from None
        if w is not None and obs.target_property != w.target_property:
            raise SchemaError(f"{w.name} displays {w.target_property!r}, "
                              f"observation claims {obs.target_property!r}")
        if obs.target_property in props:
            raise DuplicateProperty(f"frame {seq}: {obs.target_property!r} observed twice")
        props[obs.target_property] = obs.value
    return InstanceModel(state, seq, t_sec, props)


# -- evaluation records --------------------------------------------------------

@dataclass(frozen=True)
class EvaluationRecord:
    seq: int
    state: str
    constraint: str
    verdict: str
    properties: tuple[str, ...] = ()
    widgets: tuple[str, ...] = ()
    run: str = ""

    @property
    def widget(self):
        return self.widgets[0] if self.widgets else None

    def to_dict(self):
        return {"run": self.run, "seq": self.seq, "state": self.state,
                "constraint": self.constraint, "verdict": self.verdict,
                "properties": list(self.properties), "widgets": list(self.widgets)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["seq"], d["state"], d["constraint"], d["verdict"],
                   tuple(d.get("properties", ())), tuple(d.get("widgets", ())), d.get("run", ""))


def resolve_widgets(c: ocl.Constraint, widget_index: dict) -> tuple[str, ...]:
    widgets = []
    for p in ocl.properties_in(c.body):
        if p not in widget_index:
            raise UnresolvableWidget(f"{c.name}: no widget displays {p!r}")
        if widget_index[p] not in widgets:
            widgets.append(widget_index[p])
    return tuple(widgets)


def evaluate_instance(cs, inst: InstanceModel, widget_index: dict, run="") -> list[EvaluationRecord]:
    out = []
    for c, (name, verdict) in zip(cs, ocl.evaluate_set(cs, inst)):
        out.append(EvaluationRecord(inst.seq, inst.current_state, name, verdict,
                                    tuple(ocl.properties_in(c.body)),
                                    resolve_widgets(c, widget_index), run))
    return out


def observations_from_rows(rows):
    """Group observation rows into frames: [(run, seq, state, t_ms, [Observation])]."""
    frames = {}
    for r in rows:
        key = (r.get("run", ""), r["seq"])
        if key not in frames:
            frames[key] = (r["state"], r.get("t_ms", 0), [])
        if r.get("error") is None:
            frames[key][2].append(Observation(r["widget"], r["property"], r["raw"], r["value"]))
    return [(run, seq, st, t_ms, obs) for (run, seq), (st, t_ms, obs) in frames.items()]


def evaluate_rows(rows, cs, model: DisplayModel | None, timings=None) -> list[EvaluationRecord]:
    """Populate and evaluate every frame present in ``rows``.

    ``timings`` (state -> ms) accumulates wall-clock evaluation time. Without
    a model the property-to-widget index is taken from the rows themselves.
    """
    if model is not None:
        index = model.property_index()
    else:
        index = {r["property"]: r["widget"] for r in rows}
    records = []
    for run, seq, state, t_ms, obs in observations_from_rows(rows):
        t0 = time.perf_counter()
        inst = populate(model, obs, state, seq, t_ms / 1000)
        records.extend(evaluate_instance(cs, inst, index, run))
        if timings is not None:
            timings[state] = timings.get(state, 0.0) + (time.perf_counter() - t0) * 1000
    return records


def evaluate_samples(model: DisplayModel, samples, cs, run="") -> list[EvaluationRecord]:
    """Render, read back and evaluate samples in memory (no files written)."""
    index = model.property_index()
    records = []
    for seq, s in enumerate(samples):
        frame = render_frame(model, s, seq=seq)
        obs, _ = extract_frame(frame.pixels, model)
        inst = populate(model, obs, s.state, seq, s.t_sec)
        records.extend(evaluate_instance(cs, inst, index, run))
    return records


# -- report --------------------------------------------------------------------

@dataclass
class ReportRow:
    state: str
    frames: int = 0
    failed_evaluations: int = 0
    unique_constraints_failed: int = 0
    extraction_errors: int = 0
    eval_time_ms: float = 0.0
    img_proc_time_ms: float = 0.0


@dataclass
class Localization:
    widget: str
    kind: str | None
    failed_constraints: list
    example_seqs: list


@dataclass
class TestReport:
    rows: list
    totals: ReportRow
    distinct_failed: list = field(default_factory=list)
    fault_localization: list = field(default_factory=list)

    __test__ = False

    @property
    def faulty_widgets(self):
        return [loc.widget for loc in self.fault_localization]

    @property
    def faulty_kinds(self):
        return [loc.kind for loc in self.fault_localization]


TIMING_FIELDS = ("evalTimeMs", "imgProcTimeMs")
EXAMPLES_PER_WIDGET = 5


def compile_report(records, frame_counts, timings=None, model: DisplayModel | None = None,
                   state_order=(), img_timings=None) -> TestReport:
    """Aggregate verdicts per state and localise failures to widgets.

    Rows follow ``state_order``; states seen only in the data are appended
    in order of first appearance. Failing constraints are mapped to widgets
    through the display model's target-property index; without a model the
    widgets stored on each record are used and kinds stay unknown.
    """
    widget_index = model.property_index() if model is not None else None
    kinds = {w.name: w.kind.value for w in model.widgets} if model is not None else {}
    timings = timings or {}
    img_timings = img_timings or {}
    order = list(state_order)
    for s in list(frame_counts) + [r.state for r in records]:
        if s not in order:
            order.append(s)

    failed = defaultdict(int)
    errors = defaultdict(int)
    names = defaultdict(set)
    by_widget = {}
    distinct = []
    for r in records:
        if r.verdict == ocl.ERROR:
            errors[r.state] += 1
        if r.verdict != ocl.FAIL:
            continue
        failed[r.state] += 1
        names[r.state].add(r.constraint)
        if r.constraint not in distinct:
            distinct.append(r.constraint)
        if widget_index is None:
            widgets = r.widgets
        else:
            missing = [p for p in r.properties if p not in widget_index]
            if missing:
                raise UnresolvableWidget(f"{r.constraint}: no widget displays {missing}")
            widgets = tuple(dict.fromkeys(widget_index[p] for p in r.properties))
        for w in widgets:
            loc = by_widget.setdefault(w, Localization(w, kinds.get(w), [], []))
            if r.constraint not in loc.failed_constraints:
                loc.failed_constraints.append(r.constraint)
            if len(loc.example_seqs) < EXAMPLES_PER_WIDGET:
                loc.example_seqs.append([r.run, r.seq])

    rows = [
        ReportRow(s, frame_counts.get(s, 0), failed[s], len(names[s]), errors[s],
                  round(timings.get(s, 0.0), 3), round(img_timings.get(s, 0.0), 3))
        for s in order
    ]
    totals = ReportRow(
        "Total",
        sum(r.frames for r in rows),
        sum(r.failed_evaluations for r in rows),
        sum(r.unique_constraints_failed for r in rows),
        sum(r.extraction_errors for r in rows),
        round(sum(r.eval_time_ms for r in rows), 3),
        round(sum(r.img_proc_time_ms for r in rows), 3),
    )
    locs = sorted(by_widget.values(), key=lambda loc: loc.widget)
    for loc in locs:
        loc.failed_constraints.sort()
    return TestReport(rows, totals, sorted(distinct), locs)


def _row_dict(r: ReportRow, timings: bool):
    d = {"state": r.state, "frames": r.frames, "failedEvaluations": r.failed_evaluations,
         "uniqueConstraintsFailed": r.unique_constraints_failed,
         "extractionErrors": r.extraction_errors}
    if timings:
        d["evalTimeMs"] = r.eval_time_ms
        d["imgProcTimeMs"] = r.img_proc_time_ms
    return d


def report_to_dict(report: TestReport, timings=True) -> dict:
    return {
        "rows": [_row_dict(r, timings) for r in report.rows],
        "totals": _row_dict(report.totals, timings),
        "distinctConstraintsFailed": report.distinct_failed,
        "faultLocalization": [
            {"widget": loc.widget, "kind": loc.kind, "failedConstraints": loc.failed_constraints,
             "exampleSeqs": loc.example_seqs}
            for loc in report.fault_localization
        ],
    }


def report_to_json(report: TestReport, timings=True) -> str:
    return json.dumps(report_to_dict(report, timings), indent=2, sort_keys=True) + "\n"


def mask_timings(report_dict: dict) -> dict:
    """Copy of a report dict without the wall-clock columns."""
    out = json.loads(json.dumps(report_dict))
    for row in out["rows"] + [out["totals"]]:
        for key in TIMING_FIELDS:
            row.pop(key, None)
    return out


def report_to_text(report: TestReport) -> str:
    header = ("State", "Images", "Eval. Time (ms)", "Img. Proc. Time (ms)",
              "Failed Evals", "Unique Failed", "Extraction Errors")
    body = [
        (r.state, str(r.frames), f"{r.eval_time_ms:.1f}", f"{r.img_proc_time_ms:.1f}",
         str(r.failed_evaluations), str(r.unique_constraints_failed), str(r.extraction_errors))
        for r in report.rows + [report.totals]
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def fmt(row):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        return "  ".join(cells).rstrip()

    lines = [fmt(header), "  ".join("-" * w for w in widths)]
    lines += [fmt(row) for row in body[:-1]]
    lines += ["  ".join("-" * w for w in widths), fmt(body[-1])]
    if report.fault_localization:
        lines.append("")
        lines.append("Fault localization:")
        for loc in report.fault_localization:
            label = f"{loc.widget} ({loc.kind})" if loc.kind else loc.widget
            lines.append(f"  {label}: {', '.join(loc.failed_constraints)}")
    return "\n".join(lines) + "\n"


def report_from_dict(d: dict) -> TestReport:
    def row(x):
        return ReportRow(x["state"], x["frames"], x["failedEvaluations"],
                         x["uniqueConstraintsFailed"], x["extractionErrors"],
                         x.get("evalTimeMs", 0.0), x.get("imgProcTimeMs", 0.0))

    return TestReport(
        [row(x) for x in d["rows"]], row(d["totals"]), d.get("distinctConstraintsFailed", []),
        [Localization(x["widget"], x.get("kind"), x["failedConstraints"], x["exampleSeqs"])
         for x in d.get("faultLocalization", [])],
    )


# -- pipeline ------------------------------------------------------------------

@dataclass
class PipelineConfig:
    display: Path
    mapping: Path
    machine: Path
    constraints: Path
    profile: Path
    tables: Path
    output: Path
    faults: Path | None = None
    interval: float = 1
    front_end: str = "xml"

    @classmethod
    def load(cls, path, output=None) -> "PipelineConfig":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def rel(key, required=True):
            value = doc.get(key)
            if value is None:
                if required:
                    raise SchemaError(f"config {path} is missing {key!r}")
                return None
            return (base / value).resolve()

        return cls(
            display=rel("display"), mapping=rel("mapping"), machine=rel("machine"),
            constraints=rel("constraints"), profile=rel("profile"), tables=rel("tables"),
            output=Path(output) if output is not None else (rel("output", required=False)
                                                            or Path("cdsprobe-out")),
            faults=rel("faults", required=False), interval=doc.get("interval", 1),
            front_end=doc.get("frontEnd", "xml"),
        )


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except PipelineError:
        raise
    except (CdsError, OSError, ValueError, KeyError) as exc:
        raise PipelineError(name, exc) from exc


def _write(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="utf-8")


def run_pipeline(config: PipelineConfig, use_faults=True) -> TestReport:
    """Model -> paths -> scripts -> simulate -> record -> extract -> evaluate -> report.

    Every intermediate artifact is written below ``config.output``.
    """
    out = Path(config.output)
    with stage("model"):
        model = generate_model(parse_display(config.display.read_bytes(), config.front_end),
                               parse_mapping(config.mapping.read_bytes()))
        _write(out / "model.json", model_to_json(model))
    with stage("paths"):
        sm = parse_state_machine(config.machine.read_bytes())
        tree = build_transition_tree(sm)
        paths = extract_paths(tree, sm)
        _write(out / "tree.json", json.dumps(tree_to_dict(tree), indent=1) + "\n")
        _write(out / "paths.json", paths_to_json(paths))
    with stage("scripts"):
        tables = parse_tables(config.tables.read_bytes())
        scripts = generate_scripts(paths, tables)
        for s in scripts:
            _write(out / "scripts" / f"{s.name}.xml", script_to_xml(s))
    with stage("constraints"):
        cs = ocl.parse_constraints(config.constraints.read_bytes())
        prop_types = {w.target_property: "num" for w in model.widgets}
        issues = ocl.check_vocabulary(cs, sm.states, prop_types)
        if issues:
            raise SchemaError("; ".join(issues))
        unreached = cs.states_mentioned - reachable_states(sm)
        if unreached:
            log.warning("constraints mention unreachable states %s", sorted(unreached))
    with stage("simulate"):
        profile = parse_profile(config.profile.read_bytes())
        faults = parse_faults(config.faults.read_bytes()) if use_faults and config.faults else []
        _write(out / "faults.json", json.dumps(faults_to_list(faults), indent=2) + "\n")
        required = {p for c in cs for p in ocl.properties_in(c.body)}
        required |= {w.target_property for w in model.widgets if w.is_visible}
        runs = []
        for s in scripts:
            samples = simulate(s, profile, faults, config.interval, required)
            _write(out / "samples" / f"{s.name}.json", samples_to_json(samples))
            runs.append((s, samples))

    frame_counts = defaultdict(int)
    eval_ms, img_ms = {}, {}
    all_rows, records = [], []
    for s, samples in runs:
        frames_dir = out / "frames" / s.name
        with stage("record"):
            plan = RecordingPlan(dict(tables.durations), config.interval, frames_dir)
            refs = record(model, samples, plan)
            for ref in refs:
                frame_counts[ref.state] += 1
        with stage("extract"):
            t0 = time.perf_counter()
            rows = extract_dir(frames_dir, model, run=s.name)
            per_frame = (time.perf_counter() - t0) * 1000 / max(len(refs), 1)
            for ref in refs:
                img_ms[ref.state] = img_ms.get(ref.state, 0.0) + per_frame
            all_rows.extend(rows)
        with stage("evaluate"):
            records.extend(evaluate_rows(rows, cs, model, eval_ms))

    with stage("report"):
        _write(out / "observations.jsonl", rows_to_jsonl(all_rows))
        _write(out / "records.jsonl", "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n"
                                              for r in records))
        report = compile_report(records, frame_counts, eval_ms, model, sm.states, img_ms)
        _write(out / "report.json", report_to_json(report))
        _write(out / "report.txt", report_to_text(report))
    return report
