"""Command-line entry point.

Exit status: 0 when everything passes, 1 when constraint failures (or
error verdicts) are present, 2 when a stage fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

from . import constraints as ocl
from .behavior import parse_state_machine
from .display_model import generate_model, model_from_json, model_to_json, parse_display, parse_mapping
from .errors import CdsError
from .extract import extract_dir, rows_from_jsonl, rows_to_jsonl
from .flightsim import parse_faults, parse_profile, samples_from_json, samples_to_json, simulate
from .harness import (EvaluationRecord, PipelineConfig, compile_report, evaluate_rows,
                      report_to_json, report_to_text, run_pipeline)
from .pathgen import (build_transition_tree, extract_paths, generate_scripts, parse_script_xml,
                      parse_tables, paths_from_json, paths_to_json, script_to_xml, tree_to_dict)
from .render import RecordingPlan, record

OK, FAILURES, PIPELINE_ERROR = 0, 1, 2


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen_model(args):
    model = generate_model(parse_display(Path(args.display).read_bytes(), args.front_end),
                           parse_mapping(Path(args.mapping).read_bytes()))
    for w in model.warnings:
        logging.warning(w)
    _emit(model_to_json(model), args.output)
    return OK


def cmd_gen_paths(args):
    sm = parse_state_machine(Path(args.machine).read_bytes())
    tree = build_transition_tree(sm)
    if args.tree:
        Path(args.tree).write_text(json.dumps(tree_to_dict(tree), indent=1) + "\n", encoding="utf-8")
    _emit(paths_to_json(extract_paths(tree, sm)), args.output)
    return OK


def cmd_gen_scripts(args):
    paths = paths_from_json(Path(args.paths).read_text(encoding="utf-8"))
    warnings = []
    scripts = generate_scripts(paths, parse_tables(Path(args.tables).read_bytes()), warnings)
    for w in warnings:
        logging.warning(w)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for s in scripts:
        (out / f"{s.name}.xml").write_bytes(script_to_xml(s))
        print(out / f"{s.name}.xml")
    return OK


def cmd_simulate(args):
    script = parse_script_xml(Path(args.script).read_bytes())
    profile = parse_profile(Path(args.profile).read_bytes())
    faults = parse_faults(Path(args.faults).read_bytes()) if args.faults else []
    _emit(samples_to_json(simulate(script, profile, faults, args.interval)), args.output)
    return OK


def cmd_record(args):
    model = model_from_json(Path(args.model).read_text(encoding="utf-8"))
    samples = samples_from_json(Path(args.samples).read_text(encoding="utf-8"))
    dwell = defaultdict(float)
    for s in samples:
        dwell[s.state] += args.interval
    refs = record(model, samples, RecordingPlan(dict(dwell), args.interval, Path(args.output)))
    print(f"{len(refs)} frames written to {args.output}")
    return OK


def cmd_extract(args):
    model = model_from_json(Path(args.model).read_text(encoding="utf-8"))
    rows = extract_dir(args.frames, model)
    _emit(rows_to_jsonl(rows), args.output)
    return OK if all(r.get("error") is None for r in rows) else FAILURES


def cmd_check(args):
    try:
        cs = ocl.parse_constraints(Path(args.constraints).read_bytes())
    except CdsError as exc:
        print(f"{args.constraints}: {exc}")
        return FAILURES
    sm = parse_state_machine(Path(args.machine).read_bytes())
    model = model_from_json(Path(args.model).read_text(encoding="utf-8"))
    issues = ocl.check_vocabulary(cs, sm.states, {w.target_property: "num" for w in model.widgets})
    for issue in issues:
        print(f"{args.constraints}: {issue}")
    if not issues:
        print(f"{args.constraints}: {len(cs)} constraints OK")
    return FAILURES if issues else OK


def _verdict_status(records):
    return FAILURES if any(r.verdict != ocl.PASS for r in records) else OK


def cmd_evaluate(args):
    rows = rows_from_jsonl(Path(args.observations).read_text(encoding="utf-8"))
    cs = ocl.parse_constraints(Path(args.constraints).read_bytes())
    model = model_from_json(Path(args.model).read_text(encoding="utf-8")) if args.model else None
    records = evaluate_rows(rows, cs, model)
    _emit("".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records), args.output)
    return _verdict_status(records)


def cmd_report(args):
    records = [EvaluationRecord.from_dict(d)
               for d in rows_from_jsonl(Path(args.records).read_text(encoding="utf-8"))]
    model = model_from_json(Path(args.model).read_text(encoding="utf-8")) if args.model else None
    order = parse_state_machine(Path(args.machine).read_bytes()).states if args.machine else ()
    frames = defaultdict(set)
    if args.observations:
        for r in rows_from_jsonl(Path(args.observations).read_text(encoding="utf-8")):
            frames[r["state"]].add((r.get("run", ""), r["seq"]))
    else:
        for r in records:
            frames[r.state].add((r.run, r.seq))
    report = compile_report(records, {s: len(v) for s, v in frames.items()}, model=model,
                            state_order=order)
    if args.json:
        Path(args.json).write_text(report_to_json(report), encoding="utf-8")
    sys.stdout.write(report_to_text(report))
    return FAILURES if report.totals.failed_evaluations or report.totals.extraction_errors else OK


def cmd_run(args):
    config = PipelineConfig.load(args.config, output=args.out)
    report = run_pipeline(config, use_faults=not args.no_faults)
    sys.stdout.write(report_to_text(report))
    print(f"artifacts: {config.output}")
    return FAILURES if report.totals.failed_evaluations or report.totals.extraction_errors else OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cdsprobe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="display XML + mapping -> display model JSON")
    p.add_argument("display")
    p.add_argument("mapping")
    p.add_argument("-o", "--output")
    p.add_argument("--front-end", default="xml")
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("gen-paths", help="state machine -> transition-tree test paths")
    p.add_argument("machine")
    p.add_argument("-o", "--output")
    p.add_argument("--tree", help="also write the transition tree here")
    p.set_defaults(func=cmd_gen_paths)

    p = sub.add_parser("gen-scripts", help="paths + duration/action tables -> simulator scripts")
    p.add_argument("paths")
    p.add_argument("tables")
    p.add_argument("-o", "--output", default="scripts")
    p.set_defaults(func=cmd_gen_scripts)

    p = sub.add_parser("simulate", help="run a script through the flight-data stub")
    p.add_argument("script")
    p.add_argument("profile")
    p.add_argument("--faults")
    p.add_argument("--interval", type=float, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("record", help="render samples to PGM frames with a manifest")
    p.add_argument("model")
    p.add_argument("samples")
    p.add_argument("output")
    p.add_argument("--interval", type=float, default=1)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("extract", help="segment + OCR a frames directory")
    p.add_argument("frames")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("check-constraints", help="validate constraint vocabulary and types")
    p.add_argument("constraints")
    p.add_argument("machine")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("evaluate", help="evaluate constraints over observation rows")
    p.add_argument("observations")
    p.add_argument("constraints")
    p.add_argument("--model")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate evaluation records into a report")
    p.add_argument("records")
    p.add_argument("--model")
    p.add_argument("--machine", help="order rows by this machine's states")
    p.add_argument("--observations", help="count frames from these observation rows")
    p.add_argument("--json", help="also write the JSON report here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--no-faults", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CdsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PIPELINE_ERROR


if __name__ == "__main__":
    sys.exit(main())
