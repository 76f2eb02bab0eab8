"""Exit criteria. Each test carries an ``acceptance`` marker; the terminal
summary prints one PASS/FAIL line per criterion."""
import hashlib
import json
import random
import shutil
import time
from collections import Counter, defaultdict
from pathlib import Path

import pytest

from cdsprobe import constraints as ocl
from cdsprobe import data_path
from cdsprobe.display_model import DisplayModel, WidgetKind, WidgetModel, model_to_json
from cdsprobe.extract import decode, ocr, segment
from cdsprobe.flightsim import FaultSpec, simulate
from cdsprobe.harness import (PipelineConfig, compile_report, evaluate_samples, mask_timings,
                              report_to_dict, run_pipeline)
from cdsprobe.pathgen import build_transition_tree, extract_paths, generate_scripts
from cdsprobe.render import quantize, render_frame
from cdsprobe.flightsim import Sample

from oracles import (all_assignments, enumerate_test_paths, random_bool_ast, random_machine,
                     reachable_by_closure, truth_table)

GOLDEN = Path(__file__).parent / "golden"
EXPECTED_KINDS = {"AirspeedIndicator", "Altimeter", "AttitudeIndicator"}


def frames_digest(frames_dir: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(frames_dir.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(frames_dir).as_posix().encode() + b"\0")
            h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def snapshot(out: Path) -> dict:
    """Deterministic artifacts of one run; frames reduced to a digest."""
    snap = {name: (out / name).read_bytes() for name in ("model.json", "paths.json")}
    for p in sorted((out / "scripts").glob("*.xml")):
        snap[f"scripts/{p.name}"] = p.read_bytes()
    snap["frames"] = frames_digest(out / "frames")
    snap["report"] = json.dumps(mask_timings(json.loads((out / "report.json").read_text())),
                                indent=2, sort_keys=True)
    return snap


@pytest.fixture(scope="module")
def shipped_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("shipped") / "out"
    config = PipelineConfig.load(data_path("config.json"), output=out)
    t0 = time.perf_counter()
    report = run_pipeline(config)
    elapsed = time.perf_counter() - t0
    snap = snapshot(out)
    shutil.rmtree(out)
    return config, report, elapsed, snap


@pytest.mark.slow
@pytest.mark.acceptance(1, "three seeded faults localized to 3 widgets; none without faults")
def test_three_fault_demonstration(shipped_run, tmp_path):
    config, report, elapsed, _ = shipped_run
    assert set(report.faulty_kinds) == EXPECTED_KINDS
    assert len(report.fault_localization) == 3
    assert report.totals.frames >= 500
    assert elapsed < 60, f"pipeline took {elapsed:.1f} s"
    assert report.totals.extraction_errors == 0

    clean = PipelineConfig.load(data_path("config.json"), output=tmp_path / "clean")
    clean_report = run_pipeline(clean, use_faults=False)
    shutil.rmtree(tmp_path / "clean")
    assert clean_report.totals.failed_evaluations == 0
    assert clean_report.totals.extraction_errors == 0
    assert clean_report.fault_localization == []


def _round_trip_all(fmt, values):
    kind = WidgetKind.BAROMETRIC_PRESSURE if fmt == "%.1f" else WidgetKind.ALTIMETER
    w = WidgetModel("W", kind, True, 0, 0, 90, 20, fmt, kind.target_property)
    model = DisplayModel("one", 90, 20, (w,))
    wrong = []
    for v in values:
        s = Sample(0.0, "S", {}, {w.target_property: v})
        (crop,) = segment(render_frame(model, s).pixels, model)
        got = decode(ocr(crop), w).value
        if got != float(quantize(v, fmt)):
            wrong.append((v, got))
    return wrong


@pytest.mark.slow
@pytest.mark.acceptance(2, "OCR round trip exact on every %d in [-9999, 99999] and %.1f in [-999.9, 999.9]")
def test_ocr_exactness():
    integers = range(-9999, 100000)
    tenths = [k / 10 for k in range(-9999, 10000)]
    assert _round_trip_all("%d", integers) == []
    assert _round_trip_all("%.1f", tenths) == []


@pytest.mark.acceptance(3, "transition tree properties on 1000 random machines")
def test_transition_tree_properties():
    rng = random.Random(20240601)
    for _ in range(1000):
        sm = random_machine(rng, max_states=8, max_transitions=16)
        tree = build_transition_tree(sm)
        reach = reachable_by_closure(sm.states, sm.initial, sm.transitions)
        edges = set(tree.edges())
        for t in sm.transitions:
            if t.source in reach:
                assert (t.source, t.event, t.target) in edges
        paths = extract_paths(tree, sm)
        for p in paths:
            assert max(Counter(p.states).values()) <= 2
        assert {(p.states, p.events) for p in paths} == enumerate_test_paths(sm)
        assert len(paths) == len(enumerate_test_paths(sm))


ATOMS = [f"p{i}" for i in range(6)]


@pytest.mark.acceptance(4, "constraint evaluator equals truth tables on 10000 random ASTs; taxi_speed")
def test_evaluator_equivalence():
    from cdsprobe.harness import InstanceModel

    rng = random.Random(7)
    instances = [(i, InstanceModel("Cruise", 0, 0.0, a)) for i, a in all_assignments(ATOMS)]
    for _ in range(10000):
        atoms = ATOMS[:rng.randint(1, 6)]
        e = random_bool_ast(rng, atoms, rng.randint(1, 6))
        table = truth_table(e, ATOMS)
        reparsed = ocl.parse_expr(ocl.to_source(e))
        assert reparsed == e
        for i, inst in instances:
            assert ocl.eval_expr(e, inst) == bool((table >> i) & 1)

    (c,) = ocl.parse_constraints(
        "context Aircraft inv taxi_speed: self.oclIsInState(Taxiing) implies "
        "self.airspeed >= 0 and self.airspeed <= 50")
    assert ocl.evaluate(c, InstanceModel("Taxiing", 0, 0.0, {"airspeed": 30})) is True
    assert ocl.evaluate(c, InstanceModel("Taxiing", 0, 0.0, {"airspeed": 60})) is False
    for state in ("Standing", "Climb", "Cruise", "Landing"):
        assert ocl.evaluate(c, InstanceModel(state, 0, 0.0, {"airspeed": 60})) is True


def _random_faults(rng, states):
    faults = []
    for _ in range(rng.randint(0, 4)):
        kind = rng.choice(list(WidgetKind))
        mode = rng.choice(["offset", "stuck", "scale"])
        amount = {"offset": rng.randint(-900, 900), "stuck": rng.randint(-500, 5000),
                  "scale": rng.choice([-2, -1, 0.5, 2, 3])}[mode]
        active = None if rng.random() < 0.2 else frozenset(rng.sample(states, rng.randint(1, 4)))
        faults.append(FaultSpec(kind, mode, amount, active))
    return faults


@pytest.mark.acceptance(5, "report conservation on 100 randomized fault configurations")
def test_report_conservation(pfd_model, flight_machine, pfd_constraints, profile, tables):
    scripts = generate_scripts(extract_paths(build_transition_tree(flight_machine), flight_machine),
                               tables)
    rng = random.Random(5)
    for _ in range(100):
        script = rng.choice(scripts)
        faults = _random_faults(rng, list(flight_machine.states))
        samples = simulate(script, profile, faults, rng.choice([2, 3, 5]))
        records = evaluate_samples(pfd_model, samples, pfd_constraints)
        frame_counts = Counter(s.state for s in samples)
        report = compile_report(records, frame_counts, model=pfd_model,
                                state_order=flight_machine.states)

        fails = Counter()
        names = defaultdict(set)
        for r in records:
            if r.verdict == ocl.FAIL:
                fails[r.state] += 1
                names[r.state].add(r.constraint)
        for row in report.rows:
            assert row.failed_evaluations == fails[row.state]
            assert row.unique_constraints_failed == len(names[row.state])
            assert row.frames == frame_counts[row.state]
        assert report.totals.failed_evaluations == sum(fails.values())
        assert report.totals.unique_constraints_failed == sum(len(v) for v in names.values())
        assert report.totals.frames == len(samples)
        assert set(report.distinct_failed) == set().union(*names.values())


@pytest.mark.slow
@pytest.mark.acceptance(6, "byte-identical artifacts across runs and against committed goldens")
def test_determinism(shipped_run, tmp_path):
    config, report, _, first = shipped_run
    again = PipelineConfig.load(data_path("config.json"), output=tmp_path / "again")
    run_pipeline(again)
    second = snapshot(tmp_path / "again")
    shutil.rmtree(tmp_path / "again")
    assert first.keys() == second.keys()
    for key in first:
        assert first[key] == second[key], key

    assert first["model.json"] == (GOLDEN / "model.json").read_bytes()
    assert first["paths.json"] == (GOLDEN / "reference_paths.json").read_bytes()
    assert first["scripts/path_002.xml"] == (GOLDEN / "path_002.xml").read_bytes()
    assert first["frames"] == (GOLDEN / "frames.sha256").read_text().split()[0]
    assert first["report"] == (GOLDEN / "report.json").read_text()
