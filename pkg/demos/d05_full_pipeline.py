"""
The whole pipeline with seeded display faults
=============================================

Three faults are injected into the display layer: the airspeed tape reads
20 knots high while taxiing and on approach, the altimeter reads 800 ft
high in cruise, and the attitude indicator shows a 15 degree bank on
landing. The report should localize exactly those three widgets.

The equivalent command line is ``cdsprobe run <config.json> --out DIR``.
"""

import shutil
import tempfile
from pathlib import Path

from cdsprobe import data_path
from cdsprobe.harness import PipelineConfig, report_to_text, run_pipeline

tmp = Path(tempfile.mkdtemp())
config = PipelineConfig.load(data_path("config.json"), output=tmp / "faulty")
report = run_pipeline(config)
print(report_to_text(report))
print(sorted(p.name for p in config.output.iterdir()))

###############################################################################
# Without faults, every evaluation passes.

config = PipelineConfig.load(data_path("config.json"), output=tmp / "clean")
clean = run_pipeline(config, use_faults=False)
print("failed evaluations without faults:", clean.totals.failed_evaluations)
shutil.rmtree(tmp)
