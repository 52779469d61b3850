"""Score an assembly against a reference mesh.

Exports a golden hammer as an OBJ, then compares a slightly different
hammer against it with chamfer, Hausdorff, and F-score.

Run:  python3 demos/04_metrics.py
"""

import json
import tempfile
from pathlib import Path

from craftkit import build_assembly, default_catalog
from craftkit.meshing import export_assembly_obj
from craftkit.metrics import compare_assembly_to_mesh
from craftkit.orchestrator import load_template
from craftkit.plan import normalize_raw, parse_plan

catalog = default_catalog()
raw = load_template("hammer")


def build(text):
    plan, _ = parse_plan(normalize_raw(text), catalog)
    return build_assembly(plan, catalog)


with tempfile.TemporaryDirectory() as tmp:
    ref_path = Path(tmp) / "hammer_ref.obj"
    export_assembly_obj(build(raw), ref_path)

    # identical craft: near-zero distances, F-score close to 1
    report = compare_assembly_to_mesh(build(raw), ref_path, n_samples=5000)
    print("same craft:     ", report.to_dict())

    # swap the head for a smaller block and compare again
    doc = json.loads(raw)
    for entry in doc:
        if entry["Name"] == "HEAD_1":
            entry["Available_obj"] = "CUBOID_50x50x20"
            entry["Orientation"] = [50, 50, 20]
    report = compare_assembly_to_mesh(build(json.dumps(doc)), ref_path,
                                      n_samples=5000)
    print("smaller head:   ", report.to_dict())
