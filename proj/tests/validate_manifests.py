"""Runs a few CLI commands and validates each manifest.json against the schema."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

cli, schema_path = sys.argv[1], sys.argv[2]
schema = json.loads(Path(schema_path).read_text())
runs = [
    ["bounds", "--k", "2"],
    ["volumes", "--delta", "1", "--samples", "20000"],
    ["tile", "--k", "2"],
    ["diagram", "--random", "4", "--points", "200", "--pixels", "20", "--samples", "20000"],
    ["fefferman", "--domain", "siegel", "--n-graph", "4", "--density-samples", "5"],
    ["demo", "bidisc", "--m", "1,2", "--samples", "20000", "--format", "csv"],
]
with tempfile.TemporaryDirectory() as tmp:
    for i, args in enumerate(runs):
        out = Path(tmp) / f"run{i}"
        subprocess.run([cli, *args, "-o", str(out)], check=True)
        manifest = json.loads((out / "manifest.json").read_text())
        jsonschema.validate(manifest, schema)
        for name in manifest["outputs"]:
            assert (out / name).is_file(), name
        print("ok", " ".join(args))
