"""Validates shipped data files and generated reports against /schemas."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

root = pathlib.Path(sys.argv[1])
rclab = sys.argv[2]

schemas = {p.name: json.loads(p.read_text()) for p in (root / "schemas").glob("*.schema.json")}
registry = Registry().with_resources(
    (name, Resource.from_contents(s)) for name, s in schemas.items())


def validate(doc, schema_name, label):
    validator = jsonschema.Draft202012Validator(schemas[schema_name], registry=registry)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    for e in errors:
        print(f"{label}: {'/'.join(map(str, e.path))}: {e.message}")
    return not errors


ok = True
for path in sorted((root / "data").glob("*.json")):
    doc = json.loads(path.read_text())
    ok &= validate(doc, doc.get("kind", "system") + ".schema.json", path.name)

with tempfile.TemporaryDirectory() as tmp:
    reduced = pathlib.Path(tmp) / "reduced.json"
    subprocess.run([rclab, "reduce", str(root / "data/central_force.json"), "--mu", "1", "--out", str(reduced)],
                   check=True)
    ok &= validate(json.loads(reduced.read_text()), "reduced.schema.json", "emitted reduced file")
    runs = [["check", str(root / "data/central_force.json"), "--suite", "all", "--samples", "20"],
            ["check", str(root / "data/harmonic_oscillator_cyclic.json"), "--suite", "noether"],
            ["equivalence", str(root / "data/ho_scaling_bad.json"), "--kind", "rcl"],
            ["equivalence", str(root / "data/translation_pair.json"), "--kind", "thm53"]]
    for args in runs:
        out = subprocess.run([rclab, *args], capture_output=True, text=True)
        ok &= validate(json.loads(out.stdout), "report.schema.json", " ".join(args[:2]))

print("schemas: all documents valid" if ok else "schemas: validation errors")
sys.exit(0 if ok else 1)
