"""Contract check: bundled scenarios and sample request bodies against the published schemas."""
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource

root = pathlib.Path(sys.argv[1])
schemas = {p.name: json.loads(p.read_text()) for p in (root / "schemas").glob("*.schema.json")}
registry = Registry().with_resources(
    (s["$id"], Resource.from_contents(s)) for s in schemas.values()
)


def validator(name):
    cls = jsonschema.validators.validator_for(schemas[name])
    cls.check_schema(schemas[name])
    return cls(schemas[name], registry=registry)


scenario = validator("scenario.schema.json")
request = validator("mission_request.schema.json")
command = validator("command.schema.json")

failures = []


def expect(v, doc, ok, label):
    errors = list(v.iter_errors(doc))
    if bool(errors) == ok:
        failures.append(f"{label}: expected {'valid' if ok else 'invalid'}"
                        + (f" ({errors[0].message})" if errors else ""))


for path in sorted((root / "scenarios").glob("*.json")):
    expect(scenario, json.loads(path.read_text()), True, path.name)

square = {"area": {"polygon": [[0, 0], [40, 0], [40, 40], [0, 40]], "depth_range": [-5, -5]},
          "fleet_size": 3, "plan": {"spacing": 20, "comms_range": 25, "dimensionality": "BELT_2D"},
          "pollutants": {"count": 30}, "time_scale": "AS_FAST_AS_POSSIBLE"}
expect(request, square, True, "square request")
expect(request, {**square, "time_scale": 50}, True, "scaled request")
expect(request, {"scenario": json.loads((root / "scenarios" / "reef_survey.json").read_text())}, True, "wrapped scenario")
expect(request, {**square, "surprise": 1}, False, "unknown key")
expect(request, {**square, "time_scale": "FAST"}, False, "bad time_scale")
expect(request, {"fleet_size": 2}, False, "missing area")

expect(command, {"kind": "ABORT"}, True, "abort")
expect(command, {"kind": "PAUSE"}, True, "pause")
expect(command, {"kind": "RETASK", "area": square["area"]}, True, "retask")
expect(command, {"kind": "ADD_CONSTRAINT", "constraint": {"point": [5, 5], "distance": 3}}, True, "constraint")
expect(command, {"kind": "RETASK"}, False, "retask without area")
expect(command, {"kind": "ADD_CONSTRAINT"}, False, "constraint missing")
expect(command, {"kind": "DANCE"}, False, "unknown kind")

for f in failures:
    print("FAIL", f)
print(f"{len(failures)} schema contract failures")
sys.exit(1 if failures else 0)
