#!/usr/bin/env python3
# Copyright 2026 The Peristalsim Authors
# SPDX-License-Identifier: Apache-2.0
"""Checks the shared test vectors against the checked-in JSON Schemas.

Valid vectors and their canonical forms must validate, invalid ones must
not, so the schema a UI consumes agrees with the C++ parser.
"""
import json
import pathlib
import sys

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

ROOT = pathlib.Path(__file__).resolve().parents[2] / "schema"


def main():
    pattern = json.loads((ROOT / "pattern.schema.json").read_text())
    protocol = json.loads((ROOT / "protocol.schema.json").read_text())
    registry = Registry().with_resources(
        [(s["$id"], Resource.from_contents(s)) for s in (pattern, protocol)])
    Draft202012Validator.check_schema(pattern)
    Draft202012Validator.check_schema(protocol)
    pv = Draft202012Validator(pattern, registry=registry)
    cv = Draft202012Validator(protocol, registry=registry)
    vectors = json.loads((ROOT / "vectors" / "pattern_vectors.json").read_text())
    failures = []
    for case in vectors["valid"]:
        for doc in (case["input"], json.loads(case["canonical"])):
            failures += [f"{case['name']}: {e.message}" for e in pv.iter_errors(doc)]
        start = {"cmd": "start", "pattern": case["input"]}
        failures += [f"{case['name']} as command: {e.message}" for e in cv.iter_errors(start)]
        if list(json.loads(case["canonical"])) != sorted(json.loads(case["canonical"])):
            failures.append(f"{case['name']}: canonical keys not sorted")
    for case in vectors["invalid"]:
        if pv.is_valid(case["input"]):
            failures.append(f"{case['name']}: schema accepts an invalid draft")
    for msg in ({"cmd": "don1"}, {"cmd": "estop", "v": 1}):
        failures += [f"{msg}: {e.message}" for e in cv.iter_errors(msg)]
    for msg in ({"cmd": "start"}, {"cmd": "stop", "pattern": {}}, {"cmd": "fly"}):
        if cv.is_valid(msg):
            failures.append(f"{msg}: protocol schema accepts it")
    for f in failures:
        print(f, file=sys.stderr)
    if not failures:
        print("schema vectors consistent")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
