# Copyright 2026 The Multiplicity Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Validate the golden fixtures against the JSON Schemas in this directory."""

import json
import pathlib
import sys

import jsonschema

here = pathlib.Path(__file__).resolve().parent
pairs = [("report.schema.json", "report*.json"), ("ground_truth.schema.json", "ground_truth*.json")]
failed = 0
for schema_name, pattern in pairs:
    schema = json.loads((here / schema_name).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    for path in sorted((here / "golden").glob(pattern)):
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        for e in errors:
            print(f"{path.name}: {e.json_path}: {e.message}")
        failed += bool(errors)
        print(f"{path.name}: {'ok' if not errors else 'invalid'}")
sys.exit(1 if failed else 0)
