import json
import pathlib

import pytest

import longgreeks

jsonschema = pytest.importorskip("jsonschema")

DOCS = pathlib.Path(__file__).resolve().parents[2] / "docs"
SCHEMA = json.loads((DOCS / "config.schema.json").read_text())
CONFIGS = sorted((DOCS / "configs").glob("*.json"))


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_example_config_validates_and_runs(path):
    cfg = json.loads(path.read_text())
    jsonschema.validate(cfg, SCHEMA)
    if "mc" in cfg:
        cfg["mc"]["n_paths"] = 500
    report = longgreeks.run(cfg["task"]["kind"], cfg)
    assert report["rows"]
    # The resolved echo is itself a valid config.
    jsonschema.validate(report["config"], SCHEMA)


def test_schema_rejects_unknown_key():
    cfg = json.loads(CONFIGS[0].read_text())
    cfg["mc"]["bogus"] = 1
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(cfg, SCHEMA)
