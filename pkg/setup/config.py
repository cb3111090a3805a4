import json
from pathlib import Path

_BASE = Path(__file__).parent

SUBTASK_TEMPLATES = json.loads((_BASE / "subtasks.json").read_text(encoding="utf-8"))
ENTITIES = json.loads((_BASE / "entities.json").read_text(encoding="utf-8"))
RUN_DEFAULTS = json.loads((_BASE / "run_defaults.json").read_text(encoding="utf-8"))


def get_subtask_templates():
    return SUBTASK_TEMPLATES


def get_object_catalog():
    return ENTITIES["objects"]


def get_manipulator_nouns():
    return ENTITIES["manipulator_nouns"]


def get_palette(domain: str):
    return ENTITIES["palette"][domain]


def get_run_defaults():
    # Callers mutate the layered tree, hand them a fresh copy each time
    return json.loads(json.dumps(RUN_DEFAULTS))
