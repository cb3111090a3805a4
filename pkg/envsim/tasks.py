"""
Subtask registry, success oracles and instruction templates.
"""

from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigurationError
from setup.config import get_object_catalog, get_subtask_templates

from .world import GRASP_DISTANCE, LIFT_DISTANCE, WorldState, distance

SUBTASKS = ("reach", "push_to_zone", "pick", "place")
REACH_DISTANCE = GRASP_DISTANCE


def validate_subtask(subtask_id: str) -> str:
    if subtask_id not in SUBTASKS:
        raise ConfigurationError(
            f"unknown subtask {subtask_id!r}, expected one of {', '.join(SUBTASKS)}"
        )
    return subtask_id


@dataclass(frozen=True)
class TaskSpec:
    """A subtask bound to the object it manipulates and the zone it targets."""

    subtask: str
    object_id: str | None = None
    zone_id: str | None = None

    def __post_init__(self):
        validate_subtask(self.subtask)

    @classmethod
    def coerce(cls, task) -> "TaskSpec":
        if isinstance(task, TaskSpec):
            return task
        return cls(subtask=task)

    def bind(self, state: WorldState) -> "TaskSpec":
        """Fill unbound fields with the first object and first zone."""
        object_id = self.object_id or state.objects[0].id
        zone_id = self.zone_id or (state.zones[0].id if state.zones else None)
        return TaskSpec(self.subtask, object_id, zone_id)


def check_success(state: WorldState, task) -> bool:
    """
    Ground-truth success predicate of a subtask.

    ``task`` may be a TaskSpec or a bare subtask id, in which case it binds to
    the first object and the first zone of the state.
    """
    task = TaskSpec.coerce(task).bind(state)
    obj = state.object(task.object_id)
    manipulator = state.manipulator
    if task.subtask == "reach":
        return distance(manipulator.position, obj.position) <= REACH_DISTANCE
    if task.subtask == "pick":
        return (
            manipulator.closed
            and manipulator.held == obj.id
            and distance(obj.position, obj.origin) >= LIFT_DISTANCE
        )
    zone = state.zone(task.zone_id)
    if task.subtask == "push_to_zone":
        return zone.contains(obj.position)
    # place
    return zone.contains(obj.position) and manipulator.held != obj.id and not manipulator.closed


def object_noun(object_id: str) -> str:
    for entry in get_object_catalog():
        if entry["id"] == object_id:
            return f"{entry['color']} {entry['shape']}"
    raise ConfigurationError(f"unknown catalog object {object_id!r}")


def instruction_for(task: TaskSpec, rng: np.random.Generator) -> str:
    templates = get_subtask_templates()[task.subtask]
    template = templates[int(rng.integers(len(templates)))]
    return template.format(object=object_noun(task.object_id))


def instruction_vocabulary() -> list[str]:
    """Every instruction the templates can produce, sorted."""
    instructions = {
        template.format(object=f"{entry['color']} {entry['shape']}")
        for subtask in SUBTASKS
        for template in get_subtask_templates()[subtask]
        for entry in get_object_catalog()
    }
    return sorted(instructions)
