import dataclasses

import numpy as np

from .world import (
    ARENA_MAX,
    ARENA_MIN,
    CONTACT_DISTANCE,
    GRASP_DISTANCE,
    GRIPPER_CLOSE,
    Action,
    ManipulatorPose,
    WorldState,
    distance,
)


def _clip(position) -> tuple[float, float]:
    return (
        float(np.clip(position[0], ARENA_MIN, ARENA_MAX)),
        float(np.clip(position[1], ARENA_MIN, ARENA_MAX)),
    )


def step(state: WorldState, action: Action) -> WorldState:
    """
    Advance the world by one control step.

    The manipulator is translated by the arm delta and clipped to the arena.
    Closing the gripper within grasp distance of an object rigidly attaches
    the nearest one; opening releases it where it lies. A held object follows the
    manipulator by the same (clipped) displacement. Any other object the
    manipulator overlaps, including one released this step, is pushed out
    to contact distance.

    Returns:
        WorldState: the successor state, with step_index incremented
    """
    action.validate()
    old = state.manipulator.position
    new = _clip((old[0] + action.arm_delta[0], old[1] + action.arm_delta[1]))
    moved = (new[0] - old[0], new[1] - old[1])

    closed = action.gripper_cmd == GRIPPER_CLOSE
    previously_held = state.manipulator.held if closed else None
    held = previously_held
    if closed and held is None:
        candidates = [
            (distance(new, obj.position), index, obj.id)
            for index, obj in enumerate(state.objects)
            if distance(new, obj.position) <= GRASP_DISTANCE
        ]
        if candidates:
            held = min(candidates)[2]

    objects = []
    for obj in state.objects:
        position = obj.position
        if obj.id == previously_held:
            position = _clip((position[0] + moved[0], position[1] + moved[1]))
        elif obj.id != held:
            gap = distance(new, position)
            if gap < CONTACT_DISTANCE - 1e-9:
                if gap > 0.0:
                    unit = ((position[0] - new[0]) / gap, (position[1] - new[1]) / gap)
                else:
                    norm = float(np.hypot(*moved))
                    unit = (moved[0] / norm, moved[1] / norm) if norm > 0.0 else (1.0, 0.0)
                position = _clip(
                    (new[0] + unit[0] * CONTACT_DISTANCE, new[1] + unit[1] * CONTACT_DISTANCE)
                )
        objects.append(dataclasses.replace(obj, position=position))

    return dataclasses.replace(
        state,
        manipulator=ManipulatorPose(position=new, closed=closed, held=held),
        objects=tuple(objects),
        step_index=state.step_index + 1,
    )
