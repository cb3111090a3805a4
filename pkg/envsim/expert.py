"""
Scripted experts: proportional controllers toward per-subtask waypoints.

The expert is stateless; every decision is recomputed from the current
world state, so the same expert drives offline data generation and the
goal frames used for goal-conditioned evaluation.
"""

import numpy as np

from .tasks import TaskSpec
from .world import (
    CONTACT_DISTANCE,
    GRASP_DISTANCE,
    GRIPPER_CLOSE,
    GRIPPER_OPEN,
    Action,
    WorldState,
)

EXPERT_SPEED = 0.04
SAFE_DISTANCE = CONTACT_DISTANCE + 0.02
LIFT_OFFSET = 0.2
PLACE_TOLERANCE = 0.02
PUSH_ALIGNMENT = 0.05


def _unit(vector) -> np.ndarray:
    norm = float(np.hypot(vector[0], vector[1]))
    if norm == 0.0:
        return np.array([1.0, 0.0])
    return np.asarray(vector, dtype=np.float64) / norm


def _limit(delta: np.ndarray) -> np.ndarray:
    largest = float(np.max(np.abs(delta)))
    if largest > EXPERT_SPEED:
        delta = delta * (EXPERT_SPEED / largest)
    return np.clip(delta, -EXPERT_SPEED, EXPERT_SPEED)


def steer(position, goal, obstacles=()) -> np.ndarray:
    """
    Bounded step toward ``goal`` that orbits around obstacles.

    A step that would end within the safe distance of an obstacle is
    replaced by a tangential move on the goal side plus a radial correction
    back to the safe circle.
    """
    position = np.asarray(position, dtype=np.float64)
    delta = np.asarray(goal, dtype=np.float64) - position
    proposal = _limit(delta)
    for obstacle in obstacles:
        obstacle = np.asarray(obstacle, dtype=np.float64)
        if np.hypot(*(position + proposal - obstacle)) >= SAFE_DISTANCE:
            continue
        offset = position - obstacle
        gap = float(np.hypot(*offset))
        normal = _unit(offset)
        tangent = np.array([-normal[1], normal[0]])
        if float(np.dot(tangent, delta)) < 0.0:
            tangent = -tangent
        proposal = _limit(tangent * 0.04 + normal * (SAFE_DISTANCE + 0.01 - gap))
        break
    return proposal


class ScriptedExpert:
    """Expert controller for one bound subtask."""

    def __init__(self, task: TaskSpec):
        self.task = task

    def _obstacles(self, state: WorldState, *exclude: str):
        return [obj.position for obj in state.objects if obj.id not in exclude]

    def _approach(self, state: WorldState, target) -> Action:
        position = np.asarray(state.manipulator.position)
        obj = np.asarray(target.position)
        goal = obj + _unit(position - obj) * CONTACT_DISTANCE
        delta = steer(position, goal, self._obstacles(state, target.id, state.manipulator.held))
        return Action((float(delta[0]), float(delta[1])), GRIPPER_OPEN)

    def _carry(self, state: WorldState, target, object_goal) -> Action:
        position = np.asarray(state.manipulator.position)
        goal = np.asarray(object_goal) + (position - np.asarray(target.position))
        delta = steer(position, goal, self._obstacles(state, target.id))
        return Action((float(delta[0]), float(delta[1])), GRIPPER_CLOSE)

    def _grasp(self, state: WorldState, target) -> Action | None:
        """Grasping actions, or None once the object is held."""
        manipulator = state.manipulator
        if manipulator.held == target.id:
            return None
        if manipulator.held is not None:
            # let go of anything else first
            return Action((0.0, 0.0), GRIPPER_OPEN)
        gap = np.hypot(*(np.asarray(manipulator.position) - np.asarray(target.position)))
        if gap <= GRASP_DISTANCE:
            return Action((0.0, 0.0), GRIPPER_CLOSE)
        return self._approach(state, target)

    def reach(self, state: WorldState, target) -> Action:
        return self._approach(state, target)

    def pick(self, state: WorldState, target) -> Action:
        action = self._grasp(state, target)
        if action is not None:
            return action
        origin = np.asarray(target.origin)
        lift = -LIFT_OFFSET if origin[1] > 0.5 else LIFT_OFFSET
        return self._carry(state, target, origin + np.array([0.0, lift]))

    def place(self, state: WorldState, target) -> Action:
        zone = state.zone(self.task.zone_id)
        centre = np.asarray(zone.center)
        if state.manipulator.held == target.id:
            if np.hypot(*(np.asarray(target.position) - centre)) <= PLACE_TOLERANCE:
                return Action((0.0, 0.0), GRIPPER_OPEN)
            return self._carry(state, target, centre)
        action = self._grasp(state, target)
        return action if action is not None else self._carry(state, target, centre)

    def push_to_zone(self, state: WorldState, target) -> Action:
        if state.manipulator.held is not None:
            return Action((0.0, 0.0), GRIPPER_OPEN)
        zone = state.zone(self.task.zone_id)
        position = np.asarray(state.manipulator.position)
        obj = np.asarray(target.position)
        direction = _unit(np.asarray(zone.center) - obj)
        behind = obj - direction * CONTACT_DISTANCE
        if np.hypot(*(position - behind)) <= PUSH_ALIGNMENT:
            delta = _limit(behind - position + direction * EXPERT_SPEED)
            return Action((float(delta[0]), float(delta[1])), GRIPPER_OPEN)
        approach = obj - direction * (SAFE_DISTANCE + 0.02)
        delta = steer(position, approach, self._obstacles(state))
        return Action((float(delta[0]), float(delta[1])), GRIPPER_OPEN)

    def act(self, state: WorldState) -> Action:
        task = self.task.bind(state)
        self.task = task
        target = state.object(task.object_id)
        return getattr(self, task.subtask)(state, target)
