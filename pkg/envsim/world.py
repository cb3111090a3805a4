"""
Domain types of the two-domain manipulation world.

The arena is the unit square with x growing to the right and y growing
downwards (image rows). A state holds one manipulator, a handful of
catalog objects and one or more rectangular zones. Every type here is an
immutable value: stepping the world builds a new state.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from core.exceptions import ValidationFailure

ARENA_MIN = 0.0
ARENA_MAX = 1.0
MAX_DELTA = 0.05

MANIPULATOR_RADIUS = 0.06
OBJECT_RADIUS = 0.05
CONTACT_DISTANCE = MANIPULATOR_RADIUS + OBJECT_RADIUS
GRASP_DISTANCE = CONTACT_DISTANCE + 0.015
LIFT_DISTANCE = 0.1
ZONE_HALF_SIZE = 0.1

DOMAINS = ("source", "target")
GRIPPER_OPEN = 0
GRIPPER_CLOSE = 1


def _inside_arena(position) -> bool:
    x, y = position
    return ARENA_MIN <= x <= ARENA_MAX and ARENA_MIN <= y <= ARENA_MAX


def distance(a, b) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


@dataclass(frozen=True)
class ManipulatorPose:
    position: tuple[float, float]
    closed: bool = False
    held: str | None = None


@dataclass(frozen=True)
class ObjectState:
    id: str
    shape: str
    color: str
    position: tuple[float, float]
    # Where the object lay when the current subtask started
    origin: tuple[float, float]

    @property
    def noun(self) -> str:
        return f"{self.color} {self.shape}"


@dataclass(frozen=True)
class Zone:
    id: str
    x0: float
    y0: float
    x1: float
    y1: float

    @classmethod
    def around(cls, zone_id: str, center, half_size: float = ZONE_HALF_SIZE):
        cx, cy = center
        return cls(zone_id, cx - half_size, cy - half_size, cx + half_size, cy + half_size)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def contains(self, position) -> bool:
        x, y = position
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class WorldState:
    """
    Ground-truth state of the world.

    Attributes:
        manipulator: position, open/closed flag and the id of a held object
        objects: catalog objects with their current position and origin
        zones: target rectangles
        domain_tag: ``source`` (hand-styled) or ``target`` (gripper-styled)
        step_index: number of steps taken since the episode started
    """

    manipulator: ManipulatorPose
    objects: tuple[ObjectState, ...]
    zones: tuple[Zone, ...]
    domain_tag: str
    step_index: int = 0

    def __post_init__(self):
        if self.domain_tag not in DOMAINS:
            raise ValidationFailure(f"unknown domain tag {self.domain_tag!r}")
        if self.step_index < 0:
            raise ValidationFailure("step_index must be non-negative")
        if not _inside_arena(self.manipulator.position):
            raise ValidationFailure("manipulator lies outside the arena")
        ids = [obj.id for obj in self.objects]
        if len(ids) != len(set(ids)):
            raise ValidationFailure(f"object ids must be unique, got {ids}")
        for obj in self.objects:
            if not _inside_arena(obj.position):
                raise ValidationFailure(f"object {obj.id} lies outside the arena")
        if self.manipulator.held is not None and self.manipulator.held not in ids:
            raise ValidationFailure(f"held object {self.manipulator.held} is not in the world")

    def object(self, object_id: str) -> ObjectState:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise ValidationFailure(f"no object {object_id!r} in the world")

    def zone(self, zone_id: str) -> Zone:
        for zone in self.zones:
            if zone.id == zone_id:
                return zone
        raise ValidationFailure(f"no zone {zone_id!r} in the world")

    def with_domain(self, domain_tag: str) -> WorldState:
        return dataclasses.replace(self, domain_tag=domain_tag)

    def with_origins_reset(self) -> WorldState:
        objects = tuple(dataclasses.replace(obj, origin=obj.position) for obj in self.objects)
        return dataclasses.replace(self, objects=objects)

    def proprio(self) -> np.ndarray:
        """Proprioceptive state: manipulator x, y and gripper flag."""
        x, y = self.manipulator.position
        return np.array([x, y, float(self.manipulator.closed)], dtype=np.float32)


@dataclass(frozen=True)
class Action:
    """
    One control command.

    ``arm_delta`` is expressed in arena fractions per step and each
    component must lie in [-0.05, 0.05]; ``gripper_cmd`` is 0 (open) or
    1 (close).
    """

    arm_delta: tuple[float, float]
    gripper_cmd: int = GRIPPER_OPEN

    def validate(self) -> Action:
        dx, dy = self.arm_delta
        if not (np.isfinite(dx) and np.isfinite(dy)):
            raise ValidationFailure(f"non-finite arm delta {self.arm_delta}")
        if abs(dx) > MAX_DELTA or abs(dy) > MAX_DELTA:
            raise ValidationFailure(
                f"arm delta {self.arm_delta} exceeds the per-step bound {MAX_DELTA}"
            )
        if self.gripper_cmd not in (GRIPPER_OPEN, GRIPPER_CLOSE):
            raise ValidationFailure(f"gripper command must be 0 or 1, got {self.gripper_cmd}")
        return self

    def to_array(self) -> np.ndarray:
        return np.array([self.arm_delta[0], self.arm_delta[1], self.gripper_cmd], dtype=np.float32)

    @classmethod
    def from_array(cls, values) -> Action:
        return cls((float(values[0]), float(values[1])), int(round(float(values[2]))))


@dataclass(frozen=True, eq=False)
class Frame:
    """Rendered observation: an H x W x 3 array of reals in [0, 1]."""

    pixels: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValidationFailure(f"frame must be H x W x 3, got {self.pixels.shape}")
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise ValidationFailure("frame values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]
