from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ValidationFailure

MANIPULATOR = "manipulator"


def object_label(k: int) -> str:
    """Label of the k-th grounded object, counting from 1."""
    return f"object_{k}"


@dataclass(eq=False)
class EntityMaskSet:
    """
    Frame-0 segmentation of the grounded entities.

    Attributes:
        masks: label -> H x W boolean mask, in grounding order
        frame_index: frame the masks were computed on
        entity_ids: label -> world entity id (used by the oracle tracker)
    """

    masks: dict[str, np.ndarray]
    frame_index: int = 0
    entity_ids: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.masks:
            raise ValidationFailure("an entity mask set needs at least one mask")
        shapes = {mask.shape for mask in self.masks.values()}
        if len(shapes) != 1:
            raise ValidationFailure(f"masks must share frame dimensions, got {sorted(shapes)}")
        for label, mask in self.masks.items():
            if mask.ndim != 2:
                raise ValidationFailure(f"mask {label} must be two-dimensional")
            if not mask.any():
                raise ValidationFailure(f"mask {label} has no set pixel")

    @property
    def labels(self) -> list[str]:
        return list(self.masks)

    @property
    def shape(self) -> tuple[int, int]:
        return next(iter(self.masks.values())).shape

    @property
    def has_manipulator(self) -> bool:
        return MANIPULATOR in self.masks

    def without_manipulator(self) -> "EntityMaskSet":
        masks = {label: mask for label, mask in self.masks.items() if label != MANIPULATOR}
        ids = {label: entity for label, entity in self.entity_ids.items() if label != MANIPULATOR}
        return EntityMaskSet(masks=masks, frame_index=self.frame_index, entity_ids=ids)


@dataclass(eq=False)
class InitialPoints:
    """Sampled query points: J x 2 pixel coordinates (x, y) with entity labels."""

    points: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


@dataclass(eq=False)
class PointTrackSet:
    """
    Point trajectories over a frame sequence.

    Attributes:
        points: J x T x 2 pixel coordinates (x, y)
        entity_of_point: length-J entity labels
        visibility: J x T booleans; invisible points keep their last coordinate
    """

    points: np.ndarray
    entity_of_point: np.ndarray
    visibility: np.ndarray

    def __post_init__(self):
        if self.points.ndim != 3 or self.points.shape[2] != 2 or self.points.shape[0] < 1:
            raise ValidationFailure(
                f"points must be J x T x 2 with J >= 1, got {self.points.shape}"
            )
        if self.visibility.shape != self.points.shape[:2]:
            raise ValidationFailure("visibility must be J x T")
        if len(self.entity_of_point) != self.points.shape[0]:
            raise ValidationFailure("entity_of_point must have one label per point")

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def num_frames(self) -> int:
        return self.points.shape[1]

    def at(self, t: int) -> np.ndarray:
        return self.points[:, t, :]
