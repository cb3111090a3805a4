"""
Point trackers.

A tracker is driven incrementally: ``reset`` on the first frame with the
sampled query points, then ``advance`` once per following frame. The same
instance therefore serves offline extraction over a stored episode and
online rollouts. Points that leave the frame become invisible from that
step on and keep their last in-frame coordinate.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.exceptions import ConfigurationError, ValidationFailure

from .types import InitialPoints, PointTrackSet

logger = logging.getLogger(__name__)

PATCH_SIZE = 7
DEFAULT_SEARCH_RADIUS = 4


class Tracker(ABC):
    """
    Incremental point tracker interface.

    ``anchors`` maps entity labels to the entity's pixel position in the
    frame being processed; trackers that work from pixels alone ignore it.
    """

    name = "tracker"

    def reset(self, frame: np.ndarray, initial: InitialPoints, anchors=None) -> np.ndarray:
        if len(initial) == 0:
            raise ValidationFailure("tracking needs at least one query point")
        height, width = frame.shape[:2]
        points = np.asarray(initial.points, dtype=np.float64).copy()
        inside = (
            (points[:, 0] >= 0) & (points[:, 0] <= width - 1)
            & (points[:, 1] >= 0) & (points[:, 1] <= height - 1)
        )
        if not inside.all():
            raise ValidationFailure("initial points must lie inside frame 0")
        self.labels = np.asarray(initial.labels)
        self.shape = (height, width)
        self.current = points
        self.visible = np.ones(len(points), dtype=bool)
        self._start(frame, anchors)
        return self.current.copy()

    def advance(self, frame: np.ndarray, anchors=None) -> np.ndarray:
        proposed = self._propose(frame, anchors)
        height, width = self.shape
        inside = (
            (proposed[:, 0] >= 0) & (proposed[:, 0] <= width - 1)
            & (proposed[:, 1] >= 0) & (proposed[:, 1] <= height - 1)
        )
        self.visible &= inside
        # invisible points stay where they were last seen
        self.current = np.where(self.visible[:, None], proposed, self.current)
        return self.current.copy()

    @abstractmethod
    def _start(self, frame: np.ndarray, anchors) -> None: ...

    @abstractmethod
    def _propose(self, frame: np.ndarray, anchors) -> np.ndarray: ...


class OracleTracker(Tracker):
    """Advects every point by the ground-truth motion of its entity."""

    name = "oracle"

    def _anchor_array(self, anchors) -> np.ndarray:
        if anchors is None:
            raise ConfigurationError("the oracle tracker needs ground-truth entity anchors")
        try:
            return np.array([anchors[label] for label in self.labels], dtype=np.float64)
        except KeyError as exc:
            raise ValidationFailure(f"no anchor for entity {exc.args[0]}") from exc

    def _start(self, frame, anchors):
        self.origin = self.current.copy()
        self.anchor0 = self._anchor_array(anchors)

    def _propose(self, frame, anchors):
        return self.origin + (self._anchor_array(anchors) - self.anchor0)


def _displacement_order(radius: int) -> np.ndarray:
    """Search displacements (dy, dx) sorted by squared length, then row-major."""
    offsets = [
        (dy * dy + dx * dx, dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
    ]
    return np.array([(dy, dx) for _, dy, dx in sorted(offsets)], dtype=np.int64)


class BlockMatchTracker(Tracker):
    """
    Exhaustive 7x7 patch search by sum of squared differences.

    Each point's patch in the previous frame is compared against every
    integer displacement within ``search_radius`` in the current frame;
    ties go to the smallest displacement, then row-major order.
    """

    name = "block_match"

    def __init__(self, search_radius: int = DEFAULT_SEARCH_RADIUS):
        if search_radius < 0:
            raise ValidationFailure("search radius must be non-negative")
        self.search_radius = search_radius
        self.order = _displacement_order(search_radius)

    def _pad(self, frame: np.ndarray) -> np.ndarray:
        pad = PATCH_SIZE // 2 + self.search_radius
        pixels = np.asarray(frame, dtype=np.float64)
        return np.pad(pixels, ((pad, pad), (pad, pad), (0, 0)), mode="edge")

    def _start(self, frame, anchors):
        self.previous = self._pad(frame)

    def _propose(self, frame, anchors):
        current = self._pad(frame)
        half, radius = PATCH_SIZE // 2, self.search_radius
        pad = half + radius
        proposed = self.current.copy()
        for j, (x, y) in enumerate(self.current):
            if not self.visible[j]:
                continue
            cx, cy = int(np.floor(x + 0.5)) + pad, int(np.floor(y + 0.5)) + pad
            reference = self.previous[cy - half : cy + half + 1, cx - half : cx + half + 1]
            window = current[
                cy - half - radius : cy + half + radius + 1,
                cx - half - radius : cx + half + radius + 1,
            ]
            candidates = sliding_window_view(window, (PATCH_SIZE, PATCH_SIZE, 3))[:, :, 0]
            ssd = ((candidates - reference) ** 2).sum(axis=(2, 3, 4))
            ranked = ssd[self.order[:, 0] + radius, self.order[:, 1] + radius]
            dy, dx = self.order[int(np.argmin(ranked))]
            proposed[j] = (x + dx, y + dy)
        self.previous = current
        return proposed


_TRACKERS = {
    "oracle": OracleTracker,
    "block_match": BlockMatchTracker,
}
_EXTERNAL = {}


def register_tracker(name: str, factory) -> None:
    """Attach an external tracker, selectable as ``external:<name>``."""
    _EXTERNAL[name] = factory


def build_tracker(key: str, search_radius: int = DEFAULT_SEARCH_RADIUS) -> Tracker:
    if key == "block_match":
        return BlockMatchTracker(search_radius=search_radius)
    if key in _TRACKERS:
        return _TRACKERS[key]()
    if key.startswith("external:") and key.split(":", 1)[1] in _EXTERNAL:
        return _EXTERNAL[key.split(":", 1)[1]]()
    raise ConfigurationError(f"unknown tracker {key!r}")


def track_points(frames, initial: InitialPoints, tracker: Tracker, anchors=None) -> PointTrackSet:
    """
    Track ``initial`` points through ``frames``.

    Args:
        frames: sequence of H x W x 3 arrays (or Frames), at least two
        anchors: optional per-frame entity anchors for oracle tracking

    Returns:
        PointTrackSet: J x T trajectories with sticky visibility
    """
    frames = [getattr(frame, "pixels", frame) for frame in frames]
    if len(frames) < 2:
        raise ValidationFailure("tracking needs at least two frames")
    if anchors is not None and len(anchors) != len(frames):
        raise ValidationFailure("anchors must cover every frame")
    anchor_at = (lambda t: anchors[t]) if anchors is not None else (lambda t: None)

    trajectory = [tracker.reset(frames[0], initial, anchor_at(0))]
    visibility = [tracker.visible.copy()]
    for t in range(1, len(frames)):
        trajectory.append(tracker.advance(frames[t], anchor_at(t)))
        visibility.append(tracker.visible.copy())
    hidden = int((~visibility[-1]).sum())
    if hidden:
        logger.debug("%d of %d points left the frame", hidden, len(initial))
    return PointTrackSet(
        points=np.stack(trajectory, axis=1),
        entity_of_point=np.asarray(initial.labels),
        visibility=np.stack(visibility, axis=1),
    )
