import numpy as np

from core.exceptions import SamplingError, ValidationFailure

from .types import EntityMaskSet, InitialPoints

DEFAULT_DENSITY = 4.0
DEFAULT_MAX_POINTS = 64


def points_for_area(area: int, density: float) -> int:
    """max(1, round(density * area / 100)), rounding halves up, never above the area."""
    count = max(1, int(np.floor(density * area / 100.0 + 0.5)))
    return min(count, area)


def sample_points(
    masks: EntityMaskSet,
    density: float = DEFAULT_DENSITY,
    seed: int = 0,
    max_points: int | None = DEFAULT_MAX_POINTS,
) -> InitialPoints:
    """
    Sample query points uniformly inside each entity mask.

    Counts follow ``points_for_area`` per entity. When the total exceeds
    ``max_points`` every count is scaled down proportionally (still at least
    one per entity) and the largest counts give up points until the total
    fits. Points are drawn without replacement and returned in row-major
    pixel order within each entity, entities in mask order.
    """
    if density <= 0:
        raise ValidationFailure(f"density must be positive, got {density}")
    areas = {}
    for label, mask in masks.masks.items():
        area = int(mask.sum())
        if area == 0:
            raise SamplingError(f"cannot sample from empty mask {label}")
        areas[label] = area

    counts = {label: points_for_area(area, density) for label, area in areas.items()}
    total = sum(counts.values())
    if max_points is not None and total > max_points:
        if max_points < len(counts):
            raise SamplingError(
                f"max_points={max_points} cannot give one point to each of {len(counts)} entities"
            )
        counts = {
            label: max(1, int(np.floor(count * max_points / total)))
            for label, count in counts.items()
        }
        # the per-entity floor of one can overshoot; trim the largest first
        for _ in range(sum(counts.values()) - max_points):
            counts[max(counts, key=counts.get)] -= 1

    rng = np.random.default_rng(seed)
    points, labels = [], []
    for label, mask in masks.masks.items():
        pixels = np.argwhere(mask)  # row-major (y, x)
        chosen = np.sort(rng.choice(len(pixels), size=counts[label], replace=False))
        picked = pixels[chosen]
        points.append(picked[:, ::-1].astype(np.float64))
        labels.extend([label] * len(picked))
    return InitialPoints(points=np.concatenate(points), labels=np.array(labels))
