from dataclasses import dataclass

import numpy as np

from core.exceptions import ValidationFailure
from envsim.world import Frame


@dataclass(eq=False)
class AmplificationMask:
    """
    Binary mask of the pixels within ``radius`` of a tracked point.

    Attributes:
        values: H x W array of 0/1 (uint8)
        radius: disk radius in pixels
        source_points: the point slice the mask was built from
    """

    values: np.ndarray
    radius: float
    source_points: np.ndarray


def build_mask(points, radius: float, height: int, width: int) -> AmplificationMask:
    """
    M(x, y) = 1 iff some point p has ||(x, y) - p|| <= radius.

    (x, y) are integer pixel centres. Points outside the frame still mark
    the part of their disk that falls inside it.
    """
    if radius <= 0:
        raise ValidationFailure(f"radius must be positive, got {radius}")
    if height < 1 or width < 1:
        raise ValidationFailure("mask dimensions must be at least 1")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    values = np.zeros((height, width), dtype=bool)
    reach = int(np.ceil(radius))
    limit = radius * radius
    for px, py in points:
        x0, x1 = max(0, int(np.floor(px)) - reach), min(width - 1, int(np.ceil(px)) + reach)
        y0, y1 = max(0, int(np.floor(py)) - reach), min(height - 1, int(np.ceil(py)) + reach)
        if x0 > x1 or y0 > y1:
            continue
        xs = np.arange(x0, x1 + 1, dtype=np.float64)
        ys = np.arange(y0, y1 + 1, dtype=np.float64)
        dx = xs[None, :] - px
        dy = ys[:, None] - py
        values[y0 : y1 + 1, x0 : x1 + 1] |= dx * dx + dy * dy <= limit
    return AmplificationMask(
        values=values.astype(np.uint8), radius=float(radius), source_points=points
    )


def amplify(frame: Frame, mask: AmplificationMask, alpha: float) -> Frame:
    """
    out = clip(frame * (1 + alpha * M), 0, 1) on every channel.

    Pixels outside the mask are passed through untouched.
    """
    if alpha < 0:
        raise ValidationFailure(f"alpha must be non-negative, got {alpha}")
    pixels = frame.pixels
    if pixels.shape[:2] != mask.values.shape:
        raise ValidationFailure(
            f"frame {pixels.shape[:2]} and mask {mask.values.shape} dimensions differ"
        )
    selected = mask.values.astype(bool)
    out = pixels.copy()
    gain = pixels.dtype.type(1.0 + alpha)
    out[selected] = np.clip(pixels[selected] * gain, 0.0, 1.0)
    return Frame(pixels=out, timestamp=frame.timestamp)
