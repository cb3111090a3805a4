"""
Rasterisation of world states.

Both domains share the geometry of every entity; they differ in background
texture, palette and the manipulator glyph (a hand in the source domain, a
two-jaw gripper in the target domain). Every entity is painted in one exact
palette colour so masks can be recovered by colour matching.
"""

from functools import lru_cache

import numpy as np

from setup.config import get_palette

from .world import MANIPULATOR_RADIUS, OBJECT_RADIUS, Frame, WorldState

DEFAULT_FRAME_SIZE = 64
GRID_SPACING = 8


def palette_rgb(domain_tag: str, key: str) -> np.ndarray:
    return np.asarray(get_palette(domain_tag)[key], dtype=np.float32)


def to_pixel(position, size: int) -> tuple[float, float]:
    """Arena coordinates to pixel coordinates (pixel centres sit on integers)."""
    return (position[0] * size - 0.5, position[1] * size - 0.5)


@lru_cache(maxsize=8)
def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:size, 0:size]
    return xs.astype(np.float64), ys.astype(np.float64)


def _background(domain_tag: str, size: int, texture_offset: int) -> np.ndarray:
    xs, ys = _grid(size)
    base = palette_rgb(domain_tag, "background")
    texture = palette_rgb(domain_tag, "texture")
    if domain_tag == "source":
        # wood grain
        phase = (ys + texture_offset) * 0.7 + 2.0 * np.sin((xs + texture_offset) / 9.0)
        weight = (0.18 * (0.5 + 0.5 * np.sin(phase)))[..., None]
        return (base * (1.0 - weight) + texture * weight).astype(np.float32)
    pixels = np.broadcast_to(base, (size, size, 3)).copy()
    lines = ((xs.astype(int) + texture_offset) % GRID_SPACING == 0) | (
        (ys.astype(int) + texture_offset) % GRID_SPACING == 0
    )
    pixels[lines] = texture
    return pixels


def object_footprint(shape: str, position, size: int) -> np.ndarray:
    xs, ys = _grid(size)
    cx, cy = to_pixel(position, size)
    dx, dy = xs - cx, ys - cy
    radius = OBJECT_RADIUS * size
    if shape == "block":
        half = radius * 0.85
        return (np.abs(dx) <= half) & (np.abs(dy) <= half)
    if shape == "ball":
        return dx * dx + dy * dy <= radius * radius
    if shape == "cup":
        squared = dx * dx + dy * dy
        return (squared <= radius * radius) & (squared > (0.45 * radius) ** 2)
    raise ValueError(f"unknown object shape {shape!r}")


def _box(dx, dy, x0, x1, y0, y1):
    return (dx >= x0) & (dx <= x1) & (dy >= y0) & (dy <= y1)


def manipulator_footprint(state: WorldState, size: int) -> np.ndarray:
    """Boolean mask of the manipulator glyph for the state's domain."""
    xs, ys = _grid(size)
    cx, cy = to_pixel(state.manipulator.position, size)
    dx, dy = xs - cx, ys - cy
    unit = MANIPULATOR_RADIUS * size / 3.84
    closed = state.manipulator.closed
    if state.domain_tag == "source":
        palm = dx * dx + dy * dy <= (2.3 * unit) ** 2
        reach = 1.6 if closed else 3.4
        fingers = np.zeros_like(palm)
        for offset in (-1.5, 0.0, 1.5):
            fingers |= _box(
                dx, dy, (offset - 0.5) * unit, (offset + 0.5) * unit, -(1.5 + reach) * unit, 0.0
            )
        return palm | fingers
    body = _box(dx, dy, -1.5 * unit, 1.5 * unit, -1.5 * unit, 1.5 * unit)
    jaw = 1.2 if closed else 2.6
    jaws = _box(dx, dy, -(jaw + 0.6) * unit, -(jaw - 0.6) * unit, -3.2 * unit, 1.0 * unit) | _box(
        dx, dy, (jaw - 0.6) * unit, (jaw + 0.6) * unit, -3.2 * unit, 1.0 * unit
    )
    return body | jaws


def zone_footprint(zone, size: int) -> np.ndarray:
    xs, ys = _grid(size)
    x0, y0 = to_pixel((zone.x0, zone.y0), size)
    x1, y1 = to_pixel((zone.x1, zone.y1), size)
    return (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)


def render(state: WorldState, size: int = DEFAULT_FRAME_SIZE, texture_offset: int = 0) -> Frame:
    """
    Rasterise a state into a frame.

    Painting order is background, zones, objects, manipulator, so the
    manipulator glyph is never occluded.
    """
    domain = state.domain_tag
    pixels = _background(domain, size, texture_offset)
    zone_colour = palette_rgb(domain, "zone")
    for zone in state.zones:
        pixels[zone_footprint(zone, size)] = zone_colour
    for obj in state.objects:
        pixels[object_footprint(obj.shape, obj.position, size)] = palette_rgb(domain, obj.color)
    pixels[manipulator_footprint(state, size)] = palette_rgb(domain, "manipulator")
    return Frame(pixels=pixels, timestamp=state.step_index)
