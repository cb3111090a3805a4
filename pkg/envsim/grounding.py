"""
Ground-truth entity grounding.

Object nouns ("<colour> <shape>") are parsed from the instruction with the
catalog vocabulary and resolved against the objects present in the state;
masks are rasterised from the true geometry with the same footprints the
renderer paints.
"""

import re

from core.exceptions import GroundingError
from flowtrace.types import MANIPULATOR, EntityMaskSet, object_label
from setup.config import get_object_catalog

from .render import DEFAULT_FRAME_SIZE, manipulator_footprint, object_footprint, to_pixel
from .world import WorldState

ARTICLES = ("the", "a", "an")


def _noun_pattern() -> re.Pattern:
    catalog = get_object_catalog()
    colours = sorted({entry["color"] for entry in catalog})
    shapes = sorted({entry["shape"] for entry in catalog})
    return re.compile(rf"\b({'|'.join(colours)})\s+({'|'.join(shapes)})\b")


def _shape_pattern() -> re.Pattern:
    shapes = sorted({entry["shape"] for entry in get_object_catalog()})
    return re.compile(rf"\b([a-z]+)\s+({'|'.join(shapes)})\b")


def unknown_object_nouns(instruction: str) -> list[str]:
    """Mentions of a catalog shape whose preceding word is not a catalog colour."""
    colours = {entry["color"] for entry in get_object_catalog()}
    return [
        f"{word} {shape}"
        for word, shape in _shape_pattern().findall(instruction.lower())
        if word not in colours and word not in ARTICLES
    ]


def parse_object_nouns(instruction: str) -> list[str]:
    """Object nouns in order of mention, without repeats."""
    nouns = []
    for colour, shape in _noun_pattern().findall(instruction.lower()):
        noun = f"{colour} {shape}"
        if noun not in nouns:
            nouns.append(noun)
    return nouns


def oracle_ground(
    state: WorldState, instruction: str, size: int = DEFAULT_FRAME_SIZE
) -> EntityMaskSet:
    """
    Masks for the manipulator and every object the instruction mentions.

    Raises:
        GroundingError: a mentioned object is unknown or absent, or nothing is mentioned
    """
    unknown = unknown_object_nouns(instruction)
    if unknown:
        raise GroundingError(f"instruction mentions an unknown {unknown[0]!r}", noun=unknown[0])
    nouns = parse_object_nouns(instruction)
    if not nouns:
        raise GroundingError(f"no object noun found in instruction {instruction!r}")
    masks = {MANIPULATOR: manipulator_footprint(state, size)}
    entity_ids = {MANIPULATOR: MANIPULATOR}
    for k, noun in enumerate(nouns, start=1):
        matches = [obj for obj in state.objects if obj.noun == noun]
        if not matches:
            raise GroundingError(f"instruction mentions an absent {noun!r}", noun=noun)
        obj = matches[0]
        label = object_label(k)
        masks[label] = object_footprint(obj.shape, obj.position, size)
        entity_ids[label] = obj.id
    return EntityMaskSet(masks=masks, frame_index=state.step_index, entity_ids=entity_ids)


def entity_anchors(state: WorldState, entity_ids: dict[str, str], size: int = DEFAULT_FRAME_SIZE):
    """Pixel position of every grounded entity in ``state``, keyed by label."""
    anchors = {}
    for label, entity in entity_ids.items():
        if entity == MANIPULATOR:
            position = state.manipulator.position
        else:
            position = state.object(entity).position
        anchors[label] = to_pixel(position, size)
    return anchors
