"""
Grounder plug-ins: instruction + first frame -> entity masks.
"""

from abc import ABC, abstractmethod

import numpy as np

from core.exceptions import ConfigurationError, GroundingError

from .types import EntityMaskSet


class Grounder(ABC):
    name = "grounder"

    @abstractmethod
    def ground(self, frame: np.ndarray, instruction: str, state=None) -> EntityMaskSet:
        """Masks for frame 0; ``state`` carries ground truth when available."""


class OracleGrounder(Grounder):
    """Adapter around the environment's ground-truth grounding."""

    name = "oracle"

    def ground(self, frame, instruction, state=None):
        from envsim.grounding import oracle_ground

        if state is None:
            raise ConfigurationError("the oracle grounder needs the ground-truth world state")
        return oracle_ground(state, instruction, size=frame.shape[0])


_GROUNDERS = {"oracle": OracleGrounder}


def register_grounder(name: str, factory) -> None:
    _GROUNDERS[name] = factory


def build_grounder(key: str) -> Grounder:
    name = key.split(":", 1)[1] if key.startswith("external:") else key
    try:
        return _GROUNDERS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown grounder {key!r}") from None


def ground(frame, instruction: str, grounder: Grounder, state=None, no_hand: bool = False):
    """
    Ground the instruction on frame 0.

    The result holds exactly one manipulator mask and at least one object
    mask; with ``no_hand`` the manipulator mask is dropped instead.

    Raises:
        GroundingError: the grounder found no manipulator or no object
    """
    pixels = getattr(frame, "pixels", frame)
    masks = grounder.ground(pixels, instruction, state=state)
    if no_hand:
        if not masks.has_manipulator:
            return masks
        return masks.without_manipulator()
    if not masks.has_manipulator:
        raise GroundingError("grounder returned no manipulator mask", noun="manipulator")
    if len(masks.labels) < 2:
        raise GroundingError("grounder returned no object mask")
    return masks
