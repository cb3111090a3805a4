import numpy as np
import pytest

from envsim.grounding import entity_anchors, oracle_ground, parse_object_nouns
from envsim.render import manipulator_footprint, palette_rgb, render, to_pixel
from core.exceptions import GroundingError
from flowtrace.types import MANIPULATOR


class TestRender:

    def test_frame_shape_and_range(self, world_state):
        """Frames are size x size x 3 in [0, 1]."""
        frame = render(world_state, size=64)
        assert frame.pixels.shape == (64, 64, 3)
        assert frame.pixels.min() >= 0.0 and frame.pixels.max() <= 1.0

    def test_manipulator_painted_last(self, world_state):
        """Every manipulator pixel carries the manipulator colour."""
        frame = render(world_state, size=64)
        mask = manipulator_footprint(world_state, 64)
        colour = palette_rgb("target", "manipulator")
        assert mask.any()
        assert np.all(frame.pixels[mask] == colour)

    def test_domains_share_geometry_not_appearance(self, world_state, source_state):
        """Source and target renderings of one layout differ in pixels."""
        assert not np.array_equal(render(world_state).pixels, render(source_state).pixels)

    def test_texture_offset_moves_background_only(self, source_state):
        """A texture shift changes the frame but not the object pixels."""
        plain = render(source_state).pixels
        shifted = render(source_state, texture_offset=3).pixels
        assert not np.array_equal(plain, shifted)
        x, y = (round(v) for v in to_pixel((0.7, 0.5), 64))
        assert np.array_equal(plain[y, x], shifted[y, x])


class TestOracleGrounding:

    def test_parse_object_nouns(self):
        """Nouns come back in mention order without repeats."""
        nouns = parse_object_nouns("put the Red Block next to the green ball, then the red block")
        assert nouns == ["red block", "green ball"]

    def test_masks_for_manipulator_and_object(self, world_state):
        """Grounding yields the manipulator and every mentioned object."""
        masks = oracle_ground(world_state, "pick up the green ball", 64)
        assert masks.labels == [MANIPULATOR, "object_1"]
        assert masks.entity_ids["object_1"] == "green_ball"

    def test_absent_noun(self, world_state):
        """Mentioning an object that is not in the scene is a grounding error."""
        with pytest.raises(GroundingError) as excinfo:
            oracle_ground(world_state, "lift the blue cup", 64)
        assert excinfo.value.noun == "blue cup"

    def test_unknown_noun(self, world_state):
        """An object outside the catalog is named in the grounding error."""
        with pytest.raises(GroundingError) as excinfo:
            oracle_ground(world_state, "lift the purple cup", 64)
        assert excinfo.value.noun == "purple cup"
        assert "purple cup" in str(excinfo.value)

    def test_anchors_follow_geometry(self, world_state):
        """Anchors are the pixel positions of the grounded entities."""
        masks = oracle_ground(world_state, "reach the red block", 64)
        anchors = entity_anchors(world_state, masks.entity_ids, 64)
        assert anchors["object_1"] == pytest.approx(to_pixel((0.3, 0.5), 64))
        assert anchors[MANIPULATOR] == pytest.approx(to_pixel((0.5, 0.8), 64))
