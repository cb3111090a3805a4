import pytest

from core.exceptions import ValidationFailure
from envsim.dynamics import step
from envsim.world import CONTACT_DISTANCE, Action


class TestStep:

    def test_translation(self, world_state):
        """The manipulator moves by the arm delta."""
        after = step(world_state, Action((0.05, -0.05), 0))
        assert after.manipulator.position == pytest.approx((0.55, 0.75))
        assert after.step_index == 1

    def test_clipped_to_arena(self, state_factory):
        """Moves past the border stop on it."""
        after = step(state_factory(manipulator=(0.98, 0.5)), Action((0.05, 0.0), 0))
        assert after.manipulator.position[0] == 1.0

    def test_invalid_action_rejected(self, world_state):
        """Out-of-bound deltas never reach the world."""
        with pytest.raises(ValidationFailure):
            step(world_state, Action((0.2, 0.0), 0))

    def test_close_within_grasp_distance_attaches(self, state_factory):
        """Closing next to an object grasps it without moving it."""
        state = state_factory(manipulator=(0.42, 0.5))
        after = step(state, Action((0.0, 0.0), 1))
        assert after.manipulator.closed
        assert after.manipulator.held == "red_block"
        assert after.object("red_block").position == (0.3, 0.5)

    def test_close_far_from_objects_grasps_nothing(self, world_state):
        """Closing in free space only closes the gripper."""
        after = step(world_state, Action((0.0, 0.0), 1))
        assert after.manipulator.closed
        assert after.manipulator.held is None

    def test_held_object_follows(self, state_factory):
        """A held object moves with the manipulator."""
        state = state_factory(manipulator=(0.42, 0.5), closed=True, held="red_block")
        after = step(state, Action((0.0, -0.05), 1))
        assert after.object("red_block").position == pytest.approx((0.3, 0.45))
        assert after.manipulator.held == "red_block"

    def test_opening_releases(self, state_factory):
        """Opening the gripper drops the held object in place."""
        state = state_factory(manipulator=(0.42, 0.5), closed=True, held="red_block")
        after = step(state, Action((0.0, -0.05), 0))
        assert after.manipulator.held is None
        assert after.object("red_block").position == (0.3, 0.5)

    def test_release_under_the_manipulator(self, state_factory):
        """A released object the manipulator still overlaps is pushed out to contact distance."""
        state = state_factory(manipulator=(0.35, 0.5), closed=True, held="red_block")
        after = step(state, Action((0.0, 0.0), 0))
        assert after.manipulator.held is None
        x, y = after.object("red_block").position
        assert x == pytest.approx(0.35 - CONTACT_DISTANCE)
        assert y == pytest.approx(0.5)

    def test_push_to_contact_distance(self, state_factory):
        """Overlapping an object pushes it out to contact distance."""
        state = state_factory(manipulator=(0.45, 0.5))
        after = step(state, Action((-0.05, 0.0), 0))
        x, y = after.object("red_block").position
        assert x == pytest.approx(0.40 - CONTACT_DISTANCE)
        assert y == pytest.approx(0.5)

    def test_input_state_untouched(self, world_state):
        """Stepping builds a new state."""
        step(world_state, Action((0.05, 0.0), 1))
        assert world_state.manipulator.position == (0.5, 0.8)
        assert world_state.step_index == 0
