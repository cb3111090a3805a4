import numpy as np
import pytest

from core.exceptions import ConfigurationError
from envsim.tasks import (
    SUBTASKS,
    TaskSpec,
    check_success,
    instruction_for,
    instruction_vocabulary,
)


class TestCheckSuccess:

    def test_reach(self, state_factory):
        """Reach succeeds within grasp distance of the object."""
        assert check_success(state_factory(manipulator=(0.4, 0.5)), TaskSpec("reach", "red_block"))
        assert not check_success(state_factory(), TaskSpec("reach", "red_block"))

    def test_bare_subtask_binds_to_first_object(self, state_factory):
        """A bare subtask id targets the first object and the first zone."""
        assert check_success(state_factory(manipulator=(0.4, 0.5)), "reach")
        assert not check_success(state_factory(manipulator=(0.6, 0.5)), "reach")

    def test_pick_needs_grasp_and_lift(self, state_factory):
        """Pick succeeds once the held object left its origin by the lift distance."""
        lifted = state_factory(
            manipulator=(0.42, 0.38), closed=True, held="red_block", red=(0.3, 0.38),
            red_origin=(0.3, 0.5),
        )
        resting = state_factory(manipulator=(0.42, 0.5), closed=True, held="red_block")
        assert check_success(lifted, TaskSpec("pick", "red_block"))
        assert not check_success(resting, TaskSpec("pick", "red_block"))

    def test_push_to_zone(self, state_factory):
        """Push succeeds once the object lies in the zone."""
        inside = state_factory(red=(0.5, 0.25))
        assert check_success(inside, TaskSpec("push_to_zone", "red_block", "zone_1"))
        assert not check_success(state_factory(), TaskSpec("push_to_zone", "red_block", "zone_1"))

    def test_place_requires_release(self, state_factory):
        """Place succeeds only with the object in the zone and the gripper open."""
        task = TaskSpec("place", "red_block", "zone_1")
        held = state_factory(
            manipulator=(0.62, 0.25), closed=True, held="red_block", red=(0.5, 0.25)
        )
        released = state_factory(manipulator=(0.62, 0.25), red=(0.5, 0.25))
        assert not check_success(held, task)
        assert check_success(released, task)

    def test_unknown_subtask(self):
        """Unknown subtask ids are configuration errors."""
        with pytest.raises(ConfigurationError):
            TaskSpec("stack")


class TestInstructions:

    def test_vocabulary_is_sorted_and_complete(self):
        """Every template for every catalog object, sorted and without repeats."""
        vocabulary = instruction_vocabulary()
        assert vocabulary == sorted(set(vocabulary))
        assert len(vocabulary) == 3 * len(SUBTASKS) * 4

    def test_instruction_names_the_object(self):
        """Instructions are drawn from the vocabulary and mention the object."""
        rng = np.random.default_rng(0)
        for subtask in SUBTASKS:
            instruction = instruction_for(TaskSpec(subtask, "green_ball", "zone_1"), rng)
            assert "green ball" in instruction
            assert instruction in instruction_vocabulary()
