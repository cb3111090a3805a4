import logging

import numpy as np
import pytest
import torch

from envsim.tasks import SUBTASKS, check_success
from evalharness import protocol
from evalharness.protocol import bind_subtask, evaluate, run_sequence, sequence_rng
from flowencode.pipeline import FlowConfig
from policymodel.checkpoints import save_checkpoint
from policymodel.config import ModelConfig
from policymodel.network import VisaFlowPolicy


@pytest.fixture
def flow_config():
    """A small flow pipeline for quick rollouts."""
    return FlowConfig(embed_dim=16, encoder_depth=1, encoder_heads=2)


@pytest.fixture
def policy():
    """An untrained seeded policy on 16-wide FlowReps."""
    torch.manual_seed(0)
    return VisaFlowPolicy(ModelConfig(d_model=16, depth=1, heads=2, h=2, n=1, k=2, d=16)).eval()


class TestBindSubtask:

    def test_skips_solved_objects(self, state_factory):
        """An object already in the zone is not asked to be pushed there."""
        state = state_factory(red=(0.5, 0.2))
        for seed in range(5):
            task = bind_subtask("push_to_zone", state, np.random.default_rng(seed))
            assert task.object_id == "green_ball"
            assert not check_success(state, task)

    def test_falls_through_to_next_subtask(self, state_factory):
        """When every object is solved the next subtask type is used."""
        state = state_factory(red=(0.45, 0.2), green=(0.55, 0.25))
        task = bind_subtask("push_to_zone", state, np.random.default_rng(0))
        assert task.subtask == SUBTASKS[SUBTASKS.index("push_to_zone") + 1]

    def test_fall_through_is_logged(self, state_factory, caplog, monkeypatch):
        """Switching subtask type is reported with both names."""
        monkeypatch.setattr(logging.getLogger("evalharness"), "propagate", True)
        state = state_factory(red=(0.45, 0.2), green=(0.55, 0.25))
        with caplog.at_level(logging.INFO, logger="evalharness.protocol"):
            bind_subtask("push_to_zone", state, np.random.default_rng(0))
        assert "push_to_zone" in caplog.text
        assert "binding pick instead" in caplog.text


class TestRunSequence:

    def test_deterministic_chain(self, policy, flow_config):
        """The same (seed, index) draws the same chain and outcome."""
        first = run_sequence(policy, flow_config, 0, 3, step_cap=2, frame_size=32)
        second = run_sequence(policy, flow_config, 0, 3, step_cap=2, frame_size=32)
        assert first == second
        assert len(first.chain) == 5
        assert set(first.chain) <= set(SUBTASKS)

    def test_untrained_policy_fails_first_subtask(self, policy, flow_config):
        """Two steps are never enough from a fresh layout."""
        record = run_sequence(policy, flow_config, 0, 0, step_cap=2, frame_size=32)
        assert record.completed == 0

    def test_record_names_bound_subtask(self, policy, flow_config, monkeypatch):
        """The recorded chain holds the subtask that was bound, not the one drawn."""
        drawn, bound = [], []

        def bind_next(subtask, state, rng):
            drawn.append(subtask)
            following = SUBTASKS[(SUBTASKS.index(subtask) + 1) % len(SUBTASKS)]
            bound.append(bind_subtask(following, state, rng))
            return bound[-1]

        monkeypatch.setattr(protocol, "bind_subtask", bind_next)
        record = run_sequence(policy, flow_config, 0, 1, step_cap=2, frame_size=32)
        assert bound[0].subtask != drawn[0]
        assert record.chain[0] == bound[0].subtask

    def test_sequence_streams_differ(self):
        """Each sequence index owns an independent stream."""
        assert sequence_rng(0, 0).random() != sequence_rng(0, 1).random()


class TestEvaluate:

    def test_report_from_checkpoint(self, policy, flow_config, tmp_path):
        """A checkpoint evaluates into a report with one record per sequence."""
        path = save_checkpoint(tmp_path / "best.pt", policy, "finetuned", flow_config.record())
        report = evaluate(path, n_sequences=3, seed=1, step_cap=2, frame_size=32, variant="smoke")
        assert report.n_sequences == 3
        assert report.variant == "smoke"
        assert [record.index for record in report.per_sequence_records] == [0, 1, 2]
        assert report.avg_len == pytest.approx(sum(report.sr))

    def test_parallel_matches_serial(self, policy, flow_config, tmp_path):
        """Worker threads do not change the records."""
        path = save_checkpoint(tmp_path / "best.pt", policy, "finetuned", flow_config.record())
        serial = evaluate(path, n_sequences=2, step_cap=2, frame_size=32)
        parallel = evaluate(path, n_sequences=2, step_cap=2, frame_size=32, jobs=2)
        assert serial.per_sequence_records == parallel.per_sequence_records
