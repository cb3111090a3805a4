import copy
from dataclasses import replace

import numpy as np
import pytest
import torch

from core.exceptions import NumericError, ValidationFailure
from policymodel.config import ModelConfig
from policymodel.network import VisaFlowPolicy, forward


def tiny_config(**overrides):
    values = dict(d_model=16, depth=2, heads=2, h=4, n=2, k=3, d=8)
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def policy():
    """A seeded tiny policy."""
    torch.manual_seed(0)
    return VisaFlowPolicy(tiny_config()).eval()


@pytest.fixture
def inputs():
    """A batch of two windows with states."""
    generator = torch.Generator().manual_seed(1)
    return {
        "lang": torch.tensor([0, 5]),
        "flows": torch.randn(2, 4, 8, generator=generator),
        "states": torch.rand(2, 4, 3, generator=generator),
    }


class TestForward:

    def test_output_shapes(self, policy, inputs):
        """Heads produce n future FlowReps, a k-chunk and progress per step."""
        output = policy(inputs["lang"], inputs["flows"], inputs["states"])
        assert output.pred_future_flow.shape == (2, 4, 2, 8)
        assert output.action_mean.shape == (2, 4, 3, 2)
        assert output.action_logvar.shape == (2, 4, 3, 2)
        assert output.gripper_logit.shape == (2, 4, 3)
        assert output.progress.shape == (2, 4)

    def test_progress_strictly_inside_unit_interval(self, policy, inputs):
        """Progress never reaches 0 or 1, even for extreme inputs."""
        output = policy(inputs["lang"], inputs["flows"] * 1e3, inputs["states"])
        assert torch.all(output.progress > 0) and torch.all(output.progress < 1)

    def test_causal(self, policy, inputs):
        """Changing a later step leaves earlier outputs untouched."""
        before = policy(inputs["lang"], inputs["flows"], inputs["states"])
        flows = inputs["flows"].clone()
        flows[:, 3] += 5.0
        after = policy(inputs["lang"], flows, inputs["states"])
        assert torch.allclose(before.action_mean[:, :3], after.action_mean[:, :3], atol=1e-6)
        assert not torch.allclose(before.action_mean[:, 3], after.action_mean[:, 3])

    def test_observation_queries_do_not_leak(self, policy, inputs):
        """Observation queries never feed the action query."""
        other = copy.deepcopy(policy)
        with torch.no_grad():
            other.obs_queries.add_(1.0)
        a = policy(inputs["lang"], inputs["flows"], inputs["states"])
        b = other(inputs["lang"], inputs["flows"], inputs["states"])
        assert torch.allclose(a.action_mean, b.action_mean, atol=1e-6)
        assert not torch.allclose(a.pred_future_flow, b.pred_future_flow)

    def test_action_free_input(self, policy, inputs):
        """Without states the learned placeholder fills the state tokens."""
        output = policy(inputs["lang"], inputs["flows"])
        assert torch.all(torch.isfinite(output.action_mean))

    def test_shorter_window(self, policy, inputs):
        """Fewer than h steps are accepted, more are not."""
        assert policy(inputs["lang"], inputs["flows"][:, :2]).progress.shape == (2, 2)
        with pytest.raises(ValidationFailure):
            policy(inputs["lang"], torch.zeros(2, 5, 8))

    def test_goal_required_iff_conditioned(self, inputs):
        """A goal is mandatory with goal conditioning and refused without it."""
        conditioned = VisaFlowPolicy(tiny_config(goal_conditioning=True))
        with pytest.raises(ValidationFailure):
            conditioned(inputs["lang"], inputs["flows"])
        output = conditioned(inputs["lang"], inputs["flows"], goal=torch.zeros(2, 8))
        assert output.progress.shape == (2, 4)

    def test_non_finite_input(self, policy, inputs):
        """NaN inputs stop the forward pass with the offending layer."""
        flows = inputs["flows"].clone()
        flows[0, 0, 0] = float("nan")
        with pytest.raises(NumericError) as excinfo:
            policy(inputs["lang"], flows)
        assert excinfo.value.layer_index == 0


class TestRandomInputs:

    def test_progress_range_and_query_isolation(self, policy):
        """Over a hundred random windows progress stays in (0, 1) and obs queries stay private."""
        other = copy.deepcopy(policy)
        with torch.no_grad():
            other.obs_queries.normal_()
        generator = torch.Generator().manual_seed(2)
        for _ in range(100):
            steps = int(torch.randint(1, 5, (1,), generator=generator))
            scale = float(torch.rand(1, generator=generator)) * 100.0
            lang = torch.randint(0, 48, (3,), generator=generator)
            flows = torch.randn(3, steps, 8, generator=generator) * scale
            states = torch.rand(3, steps, 3, generator=generator)
            a = policy(lang, flows, states)
            assert torch.all(a.progress > 0) and torch.all(a.progress < 1)
            b = other(lang, flows, states)
            assert torch.allclose(a.action_mean, b.action_mean, atol=1e-5)
            assert torch.allclose(a.progress, b.progress, atol=1e-6)


class TestTokenSequence:

    def test_single_window(self, policy):
        """A single window yields L tokens with the layout mask."""
        flowreps = [np.zeros(8, dtype=np.float32)] * 4
        sequence = policy.build_token_sequence("reach the red block", flowreps)
        assert len(sequence) == policy.config.sequence_length
        assert sequence.tokens.shape == (policy.config.sequence_length, 16)
        assert sequence.attention_mask.shape == (len(sequence), len(sequence))

    def test_mixed_states_rejected(self, policy):
        """States are all present or all absent."""
        flowreps = [np.zeros(8, dtype=np.float32)] * 4
        states = [None, np.zeros(3), None, None]
        with pytest.raises(ValidationFailure):
            policy.build_token_sequence("reach the red block", flowreps, states)

    def test_forward_runs_the_built_sequence(self, policy):
        """Running a built sequence gives the same outputs as the batched forward pass."""
        rng = np.random.default_rng(3)
        flowreps = [rng.normal(size=8).astype(np.float32) for _ in range(4)]
        states = [rng.uniform(size=3).astype(np.float32) for _ in range(4)]
        sequence = policy.build_token_sequence("reach the red block", flowreps, states)
        from_sequence = forward(policy, sequence)
        direct = policy(
            torch.tensor([policy.config.instruction_index("reach the red block")]),
            torch.as_tensor(np.stack(flowreps))[None],
            torch.as_tensor(np.stack(states))[None],
        )
        assert torch.allclose(from_sequence.action_mean, direct.action_mean, atol=1e-6)
        assert torch.allclose(from_sequence.pred_future_flow, direct.pred_future_flow, atol=1e-6)

    def test_sequence_mask_is_applied(self, policy):
        """Opening the mask lets the first step see the last one."""
        rng = np.random.default_rng(4)
        flowreps = [rng.normal(size=8).astype(np.float32) for _ in range(4)]
        sequence = policy.build_token_sequence("reach the red block", flowreps)
        causal = forward(policy, sequence)
        opened = replace(sequence, attention_mask=np.ones_like(sequence.attention_mask))
        leaky = forward(policy, opened)
        assert not torch.allclose(causal.action_mean[:, 0], leaky.action_mean[:, 0])

    def test_token_count_must_match_layout(self, policy):
        """Tokens and layout come from the same window."""
        flowreps = [np.zeros(8, dtype=np.float32)] * 4
        sequence = policy.build_token_sequence("reach the red block", flowreps)
        with pytest.raises(ValidationFailure):
            forward(policy, replace(sequence, tokens=sequence.tokens[:-1]))


class TestParameterCount:

    def test_tiny_policy(self, policy):
        """Embeddings, two blocks and three heads of the tiny configuration."""
        assert policy.parameter_count() == 8104

    def test_goal_projection(self):
        """Goal conditioning adds one d -> d_model projection."""
        plain = VisaFlowPolicy(tiny_config()).parameter_count()
        conditioned = VisaFlowPolicy(tiny_config(goal_conditioning=True)).parameter_count()
        assert conditioned - plain == 8 * 16 + 16

    def test_grows_with_depth(self):
        """Each extra block adds its attention and MLP weights."""
        shallow = VisaFlowPolicy(tiny_config(depth=1)).parameter_count()
        assert VisaFlowPolicy(tiny_config(depth=2)).parameter_count() - shallow == 3280
