"""
Generative policy transformer.

Every timestep contributes a FlowRep token, a proprioceptive state token
(or a learned placeholder when states are unavailable), n observation
queries and one action query. Query outputs feed three heads: future
FlowReps, a Gaussian action chunk with gripper logits, and progress.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import torch
from torch import nn

from core.exceptions import NumericError, ValidationFailure

from .config import ModelConfig
from .tokens import TokenSequence, attention_mask, token_layout

PROGRESS_EPS = 1e-6


def _proprio(state) -> np.ndarray:
    return state.proprio() if hasattr(state, "proprio") else np.asarray(state)


@dataclass
class PolicyOutput:
    """
    Head outputs for every timestep of a batch.

    Shapes: pred_future_flow (B, T, n, d); action_mean and action_logvar
    (B, T, k, 2); gripper_logit (B, T, k); progress (B, T).
    """

    pred_future_flow: torch.Tensor
    action_mean: torch.Tensor
    action_logvar: torch.Tensor
    gripper_logit: torch.Tensor
    progress: torch.Tensor

    def latest(self) -> "PolicyOutput":
        """Output of the last timestep, keeping a length-1 time axis."""
        return PolicyOutput(
            pred_future_flow=self.pred_future_flow[:, -1:],
            action_mean=self.action_mean[:, -1:],
            action_logvar=self.action_logvar[:, -1:],
            gripper_logit=self.gripper_logit[:, -1:],
            progress=self.progress[:, -1:],
        )


class CausalBlock(nn.Module):
    """Pre-norm attention + MLP block with an explicit boolean attention mask."""

    def __init__(self, d_model: int, heads: int, mlp_ratio: int):
        super().__init__()
        self.heads = heads
        self.norm1 = nn.LayerNorm(d_model)
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.proj = nn.Linear(d_model, d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.mlp = nn.Sequential(
            nn.Linear(d_model, mlp_ratio * d_model),
            nn.GELU(),
            nn.Linear(mlp_ratio * d_model, d_model),
        )

    def forward(self, x: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        batch, length, width = x.shape
        head_dim = width // self.heads
        q, k, v = (
            self.qkv(self.norm1(x))
            .view(batch, length, 3, self.heads, head_dim)
            .permute(2, 0, 3, 1, 4)
        )
        scores = q @ k.transpose(-2, -1) / math.sqrt(head_dim)
        scores = scores.masked_fill(~allowed, float("-inf"))
        mixed = (scores.softmax(dim=-1) @ v).transpose(1, 2).reshape(batch, length, width)
        x = x + self.proj(mixed)
        return x + self.mlp(self.norm2(x))


class VisaFlowPolicy(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        dm = config.d_model
        self.lang_embed = nn.Embedding(len(config.vocabulary), dm)
        self.goal_proj = nn.Linear(config.d, dm) if config.goal_conditioning else None
        self.flow_proj = nn.Linear(config.d, dm)
        self.state_proj = nn.Linear(config.state_dim, dm)
        self.state_placeholder = nn.Parameter(torch.zeros(dm))
        self.obs_queries = nn.Parameter(torch.zeros(config.n, dm))
        self.act_query = nn.Parameter(torch.zeros(dm))
        self.time_embed = nn.Embedding(config.h, dm)
        self.blocks = nn.ModuleList(
            CausalBlock(dm, config.heads, config.mlp_ratio) for _ in range(config.depth)
        )
        self.norm = nn.LayerNorm(dm)
        self.obs_head = nn.Linear(dm, config.d)
        self.action_head = nn.Linear(dm, 5 * config.k)
        self.progress_head = nn.Linear(dm, 1)
        nn.init.normal_(self.state_placeholder, std=0.02)
        nn.init.normal_(self.obs_queries, std=0.02)
        nn.init.normal_(self.act_query, std=0.02)

    def parameter_count(self) -> int:
        return sum(parameter.numel() for parameter in self.parameters())

    def embed(self, lang, flows, states=None, goal=None) -> torch.Tensor:
        """
        Build the (B, L, d_model) token tensor, positional embedding included.

        Args:
            lang: (B,) instruction indices
            flows: (B, T, d) FlowReps with T <= h
            states: (B, T, state_dim) or None for action-free data
            goal: (B, d) goal FlowRep, required iff goal conditioning is on
        """
        config = self.config
        batch, steps = flows.shape[:2]
        if not 1 <= steps <= config.h:
            raise ValidationFailure(f"expected between 1 and {config.h} timesteps, got {steps}")
        if states is not None and states.shape[:2] != (batch, steps):
            raise ValidationFailure("states must cover every timestep of the window")
        if (goal is not None) != config.goal_conditioning:
            raise ValidationFailure("a goal FlowRep is needed exactly when goal conditioning is on")

        z = self.flow_proj(flows)
        if states is None:
            s = self.state_placeholder.expand(batch, steps, -1)
        else:
            s = self.state_proj(states)
        obs_q = self.obs_queries.expand(batch, steps, -1, -1)
        act_q = self.act_query.expand(batch, steps, 1, -1)
        per_step = torch.cat([z[:, :, None], s[:, :, None], obs_q, act_q], dim=2)
        per_step = per_step + self.time_embed.weight[:steps][None, :, None, :]
        body = per_step.reshape(batch, steps * config.tokens_per_step, -1)

        prefix = [self.lang_embed(lang)[:, None]]
        if config.goal_conditioning:
            prefix.append(self.goal_proj(goal)[:, None])
        return torch.cat(prefix + [body], dim=1)

    def encode_tokens(self, tokens: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        """Run the transformer trunk; raises NumericError on non-finite activations."""
        if not torch.isfinite(tokens).all():
            raise NumericError("non-finite token embeddings", layer_index=0)
        x = tokens
        for index, block in enumerate(self.blocks, start=1):
            x = block(x, allowed)
            if not torch.isfinite(x).all():
                raise NumericError(f"non-finite activations after block {index}", layer_index=index)
        return self.norm(x)

    def tokenize(self, lang, flows, states=None, goal=None) -> TokenSequence:
        """Batched sequence: (B, L, d_model) tokens with the layout and mask of the window."""
        tokens = self.embed(lang, flows, states, goal)
        kinds, timesteps = token_layout(self.config, flows.shape[1])
        return TokenSequence(
            tokens=tokens,
            kinds=kinds,
            timestep_of_token=timesteps,
            attention_mask=attention_mask(kinds, timesteps),
        )

    def apply_heads(self, hidden: torch.Tensor, steps: int) -> PolicyOutput:
        config = self.config
        batch = hidden.shape[0]
        body = hidden[:, config.prefix_length :].reshape(batch, steps, config.tokens_per_step, -1)
        obs = body[:, :, 2 : 2 + config.n]
        act = body[:, :, 2 + config.n]
        chunk = self.action_head(act).view(batch, steps, config.k, 5)
        progress = torch.sigmoid(self.progress_head(act)[..., 0])
        return PolicyOutput(
            pred_future_flow=self.obs_head(obs),
            action_mean=chunk[..., 0:2],
            action_logvar=chunk[..., 2:4],
            gripper_logit=chunk[..., 4],
            progress=PROGRESS_EPS + (1.0 - 2.0 * PROGRESS_EPS) * progress,
        )

    def forward_sequence(self, seq: TokenSequence) -> PolicyOutput:
        """
        Run the trunk under ``seq.attention_mask`` and decode the query outputs.

        ``seq.tokens`` is (L, d_model) for a single window or (B, L, d_model).
        """
        tokens = seq.tokens if seq.tokens.dim() == 3 else seq.tokens[None]
        if tokens.shape[1] != len(seq):
            raise ValidationFailure(f"{tokens.shape[1]} tokens for a layout of {len(seq)}")
        allowed = torch.as_tensor(seq.attention_mask, dtype=torch.bool, device=tokens.device)
        return self.apply_heads(self.encode_tokens(tokens, allowed), seq.steps)

    def forward(self, lang, flows, states=None, goal=None) -> PolicyOutput:
        return self.forward_sequence(self.tokenize(lang, flows, states, goal))

    def build_token_sequence(self, lang: str, flowreps, states=None, goal=None) -> TokenSequence:
        """
        Token sequence of a single window.

        Args:
            lang: instruction text
            flowreps: exactly h FlowReps (or d-vectors)
            states: h proprioceptive states, or None for every one of them
            goal: goal FlowRep when goal conditioning is on
        """
        config = self.config
        if len(flowreps) != config.h:
            raise ValidationFailure(f"expected {config.h} FlowReps, got {len(flowreps)}")
        if states is not None:
            present = [state is not None for state in states]
            if any(present) and not all(present):
                raise ValidationFailure("states must be all present or all absent")
            if not any(present):
                states = None
            elif len(states) != config.h:
                raise ValidationFailure(f"expected {config.h} states, got {len(states)}")
        dtype = next(self.parameters()).dtype
        flows = torch.as_tensor(
            np.stack([getattr(rep, "vector", rep) for rep in flowreps]), dtype=dtype
        )[None]
        state_tensor = None
        if states is not None:
            proprio = np.stack([_proprio(state) for state in states])
            state_tensor = torch.as_tensor(proprio, dtype=dtype)[None]
        goal_tensor = None
        if goal is not None:
            goal_tensor = torch.as_tensor(getattr(goal, "vector", goal), dtype=dtype)[None]
        lang_tensor = torch.tensor([config.instruction_index(lang)])
        seq = self.tokenize(lang_tensor, flows, state_tensor, goal_tensor)
        return replace(seq, tokens=seq.tokens[0])


def build_token_sequence(policy: VisaFlowPolicy, lang, flowreps, states=None, goal=None):
    return policy.build_token_sequence(lang, flowreps, states, goal)


def forward(policy: VisaFlowPolicy, seq: TokenSequence) -> PolicyOutput:
    """Per-timestep outputs of ``seq``; the latest timestep is the policy output."""
    return policy.forward_sequence(seq)
