"""
Token layout of the policy input.

    [LANG, (GOAL)] + h x [Z, STATE, OBSQ x n, ACTQ]

Prefix tokens carry timestep -1. A token may attend to every non-query
token whose timestep is not later than its own; query tokens (OBSQ, ACTQ)
are attended to by nobody but themselves.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import torch

from .config import ModelConfig


class TokenKind(IntEnum):
    LANG = 0
    GOAL = 1
    Z = 2
    STATE = 3
    OBSQ = 4
    ACTQ = 5


QUERY_KINDS = (TokenKind.OBSQ, TokenKind.ACTQ)


def token_layout(config: ModelConfig, steps: int | None = None):
    """
    Kinds and timesteps of every position.

    Returns:
        tuple: (kinds, timesteps) as int64 arrays of length L
    """
    steps = config.h if steps is None else steps
    kinds = [TokenKind.LANG] + ([TokenKind.GOAL] if config.goal_conditioning else [])
    timesteps = [-1] * len(kinds)
    per_step = [TokenKind.Z, TokenKind.STATE] + [TokenKind.OBSQ] * config.n + [TokenKind.ACTQ]
    for t in range(steps):
        kinds.extend(per_step)
        timesteps.extend([t] * len(per_step))
    return np.array(kinds, dtype=np.int64), np.array(timesteps, dtype=np.int64)


def attention_mask(kinds: np.ndarray, timesteps: np.ndarray) -> np.ndarray:
    """L x L booleans, True where query row i may attend to key column j."""
    is_query = np.isin(kinds, [int(kind) for kind in QUERY_KINDS])
    not_later = timesteps[None, :] <= timesteps[:, None]
    attendable = ~is_query[None, :] | np.eye(len(kinds), dtype=bool)
    return not_later & attendable


@dataclass(eq=False)
class TokenSequence:
    """
    Embedded policy input for one sample.

    ``tokens`` already include the per-timestep positional embedding.
    """

    tokens: torch.Tensor  # L x d_model
    kinds: np.ndarray
    timestep_of_token: np.ndarray
    attention_mask: np.ndarray

    def __len__(self) -> int:
        return len(self.kinds)

    @property
    def steps(self) -> int:
        return int(np.count_nonzero(self.kinds == TokenKind.Z))

    def positions(self, kind: TokenKind) -> np.ndarray:
        return np.flatnonzero(self.kinds == kind)
