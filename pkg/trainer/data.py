"""
Training windows over flow-annotated episodes.

A window covers h consecutive timesteps starting at ``start`` in
[-(h - 1), max(0, T - h)]. Positions before frame 0 repeat frame 0 and are
masked out of every loss; targets running past the end of the episode
repeat the last value and are masked as well. Target actions of timestep
t are the chunk actions[t : t + k].
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from core.exceptions import StageError, ValidationFailure


@dataclass(eq=False)
class FlowEpisode:
    """What the trainer sees of one episode: no frames, no hidden scene."""

    flows: np.ndarray  # T x d
    lang: int
    progress: np.ndarray  # T
    states: np.ndarray | None = None  # T x state_dim
    actions: np.ndarray | None = None  # (T - 1) x 3
    goal: np.ndarray | None = None  # d
    key: str = ""

    def __len__(self) -> int:
        return len(self.flows)

    @classmethod
    def from_episode(cls, episode, model_config) -> "FlowEpisode":
        if episode.flows is None:
            raise ValidationFailure(f"episode {episode.seed} has no extracted flows")
        return cls(
            flows=np.asarray(episode.flows, dtype=np.float32),
            lang=model_config.instruction_index(episode.instruction),
            progress=np.asarray(episode.progress, dtype=np.float32),
            states=episode.proprio,
            actions=None if episode.actions is None else np.asarray(episode.actions, np.float32),
            goal=(
                np.asarray(episode.flows[-1], dtype=np.float32)
                if model_config.goal_conditioning
                else None
            ),
            key=f"{episode.domain}/{episode.subtask_id}/{episode.seed}",
        )


def check_stage(episodes, stage: str) -> None:
    """Pretraining takes action-free data, finetuning needs actions."""
    if not episodes:
        raise StageError(f"the {stage} dataset is empty")
    with_actions = [episode.actions is not None for episode in episodes]
    if stage == "finetune" and not all(with_actions):
        raise StageError("finetuning needs target-domain episodes with actions")
    if stage == "pretrain" and any(with_actions):
        raise StageError("pretraining consumes action-free source-domain episodes")


def window(episode: FlowEpisode, start: int, h: int, n: int, k: int) -> dict[str, torch.Tensor]:
    length = len(episode)
    positions = start + np.arange(h)
    step_valid = (positions >= 0) & (positions <= length - 1)
    steps = np.clip(positions, 0, length - 1)

    ahead = positions[:, None] + np.arange(1, n + 1)[None, :]
    future_valid = step_valid[:, None] & (ahead <= length - 1)
    future = np.clip(ahead, 0, length - 1)

    sample = {
        "lang": torch.tensor(episode.lang, dtype=torch.long),
        "flows": torch.from_numpy(episode.flows[steps]),
        "future_flows": torch.from_numpy(episode.flows[future]),
        "future_valid": torch.from_numpy(future_valid),
        "progress": torch.from_numpy(episode.progress[steps]),
        "step_valid": torch.from_numpy(step_valid),
    }
    if episode.states is not None:
        sample["states"] = torch.from_numpy(np.asarray(episode.states[steps], dtype=np.float32))
    if episode.goal is not None:
        sample["goal"] = torch.from_numpy(episode.goal)
    if episode.actions is not None:
        chunk = positions[:, None] + np.arange(k)[None, :]
        action_valid = step_valid[:, None] & (chunk >= 0) & (chunk <= length - 2)
        chunk = np.clip(chunk, 0, length - 2)
        sample["actions"] = torch.from_numpy(episode.actions[chunk])
        sample["action_valid"] = torch.from_numpy(action_valid)
    return sample


def window_starts(length: int, h: int, count: int, rng: np.random.Generator) -> np.ndarray:
    low, high = -(h - 1), max(0, length - h)
    return rng.integers(low, high + 1, size=count)


class WindowDataset(Dataset):
    """Fixed list of (episode, start) windows."""

    def __init__(self, episodes, starts, model_config):
        self.episodes = episodes
        self.starts = list(starts)
        self.h, self.n, self.k = model_config.h, model_config.n, model_config.k

    def __len__(self) -> int:
        return len(self.starts)

    def __getitem__(self, index):
        episode_index, start = self.starts[index]
        return window(self.episodes[episode_index], int(start), self.h, self.n, self.k)

    @classmethod
    def sampled(cls, episodes, model_config, per_episode: int, rng: np.random.Generator):
        """``per_episode`` random windows per episode, in seeded shuffled order."""
        starts = [
            (index, start)
            for index, episode in enumerate(episodes)
            for start in window_starts(len(episode), model_config.h, per_episode, rng)
        ]
        order = rng.permutation(len(starts))
        return cls(episodes, [starts[i] for i in order], model_config)


def epoch_loader(episodes, model_config, train_config, epoch: int) -> DataLoader:
    """Windows of one epoch; the shuffle stream depends only on (seed, epoch)."""
    rng = np.random.default_rng([train_config.seed, epoch])
    dataset = WindowDataset.sampled(
        episodes, model_config, train_config.windows_per_episode, rng
    )
    return DataLoader(dataset, batch_size=train_config.batch_size, shuffle=False, num_workers=0)


def split_episodes(episodes, val_fraction: float, seed: int):
    """Seeded train / held-out split by episode."""
    if val_fraction <= 0 or len(episodes) < 2:
        return list(episodes), []
    order = np.random.default_rng([seed, 7919]).permutation(len(episodes))
    held_out = max(1, int(round(val_fraction * len(episodes))))
    val = [episodes[i] for i in sorted(order[:held_out])]
    train = [episodes[i] for i in sorted(order[held_out:])]
    return train, val


def steps_per_epoch(episodes, train_config) -> int:
    windows = len(episodes) * train_config.windows_per_episode
    return -(-windows // train_config.batch_size)
