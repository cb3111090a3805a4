"""
Orchestration shared by the management commands and the experiment sweeps.
"""

import copy
import logging
import shutil
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from core.config import RunConfig
from core.exceptions import ValidationFailure, VersionMismatch
from envsim.episodes import generate_dataset
from flowencode.pipeline import FlowConfig, attach_flows
from services.episode_store import EpisodeStore
from trainer.data import FlowEpisode
from trainer.loop import StageResult, run_stage

logger = logging.getLogger(__name__)


def _map(function, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(function, items))
    return [function(item) for item in items]


def write_dataset(
    root,
    domain: str,
    subtasks,
    count: int,
    seed: int,
    force: bool = False,
    jobs: int = 1,
    **episode_kwargs,
) -> Counter:
    """
    Generate ``count`` expert episodes of ``domain`` under ``root``.

    Returns:
        Counter: episodes written per subtask

    Raises:
        ValidationFailure: the domain folder already holds episodes and ``force`` is off
    """
    store = EpisodeStore(root)
    if not store.is_empty(domain):
        if not force:
            raise ValidationFailure(
                f"{Path(root) / domain} is not empty; pass --force to regenerate it"
            )
        logger.warning("Removing existing %s episodes under %s", domain, root)
        shutil.rmtree(Path(root) / domain)
    episodes = generate_dataset(
        domain, subtasks, count, seed, jobs=jobs, **episode_kwargs
    )
    for episode in episodes:
        store.write_episode(episode)
    store.write_manifest()
    return Counter(episode.subtask_id for episode in episodes)


@dataclass
class ExtractionSummary:
    processed: int = 0
    skipped: int = 0


def extract_dataset(root, flow_config: FlowConfig, force: bool = False, jobs: int = 1):
    """
    Append flows to every episode under ``root``.

    Episodes whose stored flows already carry this configuration and were
    computed from the demonstration now on disk are left untouched. Flows
    of a demonstration that changed since are recomputed; flows from another
    configuration are an error unless ``force`` replaces them.
    """
    store = EpisodeStore(root)
    paths = store.episode_paths()
    if not paths:
        raise ValidationFailure(f"no episodes under {root}")
    wanted = flow_config.record()
    summary = ExtractionSummary()
    pending = []
    for path in paths:
        metadata = store.read_metadata(path)
        stored = metadata.get("flow")
        if stored == wanted:
            if metadata.get("flow_source") == store.demonstration_digest(path):
                summary.skipped += 1
                continue
            logger.info("%s changed since its flows were extracted", path)
            pending.append((path, True))
        elif stored is not None and not force:
            raise VersionMismatch(
                f"{path} holds flows {stored.get('fingerprint')}; pass --force to replace them"
            )
        else:
            pending.append((path, force))

    def _extract(item):
        path, replace = item
        episode = store.read_episode(path)
        attach_flows(episode, flow_config)
        return path, replace, episode

    for path, replace, episode in _map(_extract, pending, jobs):
        store.write_flows(path, episode.tracks, episode.flows, episode.flow_meta, replace=replace)
        summary.processed += 1
    store.write_manifest()
    logger.info(
        "Extracted flows %s: %d processed, %d up to date",
        wanted["fingerprint"],
        summary.processed,
        summary.skipped,
    )
    return summary


def flow_episodes(
    episodes, flow_config: FlowConfig, model_config, jobs: int = 1
) -> list[FlowEpisode]:
    """
    Trainer view of ``episodes`` under ``flow_config``.

    Stored flows are reused when their metadata matches; otherwise flows are
    computed in memory on a copy, leaving the loaded episode untouched.
    """
    wanted = flow_config.record()

    def _one(episode):
        if episode.flow_meta != wanted:
            episode = copy.copy(episode)
            attach_flows(episode, flow_config)
        return FlowEpisode.from_episode(episode, model_config)

    return _map(_one, episodes, jobs)


def load_flow_dataset(root, domain: str, run_config: RunConfig) -> list[FlowEpisode]:
    """Episodes of ``domain`` whose stored flows match the run's flow section."""
    flow_config = run_config.flow_config()
    episodes = EpisodeStore(root).read_dataset(domain, flow_config.record())
    model_config = run_config.model_config()
    return [FlowEpisode.from_episode(episode, model_config) for episode in episodes]


def pretrain(run_config: RunConfig, episodes, run_dir, max_steps=None) -> StageResult:
    return run_stage(
        episodes,
        run_config.train_config("pretrain"),
        run_config.model_config(),
        run_config.flow_config().record(),
        run_dir,
        max_steps=max_steps,
    )


def finetune(run_config: RunConfig, episodes, run_dir, init=None, max_steps=None) -> StageResult:
    return run_stage(
        episodes,
        run_config.train_config("finetune"),
        run_config.model_config(),
        run_config.flow_config().record(),
        run_dir,
        init=init,
        max_steps=max_steps,
    )
