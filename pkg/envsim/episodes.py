"""
Episode generation with the scripted experts.

An episode is fully determined by (subtask, seed): the seed drives the
layout and the instruction template, and the expert is deterministic. The
layout stream does not depend on the domain, so the same (subtask, seed)
yields matched source and target episodes.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ValidationFailure
from setup.config import get_object_catalog

from .dynamics import step
from .expert import ScriptedExpert
from .render import DEFAULT_FRAME_SIZE, render
from .tasks import SUBTASKS, TaskSpec, check_success, instruction_for, validate_subtask
from .world import (
    DOMAINS,
    Action,
    Frame,
    ManipulatorPose,
    ObjectState,
    WorldState,
    Zone,
    distance,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP_CAP = 120
TARGET_SEED_OFFSET = 100_000
ZONE_ID = "zone_1"
_LAYOUT_ATTEMPTS = 200


@dataclass
class SceneTrace:
    """
    Ground-truth scene geometry per frame.

    It feeds the oracle grounder and the oracle tracker; learning code never
    reads it.
    """

    object_ids: tuple[str, ...]
    shapes: tuple[str, ...]
    colors: tuple[str, ...]
    origins: np.ndarray  # K x 2
    zones: tuple[Zone, ...]
    domain: str
    manipulator: np.ndarray  # T x 3: x, y, closed
    held: np.ndarray  # T, index into object_ids or -1
    objects: np.ndarray  # T x K x 2

    @classmethod
    def record(cls, states: list[WorldState]) -> "SceneTrace":
        first = states[0]
        ids = tuple(obj.id for obj in first.objects)
        return cls(
            object_ids=ids,
            shapes=tuple(obj.shape for obj in first.objects),
            colors=tuple(obj.color for obj in first.objects),
            origins=np.array([obj.origin for obj in first.objects], dtype=np.float64),
            zones=first.zones,
            domain=first.domain_tag,
            manipulator=np.array(
                [(*s.manipulator.position, float(s.manipulator.closed)) for s in states],
                dtype=np.float64,
            ),
            held=np.array(
                [ids.index(s.manipulator.held) if s.manipulator.held else -1 for s in states],
                dtype=np.int64,
            ),
            objects=np.array(
                [[obj.position for obj in s.objects] for s in states], dtype=np.float64
            ),
        )

    def __len__(self) -> int:
        return len(self.manipulator)

    def state(self, t: int) -> WorldState:
        x, y, closed = self.manipulator[t]
        held = int(self.held[t])
        objects = tuple(
            ObjectState(
                id=object_id,
                shape=shape,
                color=color,
                position=(float(self.objects[t, k, 0]), float(self.objects[t, k, 1])),
                origin=(float(self.origins[k, 0]), float(self.origins[k, 1])),
            )
            for k, (object_id, shape, color) in enumerate(
                zip(self.object_ids, self.shapes, self.colors)
            )
        )
        return WorldState(
            manipulator=ManipulatorPose(
                position=(float(x), float(y)),
                closed=bool(closed),
                held=self.object_ids[held] if held >= 0 else None,
            ),
            objects=objects,
            zones=self.zones,
            domain_tag=self.domain,
            step_index=t,
        )


@dataclass(eq=False)
class Episode:
    """
    One demonstration.

    Source-domain episodes expose neither states nor actions. Flow data
    (tracks and FlowRep vectors) is attached by the flow pipeline.
    """

    frames: np.ndarray  # T x H x W x 3 float32
    instruction: str
    subtask_id: str
    domain: str
    seed: int
    progress: np.ndarray
    trace: SceneTrace
    task: TaskSpec
    actions: np.ndarray | None = None  # (T-1) x 3
    succeeded: bool = True
    tracks: object = None
    flows: np.ndarray | None = None
    flow_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        length = len(self.frames)
        if len(self.progress) != length:
            raise ValidationFailure("progress must have one entry per frame")
        if self.domain == "source" and self.actions is not None:
            raise ValidationFailure("source-domain episodes carry no actions")
        if self.domain == "target" and (self.actions is None or len(self.actions) != length - 1):
            raise ValidationFailure("target-domain episodes need one action per transition")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def frame_size(self) -> int:
        return self.frames.shape[1]

    def frame(self, t: int) -> Frame:
        return Frame(pixels=self.frames[t], timestamp=t)

    def action(self, t: int) -> Action:
        if self.actions is None:
            raise ValidationFailure(f"{self.domain} episode has no actions")
        return Action.from_array(self.actions[t])

    def world_state(self, t: int) -> WorldState:
        return self.trace.state(t)

    @property
    def states(self) -> list[WorldState] | None:
        if self.domain == "source":
            return None
        return [self.trace.state(t) for t in range(len(self))]

    @property
    def proprio(self) -> np.ndarray | None:
        if self.domain == "source":
            return None
        return self.trace.manipulator.astype(np.float32)


def sample_layout(
    rng: np.random.Generator, domain: str = "target", num_objects: int = 2
) -> WorldState:
    """
    Draw a fresh layout: ``num_objects`` distinct catalog objects, one zone
    and the manipulator, all mutually clear of each other.
    """
    catalog = get_object_catalog()
    if not 1 <= num_objects <= len(catalog):
        raise ValidationFailure(f"num_objects must lie in [1, {len(catalog)}]")
    while True:
        chosen = rng.choice(len(catalog), size=num_objects, replace=False)
        centre = rng.uniform(0.15, 0.85, size=2)
        positions = []
        for _ in range(_LAYOUT_ATTEMPTS):
            candidate = rng.uniform(0.2, 0.8, size=2)
            if np.max(np.abs(candidate - centre)) <= 0.22:
                continue
            if any(distance(candidate, other) < 0.3 for other in positions):
                continue
            positions.append(candidate)
            if len(positions) == num_objects:
                break
        if len(positions) < num_objects:
            continue
        for _ in range(_LAYOUT_ATTEMPTS):
            manipulator = rng.uniform(0.1, 0.9, size=2)
            if all(distance(manipulator, p) >= 0.3 for p in positions):
                break
        else:
            continue
        objects = tuple(
            ObjectState(
                id=catalog[index]["id"],
                shape=catalog[index]["shape"],
                color=catalog[index]["color"],
                position=(float(p[0]), float(p[1])),
                origin=(float(p[0]), float(p[1])),
            )
            for index, p in zip(chosen, positions)
        )
        return WorldState(
            manipulator=ManipulatorPose(position=(float(manipulator[0]), float(manipulator[1]))),
            objects=objects,
            zones=(Zone.around(ZONE_ID, (float(centre[0]), float(centre[1]))),),
            domain_tag=domain,
        )


def layout_rng(subtask_id: str, seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, SUBTASKS.index(subtask_id)])


def rollout_expert(state: WorldState, task: TaskSpec, step_cap: int = DEFAULT_STEP_CAP):
    """
    Run the scripted expert from ``state`` until success or the step cap.

    Returns:
        tuple: (states, actions, succeeded)
    """
    expert = ScriptedExpert(task)
    states, actions = [state], []
    while not check_success(state, task) and len(actions) < step_cap:
        action = expert.act(state)
        state = step(state, action)
        states.append(state)
        actions.append(action)
    return states, actions, check_success(state, task)


def generate_episode(
    subtask_id: str,
    domain: str,
    seed: int,
    frame_size: int = DEFAULT_FRAME_SIZE,
    step_cap: int = DEFAULT_STEP_CAP,
    num_objects: int = 2,
) -> Episode:
    """
    Generate one expert demonstration.

    Returns:
        Episode: marked ``succeeded=False`` when the expert hit the step cap
    """
    validate_subtask(subtask_id)
    if domain not in DOMAINS:
        raise ValidationFailure(f"unknown domain {domain!r}")
    if seed < 0:
        raise ValidationFailure("seed must be non-negative")

    rng = layout_rng(subtask_id, seed)
    initial = sample_layout(rng, domain=domain, num_objects=num_objects)
    task = TaskSpec(subtask_id).bind(initial)
    instruction = instruction_for(task, rng)

    states, actions, succeeded = rollout_expert(initial, task, step_cap)
    frames = np.stack([render(state, size=frame_size).pixels for state in states])
    length = len(states)
    progress = (np.arange(length, dtype=np.float64) / (length - 1)).astype(np.float32)
    return Episode(
        frames=frames,
        instruction=instruction,
        subtask_id=subtask_id,
        domain=domain,
        seed=seed,
        progress=progress,
        trace=SceneTrace.record(states),
        task=task,
        actions=(
            np.stack([action.to_array() for action in actions]) if domain == "target" else None
        ),
        succeeded=succeeded,
    )


def dataset_plan(
    domain: str, subtasks, start: int, stop: int, seed: int
) -> list[tuple[str, int]]:
    """Episode i gets subtask i mod len(subtasks) and seed seed + i (offset for target)."""
    offset = TARGET_SEED_OFFSET if domain == "target" else 0
    return [(subtasks[i % len(subtasks)], seed + offset + i) for i in range(start, stop)]


def generate_dataset(
    domain: str,
    subtasks=SUBTASKS,
    count: int = 200,
    seed: int = 0,
    jobs: int = 1,
    **episode_kwargs,
) -> list[Episode]:
    """
    Generate ``count`` successful expert episodes.

    Failed episodes are excluded and replaced by the next seeds of the
    plan. Episode generation is pure per (subtask, seed), so episodes are
    produced in parallel when ``jobs`` > 1 without changing the result.
    """
    subtasks = [validate_subtask(subtask) for subtask in subtasks]
    if count < 1:
        raise ValidationFailure("count must be at least 1")

    def _one(item):
        subtask, episode_seed = item
        return generate_episode(subtask, domain, episode_seed, **episode_kwargs)

    kept, failed, planned = [], 0, 0
    while len(kept) < count:
        if planned >= 2 * count + 10:
            raise ValidationFailure(
                f"scripted experts failed on {failed} of {planned} {domain} episodes"
            )
        batch = dataset_plan(domain, subtasks, planned, planned + count - len(kept), seed)
        planned += len(batch)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                episodes = list(pool.map(_one, batch))
        else:
            episodes = [_one(item) for item in batch]
        failed += sum(not episode.succeeded for episode in episodes)
        kept.extend(episode for episode in episodes if episode.succeeded)

    if failed:
        logger.warning(
            "Excluded %d failed expert episodes out of %d (%s domain)", failed, planned, domain
        )
    return kept


def rerender(episode: Episode, domain: str | None = None, texture_offset: int = 0) -> Episode:
    """
    The same trajectory drawn again, optionally in the other domain or with
    a shifted background texture. Flows are not carried over.
    """
    domain = domain or episode.domain
    states = [episode.trace.state(t).with_domain(domain) for t in range(len(episode))]
    frames = np.stack(
        [
            render(state, size=episode.frame_size, texture_offset=texture_offset).pixels
            for state in states
        ]
    )
    actions = episode.actions
    if domain == "source":
        actions = None
    elif actions is None:
        raise ValidationFailure("a source episode has no actions to draw in the target domain")
    return Episode(
        frames=frames,
        instruction=episode.instruction,
        subtask_id=episode.subtask_id,
        domain=domain,
        seed=episode.seed,
        progress=episode.progress,
        trace=SceneTrace.record(states),
        task=episode.task,
        actions=actions,
        succeeded=episode.succeeded,
    )
