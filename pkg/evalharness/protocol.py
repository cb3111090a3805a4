"""
Chained-subtask evaluation.

Every sequence draws a chain of subtasks (with replacement) and a fresh
target-domain layout from its own seed. The policy attempts the subtasks
one after the other in the same world, which is never reset in between;
the chain stops at the first subtask not solved within the step cap.
Success is judged on the world state alone.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from envsim.dynamics import step
from envsim.episodes import DEFAULT_STEP_CAP, rollout_expert, sample_layout
from envsim.render import DEFAULT_FRAME_SIZE, render
from envsim.tasks import SUBTASKS, TaskSpec, check_success, instruction_for
from envsim.world import WorldState
from flowencode.pipeline import FlowConfig, FlowStream
from policymodel.checkpoints import check_flow_meta, load_checkpoint
from policymodel.runner import PolicyRunner

from .metrics import CHAIN_LENGTH, EvalReport, SequenceRecord

logger = logging.getLogger(__name__)


def sequence_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def bind_subtask(subtask: str, state: WorldState, rng: np.random.Generator) -> TaskSpec:
    """
    Bind ``subtask`` to an object for which it is not already solved.

    When every object already satisfies it (a block already sitting in the
    zone, say) the next subtask in the catalog order is used instead.
    The returned task carries the subtask actually bound.
    """
    zone_id = state.zones[0].id
    start = SUBTASKS.index(subtask)
    for offset in range(len(SUBTASKS)):
        candidate = SUBTASKS[(start + offset) % len(SUBTASKS)]
        open_tasks = [
            TaskSpec(candidate, obj.id, zone_id)
            for obj in state.objects
            if not check_success(state, TaskSpec(candidate, obj.id, zone_id))
        ]
        if open_tasks:
            if candidate != subtask:
                logger.info(
                    "every object already satisfies %s; binding %s instead", subtask, candidate
                )
            return open_tasks[int(rng.integers(len(open_tasks)))]
    return TaskSpec(subtask, state.objects[0].id, zone_id)


def goal_flowrep(
    state: WorldState,
    task: TaskSpec,
    instruction: str,
    flow_config: FlowConfig,
    frame_size: int = DEFAULT_FRAME_SIZE,
    step_cap: int = DEFAULT_STEP_CAP,
):
    """FlowRep of the last frame of the scripted expert solving ``task`` from ``state``."""
    states, _, _ = rollout_expert(state, task, step_cap)
    stream = FlowStream(flow_config, instruction, frame_size=frame_size)
    flowrep = stream.start(render(states[0], frame_size), states[0])
    for later in states[1:]:
        flowrep = stream.push(render(later, frame_size), later)
    return flowrep


def attempt_subtask(
    policy,
    state: WorldState,
    task: TaskSpec,
    instruction: str,
    flow_config: FlowConfig,
    frame_size: int = DEFAULT_FRAME_SIZE,
    step_cap: int = DEFAULT_STEP_CAP,
    goal=None,
) -> tuple[WorldState, bool]:
    """
    Let the policy run one subtask until success or the step cap.

    The instruction is grounded again on the first frame of the subtask.

    Returns:
        tuple: (final state, succeeded)
    """
    stream = FlowStream(flow_config, instruction, frame_size=frame_size)
    runner = PolicyRunner(policy, instruction, goal=goal)
    flowrep = stream.start(render(state, frame_size), state)
    for _ in range(step_cap):
        state = step(state, runner.act(flowrep, state.proprio()))
        if check_success(state, task):
            return state, True
        flowrep = stream.push(render(state, frame_size), state)
    return state, False


def run_sequence(
    policy,
    flow_config: FlowConfig,
    seed: int,
    index: int,
    chain_length: int = CHAIN_LENGTH,
    step_cap: int = DEFAULT_STEP_CAP,
    frame_size: int = DEFAULT_FRAME_SIZE,
    num_objects: int = 2,
) -> SequenceRecord:
    rng = sequence_rng(seed, index)
    sampled = [str(subtask) for subtask in rng.choice(SUBTASKS, size=chain_length)]
    state = sample_layout(rng, domain="target", num_objects=num_objects)
    attempted, completed = [], 0
    for subtask in sampled:
        state = state.with_origins_reset()
        task = bind_subtask(subtask, state, rng)
        instruction = instruction_for(task, rng)
        attempted.append(task.subtask)
        goal = None
        if policy.config.goal_conditioning:
            goal = goal_flowrep(state, task, instruction, flow_config, frame_size, step_cap)
        state, succeeded = attempt_subtask(
            policy, state, task, instruction, flow_config, frame_size, step_cap, goal
        )
        if not succeeded:
            break
        completed += 1
    chain = tuple(attempted) + tuple(sampled[len(attempted):])
    return SequenceRecord(chain=chain, completed=completed, seed=seed, index=index)


def evaluate(
    checkpoint,
    n_sequences: int = 100,
    seed: int = 0,
    chain_length: int = CHAIN_LENGTH,
    step_cap: int = DEFAULT_STEP_CAP,
    frame_size: int = DEFAULT_FRAME_SIZE,
    num_objects: int = 2,
    variant: str = "full",
    jobs: int = 1,
) -> EvalReport:
    """
    Evaluate a finetuned checkpoint on ``n_sequences`` seeded chains.

    The flow pipeline is rebuilt from the metadata stored in the checkpoint,
    so rollouts see exactly the features the policy was trained on.

    Raises:
        VersionMismatch: the checkpoint was written by another pipeline or model version
    """
    policy, payload = load_checkpoint(checkpoint)
    flow_config = FlowConfig.from_dict(payload["flow"])
    check_flow_meta(payload, flow_config.metadata(), checkpoint)
    policy.eval()

    def _one(index):
        return run_sequence(
            policy, flow_config, seed, index, chain_length, step_cap, frame_size, num_objects
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_one, range(n_sequences)))
    else:
        records = [_one(index) for index in range(n_sequences)]

    report = EvalReport.from_records(records, chain_length, variant=variant, seed=seed)
    logger.info(
        "Evaluated %s over %d sequences (seed %s): avg_len %.3f",
        variant,
        n_sequences,
        seed,
        report.avg_len,
    )
    return report
