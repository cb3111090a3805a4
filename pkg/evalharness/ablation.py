"""
Ablation matrix and data-scaling sweep.

Every variant is trained and evaluated once per seed with the same data,
the same budgets and the same evaluation seeds; only the configuration
fields that define the variant differ.
"""

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from core.config import RunConfig
from core.exceptions import ConfigurationError, ValidationFailure
from core.workflow import finetune, flow_episodes, pretrain

from .metrics import EvalReport
from .protocol import evaluate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationSpec:
    variant: str
    overrides: dict = field(default_factory=dict)
    pretrain: bool = True

    def apply(self, run_config: RunConfig) -> RunConfig:
        return run_config.with_overrides(self.overrides) if self.overrides else run_config


VARIANTS = (
    AblationSpec("full"),
    AblationSpec("no_pretrain", pretrain=False),
    AblationSpec("alpha_zero", {"flow": {"alpha": 0.0}}),
    AblationSpec("no_trace", {"flow": {"static_mask": True}}),
    AblationSpec("no_hand", {"flow": {"drop_manipulator": True}}),
)


def ablation_spec(variant: str) -> AblationSpec:
    for spec in VARIANTS:
        if spec.variant == variant:
            return spec
    raise ConfigurationError(
        f"unknown ablation variant {variant!r}; choose from {[s.variant for s in VARIANTS]}"
    )


def seeded(run_config: RunConfig, seed: int) -> RunConfig:
    """The run configuration with both training stages seeded with ``seed``."""
    return run_config.with_overrides(
        {"train": {"pretrain": {"seed": seed}, "finetune": {"seed": seed}}}
    )


class FlowCache:
    """Trainer datasets per (domain, flow fingerprint), computed once per sweep."""

    def __init__(self, source, target, jobs: int = 1):
        self.raw = {"source": source, "target": target}
        self.jobs = jobs
        self._cache = {}

    def dataset_key(self, domain: str) -> str:
        """Digest of the episode identities of one domain."""
        keys = "\n".join(f"{e.domain}/{e.subtask_id}/{e.seed}" for e in self.raw[domain])
        return hashlib.sha256(keys.encode("utf-8")).hexdigest()[:12]

    def get(self, domain: str, run_config: RunConfig):
        flow_config = run_config.flow_config()
        model_config = run_config.model_config()
        key = (domain, flow_config.fingerprint(), model_config.goal_conditioning)
        if key not in self._cache:
            self._cache[key] = flow_episodes(self.raw[domain], flow_config, model_config, self.jobs)
        return self._cache[key]


def evaluate_run(run_config: RunConfig, checkpoint, n_sequences, seed, variant, jobs=1):
    """Evaluate with the environment and protocol settings of ``run_config``."""
    eval_section = run_config.section("eval")
    env_section = run_config.section("env")
    return evaluate(
        checkpoint,
        n_sequences,
        seed,
        chain_length=eval_section["chain_length"],
        step_cap=eval_section["step_cap"],
        frame_size=env_section["frame_size"],
        num_objects=env_section["num_objects"],
        variant=variant,
        jobs=jobs,
    )


def pretrained_checkpoint(run_config: RunConfig, cache: FlowCache, runs_root, max_steps=None):
    """Pretrain once per configuration; later calls reuse the checkpoint on disk."""
    run_dir = run_config.run_dir(runs_root, "pretrain", inputs=(cache.dataset_key("source"),))
    checkpoint = run_dir / "best.pt"
    if checkpoint.exists():
        logger.info("Reusing pretrained checkpoint %s", checkpoint)
        return checkpoint
    run_config.echo(run_dir)
    return pretrain(run_config, cache.get("source", run_config), run_dir, max_steps).best_checkpoint


@dataclass
class AblationResult:
    pooled: list[EvalReport]
    per_seed: list[EvalReport]


def run_variant(
    spec: AblationSpec,
    run_config: RunConfig,
    cache: FlowCache,
    seed: int,
    n_sequences: int,
    runs_root,
    jobs: int = 1,
    max_steps=None,
) -> EvalReport:
    variant_config = seeded(spec.apply(run_config), seed)
    init = None
    if spec.pretrain:
        init = pretrained_checkpoint(variant_config, cache, runs_root, max_steps)
    inputs = (spec.variant, cache.dataset_key("target"), init or "scratch")
    run_dir = variant_config.run_dir(runs_root, "finetune", inputs=inputs)
    variant_config.echo(run_dir, {"variant": spec.variant, "init": str(init) if init else None})
    episodes = cache.get("target", variant_config)
    result = finetune(variant_config, episodes, run_dir, init, max_steps)
    return evaluate_run(
        variant_config, result.best_checkpoint, n_sequences, seed, spec.variant, jobs
    )


def run_ablation_matrix(
    run_config: RunConfig,
    source,
    target,
    runs_root,
    n_sequences: int | None = None,
    seeds=None,
    variants=None,
    jobs: int = 1,
    max_steps=None,
) -> AblationResult:
    """
    Train and evaluate every ablation variant over the evaluation seeds.

    Seed s trains both stages with seed s and evaluates with seed s, so
    variants are compared on paired evaluation chains.

    Args:
        source, target: raw episodes; flows are computed per variant
        variants: subset of variant names (all five by default)
    """
    eval_section = run_config.section("eval")
    n_sequences = n_sequences or eval_section["n_sequences"]
    seeds = list(seeds if seeds is not None else eval_section["seeds"])
    specs = [ablation_spec(name) for name in variants] if variants else list(VARIANTS)
    cache = FlowCache(source, target, jobs)

    per_seed, pooled = [], []
    for spec in specs:
        reports = [
            run_variant(spec, run_config, cache, seed, n_sequences, runs_root, jobs, max_steps)
            for seed in seeds
        ]
        per_seed.extend(reports)
        pooled.append(EvalReport.pooled(reports, spec.variant))
        logger.info("Variant %s: pooled avg_len %.3f", spec.variant, pooled[-1].avg_len)
    return AblationResult(pooled=pooled, per_seed=per_seed)


def scaling_counts(total: int, counts=None, fractions=None) -> list[int]:
    """
    Demonstration counts of the sweep, from explicit counts or fractions of ``total``.

    Raises:
        ValidationFailure: a count is zero or exceeds the dataset
    """
    if fractions is not None:
        counts = [int(np.floor(fraction * total)) for fraction in fractions]
    counts = sorted(int(count) for count in counts)
    if not counts or counts[0] < 1:
        raise ValidationFailure(f"every scaling subset needs at least one episode, got {counts}")
    if counts[-1] > total:
        raise ValidationFailure(f"cannot draw {counts[-1]} demonstrations from {total}")
    return counts


def nested_subsets(total: int, counts, seed: int) -> dict[int, list[int]]:
    """Episode indices per count; each subset contains every smaller one."""
    order = np.random.default_rng([seed, 31]).permutation(total)
    return {count: sorted(int(i) for i in order[:count]) for count in counts}


def run_data_scaling(
    run_config: RunConfig,
    source,
    target,
    runs_root,
    counts=None,
    fractions=None,
    seed: int | None = None,
    n_sequences: int | None = None,
    jobs: int = 1,
    max_steps=None,
) -> list[EvalReport]:
    """
    Finetune from one pretrained checkpoint on nested target subsets and
    evaluate each with the same evaluation seed.
    """
    eval_section = run_config.section("eval")
    seed = eval_section["seed"] if seed is None else seed
    n_sequences = n_sequences or eval_section["n_sequences"]
    if counts is None and fractions is None:
        counts = eval_section["scaling_counts"]
    counts = scaling_counts(len(target), counts, fractions)
    width = len(str(counts[-1]))

    run_config = seeded(run_config, seed)
    cache = FlowCache(source, target, jobs)
    init = pretrained_checkpoint(run_config, cache, runs_root, max_steps)
    target_flows = cache.get("target", run_config)

    reports = []
    for count, indices in nested_subsets(len(target), counts, seed).items():
        variant = f"demos_{count:0{width}d}"
        inputs = (variant, cache.dataset_key("target"), init)
        run_dir = run_config.run_dir(runs_root, "finetune", inputs=inputs)
        run_config.echo(run_dir, {"variant": variant, "init": str(init), "episodes": indices})
        subset = [target_flows[i] for i in indices]
        result = finetune(run_config, subset, run_dir, init, max_steps)
        reports.append(
            evaluate_run(run_config, result.best_checkpoint, n_sequences, seed, variant, jobs)
        )
    return reports

