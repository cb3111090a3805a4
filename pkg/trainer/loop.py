"""
Stage runner shared by pretraining and finetuning.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from core.exceptions import NumericError
from policymodel.checkpoints import init_from_checkpoint, save_checkpoint
from policymodel.network import VisaFlowPolicy

from .data import check_stage, epoch_loader, split_episodes, steps_per_epoch
from .losses import flow_loss, stage_loss
from .schedule import build_optimizer

logger = logging.getLogger(__name__)

CHECKPOINT_STAGE = {"pretrain": "pretrained", "finetune": "finetuned"}
HELD_OUT_EPOCH = 1_000_003
LOG_NAME = "train_log.jsonl"


@dataclass
class StageResult:
    run_dir: Path
    best_checkpoint: Path
    final_checkpoint: Path
    steps: int
    best_val_loss: float | None = None
    epochs: list[dict] = field(default_factory=list)


def forward_batch(policy: VisaFlowPolicy, batch: dict):
    return policy(batch["lang"], batch["flows"], batch.get("states"), batch.get("goal"))


def held_out_loss(policy, episodes, model_config, train_config) -> float | None:
    """Mean stage loss over a fixed, seeded set of held-out windows."""
    if not episodes:
        return None
    loader = epoch_loader(episodes, model_config, train_config, HELD_OUT_EPOCH)
    policy.eval()
    totals, sizes = [], []
    with torch.no_grad():
        for batch in loader:
            report = stage_loss(forward_batch(policy, batch), batch, train_config)
            totals.append(float(report.total))
            sizes.append(len(batch["lang"]))
    policy.train()
    return float(np.average(totals, weights=sizes))


def held_out_flow_metrics(policy, episodes, model_config, train_config) -> tuple[float, float]:
    """
    Flow-prediction loss on held-out windows and the constant-predictor baseline.

    The baseline is the variance of the valid targets, i.e. the error of
    predicting each dimension's mean everywhere.

    Returns:
        tuple: (loss, baseline)
    """
    loader = epoch_loader(episodes, model_config, train_config, HELD_OUT_EPOCH)
    policy.eval()
    predictions, targets, valid = [], [], []
    with torch.no_grad():
        for batch in loader:
            predictions.append(forward_batch(policy, batch).pred_future_flow)
            targets.append(batch["future_flows"])
            valid.append(batch["future_valid"])
    prediction, target, mask = torch.cat(predictions), torch.cat(targets), torch.cat(valid)
    loss = float(flow_loss(prediction, target, mask))
    values = target[mask]  # (entries, d)
    baseline = float(((values - values.mean(dim=0)) ** 2).mean())
    return loss, baseline


def _dump_batch(run_dir: Path, batch: dict, batch_id: int) -> Path:
    path = run_dir / "diagnostics" / f"batch_{batch_id:06d}.pt"
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(batch, path)
    return path


def run_stage(
    episodes,
    train_config,
    model_config,
    flow_meta: dict,
    run_dir,
    init=None,
    max_steps: int | None = None,
) -> StageResult:
    """
    Train one stage and write its log and checkpoints into ``run_dir``.

    Args:
        episodes: FlowEpisodes; action-free for pretraining, with actions for finetuning
        init: checkpoint to start from, or None for a fresh seeded initialisation
        max_steps: stop after this many optimizer steps (smoke runs and determinism checks)

    Returns:
        StageResult: checkpoint paths and the per-epoch loss series

    Raises:
        StageError: the dataset does not fit the stage
        NumericError: a loss became non-finite; the batch is dumped first
    """
    check_stage(episodes, train_config.stage)
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    stage_tag = CHECKPOINT_STAGE[train_config.stage]

    torch.manual_seed(train_config.seed)
    policy = VisaFlowPolicy(model_config)
    if init is not None:
        init_from_checkpoint(policy, init, flow_meta)
        logger.info("Initialised %s from %s", train_config.stage, init)
    policy.train()

    train_set, val_set = split_episodes(episodes, train_config.val_fraction, train_config.seed)
    per_epoch = steps_per_epoch(train_set, train_config)
    optimizer, scheduler = build_optimizer(policy.parameters(), train_config, per_epoch)

    result = StageResult(
        run_dir=run_dir,
        best_checkpoint=run_dir / "best.pt",
        final_checkpoint=run_dir / "final.pt",
        steps=0,
    )
    started = time.monotonic()
    best = float("inf")
    with open(run_dir / LOG_NAME, "a", encoding="utf-8") as log:
        for epoch in range(train_config.epochs):
            epoch_totals = []
            for batch in epoch_loader(train_set, model_config, train_config, epoch):
                report = stage_loss(forward_batch(policy, batch), batch, train_config)
                if not torch.isfinite(report.total):
                    dump = _dump_batch(run_dir, batch, result.steps)
                    raise NumericError(
                        f"non-finite {train_config.stage} loss at step {result.steps}",
                        batch_id=result.steps,
                        dump_path=dump,
                    )
                lr = optimizer.param_groups[0]["lr"]
                optimizer.zero_grad(set_to_none=True)
                report.total.backward()
                optimizer.step()
                scheduler.step()

                record = {"step": result.steps, "epoch": epoch, "lr": lr, **report.as_record()}
                record["wall_time"] = round(time.monotonic() - started, 3)
                log.write(json.dumps(record) + "\n")
                epoch_totals.append(record["total"])
                result.steps += 1
                if max_steps is not None and result.steps >= max_steps:
                    break

            val_loss = held_out_loss(policy, val_set, model_config, train_config)
            summary = {
                "epoch": epoch,
                "train_total": float(np.mean(epoch_totals)),
                "val_total": val_loss,
            }
            result.epochs.append(summary)
            logger.info(
                "%s epoch %d: train %.5f, held-out %s",
                train_config.stage,
                epoch,
                summary["train_total"],
                "n/a" if val_loss is None else f"{val_loss:.5f}",
            )
            score = val_loss if val_loss is not None else summary["train_total"]
            if score < best:
                best = score
                result.best_val_loss = val_loss
                save_checkpoint(result.best_checkpoint, policy, stage_tag, flow_meta)
            if max_steps is not None and result.steps >= max_steps:
                break

    with open(run_dir / "epochs.jsonl", "w", encoding="utf-8") as handle:
        for summary in result.epochs:
            handle.write(json.dumps(summary) + "\n")
    save_checkpoint(result.final_checkpoint, policy, stage_tag, flow_meta)
    return result
