import math

import torch
from torch.optim.lr_scheduler import LambdaLR


def lr_scale(step: int, warmup_steps: int, total_steps: int, min_lr_scale: float) -> float:
    """
    Linear warmup to 1, then cosine decay to ``min_lr_scale``.

    Step s (counted from 0) of the warmup uses (s + 1) / warmup_steps.
    """
    if step < warmup_steps:
        return (step + 1) / warmup_steps
    decay_steps = max(1, total_steps - warmup_steps)
    progress = min(1.0, (step - warmup_steps) / decay_steps)
    return min_lr_scale + (1.0 - min_lr_scale) * 0.5 * (1.0 + math.cos(math.pi * progress))


def build_optimizer(parameters, train_config, steps_per_epoch: int):
    optimizer = torch.optim.Adam(
        parameters,
        lr=train_config.base_lr,
        betas=tuple(train_config.betas),
        weight_decay=train_config.weight_decay,
    )
    warmup = train_config.warmup_epochs * steps_per_epoch
    total = train_config.epochs * steps_per_epoch
    scheduler = LambdaLR(
        optimizer, lambda step: lr_scale(step, warmup, total, train_config.min_lr_scale)
    )
    return optimizer, scheduler
