"""
Finite-difference verification of analytic gradients.

Run in double precision on a tiny model: every sampled scalar parameter is
nudged by +/- eps and the central difference of the loss is compared with
the autograd gradient.
"""

from dataclasses import dataclass

import numpy as np
import torch

DEFAULT_EPS = 1e-5
RELATIVE_FLOOR = 1e-5
HEAD_GROUPS = ("obs_head", "action_head", "progress_head")


@dataclass
class GradientCheckResult:
    max_relative_error: float
    checked: dict[str, int]
    worst_parameter: str | None = None


def parameter_groups(module: torch.nn.Module) -> dict[str, list[tuple[str, torch.nn.Parameter]]]:
    """Parameters grouped per output head; everything else is the trunk."""
    groups: dict[str, list] = {}
    for name, parameter in module.named_parameters():
        if not parameter.requires_grad:
            continue
        head = name.split(".", 1)[0]
        groups.setdefault(head if head in HEAD_GROUPS else "trunk", []).append((name, parameter))
    return groups


def gradient_check(
    loss_fn,
    groups: dict[str, list[tuple[str, torch.nn.Parameter]]],
    eps: float = DEFAULT_EPS,
    per_group: int = 200,
    seed: int = 0,
) -> GradientCheckResult:
    """
    Compare autograd with central finite differences.

    Args:
        loss_fn: zero-argument callable returning a scalar loss tensor
        groups: named parameter groups to sample from
        per_group: scalars sampled per group (all of them when the group is smaller)

    Returns:
        GradientCheckResult: the largest |analytic - numeric| / max(|analytic|, |numeric|, floor)
    """
    parameters = [parameter for members in groups.values() for _, parameter in members]
    for parameter in parameters:
        parameter.grad = None
    loss_fn().backward()
    analytic = {id(parameter): parameter.grad.detach().clone() for parameter in parameters}

    rng = np.random.default_rng(seed)
    worst, worst_name, checked = 0.0, None, {}
    with torch.no_grad():
        for group, members in groups.items():
            sizes = np.array([parameter.numel() for _, parameter in members])
            offsets = np.concatenate([[0], np.cumsum(sizes)])
            total = int(offsets[-1])
            picks = rng.choice(total, size=min(per_group, total), replace=False)
            for flat in np.sort(picks):
                member = int(np.searchsorted(offsets, flat, side="right") - 1)
                name, parameter = members[member]
                index = int(flat - offsets[member])
                values = parameter.view(-1)
                original = values[index].item()
                values[index] = original + eps
                upper = loss_fn().item()
                values[index] = original - eps
                lower = loss_fn().item()
                values[index] = original
                numeric = (upper - lower) / (2.0 * eps)
                exact = analytic[id(parameter)].view(-1)[index].item()
                error = abs(exact - numeric) / max(abs(exact), abs(numeric), RELATIVE_FLOOR)
                if error > worst:
                    worst, worst_name = error, f"{name}[{index}]"
            checked[group] = len(picks)
    return GradientCheckResult(
        max_relative_error=worst, checked=checked, worst_parameter=worst_name
    )
