"""
Cross-domain alignment of the flow representation.

Target demonstrations are drawn again in the source domain, giving pairs
of episodes with identical motion and different appearance. A good
representation puts the two members of a pair closer together than two
unrelated episodes; the ratio matched / unmatched is reported for the
configured amplification and for none (alpha = 0). The nuisance ratio
does the same for two source renderings that only differ in background
texture.
"""

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ValidationFailure
from envsim.episodes import generate_dataset, rerender
from envsim.tasks import SUBTASKS
from flowencode.pipeline import FlowConfig, extract_flowrep_sequence

logger = logging.getLogger(__name__)

SAMPLES_PER_EPISODE = 16


@dataclass
class AlignmentReport:
    alpha: float
    count: int
    matched: float
    unmatched: float
    ratio: float
    raw_ratio: float
    nuisance_ratio: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def resample(flows: np.ndarray, samples: int = SAMPLES_PER_EPISODE) -> np.ndarray:
    """``samples`` rows at evenly spaced normalised times."""
    index = np.rint(np.linspace(0.0, 1.0, samples) * (len(flows) - 1)).astype(int)
    return flows[index]


def sequence_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(resample(a) - resample(b), axis=1).mean())


def _flows(episode, config: FlowConfig) -> np.ndarray:
    return np.stack([flow.vector for flow in extract_flowrep_sequence(episode, config)])


def pair_distances(first, second) -> tuple[float, float]:
    """
    Mean distance of matched pairs (i, i) and of unmatched pairs (i, i + 1).

    Returns:
        tuple: (matched, unmatched)
    """
    count = len(first)
    matched = [sequence_distance(first[i], second[i]) for i in range(count)]
    unmatched = [sequence_distance(first[i], second[(i + 1) % count]) for i in range(count)]
    return float(np.mean(matched)), float(np.mean(unmatched))


def alignment_diagnostic(
    flow_config: FlowConfig,
    count: int = 8,
    seed: int = 0,
    subtasks=SUBTASKS,
    texture_shift: int = 3,
    jobs: int = 1,
    **episode_kwargs,
) -> AlignmentReport:
    if count < 2:
        raise ValidationFailure("the alignment diagnostic needs at least two episodes")
    target = generate_dataset("target", subtasks, count, seed, jobs=jobs, **episode_kwargs)
    source = [rerender(episode, domain="source") for episode in target]
    shifted = [
        rerender(episode, domain="source", texture_offset=texture_shift) for episode in target
    ]

    ratios = {}
    for alpha in sorted({flow_config.alpha, 0.0}, reverse=True):
        config = dataclasses.replace(flow_config, alpha=alpha)
        source_flows = [_flows(episode, config) for episode in source]
        target_flows = [_flows(episode, config) for episode in target]
        matched, unmatched = pair_distances(source_flows, target_flows)
        ratios[alpha] = (matched, unmatched, matched / unmatched)
        if alpha == flow_config.alpha:
            shifted_flows = [_flows(episode, config) for episode in shifted]
            nuisance = float(
                np.mean([sequence_distance(a, b) for a, b in zip(source_flows, shifted_flows)])
            )

    matched, unmatched, ratio = ratios[flow_config.alpha]
    report = AlignmentReport(
        alpha=flow_config.alpha,
        count=count,
        matched=matched,
        unmatched=unmatched,
        ratio=ratio,
        raw_ratio=ratios[0.0][2],
        nuisance_ratio=nuisance / unmatched,
    )
    logger.info(
        "Alignment over %d pairs: ratio %.3f (alpha %.2f), %.3f (alpha 0), nuisance %.3f",
        count,
        report.ratio,
        report.alpha,
        report.raw_ratio,
        report.nuisance_ratio,
    )
    return report
