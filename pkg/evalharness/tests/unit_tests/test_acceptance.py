"""
Hour-scale training experiments at the default desk-scale configuration.

Run with ``pytest --runslow evalharness/tests/unit_tests/test_acceptance.py``.
"""

import numpy as np
import pytest

from core.config import RunConfig
from core.workflow import flow_episodes, pretrain
from envsim.episodes import generate_dataset
from evalharness.ablation import run_ablation_matrix, run_data_scaling
from policymodel.checkpoints import load_checkpoint
from trainer.loop import held_out_flow_metrics

pytestmark = pytest.mark.slow

HELD_OUT_SEED = 50_000


@pytest.fixture(scope="module")
def run_config():
    """The shipped defaults."""
    return RunConfig.resolve()


@pytest.fixture(scope="module")
def source(run_config):
    """Two hundred source-domain videos."""
    env = run_config.section("env")
    return generate_dataset(
        "source", env["subtasks"], env["source_count"], env["data_seed"], jobs=4
    )


@pytest.fixture(scope="module")
def target(run_config):
    """Sixty target-domain demonstrations; the first twenty serve the transfer runs."""
    env = run_config.section("env")
    return generate_dataset("target", env["subtasks"], 60, env["data_seed"], jobs=4)


def by_variant(reports):
    grouped = {}
    for report in reports:
        grouped.setdefault(report.variant, {})[report.seed] = report.avg_len
    return grouped


class TestPretraining:

    def test_learns_flow_dynamics(self, run_config, source, tmp_path_factory):
        """Held-out flow loss ends below 0.8 of the constant-predictor error."""
        flow_config, model_config = run_config.flow_config(), run_config.model_config()
        train = flow_episodes(source, flow_config, model_config, jobs=4)
        result = pretrain(run_config, train, tmp_path_factory.mktemp("pretrain"))

        env = run_config.section("env")
        held_out = generate_dataset("source", env["subtasks"], 20, HELD_OUT_SEED, jobs=4)
        policy, _ = load_checkpoint(result.best_checkpoint)
        loss, baseline = held_out_flow_metrics(
            policy,
            flow_episodes(held_out, flow_config, model_config, jobs=4),
            model_config,
            run_config.train_config("pretrain"),
        )
        assert loss < 0.8 * baseline


class TestTransfer:

    @pytest.fixture(scope="class")
    def matrix(self, run_config, source, target, tmp_path_factory):
        """Full, alpha-zero and scratch variants over three seeds on twenty demonstrations."""
        return run_ablation_matrix(
            run_config,
            source,
            target[:20],
            tmp_path_factory.mktemp("runs"),
            variants=["full", "no_pretrain", "alpha_zero"],
            jobs=4,
        )

    def test_pretraining_transfers(self, matrix):
        """Pretrained finetuning beats scratch on every seed and by half again on average."""
        per_seed = by_variant(matrix.per_seed)
        full, scratch = per_seed["full"], per_seed["no_pretrain"]
        assert all(full[seed] > scratch[seed] for seed in full)
        assert np.mean(list(full.values())) >= 1.5 * np.mean(list(scratch.values()))

    def test_amplification_does_not_hurt(self, matrix):
        """The full variant is at least as good as the unamplified one on average."""
        pooled = {report.variant: report.avg_len for report in matrix.pooled}
        assert pooled["full"] >= pooled["alpha_zero"]


class TestDataScaling:

    def test_more_demonstrations_help(self, run_config, source, target, tmp_path_factory):
        """avg_len over 5, 20 and 60 demonstrations has at most one inversion of 0.1 or less."""
        reports = run_data_scaling(
            run_config, source, target, tmp_path_factory.mktemp("scaling"), jobs=4
        )
        lengths = [report.avg_len for report in reports]
        drops = [earlier - later for earlier, later in zip(lengths, lengths[1:]) if later < earlier]
        assert len(drops) <= 1
        assert all(drop <= 0.1 for drop in drops)
