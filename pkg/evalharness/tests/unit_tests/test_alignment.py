import numpy as np
import pytest

from core.exceptions import ValidationFailure
from evalharness.alignment import alignment_diagnostic, pair_distances, resample
from flowencode.pipeline import FlowConfig


class TestDistances:

    def test_resample_endpoints(self):
        """Resampling keeps the first and last rows."""
        flows = np.arange(40, dtype=np.float32).reshape(20, 2)
        sampled = resample(flows, samples=4)
        assert np.array_equal(sampled[0], flows[0])
        assert np.array_equal(sampled[-1], flows[-1])

    def test_identical_pairs(self):
        """Matched copies are at distance zero, distinct sequences are not."""
        rng = np.random.default_rng(0)
        sequences = [rng.normal(size=(10, 3)) for _ in range(3)]
        matched, unmatched = pair_distances(sequences, sequences)
        assert matched == 0.0
        assert unmatched > 0.0


class TestAlignmentDiagnostic:

    def test_report(self):
        """The diagnostic reports finite ratios for both amplification settings."""
        config = FlowConfig(embed_dim=16, encoder_depth=1, encoder_heads=2)
        report = alignment_diagnostic(config, count=2, subtasks=("reach",), frame_size=32)
        assert report.count == 2
        assert report.alpha == 0.5
        assert report.ratio == pytest.approx(report.matched / report.unmatched)
        assert all(np.isfinite(v) for v in (report.ratio, report.raw_ratio, report.nuisance_ratio))

    def test_needs_pairs(self):
        """A single episode has no unmatched partner."""
        with pytest.raises(ValidationFailure):
            alignment_diagnostic(FlowConfig(), count=1)
