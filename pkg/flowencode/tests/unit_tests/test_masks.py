import numpy as np
import pytest

from core.exceptions import ValidationFailure
from envsim.world import Frame
from flowencode.masks import amplify, build_mask


def brute_force_mask(points, radius, height, width):
    """Per-pixel minimum distance to the point set, compared with the radius."""
    ys, xs = np.mgrid[0:height, 0:width]
    pixels = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    offsets = pixels[:, None, :] - np.asarray(points, dtype=np.float64)[None, :, :]
    nearest = np.sqrt((offsets**2).sum(axis=2)).min(axis=1)
    return (nearest <= radius).reshape(height, width).astype(np.uint8)


@pytest.fixture
def frame():
    """A 12x12 frame of mid-grey with one bright corner."""
    pixels = np.full((12, 12, 3), 0.4, dtype=np.float32)
    pixels[:2, :2] = 0.9
    return Frame(pixels=pixels)


class TestBuildMask:

    def test_matches_brute_force(self):
        """The mask agrees with a pixel-by-pixel disk test, points off-frame included."""
        rng = np.random.default_rng(4)
        points = rng.uniform(-3.0, 15.0, size=(6, 2))
        for radius in (0.5, 1.0, 2.5, 3.0):
            mask = build_mask(points, radius, 12, 10)
            assert np.array_equal(mask.values, brute_force_mask(points, radius, 12, 10))

    def test_random_instances(self):
        """A thousand random frames, point sets and radii agree with the oracle."""
        rng = np.random.default_rng(0)
        for _ in range(1000):
            height, width = (int(v) for v in rng.integers(1, 65, size=2))
            points = rng.uniform(-4.0, 68.0, size=(int(rng.integers(1, 65)), 2))
            radius = float(rng.uniform(0.5, 8.0))
            mask = build_mask(points, radius, height, width)
            assert np.array_equal(mask.values, brute_force_mask(points, radius, height, width))

    def test_union_and_monotonicity(self):
        """Masks of a union are the union of masks and grow with the radius."""
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b = rng.uniform(0.0, 20.0, size=(2, 5, 2))
            radius = float(rng.uniform(0.5, 4.0))
            union = build_mask(np.concatenate([a, b]), radius, 20, 20).values
            separate = build_mask(a, radius, 20, 20).values | build_mask(b, radius, 20, 20).values
            assert np.array_equal(union, separate)
            wider = build_mask(a, radius + 0.5, 20, 20).values
            assert np.all(wider >= build_mask(a, radius, 20, 20).values)

    def test_integer_radius_is_inclusive(self):
        """A pixel exactly ``radius`` away is inside."""
        mask = build_mask([(5.0, 5.0)], 3.0, 12, 12)
        assert mask.values[5, 8] == 1
        assert mask.values[8, 8] == 0

    def test_far_point_marks_nothing(self):
        """A disk entirely outside the frame leaves the mask empty."""
        assert build_mask([(40.0, 40.0)], 2.0, 12, 12).values.sum() == 0

    def test_invalid_arguments(self):
        """Radius must be positive and dimensions at least one."""
        with pytest.raises(ValidationFailure):
            build_mask([(1.0, 1.0)], 0.0, 12, 12)
        with pytest.raises(ValidationFailure):
            build_mask([(1.0, 1.0)], 1.0, 0, 12)


class TestAmplify:

    def test_alpha_zero_is_identity(self, frame):
        """No amplification leaves every pixel untouched."""
        mask = build_mask([(5.0, 5.0)], 3.0, 12, 12)
        assert np.array_equal(amplify(frame, mask, 0.0).pixels, frame.pixels)

    def test_scales_inside_and_clips(self, frame):
        """Masked pixels are scaled and clipped, the rest pass through."""
        mask = build_mask([(0.0, 0.0), (6.0, 6.0)], 1.0, 12, 12)
        out = amplify(frame, mask, 0.5).pixels
        assert out[6, 6] == pytest.approx([0.6] * 3)
        assert np.all(out[0, 0] == 1.0)
        assert np.array_equal(out[10, 10], frame.pixels[10, 10])

    def test_matches_scalar_formula(self):
        """Every pixel equals min(1, value * (1 + alpha * mask))."""
        rng = np.random.default_rng(2)
        for _ in range(100):
            frame = Frame(pixels=rng.random((16, 16, 3)).astype(np.float32))
            mask = build_mask(rng.uniform(0.0, 16.0, size=(4, 2)), 2.0, 16, 16)
            alpha = float(rng.uniform(0.0, 2.0))
            expected = np.minimum(
                frame.pixels.astype(np.float64) * (1.0 + alpha * mask.values[..., None]), 1.0
            )
            out = amplify(frame, mask, alpha).pixels
            assert np.allclose(out, expected, rtol=0.0, atol=1e-6)

    def test_negative_alpha(self, frame):
        """Alpha is non-negative."""
        with pytest.raises(ValidationFailure):
            amplify(frame, build_mask([(1.0, 1.0)], 1.0, 12, 12), -0.1)

    def test_shape_mismatch(self, frame):
        """Mask and frame must share dimensions."""
        with pytest.raises(ValidationFailure):
            amplify(frame, build_mask([(1.0, 1.0)], 1.0, 8, 8), 0.5)
