import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from srtk import (
    GridImage,
    LabelMask,
    duplicate_channels,
    normalize_intensity,
    validate_pair,
)

from mask_helpers import make_mask


class TestGridImage:
    def test_accepts_2d_and_3d(self):
        GridImage(dims=(2, 3), spacing=(1.0, 1.0), channels=1, values=np.zeros((2, 3)))
        GridImage(dims=(2, 3, 4), spacing=(1.0, 1.0, 1.0), channels=1, values=np.zeros((2, 3, 4)))

    def test_rejects_1d_and_4d(self):
        with pytest.raises(ValueError):
            GridImage(dims=(5,), spacing=(1.0,), channels=1, values=np.zeros(5))
        with pytest.raises(ValueError):
            GridImage(dims=(2, 2, 2, 2), spacing=(1.0,) * 4, channels=1, values=np.zeros((2,) * 4))

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValueError):
            GridImage(dims=(2, 2), spacing=(0.0, 1.0), channels=1, values=np.zeros((2, 2)))
        with pytest.raises(ValueError):
            GridImage(dims=(2, 2), spacing=(1.0, -1.0), channels=1, values=np.zeros((2, 2)))

    def test_rejects_wrong_value_count(self):
        with pytest.raises(ValueError):
            GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1, values=np.zeros((2, 3)))

    def test_rejects_two_channels(self):
        with pytest.raises(ValueError):
            GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=2, values=np.zeros((2, 2, 2)))

    def test_values_immutable(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1, values=np.zeros((2, 2)))
        with pytest.raises(ValueError):
            img.values[0, 0, 0] = 1.0


class TestLabelMask:
    def test_rejects_negative_labels(self):
        with pytest.raises(ValueError):
            make_mask(np.array([[-1, 0], [0, 0]]))

    def test_rejects_float_labels(self):
        with pytest.raises(ValueError):
            LabelMask(dims=(2, 2), spacing=(1.0, 1.0), labels=np.zeros((2, 2), dtype=float))

    def test_present_labels_sorted(self):
        m = make_mask(np.array([[3, 0], [1, 1]]))
        assert m.present_labels() == [1, 3]


class TestValidatePair:
    def test_matching_pair_ok(self):
        img = GridImage(dims=(4, 4), spacing=(1.0, 1.0), channels=1, values=np.zeros((4, 4)))
        mask = make_mask(np.zeros((4, 4), dtype=int))
        assert validate_pair(img, mask) == []

    def test_dims_mismatch(self):
        img = GridImage(dims=(4, 4), spacing=(1.0, 1.0), channels=1, values=np.zeros((4, 4)))
        mask = make_mask(np.zeros((5, 5), dtype=int))
        violations = validate_pair(img, mask)
        assert any("dims mismatch" in v for v in violations)

    def test_unnamed_label(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1, values=np.zeros((2, 2)))
        mask = LabelMask(dims=(2, 2), spacing=(1.0, 1.0),
                         labels=np.array([[7, 0], [0, 0]]), class_names={})
        violations = validate_pair(img, mask)
        assert any("unnamed label" in v and "7" in v for v in violations)

    def test_pure(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1, values=np.zeros((2, 2)))
        mask = make_mask(np.zeros((3, 3), dtype=int))
        assert validate_pair(img, mask) == validate_pair(img, mask)


class TestDuplicateChannels:
    def test_three_identical_channels(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1,
                        values=np.array([[0, 1], [2, 3]], dtype=np.uint8))
        out = duplicate_channels(img)
        assert out.channels == 3
        assert out.values.size == 3 * img.values.size
        for c in range(3):
            assert np.array_equal(out.values[..., c], img.gray)
        assert out.values[..., 0].tobytes() == out.values[..., 1].tobytes()

    def test_preserves_spacing(self):
        img = GridImage(dims=(2, 2), spacing=(0.5, 0.5), channels=1, values=np.zeros((2, 2)))
        assert duplicate_channels(img).spacing == (0.5, 0.5)

    def test_rejects_3_channel_input(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=3, values=np.zeros((2, 2, 3)))
        with pytest.raises(ValueError):
            duplicate_channels(img)


class TestNormalizeIntensity:
    def test_u8_divides_by_255(self):
        img = GridImage(dims=(1, 2), spacing=(1.0, 1.0), channels=1,
                        values=np.array([[0, 255]], dtype=np.uint8))
        assert normalize_intensity(img).values.ravel().tolist() == [0.0, 1.0]

    def test_real_min_max(self):
        img = GridImage(dims=(1, 3), spacing=(1.0, 1.0), channels=1,
                        values=np.array([[-100.0, 0.0, 300.0]]))
        assert normalize_intensity(img).values.ravel().tolist() == [0.0, 0.25, 1.0]

    def test_constant_maps_to_half(self):
        img = GridImage(dims=(2, 2), spacing=(1.0, 1.0), channels=1,
                        values=np.full((2, 2), 42.0))
        assert np.all(normalize_intensity(img).values == 0.5)

    @given(
        arrays(
            np.float64,
            st.tuples(st.integers(1, 5), st.integers(1, 5)),
            elements=st.floats(-1e6, 1e6, allow_nan=False),
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_range_and_monotonicity(self, data):
        img = GridImage(dims=data.shape, spacing=(1.0,) * data.ndim, channels=1, values=data)
        out = normalize_intensity(img).values.ravel()
        assert out.min() >= 0.0 and out.max() <= 1.0
        flat = data.ravel()
        order = np.argsort(flat, kind="stable")
        assert np.all(np.diff(out[order]) >= 0.0)
