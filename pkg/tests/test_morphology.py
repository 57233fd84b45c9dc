import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from kmorph import (
    B1,
    B2,
    BACKGROUND,
    BinaryGrid,
    BoundaryMode,
    InvalidInputError,
    StructuringElement,
    binary_dilate,
    gray_dilate,
    masked_label_dilate_pass,
    reconstruct,
    scale_se,
    seed_labels,
)
from kmorph.morphology import CROSS, EMPTY_SUP

modes = st.sampled_from([BoundaryMode.CLAMP, BoundaryMode.WRAP])
offsets = st.lists(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=6, unique=True
)
masks = arrays(bool, st.tuples(st.integers(1, 7), st.integers(1, 7)))


def two_cluster_layout():
    cells = np.zeros((5, 4), dtype=bool)
    cells.flat[[1, 2, 8, 9, 12, 14, 17, 18]] = True
    return BinaryGrid.from_array(cells)


class TestStructuringElement:
    def test_builtins_verbatim(self):
        assert set(B1.offsets) == {(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)}
        assert set(B2.offsets) == {
            (0, 0), (0, 1), (0, -1), (1, 0), (-1, 0),
            (-10, -10), (10, -10), (-10, 10), (10, 10),
        }
        assert not any(B1.values) and not any(B2.values)

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidInputError):
            StructuringElement.flat([(0, 0), (0, 0)])

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            StructuringElement(((0, 0), (1, 0)), (0,))

    @pytest.mark.parametrize(
        "se",
        [
            StructuringElement.flat([(0, 1), (0, -1), (1, 0), (-1, 0)]),
            StructuringElement.flat([(0, 0), (0, 1), (1, 0), (-1, 0)]),
            StructuringElement(CROSS.offsets, (0, 0, 0, 1, 0)),
        ],
        ids=["no-origin", "no-left", "grey-value"],
    )
    def test_kms_validation(self, se):
        with pytest.raises(InvalidInputError):
            se.validate_for_kms()

    def test_kms_validation_accepts_builtins(self):
        for se in (B1, B2, CROSS):
            se.validate_for_kms()

    def test_symmetry(self):
        assert B1.is_symmetric() and B2.is_symmetric()
        assert not StructuringElement.flat([(0, 0), (0, 1)]).is_symmetric()

    def test_scale(self):
        s = scale_se(B2, 3)
        assert (-30, 30) in s.offsets and (0, 3) in s.offsets
        with pytest.raises(InvalidInputError):
            scale_se(B1, 0)


class TestBinaryDilate:
    @given(masks, offsets, modes)
    def test_matches_set_definition(self, mask, offs, mode):
        se = StructuringElement.flat(offs)
        got = binary_dilate(mask, se, mode)
        want = oracles.binary_dilate_set(mask, offs, mode is BoundaryMode.WRAP)
        np.testing.assert_array_equal(got, want)

    def test_binary_grid_in_binary_grid_out(self):
        t = BinaryGrid.from_array(np.eye(3, dtype=bool))
        out = binary_dilate(t, CROSS)
        assert isinstance(out, BinaryGrid) and out.spec == t.spec
        assert out.foreground_count == 7

    def test_batch_dimension(self, rng):
        batch = rng.random((6, 5, 5)) < 0.3
        got = binary_dilate(batch, B1, "wrap")
        for a, b in zip(batch, got):
            np.testing.assert_array_equal(b, binary_dilate(a, B1, "wrap"))

    @given(masks)
    def test_origin_makes_it_extensive(self, mask):
        assert (binary_dilate(mask, B1) >= mask).all()

    def test_far_offsets_leave_the_grid(self):
        out = binary_dilate(np.ones((3, 3), dtype=bool), StructuringElement.flat([(5, 5)]))
        assert not out.any()


class TestGrayDilate:
    @given(
        arrays(np.int64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.integers(-50, 50)),
        offsets,
        st.data(),
        modes,
    )
    def test_matches_definition(self, a, offs, data, mode):
        vals = data.draw(st.lists(st.integers(-5, 5), min_size=len(offs), max_size=len(offs)))
        se = StructuringElement(tuple(offs), tuple(vals))
        got = gray_dilate(a, se, mode)
        want = oracles.gray_dilate_def(a, offs, vals, mode is BoundaryMode.WRAP)
        np.testing.assert_array_equal(got, want)

    def test_flat_origin_se_is_extensive(self, rng):
        a = rng.integers(0, 100, size=(6, 6))
        assert (gray_dilate(a, B1) >= a).all()

    def test_uncovered_cell_gets_empty_sup(self):
        out = gray_dilate(np.zeros((2, 2)), StructuringElement.flat([(1, 1)]))
        assert out[0, 0] == EMPTY_SUP and out[1, 1] == 0

    def test_rejects_non_2d(self):
        with pytest.raises(InvalidInputError):
            gray_dilate(np.zeros(3), B1)


class TestMaskedPass:
    def test_background_is_never_written(self, rng):
        t = BinaryGrid.from_array(rng.random((20, 20)) < 0.4)
        g = seed_labels(t)
        for delta in (1, 2, 5):
            masked_label_dilate_pass(g, t, B1, delta)
            assert (g.cells[~t.cells] == BACKGROUND).all()
            assert (g.cells[t.cells] >= 0).all()

    def test_labels_never_decrease(self, rng):
        t = BinaryGrid.from_array(rng.random((16, 16)) < 0.5)
        g = seed_labels(t)
        before = g.cells.copy()
        masked_label_dilate_pass(g, t, B1)
        assert (g.cells >= before).all()

    def test_in_place_sees_earlier_updates(self):
        t = BinaryGrid.from_array(np.ones((1, 3), dtype=bool))
        g = seed_labels(t)
        # Cell 0 is visited before cell 1 takes label 2, so it lags a pass.
        out = masked_label_dilate_pass(g, t, CROSS)
        assert out.changed and g.cells.tolist() == [[1, 2, 2]]
        assert masked_label_dilate_pass(g, t, CROSS).changed
        assert g.cells.tolist() == [[2, 2, 2]]

    def test_synchronous_reads_old_labels(self):
        cells = np.ones((3, 1), dtype=bool)
        t = BinaryGrid.from_array(cells)
        g = seed_labels(t)
        masked_label_dilate_pass(g, t, CROSS, synchronous=True)
        assert g.cells.ravel().tolist() == [1, 2, 2]

    def test_mismatched_mask(self):
        t = BinaryGrid.from_array(np.ones((2, 2), dtype=bool))
        other = BinaryGrid.from_array(np.eye(2, dtype=bool))
        with pytest.raises(InvalidInputError):
            masked_label_dilate_pass(seed_labels(other), t, B1)

    def test_bad_delta(self):
        t = BinaryGrid.from_array(np.ones((2, 2), dtype=bool))
        with pytest.raises(InvalidInputError):
            masked_label_dilate_pass(seed_labels(t), t, B1, delta=0)


class TestReconstruct:
    @pytest.mark.parametrize("synchronous", [False, True])
    def test_small_layout_two_clusters_in_four_passes(self, synchronous):
        t = two_cluster_layout()
        g = seed_labels(t)
        passes = reconstruct(g, t, B1, synchronous=synchronous)
        assert passes == 4
        assert g.labels().tolist() == [2, 18]

    @given(arrays(bool, (32, 32), elements=st.booleans()), modes, st.sampled_from([B1, CROSS]))
    def test_fixed_point_is_component_max(self, mask, mode, se):
        t = BinaryGrid.from_array(mask)
        wrap = mode is BoundaryMode.WRAP
        want = oracles.max_index_labels(mask, se.offsets, wrap)
        for synchronous in (False, True):
            g = seed_labels(t)
            reconstruct(g, t, se, mode=mode, synchronous=synchronous)
            np.testing.assert_array_equal(g.cells, want)

    def test_idempotent_after_convergence(self, rng):
        t = BinaryGrid.from_array(rng.random((12, 12)) < 0.5)
        g = seed_labels(t)
        reconstruct(g, t, B1)
        assert reconstruct(g, t, B1) == 1
