import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lzmreid.dataset import ManifestEntry, write_features
from lzmreid.embedder import (
    STREAMS,
    FeatureSet,
    cell_bounds,
    concat_streams,
    embed_image,
    import_features,
    l2_normalize,
    pool_embed,
    stream_vectors,
)
from lzmreid.errors import DegenerateInputError, FormatError, InvalidArgumentError, JoinError
from lzmreid.zernike import build_filter_bank

BANK = build_filter_bank(3, 5)


def test_cell_bounds_cover_axis():
    assert cell_bounds(10, 3) == [(0, 3), (3, 6), (6, 10)]
    assert cell_bounds(492, 6)[-1] == (410, 492)


def test_pool_constant_stack():
    out = pool_embed(np.full((12, 10, 3), 2.5), 2)
    cells = out.reshape(4, 2, 3)
    np.testing.assert_allclose(cells[:, 0], 2.5, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(cells[:, 1], 0)


def test_pool_dimension_law():
    assert pool_embed(np.zeros((8, 8, 8)), 1).shape == (16,)
    assert pool_embed(np.zeros((30, 20, 8)), (6, 2)).shape == (8 * 12 * 2,)


@pytest.mark.parametrize("grid", [2, (3, 2), (1, 4)])
def test_pool_matches_cell_loop(grid):
    stack = np.random.default_rng(0).normal(size=(8, 8, 2))
    gy, gx = (grid, grid) if isinstance(grid, int) else grid
    want = oracles.pool(stack.tolist(), gy, gx)
    np.testing.assert_allclose(pool_embed(stack, grid), want, rtol=0, atol=1e-12)


def test_pool_rejects_oversized_grid():
    with pytest.raises(InvalidArgumentError):
        pool_embed(np.zeros((4, 4, 1)), 5)


def test_l2_examples():
    np.testing.assert_allclose(l2_normalize([3, 4]), [0.6, 0.8])
    np.testing.assert_array_equal(l2_normalize([0.0, 1.0, 0.0]), [0, 1, 0])
    with pytest.raises(DegenerateInputError):
        l2_normalize([0, 0])
    with pytest.raises(InvalidArgumentError):
        l2_normalize([1, np.nan])


def test_concat_examples():
    np.testing.assert_allclose(concat_streams([[1, 0], [0, 1]]), np.array([1, 0, 0, 1]) / np.sqrt(2))
    v = np.array([2.0, -1.0, 5.0])
    np.testing.assert_array_equal(concat_streams([v]), l2_normalize(v))
    parts = np.random.default_rng(0).normal(size=(4, 16))
    out = concat_streams(list(parts))
    assert out.shape == (64,) and abs(np.linalg.norm(out) - 1) <= 1e-12
    with pytest.raises(InvalidArgumentError):
        concat_streams([])


def test_concat_normalized_parts():
    out = concat_streams([[10.0, 0.0], [0.0, 0.1]], normalize_parts=True)
    np.testing.assert_allclose(out, np.array([1, 0, 0, 1]) / np.sqrt(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(range(4)))
def test_concat_permutation_covariance(seed, perm):
    parts = list(np.random.default_rng(seed).normal(size=(4, 5)))
    base = concat_streams(parts).reshape(4, 5)
    permuted = concat_streams([parts[i] for i in perm]).reshape(4, 5)
    np.testing.assert_allclose(permuted, base[list(perm)], rtol=0, atol=1e-15)
    assert abs(np.linalg.norm(permuted) - 1) <= 1e-12


def test_stream_dimensions():
    rgb = np.random.default_rng(0).uniform(size=(24, 12, 3))
    dims = [v.size for v in stream_vectors(rgb, "rgb", BANK, (6, 2))]
    # cells * channels * 2 with channels 1, 3, 8, 24
    assert dims == [24, 72, 192, 576]
    assert embed_image(rgb, "rgb", BANK).shape == (sum(dims),)


def test_ir_and_rgb_share_dimension():
    ir = np.random.default_rng(1).uniform(size=(24, 12, 1))
    rgb = np.random.default_rng(1).uniform(size=(24, 12, 3))
    assert embed_image(ir, "ir", BANK).shape == embed_image(rgb, "rgb", BANK).shape


def test_stream_subset_and_unknown():
    img = np.random.default_rng(0).uniform(size=(12, 12, 1))
    v = embed_image(img, "ir", BANK, 2, ("lzm_gray_ir",))
    assert v.shape == (2 * 2 * 8 * 2,)
    with pytest.raises(InvalidArgumentError):
        stream_vectors(img, "ir", BANK, 2, ("hog",))
    assert STREAMS == ("gray_ir", "rgb_ir", "lzm_gray_ir", "lzm_rgb_ir")


def _manifest(n):
    return [ManifestEntry(f"im{i}", f"x/{i}.png", i // 2, 1 if i % 2 else 3, "rgb" if i % 2 else "ir")
            for i in range(n)]


def test_import_features(tmp_path):
    path = tmp_path / "f.lzmf"
    write_features(["im0", "im1", "im2"], np.eye(3), path, {"streams": ["x"]})
    fs = import_features(path, _manifest(5))
    assert len(fs) == 3 and fs.dim == 3
    assert fs.person_ids.tolist() == [0, 0, 1]
    assert fs.modalities == ("ir", "rgb", "ir")
    assert fs.metadata == {"streams": ["x"]}


def test_import_wrong_magic(tmp_path):
    path = tmp_path / "f.lzmf"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(FormatError):
        import_features(path, _manifest(3))


def test_import_join_error_names_id(tmp_path):
    path = tmp_path / "f.lzmf"
    write_features(["im0", "ghost"], np.ones((2, 2)), path)
    with pytest.raises(JoinError, match="ghost"):
        import_features(path, _manifest(3))


def test_featureset_select_and_validation():
    fs = FeatureSet(("a", "b", "c"), np.arange(6.0).reshape(3, 2), np.array([1, 2, 3]),
                    np.array([1, 3, 1]), ("rgb", "ir", "rgb"))
    sub = fs.select(["c", "a"])
    assert sub.ids == ("c", "a") and sub.matrix.tolist() == [[4, 5], [0, 1]]
    with pytest.raises(JoinError):
        fs.select(["z"])
    with pytest.raises(InvalidArgumentError):
        FeatureSet(("a", "a"), np.zeros((2, 1)), np.zeros(2), np.zeros(2), ("rgb", "rgb"))
    with pytest.raises(InvalidArgumentError):
        FeatureSet(("a",), np.zeros((2, 1)), np.zeros(1), np.zeros(1), ("rgb",))
