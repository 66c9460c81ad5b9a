"""Overlap and surface-distance metrics against a brute-force oracle.

The oracle extracts boundary voxels with explicit neighbor loops and
computes every pairwise distance, taking directed minima without any
spatial index; percentiles use numpy's default linear interpolation,
matching the documented convention.
"""

import numpy as np
import pytest

from mevl.metrics import (
    BinaryMask,
    EmptyMaskError,
    asd,
    dice,
    hd95,
    jaccard,
    mask_from_labels,
    report,
    surface_distances,
)

SIX = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]


def oracle_surface(mask):
    pts = []
    arr = mask.data
    for idx in np.argwhere(arr):
        i, j, k = idx
        for di, dj, dk in SIX:
            ni, nj, nk = i + di, j + dj, k + dk
            outside = not (
                0 <= ni < arr.shape[0] and 0 <= nj < arr.shape[1] and 0 <= nk < arr.shape[2]
            )
            if outside or not arr[ni, nj, nk]:
                pts.append((i, j, k))
                break
    return np.asarray(pts, dtype=np.float64) * np.asarray(mask.spacing)


def oracle_directed(a_pts, b_pts):
    out = []
    for p in a_pts:
        out.append(min(float(np.sqrt(((p - q) ** 2).sum())) for q in b_pts))
    return np.asarray(out)


def oracle_hd95_asd(pred, gt):
    p_pts, g_pts = oracle_surface(pred), oracle_surface(gt)
    d_pg = oracle_directed(p_pts, g_pts)
    d_gp = oracle_directed(g_pts, p_pts)
    h = max(np.percentile(d_pg, 95), np.percentile(d_gp, 95))
    a = np.concatenate([d_pg, d_gp]).mean()
    return h, a


def random_mask(rng, max_side=12):
    dims = tuple(int(rng.integers(4, max_side + 1)) for _ in range(3))
    data = rng.random(dims) < rng.uniform(0.1, 0.5)
    if not data.any():
        data[tuple(int(rng.integers(0, d)) for d in dims)] = True
    spacing = tuple(float(s) for s in rng.uniform(0.5, 2.0, size=3))
    return dims, data, spacing


class TestOverlap:
    def test_identical(self, rng):
        m = BinaryMask(rng.random((6, 6, 6)) < 0.4)
        assert dice(m, m) == 1.0
        assert jaccard(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4, 4), dtype=bool)
        b = np.zeros((4, 4, 4), dtype=bool)
        a[0, 0, 0] = True
        b[3, 3, 3] = True
        assert dice(BinaryMask(a), BinaryMask(b)) == 0.0
        assert jaccard(BinaryMask(a), BinaryMask(b)) == 0.0

    def test_half_overlap(self):
        a = np.zeros((4, 4, 4), dtype=bool)
        b = np.zeros((4, 4, 4), dtype=bool)
        a[0, 0, :] = True  # 4 voxels... use 8 with overlap 4
        a[0, 1, :] = True
        b[0, 1, :] = True
        b[0, 2, :] = True
        assert dice(BinaryMask(a), BinaryMask(b)) == 0.5
        # overlap 4, union 12
        assert jaccard(BinaryMask(a), BinaryMask(b)) == pytest.approx(1 / 3)

    def test_both_empty(self):
        e = BinaryMask(np.zeros((4, 4, 4), dtype=bool))
        assert dice(e, e) == 1.0
        assert jaccard(e, e) == 1.0

    def test_one_empty(self):
        e = BinaryMask(np.zeros((4, 4, 4), dtype=bool))
        f = BinaryMask(np.ones((4, 4, 4), dtype=bool))
        assert dice(e, f) == 0.0
        assert jaccard(f, e) == 0.0

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            dice(BinaryMask(np.ones((4, 4, 4), dtype=bool)),
                 BinaryMask(np.ones((4, 4, 5), dtype=bool)))

    def test_symmetry_and_identity(self, rng):
        for _ in range(50):
            dims, da, sp = random_mask(rng)
            db = rng.random(dims) < 0.4
            a, b = BinaryMask(da, sp), BinaryMask(db, sp)
            d, j = dice(a, b), jaccard(a, b)
            assert d == dice(b, a) and j == jaccard(b, a)
            # J = D / (2 - D)
            assert abs(j - d / (2.0 - d)) < 1e-12


class TestSurfaceDistances:
    def test_identical_all_zero(self, rng):
        m = BinaryMask(rng.random((6, 6, 6)) < 0.4)
        d_pg, d_gp = surface_distances(m, m)
        assert np.all(d_pg == 0.0) and np.all(d_gp == 0.0)
        assert hd95(m, m) == 0.0 and asd(m, m) == 0.0

    def test_single_voxels_three_apart(self):
        a = np.zeros((8, 4, 4), dtype=bool)
        b = np.zeros((8, 4, 4), dtype=bool)
        a[1, 1, 1] = True
        b[4, 1, 1] = True
        pa, pb = BinaryMask(a), BinaryMask(b)
        d_pg, d_gp = surface_distances(pa, pb)
        assert np.all(d_pg == 3.0) and np.all(d_gp == 3.0)
        assert hd95(pa, pb) == 3.0 and asd(pa, pb) == 3.0

    def test_spacing_scales_distances(self):
        a = np.zeros((8, 4, 4), dtype=bool)
        b = np.zeros((8, 4, 4), dtype=bool)
        a[1, 1, 1] = True
        b[4, 1, 1] = True
        pa = BinaryMask(a, spacing=(0.5, 1.0, 1.0))
        pb = BinaryMask(b, spacing=(0.5, 1.0, 1.0))
        assert hd95(pa, pb) == 1.5 and asd(pa, pb) == 1.5

    def test_shifted_line_matches_oracle(self):
        # two-voxel line vs the same line shifted by one voxel: directed
        # distances are {1, 0} each way, so hd95 = 0.95, asd = 0.5
        a = np.zeros((6, 4, 4), dtype=bool)
        b = np.zeros((6, 4, 4), dtype=bool)
        a[1:3, 1, 1] = True
        b[2:4, 1, 1] = True
        pa, pb = BinaryMask(a), BinaryMask(b)
        oh, oa = oracle_hd95_asd(pa, pb)
        assert hd95(pa, pb) == pytest.approx(oh, abs=1e-12)
        assert asd(pa, pb) == pytest.approx(oa, abs=1e-12)
        assert hd95(pa, pb) == pytest.approx(0.95)
        assert asd(pa, pb) == pytest.approx(0.5)

    def test_empty_mask_raises(self):
        e = BinaryMask(np.zeros((4, 4, 4), dtype=bool))
        f = BinaryMask(np.ones((4, 4, 4), dtype=bool))
        with pytest.raises(EmptyMaskError):
            surface_distances(e, f)
        with pytest.raises(EmptyMaskError):
            hd95(f, e)

    def test_random_masks_match_oracle(self, rng):
        for _ in range(60):
            dims, da, sp = random_mask(rng, max_side=10)
            db = rng.random(dims) < rng.uniform(0.1, 0.5)
            if not db.any():
                db[0, 0, 0] = True
            pa, pb = BinaryMask(da, sp), BinaryMask(db, sp)
            oh, oa = oracle_hd95_asd(pa, pb)
            assert hd95(pa, pb) == pytest.approx(oh, abs=1e-9)
            assert asd(pa, pb) == pytest.approx(oa, abs=1e-9)

    def test_translation_invariance(self, rng):
        core_a = rng.random((5, 5, 5)) < 0.4
        core_b = rng.random((5, 5, 5)) < 0.4
        core_a[2, 2, 2] = core_b[2, 2, 2] = True

        def embed(core, offset):
            vol = np.zeros((12, 12, 12), dtype=bool)
            vol[offset : offset + 5, offset : offset + 5, offset : offset + 5] = core
            return BinaryMask(vol, spacing=(1.0, 0.7, 1.3))

        base = (embed(core_a, 1), embed(core_b, 1))
        moved = (embed(core_a, 5), embed(core_b, 5))
        assert dice(*base) == dice(*moved)
        assert jaccard(*base) == jaccard(*moved)
        assert hd95(*base) == pytest.approx(hd95(*moved), abs=1e-12)
        assert asd(*base) == pytest.approx(asd(*moved), abs=1e-12)


class TestReport:
    def test_full_report(self, rng):
        labels = (rng.random((6, 6, 6)) < 0.3).astype(np.uint16)
        pred = mask_from_labels(labels, 1)
        rep = report(pred, pred)
        assert rep.dice == 1.0 and rep.jaccard == 1.0
        assert rep.hd95 == 0.0 and rep.asd == 0.0

    def test_empty_class_gives_none_distances(self):
        pred = BinaryMask(np.zeros((4, 4, 4), dtype=bool))
        gt = BinaryMask(np.ones((4, 4, 4), dtype=bool))
        rep = report(pred, gt)
        assert rep.dice == 0.0 and rep.jaccard == 0.0
        assert rep.hd95 is None and rep.asd is None
