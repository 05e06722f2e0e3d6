from collections import deque

import numpy as np
import pytest

from fmm_reference import reference_inpaint
from scenewarp.depth import DepthMap
from scenewarp.errors import AdapterUnavailable, InvalidConfig, NothingToInpaintFrom
from scenewarp.frame import PROV_EXTERNAL, PROV_TELEA, Frame
from scenewarp.inpaint import (
    InpaintRequestSpec,
    external_inpaint,
    fmm_fill_float,
    partition_holes,
    scaled_hole_threshold,
    telea_inpaint,
)


def flood_fill_areas(mask):
    """Independent 4-connected component areas via BFS."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    areas = []
    h, w = mask.shape
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            area = 0
            q = deque([(sy, sx)])
            seen[sy, sx] = True
            while q:
                y, x = q.popleft()
                area += 1
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not seen[yy, xx]:
                        seen[yy, xx] = True
                        q.append((yy, xx))
            areas.append(area)
    return sorted(areas)


class TestPartitionHoles:
    def test_empty_mask(self):
        part = partition_holes(np.zeros((10, 10), dtype=bool), 64)
        assert part.large == () and part.small == ()
        assert part.total_area == 0

    def test_single_small_hole(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[5:8, 5:8] = True
        part = partition_holes(mask, 64)
        assert len(part.small) == 1 and len(part.large) == 0
        assert part.small[0].area == 9

    def test_split_matches_flood_fill_oracle(self):
        mask = np.zeros((30, 40), dtype=bool)
        mask[2:12, 3:13] = True  # area 100
        mask[20:23, 30:33] = True  # area 9
        part = partition_holes(mask, 64)
        assert len(part.large) == 1 and part.large[0].area == 100
        assert len(part.small) == 1 and part.small[0].area == 9
        assert sorted(c.area for c in part.components) == flood_fill_areas(mask)

    def test_area_conservation_random(self):
        rng = np.random.default_rng(3)
        mask = rng.random((25, 25)) < 0.3
        part = partition_holes(mask, 10)
        assert part.total_area == int(mask.sum())
        assert sorted(c.area for c in part.components) == flood_fill_areas(mask)

    def test_diagonal_blobs_are_separate(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[1, 1] = True
        mask[2, 2] = True  # touches only diagonally
        part = partition_holes(mask, 2)
        assert len(part.components) == 2

    def test_threshold_scaling(self):
        assert scaled_hole_threshold(160, 96) == 64
        assert scaled_hole_threshold(320, 192) == 256
        assert scaled_hole_threshold(8, 8) >= 1


class TestTeleaInpaint:
    def test_constant_image_exact(self):
        img = np.full((20, 24, 3), 77, dtype=np.uint8)
        mask = np.zeros((20, 24), dtype=bool)
        mask[5:12, 6:14] = True
        out = telea_inpaint(img, mask, 3)
        assert np.all(out == 77)

    def test_ramp_continuation(self):
        w = 160
        ramp = np.tile(
            np.round(np.linspace(0, 255, w)).astype(np.uint8)[None, :, None], (96, 1, 3)
        )
        mask = np.zeros((96, w), dtype=bool)
        mask[46:51, 78:83] = True
        out = telea_inpaint(ramp, mask, 3)
        err = np.abs(out[mask].astype(int) - ramp[mask].astype(int))
        assert err.max() <= 2

    def test_known_pixels_bit_identical(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(30, 30, 3)).astype(np.uint8)
        mask = rng.random((30, 30)) < 0.2
        out = telea_inpaint(img, mask, 3)
        assert np.array_equal(out[~mask], img[~mask])

    def test_all_hole_rejected(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(NothingToInpaintFrom):
            telea_inpaint(img, np.ones((8, 8), dtype=bool), 3)

    def test_bad_radius(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(InvalidConfig):
            telea_inpaint(img, np.zeros((8, 8), dtype=bool), 0)

    def test_fill_values_convex(self):
        rng = np.random.default_rng(5)
        img = rng.integers(40, 200, size=(24, 24, 3)).astype(np.uint8)
        mask = np.zeros((24, 24), dtype=bool)
        mask[8:16, 8:16] = True
        out = telea_inpaint(img, mask, 4)
        known = img[~mask]
        assert out[mask].min() >= known.min()
        assert out[mask].max() <= known.max()

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, size=(20, 20, 3)).astype(np.uint8)
        mask = rng.random((20, 20)) < 0.25
        a = telea_inpaint(img, mask, 3)
        b = telea_inpaint(img, mask, 3)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_reference_implementation(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 256, size=(36, 44, 3)).astype(np.float64)
        img = (img + np.roll(img, 1, 0) + np.roll(img, 1, 1)) / 3.0
        img = img.astype(np.uint8)
        yy, xx = np.mgrid[0:36, 0:44]
        mask = np.zeros((36, 44), dtype=bool)
        for _ in range(3):
            cy, cx = rng.integers(4, 32), rng.integers(4, 40)
            r = int(rng.integers(2, 6))
            mask |= (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        ref = np.clip(np.rint(reference_inpaint(img, mask, 3)), 0, 255).astype(np.uint8)
        nat = telea_inpaint(img, mask, 3)
        assert np.max(np.abs(ref.astype(int) - nat.astype(int))) <= 2


class TestFmmFillFloat:
    def test_continues_plane(self):
        vals = np.tile(np.linspace(2.0, 4.0, 30)[None, :], (20, 1))
        invalid = np.zeros((20, 30), dtype=bool)
        invalid[8:12, 12:18] = True
        out = fmm_fill_float(np.where(invalid, 0.0, vals), invalid, 3)
        assert np.max(np.abs(out[invalid] - vals[invalid])) < 0.2
        assert np.array_equal(out[~invalid], vals[~invalid])

    def test_all_invalid_rejected(self):
        with pytest.raises(NothingToInpaintFrom):
            fmm_fill_float(np.zeros((5, 5)), np.ones((5, 5), dtype=bool))


class _FakeInpaintClient:
    """Returns a flat fill whose value encodes the candidate seed."""

    def __init__(self, fail=False):
        self.fail = fail
        self.calls = 0

    def inpaint(self, image, mask, prompt, seed):
        self.calls += 1
        if self.fail:
            raise AdapterUnavailable("backend down")
        out = np.asarray(image).copy()
        out[np.asarray(mask)] = (seed * 10) % 256
        return out


class _FakeScorer:
    def __init__(self, scores):
        self.scores = scores

    def score(self, prompt, candidates):
        return self.scores[: len(candidates)]


def _holed_frame():
    color = np.full((16, 16, 3), 120, dtype=np.uint8)
    depth = DepthMap.full(np.full((16, 16), 3.0))
    frame = Frame.from_color_depth(color, depth)
    frame.hole_mask[4:10, 4:10] = True
    frame.depth.mask[4:10, 4:10] = False
    return frame


class TestExternalInpaint:
    def test_argmax_selection(self):
        frame = _holed_frame()
        part = partition_holes(frame.hole_mask, 10)
        comp = part.large[0]
        spec = InpaintRequestSpec(prompt="scene", n_candidates=3, seed=5)
        res = external_inpaint(frame, comp, spec, _FakeInpaintClient(), _FakeScorer([0.1, 0.9, 0.3]))
        assert res.selected == 1
        assert not res.fallback
        # winner encodes seed 5 + 1
        assert np.all(res.frame.color[comp.mask(frame.shape)] == (6 * 10) % 256)
        assert np.all(res.frame.provenance[comp.mask(frame.shape)] == PROV_EXTERNAL)

    def test_writes_only_inside_component(self):
        frame = _holed_frame()
        comp = partition_holes(frame.hole_mask, 10).large[0]
        spec = InpaintRequestSpec(n_candidates=2, seed=0)
        res = external_inpaint(frame, comp, spec, _FakeInpaintClient(), _FakeScorer([0.0, 0.0]))
        outside = ~comp.mask(frame.shape)
        assert np.array_equal(res.frame.color[outside], frame.color[outside])
        # tie on scores resolves to candidate 0
        assert res.selected == 0

    def test_fallback_to_fmm(self):
        frame = _holed_frame()
        comp = partition_holes(frame.hole_mask, 10).large[0]
        spec = InpaintRequestSpec(n_candidates=4, seed=0)
        res = external_inpaint(frame, comp, spec, _FakeInpaintClient(fail=True), _FakeScorer([0.0] * 4))
        assert res.fallback and res.selected is None
        m = comp.mask(frame.shape)
        assert np.all(res.frame.provenance[m] == PROV_TELEA)
        assert np.all(res.frame.color[m] == 120)  # constant surround fills constant
        assert not res.frame.hole_mask.any()

    def test_candidate_count_default(self):
        assert InpaintRequestSpec().n_candidates == 10
        client = _FakeInpaintClient()
        frame = _holed_frame()
        comp = partition_holes(frame.hole_mask, 10).large[0]
        external_inpaint(frame, comp, InpaintRequestSpec(seed=1), client, _FakeScorer([0.0] * 10))
        assert client.calls == 10

    def test_zero_candidates_rejected(self):
        with pytest.raises(InvalidConfig):
            InpaintRequestSpec(n_candidates=0)
