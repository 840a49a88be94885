import dataclasses

import numpy as np

from grig.granular import GranularRect, SearchParams, partition, region_purity, region_stats
from grig.imaging import GrayImage
from grig.oracle import brute_edges, brute_region_stats, verify_partition


def gray(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8))


def rect(k, cx, cy, rx, ry):
    return GranularRect(k, cx, cy, rx, ry, 1.0, 0.0, 0.0, 0.0, 0.0)


class TestBruteEdges:
    def test_disjoint(self):
        assert brute_edges([rect(0, 1, 1, 1, 1), rect(1, 9, 9, 1, 1)]) == []

    def test_single_shared_pixel(self):
        assert brute_edges([rect(0, 2, 2, 2, 2), rect(1, 6, 6, 2, 2)]) == [(0, 1)]

    def test_empty(self):
        assert brute_edges([]) == []


class TestBruteRegionStats:
    def test_matches_production_on_random_rects(self, small_images):
        rng = np.random.default_rng(3)
        img = small_images[0]
        for _ in range(40):
            cx = int(rng.integers(0, img.width))
            cy = int(rng.integers(0, img.height))
            rx = int(rng.integers(0, 6))
            ry = int(rng.integers(0, 6))
            r = rect(0, cx, cy, rx, ry)
            purity, mean, var, vmin, vmax = brute_region_stats(img, r, 10.0)
            pmean, pvar, pmin, pmax = region_stats(img, cx, cy, rx, ry)
            assert abs(mean - pmean) <= 1e-9
            assert abs(var - pvar) <= 1e-9
            assert (vmin, vmax) == (pmin, pmax)
            assert abs(purity - region_purity(img, cx, cy, rx, ry, 10.0)) <= 1e-9

    def test_two_tone(self):
        img = gray([[0, 255]])
        purity, mean, var, vmin, vmax = brute_region_stats(img, rect(0, 0, 0, 1, 0), 10.0)
        assert (mean, vmin, vmax) == (127.5, 0.0, 255.0)
        assert abs(var - 16256.25) <= 1e-9
        assert purity == 0.5


class TestVerifyPartition:
    def test_clean_partitions_pass(self, corpus200):
        p = SearchParams()
        for img, _ in corpus200[:10]:
            report = verify_partition(img, p, partition(img, p))
            assert report.ok, report.violations[:3]

    def test_inflated_extent_flags_replay(self, small_images):
        img = small_images[1]
        p = SearchParams()
        rects = partition(img, p)
        victim = next(r for r in rects if r.rx < img.width // 2)
        broken = [dataclasses.replace(victim, rx=victim.rx + 1) if r is victim else r for r in rects]
        report = verify_partition(img, p, broken)
        assert any(v.kind == "replay" and v.rect_id == victim.id for v in report.violations)

    def test_missing_rect_flags_coverage(self, small_images):
        img = small_images[2]
        p = SearchParams()
        rects = partition(img, p)
        assert len(rects) > 1
        # Drop the last rect and renumber so only coverage (and maybe seed)
        # testimony remains.
        kept = [dataclasses.replace(r, id=k) for k, r in enumerate(rects[:-1])]
        report = verify_partition(img, p, kept)
        kinds = {v.kind for v in report.violations}
        assert "coverage" in kinds
        assert any("pixels not covered" in v.detail for v in report.violations)

    def test_perturbed_stats_flagged(self, small_images):
        img = small_images[3]
        p = SearchParams()
        rects = partition(img, p)
        broken = [dataclasses.replace(rects[0], v_mean=rects[0].v_mean + 1e-6)] + rects[1:]
        report = verify_partition(img, p, broken)
        assert any(v.kind == "stats" and v.rect_id == 0 for v in report.violations)

    def test_wrong_seed_order_flagged(self, small_images):
        img = small_images[4]
        p = SearchParams()
        rects = partition(img, p)
        assert len(rects) > 2
        swapped = [dataclasses.replace(rects[1], id=0), dataclasses.replace(rects[0], id=1)] + rects[2:]
        report = verify_partition(img, p, swapped)
        assert any(v.kind == "seed" for v in report.violations)

    def test_stat_tolerance_not_overtight(self, small_images):
        # A 1e-10 nudge must stay within the 1e-9 recomputation budget.
        img = small_images[5]
        p = SearchParams()
        rects = partition(img, p)
        nudged = [dataclasses.replace(r, variance=r.variance + 1e-10) for r in rects]
        report = verify_partition(img, p, nudged)
        assert not any(v.kind == "stats" for v in report.violations)

    def test_mean_above_max_flagged(self, small_images):
        # Ordering invariant v_min <= v_mean <= v_max is checked too.
        img = small_images[5]
        p = SearchParams()
        rects = partition(img, p)
        constant = next(r for r in rects if r.v_min == r.v_max)
        broken = [dataclasses.replace(r, v_mean=r.v_mean + 1e-10) if r is constant else r for r in rects]
        report = verify_partition(img, p, broken)
        assert any(v.kind == "stats" and v.rect_id == constant.id for v in report.violations)

    def test_global_schedule_replay(self, small_images):
        img = small_images[6]
        p = SearchParams(global_schedule=True)
        report = verify_partition(img, p, partition(img, p))
        assert report.ok, report.violations[:3]

    def test_summary_strings(self, small_images):
        img = small_images[7]
        p = SearchParams()
        report = verify_partition(img, p, partition(img, p))
        assert "no violations" in report.summary()
