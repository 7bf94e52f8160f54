# -*- coding: utf-8 -*-

#
# Copyright (C) 2024 DiSK collection contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

from __future__ import absolute_import, division, print_function
__metaclass__ = type

import unittest

import numpy as np

# pylint: disable=import-error,no-name-in-module
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskDataError,
    DiskShapeError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.losses import (
    one_hot,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.metrics import (
    MetricReport,
    SegmentationResult,
    boundary_pixels,
    dice_score,
    evaluate_scan,
    hausdorff,
    metric_fieldnames,
    summarize_reports,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import (
    grid_coordinates,
)
# pylint: enable=import-error,no-name-in-module


def brute_force_boundary(mask):
    # type: (np.ndarray) -> List[tuple]
    """Mask pixels with at least one 8-neighbour outside the mask or image"""
    height, width = mask.shape
    points = []
    for y in range(height):
        for x in range(width):
            if not mask[y, x]:
                continue
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < height and 0 <= nx < width) or not mask[ny, nx]:
                        points.append((y, x))
                        break
                else:
                    continue
                break
    return points


def brute_force_hausdorff(a, b):
    # type: (np.ndarray, np.ndarray) -> float
    first = brute_force_boundary(a)
    second = brute_force_boundary(b)

    def directed(src, dst):
        return max(min(np.hypot(p[0] - q[0], p[1] - q[1]) for q in dst) for p in src)

    return max(directed(first, second), directed(second, first))


def block_frame(shift=0, rv=True):
    # type: (int, bool) -> np.ndarray
    frame = np.zeros((8, 8), dtype=np.int64)
    frame[2:4, 2 + shift:4 + shift] = 1
    frame[5:7, 5:7] = 2
    if rv:
        frame[0, 7] = 3
    return frame


def result_for(labels, scan_id='scan_000000001'):
    # type: (np.ndarray, str) -> SegmentationResult
    """One-hot prediction over the full grid of a label volume"""
    return SegmentationResult(
        one_hot(labels.reshape(-1), 4), grid_coordinates(labels.shape), scan_id, labels.shape,
    )


class TestDice(unittest.TestCase):
    """Test class for the per-class Dice score"""

    def test_identical(self):
        """Identical masks score 1"""
        frame = block_frame()
        self.assertEqual(1.0, dice_score(frame, frame, 1))

    def test_disjoint(self):
        """Disjoint masks score 0"""
        self.assertEqual(0.0, dice_score(block_frame(shift=4), block_frame(), 1))

    def test_partial_overlap(self):
        """Two 2 x 2 blocks sharing two pixels score 0.5"""
        self.assertEqual(0.5, dice_score(block_frame(shift=1), block_frame(), 1))

    def test_both_empty(self):
        """A class absent from both masks scores 1"""
        self.assertEqual(1.0, dice_score(block_frame(rv=False), block_frame(rv=False), 3))

    def test_one_empty(self):
        """A class present on one side only scores 0"""
        self.assertEqual(0.0, dice_score(block_frame(rv=False), block_frame(), 3))

    def test_symmetry(self):
        """score(A, B) equals score(B, A)"""
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.integers(0, 4, size=(6, 6))
            b = rng.integers(0, 4, size=(6, 6))
            for c in range(4):
                self.assertEqual(dice_score(a, b, c), dice_score(b, a, c))

    def test_shape_mismatch(self):
        """Masks must have the same shape"""
        self.assertRaises(DiskShapeError, dice_score, np.zeros((4, 4)), np.zeros((4, 5)), 0)


class TestHausdorff(unittest.TestCase):
    """Test class for the boundary Hausdorff distance"""

    def test_identical(self):
        """Identical masks are at distance 0"""
        frame = block_frame()
        self.assertEqual(0.0, hausdorff(frame, frame, 2))

    def test_single_pixels(self):
        """Pixels at (0, 0) and (3, 4) are 5 apart"""
        a = np.zeros((8, 8), dtype=np.int64)
        b = np.zeros((8, 8), dtype=np.int64)
        a[0, 0] = 1
        b[3, 4] = 1
        self.assertAlmostEqual(5.0, hausdorff(a, b, 1), places=12)

    def test_empty_sides(self):
        """One empty side gives the image diagonal, two give 0"""
        self.assertAlmostEqual(np.sqrt(128.0), hausdorff(block_frame(rv=False), block_frame(), 3))
        self.assertEqual(0.0, hausdorff(block_frame(rv=False), block_frame(rv=False), 3))

    def test_boundary_pixels(self):
        """A filled 4 x 4 block has a 12 pixel boundary"""
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:6, 2:6] = True
        boundary = boundary_pixels(mask)
        self.assertEqual(12, len(boundary))
        self.assertEqual(sorted(brute_force_boundary(mask)), sorted(map(tuple, boundary.astype(int).tolist())))

    def test_brute_force(self):
        """Random small masks agree with the double loop oracle"""
        rng = np.random.default_rng(42)
        for _ in range(200):
            a = (rng.random((12, 12)) < 0.15).astype(np.int64)
            b = (rng.random((12, 12)) < 0.15).astype(np.int64)
            if not a.any() or not b.any():
                continue
            distance = hausdorff(a, b, 1)
            self.assertAlmostEqual(brute_force_hausdorff(a == 1, b == 1), distance, places=12)
            self.assertEqual(distance, hausdorff(b, a, 1))

    def test_triangle_inequality(self):
        """The distance behaves as a metric on random masks"""
        rng = np.random.default_rng(7)
        masks = [(rng.random((10, 10)) < 0.2).astype(np.int64) for _ in range(6)]
        masks = [m for m in masks if m.any()]
        for a in masks:
            for b in masks:
                for c in masks:
                    self.assertLessEqual(
                        hausdorff(a, c, 1), hausdorff(a, b, 1) + hausdorff(b, c, 1) + 1e-12,
                    )


class TestSegmentationResult(unittest.TestCase):
    """Test class for assembling predictions into volumes"""

    def test_volume(self):
        """Full grid predictions assemble into the label volume"""
        labels = np.stack([block_frame(), block_frame(shift=1)])
        result = result_for(labels)
        np.testing.assert_array_equal(labels, result.to_volume())
        self.assertEqual((4, 2, 8, 8), result.probability_volume().shape)
        np.testing.assert_array_equal(labels, result.probability_volume().argmax(axis=0))

    def test_ties(self):
        """Ties break toward the lowest class index"""
        result = SegmentationResult([[0.5, 0.5, 0.0, 0.0], [0.0, 0.4, 0.4, 0.2]], np.zeros((2, 3)), 's', (1, 1, 1))
        np.testing.assert_array_equal([0, 1], result.hard_labels)

    def test_missing_pixels(self):
        """Predictions must cover the whole grid"""
        labels = np.stack([block_frame()])
        coords = grid_coordinates(labels.shape)[:-1]
        result = SegmentationResult(one_hot(labels.reshape(-1)[:-1], 4), coords, 's', labels.shape)
        self.assertRaises(DiskDataError, result.to_volume)

    def test_missing_pixels_filled(self):
        """A fill label covers the pixels that were not queried"""
        labels = np.stack([block_frame(), block_frame(shift=1)])
        coords = grid_coordinates(labels.shape, [1])
        result = SegmentationResult(one_hot(labels[1].reshape(-1), 4), coords, 's', labels.shape)
        volume = result.to_volume(fill=0)
        np.testing.assert_array_equal(labels[1], volume[1])
        np.testing.assert_array_equal(0, volume[0])


class TestEvaluateScan(unittest.TestCase):
    """Test class for per-scan aggregation"""

    def test_perfect(self):
        """A prediction equal to the labels scores Dice 1 and distance 0"""
        labels = np.stack([block_frame(), block_frame(shift=1)])
        report = evaluate_scan(result_for(labels), labels, 8)
        self.assertEqual(1.0, report.dice_fg_mean)
        self.assertEqual(0.0, report.hd_fg_max)
        self.assertEqual(8, report.acceleration)

    def test_all_background(self):
        """A background prediction scores Dice 0 and the diagonal"""
        labels = np.stack([block_frame()])
        report = evaluate_scan(result_for(np.zeros_like(labels)), labels, 4)
        self.assertEqual(0.0, report.dice_fg_mean)
        self.assertAlmostEqual(np.sqrt(128.0), report.hd_fg_max)

    def test_shifted_class(self):
        """One shifted class matches the per-class computation"""
        labels = np.stack([block_frame()])
        report = evaluate_scan(result_for(np.stack([block_frame(shift=1)])), labels, 4)
        self.assertEqual([0.5, 1.0, 1.0], report.dice[1:])
        self.assertAlmostEqual((0.5 + 1.0 + 1.0) / 3.0, report.dice_fg_mean)
        self.assertEqual([1.0, 0.0, 0.0], report.hausdorff[1:])
        self.assertEqual(1.0, report.hd_fg_max)

    def test_absent_class_aggregation(self):
        """Classes absent from both masks of a frame are left out of that frame"""
        labels = np.stack([block_frame(), block_frame(rv=False)])
        pred = np.stack([block_frame(), block_frame(shift=1, rv=False)])
        report = evaluate_scan(result_for(pred), labels, 16)

        # frame 0 scores 1, frame 1 averages classes 1 and 2 only
        self.assertAlmostEqual((1.0 + (0.5 + 1.0) / 2.0) / 2.0, report.dice_fg_mean)
        self.assertEqual(1.0, report.dice[3])
        self.assertAlmostEqual(0.75, report.dice[1])
        self.assertAlmostEqual(0.5, report.hd_fg_max)

    def test_rows(self):
        """CSV rows carry exactly the metric columns"""
        labels = np.stack([block_frame()])
        report = evaluate_scan(result_for(labels), labels, 4)
        self.assertEqual(
            ['scan_id', 'R', 'dice_c1', 'dice_c2', 'dice_c3', 'dice_fg_mean',
             'hd_c1', 'hd_c2', 'hd_c3', 'hd_fg_max'],
            metric_fieldnames(4),
        )
        self.assertEqual(metric_fieldnames(4), list(report.to_row().keys()))

    def test_summary(self):
        """Summaries report mean, standard deviation and a formatted pair"""
        first = MetricReport('a', 8, [1.0, 0.8, 0.6, 0.4], [0.0, 1.0, 2.0, 3.0])
        second = MetricReport('b', 8, [1.0, 0.6, 0.4, 0.2], [0.0, 3.0, 2.0, 1.0])
        first.dice_fg_mean, second.dice_fg_mean = 0.6, 0.4
        first.hd_fg_max, second.hd_fg_max = 3.0, 3.0

        summary = summarize_reports([first, second])
        self.assertEqual(2, summary['scans'])
        self.assertEqual(8, summary['R'])
        self.assertAlmostEqual(0.5, summary['metrics']['dice_fg_mean']['mean'])
        self.assertAlmostEqual(0.1, summary['metrics']['dice_fg_mean']['std'])
        self.assertEqual('0.500±0.100', summary['metrics']['dice_fg_mean']['formatted'])
        self.assertEqual('3.000±0.000', summary['metrics']['hd_fg_max']['formatted'])
        self.assertRaises(DiskDataError, summarize_reports, [])
