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

import os
import shutil
import tempfile
import unittest

import numpy as np

# pylint: disable=import-error,no-name-in-module
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import (
    LV_POOL,
    PhantomConfig,
    check_phantom,
    check_ring_topology,
    dataset_digest,
    generate_phantom,
    load_scan,
    load_split,
    make_splits,
    seed_from_scan_id,
    synthesize_dataset,
)
# pylint: enable=import-error,no-name-in-module

SMALL = PhantomConfig(T=4, H=48, W=48)
DATA_PARAMS = dict(num_train=2, num_val=1, num_test=1, base_seed=0)


class TestGeneratePhantom(unittest.TestCase):
    """Test class for single phantom generation"""

    def test_invariants(self):
        """Labels, intensity range and ring topology hold over many seeds"""
        for seed in range(12):
            scan = generate_phantom(seed, config=SMALL)
            self.assertEqual((4, 48, 48), scan.image.shape)
            self.assertEqual((4, 48, 48), scan.labels.shape)
            self.assertTrue(set(np.unique(scan.labels)) <= {0, 1, 2, 3})
            self.assertGreaterEqual(scan.image.min(), 0.0)
            self.assertLessEqual(scan.image.max(), 1.0)
            self.assertEqual([], check_phantom(scan.labels), f"seed {seed}")

    def test_default_dimensions(self):
        """Without a config the phantom has the requested size"""
        scan = generate_phantom(5, T=3, H=40, W=36)
        self.assertEqual((3, 40, 36), scan.shape)
        self.assertEqual('scan_000000005', scan.scan_id)
        self.assertEqual(5, scan.seed)

    def test_deterministic(self):
        """The seed fixes image and labels"""
        first = generate_phantom(3, config=SMALL)
        second = generate_phantom(3, config=SMALL)
        np.testing.assert_array_equal(first.image, second.image)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_seeds_differ(self):
        """Different seeds give different phantoms"""
        self.assertFalse(np.array_equal(
            generate_phantom(1, config=SMALL).image, generate_phantom(2, config=SMALL).image,
        ))

    def test_contraction(self):
        """The LV pool is smallest around mid sequence"""
        scan = generate_phantom(4, config=PhantomConfig(T=10, H=64, W=64))
        areas = [np.count_nonzero(frame == LV_POOL) for frame in scan.labels]
        self.assertLess(areas[5], areas[0])
        self.assertLessEqual(areas[5], min(areas))

    def test_invalid_size(self):
        """Too few frames or too small frames are rejected"""
        self.assertRaises(DiskConfigError, generate_phantom, 0, T=1, H=48, W=48)
        self.assertRaises(DiskConfigError, generate_phantom, 0, T=4, H=16, W=48)

    def test_ring_topology_violation(self):
        """A pool pixel next to background breaks the ring"""
        labels = generate_phantom(0, config=SMALL).labels.copy()
        rows, cols = np.nonzero(labels[0] == LV_POOL)
        labels[0, rows[0] - 1, cols[0]] = 0
        self.assertFalse(check_ring_topology(labels))
        self.assertNotEqual([], check_phantom(labels))

    def test_missing_class(self):
        """A frame without RV is reported"""
        labels = generate_phantom(0, config=SMALL).labels.copy()
        labels[labels == 3] = 0
        self.assertTrue(any('classes' in p for p in check_phantom(labels)))


class TestPhantomSweep(unittest.TestCase):
    """Test class for phantom invariants over many seeds"""

    def test_thousand_seeds(self):
        """Every seed yields a valid phantom with a plausible foreground share"""
        config = PhantomConfig(T=10, H=64, W=64)
        for seed in range(1000):
            scan = generate_phantom(seed, config=config)
            self.assertEqual([], check_phantom(scan.labels), f"seed {seed}")
            self.assertGreaterEqual(scan.image.min(), 0.0, f"seed {seed}")
            self.assertLessEqual(scan.image.max(), 1.0, f"seed {seed}")

            foreground = np.mean([np.mean(frame > 0) for frame in scan.labels])
            self.assertGreaterEqual(foreground, 0.03, f"seed {seed}")
            self.assertLessEqual(foreground, 0.25, f"seed {seed}")


class TestSplits(unittest.TestCase):
    """Test class for split assignment"""

    def test_disjoint(self):
        """Splits have the requested sizes and share no scan"""
        train, val, test = make_splits(5, 3, 2, base_seed=0)
        self.assertEqual((5, 3, 2), (len(train), len(val), len(test)))
        self.assertEqual(10, len(set(train) | set(val) | set(test)))
        self.assertEqual('scan_000000000', train[0])
        self.assertEqual('scan_000000005', val[0])

    def test_base_seed(self):
        """Different base seeds draw from different seed ranges"""
        first = set(sum(make_splits(3, 2, 2, base_seed=0), []))
        second = set(sum(make_splits(3, 2, 2, base_seed=1), []))
        self.assertEqual(set(), first & second)
        self.assertEqual(1000000, seed_from_scan_id(sorted(second)[0]))

    def test_empty_split(self):
        """Every split needs at least one scan"""
        self.assertRaises(DiskConfigError, make_splits, 3, 0, 2, 0)

    def test_bad_scan_id(self):
        """Scan ids must end in their seed"""
        self.assertRaises(DiskDataError, seed_from_scan_id, 'scan_abc')


class TestSynthesizeDataset(unittest.TestCase):
    """Test class for dataset folders"""

    def setUp(self):
        self.folder = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_write_and_load(self):
        """Stored scans are the generated phantoms"""
        data = os.path.join(self.folder, 'data')
        manifest, digest = synthesize_dataset(data, DATA_PARAMS, SMALL)

        self.assertEqual(digest, dataset_digest(data))
        self.assertEqual(4, len(manifest['scans']))
        self.assertEqual(2, len(manifest['splits']['train']))

        scans = load_split(data, 'val')
        self.assertEqual(1, len(scans))
        expected = generate_phantom(scans[0].seed, config=SMALL)
        np.testing.assert_array_equal(expected.labels, scans[0].labels)
        np.testing.assert_array_equal(expected.image, load_scan(data, scans[0].scan_id).image)

    def test_reproducible(self):
        """Two syntheses with the same parameters have the same digest"""
        _, first = synthesize_dataset(os.path.join(self.folder, 'a'), DATA_PARAMS, SMALL)
        _, second = synthesize_dataset(os.path.join(self.folder, 'b'), DATA_PARAMS, SMALL)
        self.assertEqual(first, second)

    def test_refuse_non_empty(self):
        """An existing dataset is only overwritten with force"""
        data = os.path.join(self.folder, 'data')
        _, digest = synthesize_dataset(data, DATA_PARAMS, SMALL)
        self.assertRaises(DiskDataError, synthesize_dataset, data, DATA_PARAMS, SMALL)

        _, forced = synthesize_dataset(data, DATA_PARAMS, SMALL, force=True)
        self.assertEqual(digest, forced)

    def test_unknown_split(self):
        """Loading a split that is not in the manifest fails"""
        data = os.path.join(self.folder, 'data')
        synthesize_dataset(data, DATA_PARAMS, SMALL)
        self.assertRaises(DiskDataError, load_split, data, 'holdout')
        self.assertRaises(DiskDataError, load_split, self.folder, 'train')
