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

import json
import unittest

import numpy as np

# pylint: disable=import-error,no-name-in-module
from ansible_collections.kspace.disk_seg.plugins.module_utils.class_utils import (
    to_dict,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.metrics import (
    MetricReport,
)
# pylint: enable=import-error,no-name-in-module


class Holder(object):

    def __init__(self):
        self.__hidden = np.float64(0.5)
        self.split = np.array([1, 2])


class TestToDict(unittest.TestCase):
    """Test class for converting objects into module output"""

    def test_numpy(self):
        """Numpy scalars and arrays become Python values"""
        self.assertEqual(3, to_dict(np.int64(3)))
        self.assertIsInstance(to_dict(np.float32(0.25)), float)
        self.assertEqual([[1, 2], [3, 4]], to_dict(np.array([[1, 2], [3, 4]])))

    def test_nested(self):
        """Containers are converted recursively and keys become strings"""
        result = to_dict({8: (np.int64(1), [np.float64(0.5)]), 'a': None})
        self.assertEqual({'8': [1, [0.5]], 'a': None}, result)

    def test_object(self):
        """Object attributes lose their private name prefix"""
        self.assertEqual({'hidden': 0.5, 'split': [1, 2]}, to_dict(Holder()))

    def test_report(self):
        """Metric reports serialize to JSON"""
        report = MetricReport('scan_000000001', 8, np.array([1.0, 0.5]), [np.float64(0.0), 2.0])
        result = to_dict(report)
        self.assertEqual('scan_000000001', result['scan_id'])
        self.assertEqual([1.0, 0.5], result['dice'])
        json.dumps(result)
