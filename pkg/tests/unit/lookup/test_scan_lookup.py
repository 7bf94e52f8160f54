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
import os
import shutil
import tempfile
import unittest
from ansible.errors import AnsibleError

# pylint: disable=no-name-in-module,import-error
from ansible_collections.kspace.disk_seg.plugins.lookup.disk_scan_lookup import (
    LookupModule,
    MANIFEST_NAME,
)
# pylint: enable=no-name-in-module,import-error


#
# MOCK SECTION
#
# The lookup only reads manifest.json, so a hand written manifest stands in
# for a dataset produced by disk_synth_data.

mock_manifest = dict(
    format_version="1.0.0",
    splits=dict(
        train=["scan_000000000", "scan_000000001", "scan_000000002"],
        val=["scan_000000003"],
        test=["scan_000000004", "scan_000000005"],
    ),
)


class TestScanLookupModule(unittest.TestCase):
    """Test class for dataset split lookups"""

    def setUp(self) -> None:
        self.module = LookupModule()
        self.folder = tempfile.mkdtemp()
        with open(os.path.join(self.folder, MANIFEST_NAME), "w", encoding="utf-8") as handle:
            json.dump(mock_manifest, handle)

    def tearDown(self) -> None:
        shutil.rmtree(self.folder)

    def test_split_not_provided(self):
        """Test for an error when there is no split"""
        try:
            self.module.run(terms=[], data=self.folder)
            self.fail("Lookup didn't fail when split was not provided.")

        except AnsibleError:
            pass

    def test_unknown_split(self):
        """Test for an error when an unknown split is provided"""
        try:
            self.module.run(terms=["holdout"], data=self.folder)
            self.fail("Lookup didn't fail when an unknown split was provided")

        except AnsibleError:
            pass

    def test_data_not_provided(self):
        """Test for an error when the dataset folder is missing"""
        try:
            self.module.run(terms=["test"])
            self.fail("Lookup didn't fail without a dataset folder")

        except AnsibleError:
            pass

    def test_missing_manifest(self):
        """Test for an error when the folder holds no manifest"""
        os.remove(os.path.join(self.folder, MANIFEST_NAME))
        try:
            self.module.run(terms=["test"], data=self.folder)
            self.fail("Lookup didn't fail without a manifest")

        except AnsibleError:
            pass

    def test_single_split(self):
        """Test lookup of the scan ids of one split"""
        result = self.module.run(terms=["test"], data=self.folder)
        self.assertEqual(mock_manifest["splits"]["test"], result)

    def test_multiple_splits(self):
        """Test lookup of several splits in the requested order"""
        result = self.module.run(terms=["val", "train"], data=self.folder)
        self.assertEqual(
            mock_manifest["splits"]["val"] + mock_manifest["splits"]["train"], result,
        )
