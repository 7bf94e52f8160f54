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

import re
import unittest
import warnings

# pylint: disable=import-error,no-name-in-module
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
    DiskError,
    DiskNumericalError,
    DiskShapeError,
    RE_VERSION_OK,
    fail_module,
    is_version_compatible,
    validate_numerics,
)
# pylint: enable=import-error,no-name-in-module


class MockModule(dict):
    failed = False
    result = None

    def exit_json(self, **kwargs):
        self.failed = False
        self.result = kwargs

    def fail_json(self, **kwargs):
        self.failed = True
        self.result = kwargs


class TestLibraryCheck(unittest.TestCase):
    """Test class to validate numpy library version checks"""

    def test_version_simple_match(self):
        """A simple test to match versions exactly"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version='1.26.4',
            ok_versions=['1.26.4'],
        )
        self.assertFalse(mock_module.failed)

    def test_version_simple_list(self):
        """A simple test to check version in a list"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version='1.0.1',
            ok_versions=['1.0.0', '1.0.1', '1.0.2'],
        )
        self.assertFalse(mock_module.failed)

    def test_version_range(self):
        """A test to check version in a range"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version='1.0.0',
            ok_versions=['1.0.[0-10]'],
        )
        self.assertFalse(mock_module.failed)

    def test_version_pattern_compiles_cleanly(self):
        """The supported version pattern compiles without regex warnings"""
        re.purge()
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            pattern = re.compile(RE_VERSION_OK)
        self.assertIsNotNone(pattern.match('1.0.[0-10]'))
        self.assertIsNotNone(pattern.match('2.*.*'))
        self.assertIsNone(pattern.match('1.10.'))

    def test_version_wildcard(self):
        """A test to check for a wildcard pattern"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version='1.26.4',
            ok_versions=['1.*.*'],
        )
        self.assertFalse(mock_module.failed)

    def test_version_build_tag(self):
        """Trailing build tags are ignored by the version check"""
        self.assertTrue(is_version_compatible('2.0.0rc1', ['2.*.*']))

    def test_default_versions(self):
        """Released numpy major versions are accepted without a pattern list"""
        for version in ['1.21.6', '1.26.4', '2.1.3']:
            mock_module = MockModule()
            validate_numerics(module=mock_module, version=version)
            self.assertFalse(mock_module.failed, version)

    def test_version_incompatible(self):
        """A test to check for incompatibility"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version='3.0.0',
            ok_versions=['1.*.*'],
        )
        self.assertTrue(mock_module.failed)
        self.assertIn('3.0.0', mock_module.result['msg'])

    def test_missing_library(self):
        """A missing numerical library fails the module"""
        mock_module = MockModule()
        validate_numerics(
            module=mock_module,
            version=None,
            import_error=ImportError('No module named numpy'),
        )
        self.assertTrue(mock_module.failed)
        self.assertEqual('ImportError', mock_module.result['error_class'])

    def test_invalid_version_pattern(self):
        """A test to check that an error is raised for invalid versions"""
        mock_module = MockModule()
        try:
            validate_numerics(
                module=mock_module,
                version='3..0',
                ok_versions=['1.*.*'],
            )
            self.fail(msg="Value Error not raised with invalid version")

        except ValueError:
            pass

    def test_invalid_version_ok_pattern(self):
        """A test to check that an error is raised for invalid version patterns"""
        mock_module = MockModule()
        try:
            validate_numerics(
                module=mock_module,
                version='1.0.0',
                ok_versions=['1.10.'],
            )
            self.fail(msg="Value Error not raised with invalid version")

        except ValueError:
            pass


class TestErrors(unittest.TestCase):
    """Test class for the error hierarchy and module failure reporting"""

    def test_return_codes(self):
        """Every error class maps to its documented return code"""
        self.assertEqual(1, DiskError('x').rc)
        self.assertEqual(2, DiskConfigError('x').rc)
        self.assertEqual(3, DiskDataError('x').rc)
        self.assertEqual(3, DiskShapeError('x').rc)
        self.assertEqual(4, DiskNumericalError('x').rc)

    def test_builtin_bases(self):
        """Errors can be caught by their builtin counterparts"""
        self.assertIsInstance(DiskConfigError('x'), ValueError)
        self.assertIsInstance(DiskShapeError('x'), ValueError)
        self.assertIsInstance(DiskNumericalError('x'), ArithmeticError)
        for cls in [DiskConfigError, DiskDataError, DiskNumericalError, DiskShapeError]:
            self.assertTrue(issubclass(cls, DiskError))

    def test_fail_module(self):
        """Failures carry message, return code, class and details"""
        mock_module = MockModule()
        err = DiskNumericalError('loss is nan', details=dict(step=12))
        fail_module(mock_module, err, diagnostic='/tmp/diagnostic.json')

        self.assertTrue(mock_module.failed)
        self.assertEqual('loss is nan', mock_module.result['msg'])
        self.assertEqual(4, mock_module.result['rc'])
        self.assertEqual('DiskNumericalError', mock_module.result['error_class'])
        self.assertEqual(dict(step=12), mock_module.result['error_details'])
        self.assertEqual('/tmp/diagnostic.json', mock_module.result['diagnostic'])

    def test_fail_module_foreign_error(self):
        """Errors from outside the collection fail with return code 1"""
        mock_module = MockModule()
        fail_module(mock_module, RuntimeError('boom'))
        self.assertEqual(1, mock_module.result['rc'])
        self.assertEqual({}, mock_module.result['error_details'])
