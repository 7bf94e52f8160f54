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
import re
import shutil
import tempfile
import unittest

import yaml

# pylint: disable=import-error,no-name-in-module
from ansible_collections.kspace.disk_seg.plugins.doc_fragments.run_config_options import (
    ModuleDocFragment,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.config_utils import (
    RUN_CONFIG_SPEC,
    RunConfig,
    apply_overrides,
    get_config_arguments,
    load_run_config,
    parse_override,
    validate_run_config,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
)
# pylint: enable=import-error,no-name-in-module

OPTION_PATTERN = re.compile(r"^C\((\w+)\.(\w+)\) - (\w+), default C\((.+?)\)\. ")


def doc_default(value):
    # type: (any) -> str
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return str(value)


class TestOverrides(unittest.TestCase):
    """Test class for section.key=value overrides"""

    def test_parse_json_value(self):
        """Values are parsed as JSON"""
        self.assertEqual(('train', 'steps', 10), parse_override('train.steps=10'))
        self.assertEqual(('eval', 'accelerations', [4, 8]), parse_override('eval.accelerations=[4, 8]'))
        self.assertEqual(('kspace', 'force_dc', False), parse_override('kspace.force_dc=false'))

    def test_parse_string_fallback(self):
        """Values that are not JSON stay strings"""
        self.assertEqual(('train', 'steps', 'many'), parse_override('train.steps=many'))

    def test_malformed(self):
        """Overrides need a section, a key and a value"""
        for override in ['steps=10', 'train.steps', 'a.b.c=1', '.steps=1']:
            self.assertRaises(DiskConfigError, parse_override, override)

    def test_unknown_names(self):
        """Unknown sections and keys are rejected"""
        self.assertRaises(DiskConfigError, parse_override, 'optimizer.steps=1')
        self.assertRaises(DiskConfigError, parse_override, 'train.epochs=1')

    def test_apply(self):
        """Overrides are applied to a copy of the raw config"""
        raw = dict(train=dict(steps=5))
        config = apply_overrides(raw, ['train.steps=7', 'model.layers=2'])
        self.assertEqual(dict(train=dict(steps=7), model=dict(layers=2)), config)
        self.assertEqual(dict(train=dict(steps=5)), raw)
        self.assertEqual({}, apply_overrides(None, None))


class TestValidateRunConfig(unittest.TestCase):
    """Test class for run configuration validation"""

    def test_defaults(self):
        """An empty config takes every default"""
        config = validate_run_config({})
        self.assertEqual(sorted(RUN_CONFIG_SPEC), sorted(config))
        self.assertEqual(5000, config['train']['steps'])
        self.assertEqual(8, config['train']['acceleration'])
        self.assertEqual([4, 8, 16, 32, 64], config['eval']['accelerations'])
        self.assertEqual(10, config['encoding']['num_frequencies'])

    def test_type_conversion(self):
        """Integers are accepted for float options"""
        config = validate_run_config(dict(train=dict(learning_rate=1)))
        self.assertIsInstance(config['train']['learning_rate'], float)

    def test_unknown_key(self):
        """Unknown keys are an error"""
        self.assertRaises(DiskConfigError, validate_run_config, dict(train=dict(epochs=3)))
        self.assertRaises(DiskConfigError, validate_run_config, dict(optimizer={}))
        self.assertRaises(DiskConfigError, validate_run_config, [])

    def test_invalid_values(self):
        """Bad values and bad combinations are rejected"""
        invalid = [
            dict(train=dict(acceleration=5)),
            dict(train=dict(steps='many')),
            dict(train=dict(steps=-1)),
            dict(data=dict(num_train=0)),
            dict(model=dict(width=10, heads=4)),
            dict(model=dict(classes=1)),
            dict(eval=dict(accelerations=[8, 12])),
            dict(eval=dict(accelerations=[])),
        ]
        for config in invalid:
            self.assertRaises(DiskConfigError, validate_run_config, config)

    def test_error_details(self):
        """Validation messages are attached to the error"""
        try:
            validate_run_config(dict(train=dict(epochs=3)))
            self.fail("validate_run_config should have raised DiskConfigError")
        except DiskConfigError as err:
            self.assertEqual(2, err.rc)
            self.assertTrue(err.details['errors'])

    def test_config_arguments(self):
        """Modules take a config path and a list of overrides"""
        args = get_config_arguments()
        self.assertEqual('path', args['config']['type'])
        self.assertEqual([], args['overrides']['default'])


class TestLoadRunConfig(unittest.TestCase):
    """Test class for reading run configurations from disk"""

    def setUp(self):
        self.folder = tempfile.mkdtemp()
        self.path = os.path.join(self.folder, 'run.json')

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_file_and_overrides(self):
        """Overrides take precedence over the file"""
        with open(self.path, 'w', encoding='utf-8') as handle:
            json.dump(dict(train=dict(steps=100, seed=3)), handle)
        config = load_run_config(self.path, ['train.steps=20'])
        self.assertEqual(20, config['train']['steps'])
        self.assertEqual(3, config['train']['seed'])

    def test_without_file(self):
        """No path means defaults plus overrides"""
        self.assertEqual(2, load_run_config(None, ['model.layers=2'])['model']['layers'])

    def test_missing_file(self):
        """A path that does not exist is an error"""
        self.assertRaises(DiskConfigError, load_run_config, self.path)

    def test_invalid_json(self):
        """A file that is not JSON is an error"""
        with open(self.path, 'w', encoding='utf-8') as handle:
            handle.write('{train: ')
        self.assertRaises(DiskConfigError, load_run_config, self.path)

    def test_typed_views(self):
        """RunConfig exposes the typed configuration objects"""
        run = RunConfig(load_run_config(None, ['encoding.num_frequencies=4', 'phantom.T=6']))
        self.assertEqual(4, run.model.encoding.num_frequencies)
        self.assertEqual(6, run.phantom.T)
        self.assertEqual(8, run.train.acceleration)
        self.assertEqual(1.0 / 6.0, run.kspace.line_std_fraction)
        self.assertEqual(1234, run.eval['seed'])


class TestDocFragment(unittest.TestCase):
    """Test class for the run configuration documentation"""

    def test_every_key_documented(self):
        """Each option is listed once with its type and default"""
        doc = yaml.safe_load(ModuleDocFragment.DOCUMENTATION)
        documented = {}
        for line in doc['options']['config']['description']:
            match = OPTION_PATTERN.match(line)
            if match:
                section, key, kind, default = match.groups()
                documented[(section, key)] = (kind, default)

        expected = {}
        for section, spec in RUN_CONFIG_SPEC.items():
            for key, option in spec['options'].items():
                expected[(section, key)] = (option['type'], doc_default(option['default']))

        self.assertEqual(expected, documented)
