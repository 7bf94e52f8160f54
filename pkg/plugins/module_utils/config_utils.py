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

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import copy
import json
import math
import os
import sys
import traceback

from ansible.module_utils.common.arg_spec import ArgumentSpecValidator
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    validate_numerics,
)

try:
    import numpy
    import scipy  # noqa: F401 pylint: disable=unused-import
    import matplotlib  # noqa: F401 pylint: disable=unused-import

except ImportError:
    NUMPY_VERSION = None
    NUMERICS_IMPORT_ERROR = traceback.format_exc()

else:
    NUMPY_VERSION = numpy.__version__.strip()
    NUMERICS_IMPORT_ERROR = None

__all__ = [
    'RUN_CONFIG_SPEC',
    'get_config_arguments',
    'check_environment',
    'parse_override',
    'apply_overrides',
    'validate_run_config',
    'load_run_config',
    'RunConfig',
]

REQ_PYTHON_VERSION_MAJOR = 3
REQ_PYTHON_VERSION_MINOR = 6

# Need to statically provide the collection version here as the standard files
# where this information can be collected from won't be sent to the remote
# machine.
COLLECTION_VERSION = '1.0.0'


def _section(**options):
    return dict(type='dict', apply_defaults=True, options=options)


RUN_CONFIG_SPEC = dict(
    data=_section(
        num_train=dict(type='int', default=60),
        num_val=dict(type='int', default=20),
        num_test=dict(type='int', default=20),
        base_seed=dict(type='int', default=0),
    ),
    phantom=_section(
        T=dict(type='int', default=10),
        H=dict(type='int', default=64),
        W=dict(type='int', default=64),
        center_jitter=dict(type='float', default=0.1),
        radius_jitter=dict(type='float', default=0.2),
        contraction_min=dict(type='float', default=0.25),
        contraction_max=dict(type='float', default=0.40),
        noise_std=dict(type='float', default=0.02),
    ),
    kspace=_section(
        b0_num_bumps=dict(type='int', default=3),
        b0_width_min=dict(type='float', default=0.15),
        b0_width_max=dict(type='float', default=0.4),
        b0_amplitude_std=dict(type='float', default=math.pi / 2.0),
        line_std_fraction=dict(type='float', default=1.0 / 6.0),
        force_dc=dict(type='bool', default=True),
    ),
    model=_section(
        layers=dict(type='int', default=4),
        num_latents=dict(type='int', default=128),
        width=dict(type='int', default=128),
        ff_width=dict(type='int', default=128),
        heads=dict(type='int', default=4),
        classes=dict(type='int', default=4),
        latent_init_std=dict(type='float', default=0.02),
        seed=dict(type='int', default=0),
    ),
    encoding=_section(
        num_frequencies=dict(type='int', default=10),
        include_raw=dict(type='bool', default=True),
        debug=dict(type='bool', default=False),
    ),
    train=_section(
        acceleration=dict(type='int', default=8, choices=[4, 8, 16, 32, 64]),
        steps=dict(type='int', default=5000),
        learning_rate=dict(type='float', default=1e-4),
        batch_size=dict(type='int', default=1),
        queries_per_step=dict(type='int', default=2048),
        fg_fraction=dict(type='float', default=0.5),
        seed=dict(type='int', default=0),
        checkpoint_every=dict(type='int', default=500),
        beta1=dict(type='float', default=0.9),
        beta2=dict(type='float', default=0.999),
        adam_eps=dict(type='float', default=1e-8),
        dice_weight=dict(type='float', default=1.0),
        bce_weight=dict(type='float', default=1.0),
    ),
    eval=_section(
        accelerations=dict(type='list', elements='int', default=[4, 8, 16, 32, 64]),
        chunk_size=dict(type='int', default=8192),
        seed=dict(type='int', default=1234),
    ),
)

# keys that must be >= 1
POSITIVE_KEYS = [
    ('data', 'num_train'), ('data', 'num_val'), ('data', 'num_test'),
    ('phantom', 'T'), ('phantom', 'H'), ('phantom', 'W'),
    ('model', 'layers'), ('model', 'num_latents'), ('model', 'width'),
    ('model', 'ff_width'), ('model', 'heads'),
    ('encoding', 'num_frequencies'),
    ('train', 'batch_size'), ('train', 'queries_per_step'), ('train', 'checkpoint_every'),
    ('eval', 'chunk_size'),
]


def get_config_arguments():
    # type: () -> dict
    """Get the parameters shared by every module that reads a run config"""
    return dict(
        config=dict(required=False, type='path'),
        overrides=dict(required=False, type='list', elements='str', default=[]),
    )


def is_python_compatible(module, major_version, minor_version):
    # type: (AnsibleModule, int, int) -> None
    """Checks if the installed Python version is compatible with the requirement"""
    if major_version <= REQ_PYTHON_VERSION_MAJOR and minor_version < REQ_PYTHON_VERSION_MINOR:

        err_msg = "The DiSK Ansible Collection requires Python version"
        err_msg += f" {REQ_PYTHON_VERSION_MAJOR}.{REQ_PYTHON_VERSION_MINOR} or higher."
        err_msg += f" Your current version is {major_version}.{minor_version}."
        module.fail_json(msg=err_msg)


def check_environment(module, import_error=None):
    # type: (AnsibleModule, str) -> None
    """Fail the module early when Python or the numerical stack is unusable

    ``import_error`` is the traceback of a failed import in the calling module.
    """
    is_python_compatible(module, sys.version_info.major, sys.version_info.minor)
    validate_numerics(
        module=module,
        version=None if import_error else NUMPY_VERSION,
        import_error=import_error or NUMERICS_IMPORT_ERROR,
    )


def parse_override(override):
    # type: (str) -> tuple
    """Split ``section.key=value`` into (section, key, value)

    The value is parsed as JSON where possible and kept as a string otherwise.
    """
    path, sep, raw = override.partition('=')
    parts = path.strip().split('.')
    if not sep or len(parts) != 2 or not all(parts):
        raise DiskConfigError(f"Override '{override}' is not of the form section.key=value")

    section, key = parts
    if section not in RUN_CONFIG_SPEC:
        raise DiskConfigError(
            f"Override '{override}' names unknown section '{section}', "
            f"valid sections are {sorted(RUN_CONFIG_SPEC)}"
        )
    if key not in RUN_CONFIG_SPEC[section]['options']:
        raise DiskConfigError(
            f"Override '{override}' names unknown key '{key}' of section '{section}'"
        )

    raw = raw.strip()
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return section, key, value


def apply_overrides(raw_config, overrides):
    # type: (dict, List[str]) -> dict
    config = copy.deepcopy(raw_config) if raw_config else {}
    for override in overrides or []:
        section, key, value = parse_override(override)
        if not isinstance(config.get(section), dict):
            config[section] = {}
        config[section][key] = value
    return config


def validate_run_config(raw_config):
    # type: (dict) -> dict
    """Fill defaults, convert types and reject unknown or invalid keys"""
    if not isinstance(raw_config, dict):
        raise DiskConfigError("Run configuration must be a JSON object")

    validator = ArgumentSpecValidator(RUN_CONFIG_SPEC)
    result = validator.validate(raw_config)
    if result.error_messages:
        raise DiskConfigError(
            "Invalid run configuration: " + "; ".join(result.error_messages),
            details=dict(errors=result.error_messages),
        )

    config = copy.deepcopy(result.validated_parameters)
    for section, key in POSITIVE_KEYS:
        if config[section][key] < 1:
            raise DiskConfigError(f"{section}.{key} must be at least 1, got {config[section][key]}")

    if config['model']['width'] % config['model']['heads'] != 0:
        raise DiskConfigError(
            f"model.width ({config['model']['width']}) must be divisible by "
            f"model.heads ({config['model']['heads']})"
        )
    if config['model']['classes'] < 2:
        raise DiskConfigError(f"model.classes must be at least 2, got {config['model']['classes']}")
    if config['train']['steps'] < 0 or config['train']['learning_rate'] < 0:
        raise DiskConfigError("train.steps and train.learning_rate must not be negative")
    bad = [r for r in config['eval']['accelerations'] if r not in (4, 8, 16, 32, 64)]
    if bad or not config['eval']['accelerations']:
        raise DiskConfigError(
            f"eval.accelerations must be a non-empty subset of [4, 8, 16, 32, 64], got "
            f"{config['eval']['accelerations']}"
        )
    return config


def load_run_config(path=None, overrides=None):
    # type: (str, List[str]) -> dict
    """Read a JSON run config (or start from defaults) and apply overrides"""
    raw_config = {}
    if path:
        if not os.path.isfile(path):
            raise DiskConfigError(f"Run configuration {path} not found")
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                raw_config = json.load(handle)
        except ValueError as err:
            raise DiskConfigError(f"Run configuration {path} is not valid JSON: {err}")

    return validate_run_config(apply_overrides(raw_config, overrides))


class RunConfig(object):
    """Typed views of a validated run configuration"""

    def __init__(self, config):
        # type: (dict) -> None
        # numpy-dependent imports stay local, config_utils loads without numpy
        from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_model import ModelConfig
        from ansible_collections.kspace.disk_seg.plugins.module_utils.kspace import KSpaceConfig
        from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import PhantomConfig
        from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import TrainConfig

        self.raw = config
        self.data = config['data']
        self.phantom = PhantomConfig.from_params(config['phantom'])
        self.kspace = KSpaceConfig.from_params(config['kspace'])
        self.model = ModelConfig.from_params(config['model'], config['encoding'])
        self.train = TrainConfig.from_params(config['train'])
        self.eval = config['eval']

    @classmethod
    def from_module(cls, module):
        # type: (AnsibleModule) -> RunConfig
        return cls(load_run_config(module.params.get('config'), module.params.get('overrides')))
