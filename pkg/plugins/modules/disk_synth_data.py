#!/usr/bin/python
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
# along with this program. If not, see <http://www.gnu.org/licenses/>.

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

DOCUMENTATION = r"""
---
module: disk_synth_data
short_description: Synthesize a labeled cardiac phantom dataset
description:
  - Generates train, validation and test splits of 2D+time short-axis cardiac
    phantoms with four-class label maps.
  - Every scan is stored as one DSKT0001 tensor with a JSON sidecar, and the
    dataset folder receives a manifest listing scan ids, seeds and split membership.
author:
  - DiSK collection contributors
options:
  out:
    description: Dataset folder to create
    type: path
    required: true
  force:
    description: Write into an existing, non-empty folder
    type: bool
    required: false
    default: false
extends_documentation_fragment:
  - kspace.disk_seg.run_config_options
"""

EXAMPLES = r"""
- name: Create the default 60/20/20 phantom dataset
  kspace.disk_seg.disk_synth_data:
    config: /srv/disk/run.json
    out: /srv/disk/data

- name: Create a small dataset with ten frames per scan
  kspace.disk_seg.disk_synth_data:
    out: /tmp/disk-small
    force: true
    overrides:
      - data.num_train=4
      - data.num_val=2
      - data.num_test=2
      - phantom.T=10
"""

RETURN = r"""
manifest_sha256:
  description: sha256 of the canonical manifest JSON, identical for identical configs
  returned: always
  type: str
manifest:
  description: Path of the written dataset manifest
  returned: always
  type: str
splits:
  description: Number of scans per split
  returned: always
  type: dict
  contains:
    train:
      description: Number of training scans
      type: int
    val:
      description: Number of validation scans
      type: int
    test:
      description: Number of test scans
      type: int
"""

import os
import traceback
from ansible.module_utils.basic import AnsibleModule
from ansible_collections.kspace.disk_seg.plugins.module_utils.config_utils import (
    RunConfig,
    check_environment,
    get_config_arguments,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskError,
    fail_module,
)

# safe import of the numerical stack
try:
    from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import (
        synthesize_dataset,
    )

except ImportError:
    PHANTOM_IMPORT_ERROR = traceback.format_exc()

else:
    PHANTOM_IMPORT_ERROR = None


def synth_data(module, run_config):
    # type: (AnsibleModule, RunConfig) -> dict
    """Generate all splits into the output folder"""
    out_dir = module.params['out']
    manifest, digest = synthesize_dataset(
        out_dir,
        run_config.data,
        run_config.phantom,
        force=module.params['force'],
        log=module.log,
    )
    return dict(
        changed=True,
        manifest_sha256=digest,
        manifest=os.path.join(out_dir, 'manifest.json'),
        splits={name: len(ids) for name, ids in manifest['splits'].items()},
    )


def main():
    module_args = dict(
        out=dict(required=True, type='path'),
        force=dict(required=False, type='bool', default=False),
    )
    module_args.update(get_config_arguments())

    module = AnsibleModule(
        argument_spec=module_args,
        supports_check_mode=False
    )

    # check for Python and numpy compatibility
    check_environment(module, PHANTOM_IMPORT_ERROR)

    try:
        run_config = RunConfig.from_module(module)
        result = synth_data(module, run_config)

    except DiskError as err:
        fail_module(module, err)

    module.exit_json(**result)


if __name__ == '__main__':
    main()
