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
module: disk_render
short_description: Render label overlays and k-space previews of one scan
description:
  - Writes four lossless PNG images per selected frame
    C(<scan>_R<R>_t<frame>_<kind>.png) with kind one of C(gt), C(pred),
    C(kspace) and C(zerofilled).
  - C(gt) and C(pred) blend the class palette over the image, background
    black, LV blood pool red, myocardium green, RV blue.
  - C(kspace) shows the log magnitude of the sampled k-space lines and
    C(zerofilled) the magnitude of the zero-filled inverse DFT. The zero-filled
    image is visual context only, the model never consumes it.
author:
  - DiSK collection contributors
options:
  checkpoint:
    description: Checkpoint archive written by M(kspace.disk_seg.disk_train)
    type: path
    required: true
  data:
    description: Dataset folder written by M(kspace.disk_seg.disk_synth_data)
    type: path
    required: true
  scan:
    description: Scan id to render
    type: str
    required: true
  acceleration:
    description: Acceleration factor, defaults to C(train.acceleration) of the run configuration
    type: int
    required: false
    choices: [ 4, 8, 16, 32, 64 ]
  frames:
    description: Frame indices to render
    type: list
    elements: int
    required: false
    default: [ 0 ]
  out:
    description: Output folder for the images
    type: path
    required: true
extends_documentation_fragment:
  - kspace.disk_seg.run_config_options
"""

EXAMPLES = r"""
- name: Render the end-diastolic and end-systolic frames at 32x acceleration
  kspace.disk_seg.disk_render:
    checkpoint: /srv/disk/runs/r8/best.zip
    data: /srv/disk/data
    scan: scan_000000080
    acceleration: 32
    frames: [0, 5]
    out: /srv/disk/figures
"""

RETURN = r"""
files:
  description: Paths of the written images, four per frame
  returned: always
  type: list
  elements: str
"""

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
        load_scan,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.render_utils import (
        render_frame,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import (
        acquire,
        load_model,
        predict_full,
    )

except ImportError:
    RENDER_IMPORT_ERROR = traceback.format_exc()

else:
    RENDER_IMPORT_ERROR = None


def render(module, run_config):
    # type: (AnsibleModule, RunConfig) -> dict
    acceleration = module.params['acceleration'] or run_config.train.acceleration
    params, model_cfg, _ = load_model(module.params['checkpoint'])
    scan = load_scan(module.params['data'], module.params['scan'])

    # only the rendered frames are decoded, the rest of the volume stays background
    frames = sorted(set(module.params['frames']))
    samples = acquire(scan, acceleration, run_config.eval['seed'], run_config.kspace)
    pred_labels = predict_full(
        samples, params, model_cfg, run_config.eval['chunk_size'], scan.scan_id, frames,
    ).to_volume(fill=0)

    files = []
    for frame in frames:
        files += render_frame(module.params['out'], scan, samples, pred_labels, frame)

    return dict(
        changed=True,
        files=files,
    )


def main():
    module_args = dict(
        checkpoint=dict(required=True, type='path'),
        data=dict(required=True, type='path'),
        scan=dict(required=True, type='str'),
        acceleration=dict(required=False, type='int', choices=[4, 8, 16, 32, 64]),
        frames=dict(required=False, type='list', elements='int', default=[0]),
        out=dict(required=True, type='path'),
    )
    module_args.update(get_config_arguments())

    module = AnsibleModule(
        argument_spec=module_args,
        supports_check_mode=False
    )

    # check for Python and numpy compatibility
    check_environment(module, RENDER_IMPORT_ERROR)

    try:
        run_config = RunConfig.from_module(module)
        result = render(module, run_config)

    except DiskError as err:
        fail_module(module, err)

    module.exit_json(**result)


if __name__ == '__main__':
    main()
