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
module: disk_predict
short_description: Predict the segmentation of one scan from undersampled k-space
description:
  - Undersamples the k-space of one dataset scan, predicts class probabilities
    for every pixel of its full T x H x W grid and writes the hard label
    volume and the probabilities as DSKT0001 tensors.
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
    description: Scan id to predict, see the P(kspace.disk_seg.disk_scan_lookup#lookup) lookup
    type: str
    required: true
  acceleration:
    description: Acceleration factor, defaults to C(train.acceleration) of the run configuration
    type: int
    required: false
    choices: [ 4, 8, 16, 32, 64 ]
  out:
    description: Output folder for the predicted tensors
    type: path
    required: true
extends_documentation_fragment:
  - kspace.disk_seg.run_config_options
"""

EXAMPLES = r"""
- name: Predict every test scan at 16x acceleration
  kspace.disk_seg.disk_predict:
    checkpoint: /srv/disk/runs/r8/best.zip
    data: /srv/disk/data
    scan: "{{ item }}"
    acceleration: 16
    out: /srv/disk/runs/r8/predictions
  loop: "{{ lookup('kspace.disk_seg.disk_scan_lookup', 'test', data='/srv/disk/data', wantlist=True) }}"
"""

RETURN = r"""
labels:
  description: Path of the T x H x W hard label tensor
  returned: always
  type: str
probabilities:
  description: Path of the C x T x H x W class probability tensor
  returned: always
  type: str
report:
  description: Metric report of the prediction against the scan labels
  returned: always
  type: dict
  contains:
    scan_id:
      description: Scan id
      type: str
    acceleration:
      description: Acceleration factor
      type: int
    dice:
      description: Dice score per class
      type: list
      elements: float
    hausdorff:
      description: Hausdorff distance per class in pixels
      type: list
      elements: float
    dice_fg_mean:
      description: Dice averaged over the foreground classes
      type: float
    hd_fg_max:
      description: Maximum foreground Hausdorff distance in pixels
      type: float
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
    from ansible_collections.kspace.disk_seg.plugins.module_utils.class_utils import (
        to_dict,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.io_utils import (
        write_tensor,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.metrics import (
        evaluate_scan,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import (
        load_scan,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import (
        acquire,
        load_model,
        predict_full,
    )

except ImportError:
    PREDICT_IMPORT_ERROR = traceback.format_exc()

else:
    PREDICT_IMPORT_ERROR = None


def predict(module, run_config):
    # type: (AnsibleModule, RunConfig) -> dict
    acceleration = module.params['acceleration'] or run_config.train.acceleration
    params, model_cfg, _ = load_model(module.params['checkpoint'])
    scan = load_scan(module.params['data'], module.params['scan'])

    samples = acquire(scan, acceleration, run_config.eval['seed'], run_config.kspace)
    result = predict_full(
        samples, params, model_cfg, run_config.eval['chunk_size'], scan.scan_id,
    )
    report = evaluate_scan(result, scan.labels, acceleration)

    out_dir = module.params['out']
    os.makedirs(out_dir, exist_ok=True)
    labels_path = os.path.join(out_dir, f"{scan.scan_id}_R{acceleration}_labels.dskt")
    probs_path = os.path.join(out_dir, f"{scan.scan_id}_R{acceleration}_probs.dskt")
    write_tensor(labels_path, result.to_volume())
    write_tensor(probs_path, result.probability_volume())

    return dict(
        changed=True,
        labels=labels_path,
        probabilities=probs_path,
        report=to_dict(report),
    )


def main():
    module_args = dict(
        checkpoint=dict(required=True, type='path'),
        data=dict(required=True, type='path'),
        scan=dict(required=True, type='str'),
        acceleration=dict(required=False, type='int', choices=[4, 8, 16, 32, 64]),
        out=dict(required=True, type='path'),
    )
    module_args.update(get_config_arguments())

    module = AnsibleModule(
        argument_spec=module_args,
        supports_check_mode=False
    )

    # check for Python and numpy compatibility
    check_environment(module, PREDICT_IMPORT_ERROR)

    try:
        run_config = RunConfig.from_module(module)
        result = predict(module, run_config)

    except DiskError as err:
        fail_module(module, err)

    module.exit_json(**result)


if __name__ == '__main__':
    main()
