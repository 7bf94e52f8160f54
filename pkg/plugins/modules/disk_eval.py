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
module: disk_eval
short_description: Evaluate a checkpoint over a sweep of acceleration factors
description:
  - Predicts every scan of a dataset split directly from its undersampled
    k-space at each requested acceleration and scores the full-grid
    segmentation with per-class Dice and Hausdorff distance.
  - Writes C(metrics_<split>_R<R>.csv) with one row per scan and
    C(summary_<split>_R<R>.json) with mean and standard deviation per metric.
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
  split:
    description: Dataset split to evaluate
    type: str
    required: false
    default: test
    choices: [ train, val, test ]
  accelerations:
    description:
      - Acceleration factors to evaluate. Defaults to C(eval.accelerations)
        of the run configuration.
    type: list
    elements: int
    required: false
  out:
    description: Output folder for the metric tables
    type: path
    required: true
extends_documentation_fragment:
  - kspace.disk_seg.run_config_options
"""

EXAMPLES = r"""
- name: Evaluate the best checkpoint over the full acceleration range
  kspace.disk_seg.disk_eval:
    config: /srv/disk/run.json
    checkpoint: /srv/disk/runs/r8/best.zip
    data: /srv/disk/data
    out: /srv/disk/runs/r8/eval

- name: Evaluate on the validation split at 4x and 64x only
  kspace.disk_seg.disk_eval:
    checkpoint: /srv/disk/runs/r8/best.zip
    data: /srv/disk/data
    split: val
    accelerations: [4, 64]
    out: /srv/disk/runs/r8/eval-val
"""

RETURN = r"""
rows:
  description: Number of metric rows written, scans times accelerations
  returned: always
  type: int
table:
  description: One summary entry per acceleration
  returned: always
  type: list
  elements: dict
  contains:
    R:
      description: Acceleration factor
      type: int
    dice_fg_mean:
      description: Mean foreground Dice formatted as mean±std
      type: str
    hd_fg_max:
      description: Maximum foreground Hausdorff distance formatted as mean±std
      type: str
    metrics:
      description: Path of the per-scan metric CSV
      type: str
    summary:
      description: Path of the JSON summary
      type: str
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
    DiskConfigError,
    DiskError,
    fail_module,
)

# safe import of the numerical stack
try:
    from ansible_collections.kspace.disk_seg.plugins.module_utils.io_utils import (
        append_csv_rows,
        write_json,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.metrics import (
        metric_fieldnames,
        summarize_reports,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import (
        load_split,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import (
        ACCELERATIONS,
        evaluate_split,
        load_model,
        model_predictor,
    )

except ImportError:
    EVAL_IMPORT_ERROR = traceback.format_exc()

else:
    EVAL_IMPORT_ERROR = None


def write_reports(out_dir, split, acceleration, reports, classes):
    # type: (str, str, int, List[MetricReport], int) -> dict
    """Write the metric CSV and summary JSON of one acceleration"""
    csv_path = os.path.join(out_dir, f"metrics_{split}_R{acceleration}.csv")
    summary_path = os.path.join(out_dir, f"summary_{split}_R{acceleration}.json")

    # one table per invocation
    if os.path.isfile(csv_path):
        os.remove(csv_path)
    append_csv_rows(csv_path, metric_fieldnames(classes), [r.to_row() for r in reports])

    summary = summarize_reports(reports)
    summary['split'] = split
    write_json(summary_path, summary)

    return dict(
        R=acceleration,
        dice_fg_mean=summary['metrics']['dice_fg_mean']['formatted'],
        hd_fg_max=summary['metrics']['hd_fg_max']['formatted'],
        metrics=csv_path,
        summary=summary_path,
    )


def evaluate(module, run_config):
    # type: (AnsibleModule, RunConfig) -> dict
    accelerations = module.params['accelerations'] or run_config.eval['accelerations']
    unknown = [r for r in accelerations if r not in ACCELERATIONS]
    if unknown:
        raise DiskConfigError(
            f"Accelerations {unknown} are not in the supported set {list(ACCELERATIONS)}"
        )

    params, model_cfg, _ = load_model(module.params['checkpoint'])
    scans = load_split(module.params['data'], module.params['split'])

    reports = evaluate_split(
        scans,
        accelerations,
        model_predictor(params, model_cfg, run_config.eval['chunk_size']),
        run_config.kspace,
        run_config.eval['seed'],
        log=module.log,
    )

    out_dir = module.params['out']
    os.makedirs(out_dir, exist_ok=True)
    table = [
        write_reports(out_dir, module.params['split'], r, reports[r], model_cfg.classes)
        for r in accelerations
    ]
    return dict(
        changed=True,
        rows=sum(len(reports[r]) for r in accelerations),
        table=table,
    )


def main():
    module_args = dict(
        checkpoint=dict(required=True, type='path'),
        data=dict(required=True, type='path'),
        split=dict(required=False, type='str', default='test', choices=['train', 'val', 'test']),
        accelerations=dict(required=False, type='list', elements='int'),
        out=dict(required=True, type='path'),
    )
    module_args.update(get_config_arguments())

    module = AnsibleModule(
        argument_spec=module_args,
        supports_check_mode=False
    )

    # check for Python and numpy compatibility
    check_environment(module, EVAL_IMPORT_ERROR)

    try:
        run_config = RunConfig.from_module(module)
        result = evaluate(module, run_config)

    except DiskError as err:
        fail_module(module, err)

    module.exit_json(**result)


if __name__ == '__main__':
    main()
