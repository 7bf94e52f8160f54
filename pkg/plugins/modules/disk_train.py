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
module: disk_train
short_description: Train the k-space segmentation transformer
description:
  - Trains the model on the training split of a phantom dataset. Every step
    draws a fresh B0 phase field and undersampling mask for each scan.
  - Writes the step 0 checkpoint, a checkpoint per validation run,
    C(best.zip) with the highest validation Dice, the resolved
    C(run_config.json) and an append-only C(train_log.csv).
  - A non-finite loss stops training and writes C(diagnostic.json) with the
    step inputs to the output folder.
author:
  - DiSK collection contributors
options:
  data:
    description: Dataset folder written by M(kspace.disk_seg.disk_synth_data)
    type: path
    required: true
  out:
    description: Output folder for checkpoints and logs
    type: path
    required: true
  resume:
    description:
      - Checkpoint to continue from. Parameters, optimizer moments and the
        step counter are restored, so the run continues as if uninterrupted.
      - Only C(train.steps) and C(train.checkpoint_every) may differ from the
        settings the checkpoint was trained with.
    type: path
    required: false
extends_documentation_fragment:
  - kspace.disk_seg.run_config_options
"""

EXAMPLES = r"""
- name: Train at 8x acceleration
  kspace.disk_seg.disk_train:
    config: /srv/disk/run.json
    data: /srv/disk/data
    out: /srv/disk/runs/r8

- name: Train a second model at 64x acceleration
  kspace.disk_seg.disk_train:
    config: /srv/disk/run.json
    data: /srv/disk/data
    out: /srv/disk/runs/r64
    overrides:
      - train.acceleration=64

- name: Continue an interrupted run
  kspace.disk_seg.disk_train:
    config: /srv/disk/run.json
    data: /srv/disk/data
    out: /srv/disk/runs/r8
    resume: /srv/disk/runs/r8/ckpt_002500.zip
"""

RETURN = r"""
step:
  description: Step counter after training
  returned: always
  type: int
checkpoints:
  description: Checkpoints written by this invocation
  returned: always
  type: list
  elements: str
best_checkpoint:
  description: Path of the best checkpoint by validation Dice, if any validation ran
  returned: always
  type: str
best_dice:
  description: Mean foreground Dice of the best checkpoint on the validation split
  returned: always
  type: float
best_step:
  description: Step of the best checkpoint
  returned: always
  type: int
last_loss:
  description: Training loss of the last step
  returned: always
  type: float
log:
  description: Path of the training log
  returned: always
  type: str
diagnostic:
  description: Path of the diagnostic dump when the loss became non-finite
  returned: failure
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
    DiskNumericalError,
    fail_module,
)

# safe import of the numerical stack
try:
    from ansible_collections.kspace.disk_seg.plugins.module_utils.io_utils import (
        write_json,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.phantom import (
        load_split,
    )
    from ansible_collections.kspace.disk_seg.plugins.module_utils.trainer import (
        check_resume,
        fit,
        load_state,
    )

except ImportError:
    TRAINER_IMPORT_ERROR = traceback.format_exc()

else:
    TRAINER_IMPORT_ERROR = None


def resume_state(module, run_config):
    # type: (AnsibleModule, RunConfig) -> TrainState
    """Load the resume checkpoint and make sure it fits the run config"""
    if module.params['resume'] is None:
        return None

    state, model_cfg, manifest = load_state(module.params['resume'])
    if model_cfg.to_dict() != run_config.model.to_dict() or \
            model_cfg.encoding.to_dict() != run_config.model.encoding.to_dict():
        raise DiskConfigError(
            f"Checkpoint {module.params['resume']} was trained with a different model configuration"
        )
    check_resume(manifest, run_config.train)
    module.log(f"resuming from step {state.step}")
    return state


def train(module, run_config):
    # type: (AnsibleModule, RunConfig) -> dict
    """Run the optimization loop and report the produced artifacts"""
    out_dir = module.params['out']
    train_scans = load_split(module.params['data'], 'train')
    val_scans = load_split(module.params['data'], 'val')
    state = resume_state(module, run_config)

    summary = fit(
        train_scans,
        val_scans,
        run_config.model,
        run_config.train,
        out_dir,
        kspace_cfg=run_config.kspace,
        eval_seed=run_config.eval['seed'],
        chunk_size=run_config.eval['chunk_size'],
        state=state,
        run_config=run_config.raw,
        log=module.log,
    )

    best = os.path.join(out_dir, 'best.zip')
    return dict(
        changed=True,
        step=summary['step'],
        checkpoints=summary['checkpoints'],
        best_checkpoint=best if os.path.isfile(best) else None,
        best_dice=summary['best_dice'],
        best_step=summary['best_step'],
        last_loss=summary['last_loss'],
        log=summary['log_path'],
    )


def main():
    module_args = dict(
        data=dict(required=True, type='path'),
        out=dict(required=True, type='path'),
        resume=dict(required=False, type='path'),
    )
    module_args.update(get_config_arguments())

    module = AnsibleModule(
        argument_spec=module_args,
        supports_check_mode=False
    )

    # check for Python and numpy compatibility
    check_environment(module, TRAINER_IMPORT_ERROR)

    try:
        run_config = RunConfig.from_module(module)
        result = train(module, run_config)

    except DiskNumericalError as err:
        # keep the step inputs for post-mortem analysis
        os.makedirs(module.params['out'], exist_ok=True)
        diagnostic = os.path.join(module.params['out'], 'diagnostic.json')
        write_json(diagnostic, dict(msg=str(err), details=err.details))
        fail_module(module, err, diagnostic=diagnostic)

    except DiskError as err:
        fail_module(module, err)

    module.exit_json(**result)


if __name__ == '__main__':
    main()
