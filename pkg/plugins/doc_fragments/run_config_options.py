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
#

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type


class ModuleDocFragment(object):

    DOCUMENTATION = r'''
options:
  config:
    description:
      - Path of a JSON run configuration with the sections C(data),
        C(phantom), C(kspace), C(model), C(encoding), C(train) and C(eval).
        Missing keys take their default, unknown keys are an error.
        Without a path every key takes its default.
      - C(data.num_train) - int, default C(60). Number of training scans.
      - C(data.num_val) - int, default C(20). Number of validation scans.
      - C(data.num_test) - int, default C(20). Number of test scans.
      - C(data.base_seed) - int, default C(0). Selects the seed range of the splits.
      - C(phantom.T) - int, default C(10). Frames per scan.
      - C(phantom.H) - int, default C(64). Image height in pixels, at least 32.
      - C(phantom.W) - int, default C(64). Image width in pixels, at least 32.
      - C(phantom.center_jitter) - float, default C(0.1). LV center jitter as a fraction of the image size.
      - C(phantom.radius_jitter) - float, default C(0.2). Relative jitter of the LV radii.
      - C(phantom.contraction_min) - float, default C(0.25). Smallest systolic reduction of the pool radius.
      - C(phantom.contraction_max) - float, default C(0.4). Largest systolic reduction of the pool radius.
      - C(phantom.noise_std) - float, default C(0.02). Standard deviation of the intensity noise.
      - C(kspace.b0_num_bumps) - int, default C(3). Gaussian bumps summed into the B0 phase field.
      - C(kspace.b0_width_min) - float, default C(0.15). Smallest bump width as a fraction of H.
      - C(kspace.b0_width_max) - float, default C(0.4). Largest bump width as a fraction of H.
      - C(kspace.b0_amplitude_std) - float, default C(1.5707963267948966). Standard deviation of the bump amplitudes in radians.
      - C(kspace.line_std_fraction) - float, default C(0.16666666666666666). Standard deviation of the line distribution as a fraction of H.
      - C(kspace.force_dc) - bool, default C(true). Always sample the DC line.
      - C(model.layers) - int, default C(4). Encoder and decoder depth.
      - C(model.num_latents) - int, default C(128). Number of latent vectors.
      - C(model.width) - int, default C(128). Token width, divisible by C(model.heads).
      - C(model.ff_width) - int, default C(128). Hidden width of the feed-forward blocks.
      - C(model.heads) - int, default C(4). Attention heads.
      - C(model.classes) - int, default C(4). Segmentation classes, at least 2.
      - C(model.latent_init_std) - float, default C(0.02). Standard deviation of the initial latents.
      - C(model.seed) - int, default C(0). Seed of the parameter initialization.
      - C(encoding.num_frequencies) - int, default C(10). Fourier frequencies per scalar.
      - C(encoding.include_raw) - bool, default C(true). Prepend the raw scalar to its encoding.
      - C(encoding.debug) - bool, default C(false). Warn about encoder inputs outside [-1, 1].
      - C(train.acceleration) - int, default C(8). Training acceleration, one of 4, 8, 16, 32, 64.
      - C(train.steps) - int, default C(5000). Optimizer steps.
      - C(train.learning_rate) - float, default C(0.0001). Constant learning rate, 0 freezes the parameters.
      - C(train.batch_size) - int, default C(1). Scans per step.
      - C(train.queries_per_step) - int, default C(2048). Query pixels per scan and step.
      - C(train.fg_fraction) - float, default C(0.5). Share of queries drawn from foreground pixels.
      - C(train.seed) - int, default C(0). Seed of the per-step random streams.
      - C(train.checkpoint_every) - int, default C(500). Steps between validation runs and checkpoints.
      - C(train.beta1) - float, default C(0.9). First moment decay.
      - C(train.beta2) - float, default C(0.999). Second moment decay.
      - C(train.adam_eps) - float, default C(1e-08). Denominator guard of the update.
      - C(train.dice_weight) - float, default C(1.0). Weight of the soft Dice loss.
      - C(train.bce_weight) - float, default C(1.0). Weight of the binary cross-entropy loss.
      - C(eval.accelerations) - list, default C([4, 8, 16, 32, 64]). Accelerations evaluated by default.
      - C(eval.chunk_size) - int, default C(8192). Queries decoded per chunk.
      - C(eval.seed) - int, default C(1234). Seed of the evaluation acquisitions.
    type: path
    required: false
  overrides:
    description:
      - List of C(section.key=value) overrides applied on top of I(config).
      - Values are parsed as JSON and fall back to plain strings.
    type: list
    elements: str
    required: false
    default: []
'''
