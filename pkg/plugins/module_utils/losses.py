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

import numpy as np

from ansible_collections.kspace.disk_seg.plugins.module_utils import autodiff as ad
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskShapeError,
)

__all__ = [
    'DICE_SMOOTHING',
    'LOG_CLAMP',
    'one_hot',
    'soft_dice_loss',
    'bce_loss',
    'total_loss',
]

DICE_SMOOTHING = 1e-6
LOG_CLAMP = 1e-7


def one_hot(labels, classes):
    # type: (np.ndarray, int) -> np.ndarray
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    targets = np.zeros((labels.size, classes), dtype=np.float64)
    targets[np.arange(labels.size), labels] = 1.0
    return targets


def _check_targets(probs, targets):
    # type: (ad.Tensor, np.ndarray) -> np.ndarray
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise DiskShapeError(
            f"Probabilities {list(probs.shape)} and targets {list(targets.shape)} differ"
        )
    return targets


def soft_dice_loss(probs, targets):
    # type: (ad.Tensor, np.ndarray) -> ad.Tensor
    """1 - mean over classes of the smoothed soft Dice overlap"""
    targets = _check_targets(probs, targets)
    intersection = ad.sum(ad.mul(probs, targets), axis=0)
    denominator = ad.add(ad.sum(probs, axis=0), targets.sum(axis=0) + DICE_SMOOTHING)
    dice = ad.div(ad.add(ad.scale(intersection, 2.0), DICE_SMOOTHING), denominator)
    return ad.sub(1.0, ad.mean(dice))


def bce_loss(probs, targets):
    # type: (ad.Tensor, np.ndarray) -> ad.Tensor
    """Binary cross-entropy averaged over all P x C entries"""
    targets = _check_targets(probs, targets)
    clamped = ad.clip(probs, LOG_CLAMP, 1.0 - LOG_CLAMP)
    positive = ad.mul(targets, ad.log(clamped))
    negative = ad.mul(1.0 - targets, ad.log(ad.sub(1.0, clamped)))
    return ad.scale(ad.mean(ad.add(positive, negative)), -1.0)


def total_loss(probs, targets, dice_weight=1.0, bce_weight=1.0):
    # type: (ad.Tensor, np.ndarray, float, float) -> ad.Tensor
    dice = soft_dice_loss(probs, targets)
    bce = bce_loss(probs, targets)
    return ad.add(ad.scale(dice, dice_weight), ad.scale(bce, bce_weight))
