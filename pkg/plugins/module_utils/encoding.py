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
    DiskConfigError,
    DiskShapeError,
)

__all__ = [
    'EncodingConfig',
    'encode_scalar',
    'encode_features',
    'input_features',
    'query_features',
    'build_input_tokens',
    'build_query_tokens',
]

INPUT_SCALARS = 5
QUERY_SCALARS = 3


class EncodingConfig(object):
    """Fourier feature settings shared by input and query tokens"""

    def __init__(self, num_frequencies=10, include_raw=True, debug=False):
        # type: (int, bool, bool) -> None
        if int(num_frequencies) < 1:
            raise DiskConfigError(f"num_frequencies must be at least 1, got {num_frequencies}")
        self.num_frequencies = int(num_frequencies)
        self.include_raw = bool(include_raw)
        self.debug = bool(debug)

    @classmethod
    def from_params(cls, params):
        # type: (dict) -> EncodingConfig
        return cls(**params)

    def to_dict(self):
        # type: () -> dict
        return dict(
            num_frequencies=self.num_frequencies,
            include_raw=self.include_raw,
            debug=self.debug,
        )

    @property
    def scalar_length(self):
        # type: () -> int
        return 2 * self.num_frequencies + (1 if self.include_raw else 0)

    @property
    def input_length(self):
        # type: () -> int
        return INPUT_SCALARS * self.scalar_length

    @property
    def query_length(self):
        # type: () -> int
        return QUERY_SCALARS * self.scalar_length

    @property
    def frequencies(self):
        # type: () -> np.ndarray
        return np.pi * 2.0 ** np.arange(self.num_frequencies)


def encode_features(values, cfg, warn=None):
    # type: (np.ndarray, EncodingConfig, callable) -> np.ndarray
    """Encode every column of an (n, k) matrix, concatenating per scalar

    Each scalar p becomes [p, sin(f0 p), cos(f0 p), sin(f1 p), ...] with
    f_j = 2^j pi; the raw entry is present only when ``include_raw`` is set.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DiskShapeError(f"encode_features expects an (n, k) matrix, got {list(values.shape)}")

    if cfg.debug and warn is not None and values.size and np.abs(values).max() > 1.0:
        warn(f"Encoder input outside [-1, 1]: max |p| = {np.abs(values).max():.6g}")

    count, scalars = values.shape
    angles = values[:, :, np.newaxis] * cfg.frequencies
    # interleave sin / cos per frequency
    waves = np.stack([np.sin(angles), np.cos(angles)], axis=-1).reshape(count, scalars, -1)
    if cfg.include_raw:
        waves = np.concatenate([values[:, :, np.newaxis], waves], axis=-1)
    return waves.reshape(count, scalars * cfg.scalar_length)


def encode_scalar(value, cfg):
    # type: (float, EncodingConfig) -> np.ndarray
    return encode_features(np.array([[value]], dtype=np.float64), cfg)[0]


def input_features(samples, cfg, warn=None):
    # type: (KSpaceSampleSet, EncodingConfig, callable) -> np.ndarray
    """Pre-projection features of (k_y, k_x, t, Re v, Im v) per sample"""
    return encode_features(samples.features(), cfg, warn)


def query_features(coordinates, cfg, warn=None):
    # type: (np.ndarray, EncodingConfig, callable) -> np.ndarray
    """Pre-projection features of (y, x, t) per query"""
    coordinates = np.asarray(coordinates, dtype=np.float64)
    if coordinates.ndim != 2 or coordinates.shape[1] != QUERY_SCALARS:
        raise DiskShapeError(f"Queries must be a P x 3 matrix, got {list(coordinates.shape)}")
    return encode_features(coordinates, cfg, warn)


def _project(features, weight, bias):
    # type: (np.ndarray, Tensor, Tensor) -> Tensor
    if weight.shape[0] != features.shape[1]:
        raise DiskShapeError(
            f"Token projection expects {weight.shape[0]} features, got {features.shape[1]}"
        )
    return ad.add(ad.matmul(ad.Tensor(features), weight), bias)


def build_input_tokens(samples, cfg, weight, bias, warn=None):
    # type: (KSpaceSampleSet, EncodingConfig, Tensor, Tensor, callable) -> Tensor
    """N x d encoder tokens, row order follows the sample order"""
    return _project(input_features(samples, cfg, warn), weight, bias)


def build_query_tokens(coordinates, cfg, weight, bias, warn=None):
    # type: (np.ndarray, EncodingConfig, Tensor, Tensor, callable) -> Tensor
    """P x d decoder tokens with their own projection"""
    return _project(query_features(coordinates, cfg, warn), weight, bias)
