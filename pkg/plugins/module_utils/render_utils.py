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

import os

import numpy as np
from matplotlib import image as mpimg

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskDataError,
    DiskShapeError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.kspace import (
    scatter_to_grid,
    zero_filled_image,
)

__all__ = [
    'PALETTE',
    'IMAGE_KINDS',
    'label_to_rgb',
    'overlay',
    'kspace_preview',
    'zero_filled_preview',
    'frame_file_name',
    'render_frame',
]

# background, LV blood pool, myocardium, RV
PALETTE = np.array([
    [0, 0, 0],
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
], dtype=np.uint8)

IMAGE_KINDS = ('gt', 'pred', 'kspace', 'zerofilled')

OVERLAY_ALPHA = 0.5


def _to_uint8(values):
    # type: (np.ndarray) -> np.ndarray
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def _gray_rgb(values):
    # type: (np.ndarray) -> np.ndarray
    gray = _to_uint8(values)
    return np.stack([gray, gray, gray], axis=-1)


def label_to_rgb(labels):
    # type: (np.ndarray) -> np.ndarray
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= len(PALETTE):
        raise DiskDataError(f"Labels outside the palette range 0..{len(PALETTE) - 1}")
    return PALETTE[labels]


def overlay(image, labels):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """Blend class colors over a grayscale frame; background stays gray"""
    image = np.asarray(image, dtype=np.float64)
    if image.shape != np.shape(labels):
        raise DiskShapeError(
            f"Overlay image {list(image.shape)} and labels {list(np.shape(labels))} differ"
        )
    base = _gray_rgb(image).astype(np.float64)
    colors = label_to_rgb(labels).astype(np.float64)
    blended = np.where(
        (np.asarray(labels) > 0)[..., np.newaxis],
        (1.0 - OVERLAY_ALPHA) * base + OVERLAY_ALPHA * colors,
        base,
    )
    return np.rint(blended).astype(np.uint8)


def kspace_preview(samples, frame):
    # type: (KSpaceSampleSet, int) -> np.ndarray
    """log(1 + |K|) at the sampled positions, zero elsewhere, scaled to [0, 1]"""
    grid, sampled = scatter_to_grid(samples)
    magnitude = np.where(sampled[frame], np.log1p(np.abs(grid.values[frame])), 0.0)
    peak = magnitude.max()
    return magnitude / peak if peak > 0 else magnitude


def zero_filled_preview(samples, frame):
    # type: (KSpaceSampleSet, int) -> np.ndarray
    """uint8 magnitude of the zero-filled inverse DFT of one frame"""
    return _to_uint8(np.abs(zero_filled_image(samples).values[frame]))


def frame_file_name(scan_id, acceleration, frame, kind):
    # type: (str, int, int, str) -> str
    return f"{scan_id}_R{acceleration}_t{frame:03d}_{kind}.png"


def render_frame(out_dir, scan, samples, pred_labels, frame):
    # type: (str, PhantomScan, KSpaceSampleSet, np.ndarray, int) -> List[str]
    """Write the four PNG files of one frame; returns their paths"""
    if not 0 <= frame < scan.labels.shape[0]:
        raise DiskDataError(f"Frame {frame} outside 0..{scan.labels.shape[0] - 1}")

    rasters = dict(
        gt=overlay(scan.image[frame], scan.labels[frame]),
        pred=overlay(scan.image[frame], pred_labels[frame]),
        kspace=_gray_rgb(kspace_preview(samples, frame)),
        zerofilled=_gray_rgb(np.abs(zero_filled_image(samples).values[frame])),
    )

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for kind in IMAGE_KINDS:
        path = os.path.join(out_dir, frame_file_name(scan.scan_id, samples.acceleration, frame, kind))
        mpimg.imsave(path, rasters[kind], format='png')
        paths.append(path)
    return paths
