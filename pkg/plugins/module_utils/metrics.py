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
from scipy import ndimage
from scipy.spatial.distance import directed_hausdorff

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskDataError,
    DiskShapeError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.kspace import (
    denormalize_coordinate,
)

__all__ = [
    'SegmentationResult',
    'MetricReport',
    'dice_score',
    'hausdorff',
    'boundary_pixels',
    'evaluate_scan',
    'summarize_reports',
    'metric_fieldnames',
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class SegmentationResult(object):
    """Class probabilities for a set of query coordinates of one scan"""

    def __init__(self, probabilities, coordinates, scan_id, dims):
        # type: (np.ndarray, np.ndarray, str, tuple) -> None
        self.probabilities = np.asarray(probabilities, dtype=np.float64)
        self.coordinates = np.asarray(coordinates, dtype=np.float64)
        self.scan_id = scan_id
        self.dims = tuple(int(d) for d in dims)

    @property
    def hard_labels(self):
        # type: () -> np.ndarray
        # np.argmax returns the first maximum, ties go to the lowest class
        return np.argmax(self.probabilities, axis=1).astype(np.int64)

    def to_volume(self, fill=None):
        # type: (int) -> np.ndarray
        """T x H x W hard label volume

        Every grid pixel must be queried unless ``fill`` labels the pixels
        that were not.
        """
        frames, height, width = self.dims
        volume = np.full((frames, height, width), -1, dtype=np.int64)
        rows = denormalize_coordinate(self.coordinates[:, 0], height)
        cols = denormalize_coordinate(self.coordinates[:, 1], width)
        times = denormalize_coordinate(self.coordinates[:, 2], frames)
        volume[times, rows, cols] = self.hard_labels

        missing = volume < 0
        if fill is not None:
            volume[missing] = fill
        elif missing.any():
            raise DiskDataError(
                f"Prediction for {self.scan_id} misses {int(np.count_nonzero(missing))} "
                f"of {volume.size} grid pixels"
            )
        return volume

    def probability_volume(self):
        # type: () -> np.ndarray
        """C x T x H x W probabilities, assuming full grid coverage"""
        frames, height, width = self.dims
        classes = self.probabilities.shape[1]
        volume = np.zeros((classes, frames, height, width), dtype=np.float64)
        rows = denormalize_coordinate(self.coordinates[:, 0], height)
        cols = denormalize_coordinate(self.coordinates[:, 1], width)
        times = denormalize_coordinate(self.coordinates[:, 2], frames)
        volume[:, times, rows, cols] = self.probabilities.T
        return volume


class MetricReport(object):
    """Per-scan Dice and Hausdorff scores at one acceleration"""

    def __init__(self, scan_id, acceleration, dice, hausdorff_px):
        # type: (str, float, List[float], List[float]) -> None
        self.scan_id = scan_id
        self.acceleration = acceleration
        self.dice = [float(d) for d in dice]
        self.hausdorff = [float(h) for h in hausdorff_px]
        self.dice_fg_mean = 0.0
        self.hd_fg_max = 0.0

    @property
    def classes(self):
        # type: () -> int
        return len(self.dice)

    def to_row(self):
        # type: () -> dict
        row = dict(scan_id=self.scan_id, R=self.acceleration)
        for c in range(1, self.classes):
            row[f"dice_c{c}"] = self.dice[c]
        row['dice_fg_mean'] = self.dice_fg_mean
        for c in range(1, self.classes):
            row[f"hd_c{c}"] = self.hausdorff[c]
        row['hd_fg_max'] = self.hd_fg_max
        return row


def metric_fieldnames(classes=4):
    # type: (int) -> List[str]
    fields = ['scan_id', 'R']
    fields += [f"dice_c{c}" for c in range(1, classes)]
    fields.append('dice_fg_mean')
    fields += [f"hd_c{c}" for c in range(1, classes)]
    fields.append('hd_fg_max')
    return fields


def _class_masks(pred_labels, gt_labels, label):
    # type: (np.ndarray, np.ndarray, int) -> tuple
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise DiskShapeError(
            f"Prediction {list(pred_labels.shape)} and ground truth "
            f"{list(gt_labels.shape)} shapes differ"
        )
    return pred_labels == label, gt_labels == label


def dice_score(pred_labels, gt_labels, label):
    # type: (np.ndarray, np.ndarray, int) -> float
    """2|A and B| / (|A| + |B|); 1.0 when the class is absent from both"""
    pred, gt = _class_masks(pred_labels, gt_labels, label)
    total = np.count_nonzero(pred) + np.count_nonzero(gt)
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(pred & gt) / total


def boundary_pixels(mask):
    # type: (np.ndarray) -> np.ndarray
    """(n, 2) coordinates of mask pixels with an 8-neighbour outside the mask"""
    mask = np.asarray(mask, dtype=bool)
    interior = ndimage.binary_erosion(mask, structure=_EIGHT_CONNECTED, border_value=0)
    return np.argwhere(mask & ~interior).astype(np.float64)


def hausdorff(pred_labels, gt_labels, label):
    # type: (np.ndarray, np.ndarray, int) -> float
    """Symmetric Hausdorff distance in pixels between class boundaries

    One empty side yields the image diagonal, two empty sides yield 0.
    """
    pred, gt = _class_masks(pred_labels, gt_labels, label)
    pred_empty = not pred.any()
    gt_empty = not gt.any()
    if pred_empty and gt_empty:
        return 0.0
    if pred_empty or gt_empty:
        height, width = pred.shape[-2:]
        return float(np.sqrt(height ** 2 + width ** 2))

    a = boundary_pixels(pred)
    b = boundary_pixels(gt)
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def evaluate_scan(result, gt_labels, acceleration):
    # type: (SegmentationResult, np.ndarray, float) -> MetricReport
    """Dice averaged over foreground classes then frames, HD max over classes
    averaged over frames. Classes absent from both masks of a frame do not
    count towards the foreground Dice of that frame.
    """
    pred_volume = result.to_volume()
    gt_labels = np.asarray(gt_labels)
    if pred_volume.shape != gt_labels.shape:
        raise DiskShapeError(
            f"Prediction {list(pred_volume.shape)} and ground truth "
            f"{list(gt_labels.shape)} shapes differ"
        )

    classes = result.probabilities.shape[1]
    frames = gt_labels.shape[0]
    dice = np.zeros((frames, classes))
    counted = np.zeros((frames, classes), dtype=bool)
    hd = np.zeros((frames, classes))

    for t in range(frames):
        for c in range(classes):
            dice[t, c] = dice_score(pred_volume[t], gt_labels[t], c)
            counted[t, c] = np.any(pred_volume[t] == c) or np.any(gt_labels[t] == c)
            hd[t, c] = hausdorff(pred_volume[t], gt_labels[t], c)

    per_class_dice = []
    for c in range(classes):
        column = dice[counted[:, c], c]
        per_class_dice.append(column.mean() if column.size else 1.0)

    frame_fg_dice = []
    for t in range(frames):
        present = counted[t, 1:]
        frame_fg_dice.append(dice[t, 1:][present].mean() if present.any() else 1.0)

    report = MetricReport(result.scan_id, acceleration, per_class_dice, hd.mean(axis=0))
    report.dice_fg_mean = float(np.mean(frame_fg_dice))
    report.hd_fg_max = float(hd[:, 1:].max(axis=1).mean())
    return report


def summarize_reports(reports):
    # type: (List[MetricReport]) -> dict
    """mean and std of every metric column plus ``mean±std`` strings"""
    if not reports:
        raise DiskDataError("No metric reports to summarize")

    rows = [report.to_row() for report in reports]
    summary = dict(scans=len(rows), R=rows[0]['R'], metrics={})
    for key in rows[0]:
        if key in ('scan_id', 'R'):
            continue
        column = np.array([row[key] for row in rows], dtype=np.float64)
        mean, std = float(column.mean()), float(column.std())
        summary['metrics'][key] = dict(
            mean=mean,
            std=std,
            formatted=f"{mean:.3f}±{std:.3f}",
        )
    return summary
