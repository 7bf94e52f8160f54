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

"""Procedural 2D+time short-axis cardiac phantoms.

Labels: 0 background, 1 LV blood pool, 2 myocardium, 3 RV.
"""

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import os

import numpy as np
from scipy import ndimage

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.io_utils import (
    manifest_digest,
    read_manifest,
    read_scan_arrays,
    write_manifest,
    write_scan,
)

__all__ = [
    'PhantomConfig',
    'PhantomScan',
    'generate_phantom',
    'check_ring_topology',
    'check_phantom',
    'make_splits',
    'synthesize_dataset',
    'load_scan',
    'load_split',
]

BACKGROUND = 0
LV_POOL = 1
MYOCARDIUM = 2
RV = 3

SPLIT_NAMES = ('train', 'val', 'test')

# seeds of one base_seed never collide with the next one for realistic counts
SPLIT_SEED_STRIDE = 1000000

MIN_ANNULUS_PX = 2.0
MAX_ATTEMPTS = 20


class PhantomConfig(object):
    """Frame count, size and randomization ranges of the phantom"""

    def __init__(self, T=50, H=80, W=80, center_jitter=0.1, radius_jitter=0.2,
                 contraction_min=0.25, contraction_max=0.40, noise_std=0.02):
        # type: (int, int, int, float, float, float, float, float) -> None
        # pylint: disable=invalid-name
        self.T = int(T)
        self.H = int(H)
        self.W = int(W)
        self.center_jitter = float(center_jitter)
        self.radius_jitter = float(radius_jitter)
        self.contraction_min = float(contraction_min)
        self.contraction_max = float(contraction_max)
        self.noise_std = float(noise_std)

    @classmethod
    def from_params(cls, params):
        # type: (dict) -> PhantomConfig
        return cls(**params)


class PhantomScan(object):
    """Image sequence in [0, 1] with 4-class label maps"""

    def __init__(self, image, labels, scan_id, seed):
        # type: (np.ndarray, np.ndarray, str, int) -> None
        self.image = image
        self.labels = labels
        self.scan_id = scan_id
        self.seed = seed

    @property
    def shape(self):
        # type: () -> tuple
        return self.image.shape


def scan_id_for_seed(seed):
    # type: (int) -> str
    return f"scan_{seed:09d}"


def _ellipse(rows, cols, center, radius_y, radius_x):
    # type: (np.ndarray, np.ndarray, tuple, float, float) -> np.ndarray
    return ((rows - center[0]) / radius_y) ** 2 + ((cols - center[1]) / radius_x) ** 2 <= 1.0


def _draw_geometry(rng, config):
    # type: (np.random.Generator, PhantomConfig) -> dict
    size = float(min(config.H, config.W))
    jitter = config.radius_jitter

    def jittered(value):
        return value * rng.uniform(1.0 - jitter, 1.0 + jitter)

    pool_radius = jittered(0.10 * size)
    thickness = jittered(0.05 * size)
    return dict(
        center=(
            config.H / 2.0 + rng.uniform(-1.0, 1.0) * config.center_jitter * config.H,
            config.W / 2.0 + rng.uniform(-1.0, 1.0) * config.center_jitter * config.W,
        ),
        pool_radius=pool_radius,
        thickness=thickness,
        aspect=rng.uniform(0.9, 1.1),
        contraction=rng.uniform(config.contraction_min, config.contraction_max),
        rv_scale=rng.uniform(0.9, 1.2),
        rv_angle=np.pi + rng.uniform(-0.35, 0.35),
        pool_level=rng.uniform(0.80, 0.95),
        myo_level=rng.uniform(0.25, 0.40),
        rv_level=rng.uniform(0.70, 0.90),
        background_low=rng.uniform(0.05, 0.15),
        background_high=rng.uniform(0.25, 0.35),
    )


def _render_labels(geometry, config):
    # type: (dict, PhantomConfig) -> np.ndarray
    rows = np.arange(config.H, dtype=np.float64)[:, None]
    cols = np.arange(config.W, dtype=np.float64)[None, :]
    labels = np.zeros((config.T, config.H, config.W), dtype=np.int64)
    center = geometry['center']
    aspect = geometry['aspect']

    for t in range(config.T):
        # sin^2 schedule, peak contraction at t = T / 2
        phase = np.sin(np.pi * t / config.T) ** 2
        pool = geometry['pool_radius'] * (1.0 - geometry['contraction'] * phase)
        thickness = geometry['thickness'] * (1.0 + 0.5 * geometry['contraction'] * phase)
        outer = pool + thickness

        rv_radius = geometry['rv_scale'] * outer * (1.0 - 0.5 * geometry['contraction'] * phase)
        rv_center = (
            center[0] + 0.9 * outer * np.sin(geometry['rv_angle']),
            center[1] + 0.9 * outer * np.cos(geometry['rv_angle']),
        )

        frame = labels[t]
        rv_region = _ellipse(rows, cols, rv_center, rv_radius * aspect, rv_radius)
        lv_guard = _ellipse(rows, cols, center, (outer + 1.0) * aspect, outer + 1.0)
        frame[rv_region & ~lv_guard] = RV
        frame[_ellipse(rows, cols, center, outer * aspect, outer)] = MYOCARDIUM
        frame[_ellipse(rows, cols, center, pool * aspect, pool)] = LV_POOL

    return labels


def _render_image(labels, geometry, rng, config):
    # type: (np.ndarray, dict, np.random.Generator, PhantomConfig) -> np.ndarray
    texture = ndimage.gaussian_filter(
        rng.normal(size=(config.H, config.W)), sigma=config.H / 8.0, mode='wrap',
    )
    span = texture.max() - texture.min()
    texture = (texture - texture.min()) / (span if span > 0 else 1.0)
    background = geometry['background_low'] + texture * (
        geometry['background_high'] - geometry['background_low']
    )

    levels = np.array([0.0, geometry['pool_level'], geometry['myo_level'], geometry['rv_level']])
    image = np.where(labels == BACKGROUND, background[np.newaxis], levels[labels])
    image = image + rng.normal(0.0, config.noise_std, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def check_ring_topology(labels):
    # type: (np.ndarray) -> bool
    """True when every LV pool pixel only touches pool or myocardium"""
    structure = ndimage.generate_binary_structure(2, 1)
    for frame in labels:
        pool = frame == LV_POOL
        if not pool.any():
            return False
        halo = ndimage.binary_dilation(pool, structure=structure) & ~pool
        if np.any(frame[halo] != MYOCARDIUM):
            return False
        # pool must not reach the image border
        if pool[0].any() or pool[-1].any() or pool[:, 0].any() or pool[:, -1].any():
            return False
    return True


def check_phantom(labels):
    # type: (np.ndarray) -> List[str]
    """Returns the list of violated phantom invariants, empty when valid"""
    problems = []
    if not check_ring_topology(labels):
        problems.append("LV pool is not enclosed by myocardium")

    for t, frame in enumerate(labels):
        present = np.unique(frame)
        if len(present) != 4:
            problems.append(f"frame {t} contains classes {present.tolist()}")
            break

    frames = labels.shape[0]
    pool_start = np.count_nonzero(labels[0] == LV_POOL)
    pool_systole = np.count_nonzero(labels[frames // 2] == LV_POOL)
    if frames >= 2 and not pool_systole < pool_start:
        problems.append("LV pool does not contract towards t = T/2")

    return problems


def generate_phantom(seed, T=50, H=80, W=80, config=None, scan_id=None):
    # type: (int, int, int, int, PhantomConfig, str) -> PhantomScan
    """Generate a labeled 2D+time phantom, deterministic in ``seed``"""
    # pylint: disable=invalid-name
    if config is None:
        config = PhantomConfig(T=T, H=H, W=W)
    if config.T < 2 or config.H < 32 or config.W < 32:
        raise DiskConfigError(
            f"Phantom needs T >= 2 and H, W >= 32, got T={config.T} H={config.H} W={config.W}"
        )

    rng = np.random.default_rng(seed)
    geometry = _draw_geometry(rng, config)

    for _ in range(MAX_ATTEMPTS):
        if geometry['thickness'] >= MIN_ANNULUS_PX:
            labels = _render_labels(geometry, config)
            if not check_phantom(labels):
                image = _render_image(labels, geometry, rng, config)
                return PhantomScan(image, labels, scan_id or scan_id_for_seed(seed), seed)

        # degenerate geometry, perturb the radii and try again
        geometry['thickness'] = max(geometry['thickness'], MIN_ANNULUS_PX) * rng.uniform(1.0, 1.3)
        geometry['pool_radius'] = geometry['pool_radius'] * rng.uniform(1.0, 1.2)
        geometry['center'] = (
            geometry['center'][0] + rng.uniform(-0.5, 0.5),
            geometry['center'][1] + rng.uniform(-0.5, 0.5),
        )

    raise DiskDataError(f"Could not generate a valid phantom for seed {seed}")


def make_splits(num_train, num_val, num_test, base_seed):
    # type: (int, int, int, int) -> tuple
    """Three lists of scan ids drawn from disjoint seed ranges"""
    counts = (num_train, num_val, num_test)
    if min(counts) < 1:
        raise DiskConfigError(f"Split counts must be at least 1, got {counts}")

    first = base_seed * SPLIT_SEED_STRIDE
    splits = []
    for count in counts:
        splits.append([scan_id_for_seed(seed) for seed in range(first, first + count)])
        first += count
    return tuple(splits)


def seed_from_scan_id(scan_id):
    # type: (str) -> int
    try:
        return int(scan_id.split('_')[-1])
    except ValueError:
        raise DiskDataError(f"Scan id '{scan_id}' does not carry a seed")


def synthesize_dataset(folder, data_params, phantom_config, force=False, log=None):
    # type: (str, dict, PhantomConfig, bool, callable) -> tuple
    """Write all splits of a phantom dataset; returns (manifest, sha256)"""
    if os.path.isdir(folder) and os.listdir(folder) and not force:
        raise DiskDataError(f"Output folder {folder} is not empty, use force to overwrite")
    os.makedirs(folder, exist_ok=True)

    splits = make_splits(
        data_params['num_train'],
        data_params['num_val'],
        data_params['num_test'],
        data_params['base_seed'],
    )

    manifest = dict(
        base_seed=data_params['base_seed'],
        phantom=dict(vars(phantom_config)),
        splits=dict(zip(SPLIT_NAMES, [list(ids) for ids in splits])),
        scans={},
    )

    for split_name, scan_ids in zip(SPLIT_NAMES, splits):
        for scan_id in scan_ids:
            seed = seed_from_scan_id(scan_id)
            scan = generate_phantom(seed, config=phantom_config, scan_id=scan_id)
            write_scan(folder, scan_id, scan.image, scan.labels, seed)
            manifest['scans'][scan_id] = dict(seed=seed, split=split_name)

        if log is not None:
            log(f"wrote {len(scan_ids)} {split_name} scans to {folder}")

    digest = write_manifest(folder, manifest)
    return manifest, digest


def load_scan(folder, scan_id):
    # type: (str, str) -> PhantomScan
    image, labels, sidecar = read_scan_arrays(folder, scan_id)
    return PhantomScan(image, labels, sidecar['scan_id'], sidecar['seed'])


def load_split(folder, split):
    # type: (str, str) -> List[PhantomScan]
    manifest = read_manifest(folder)
    if split not in manifest.get('splits', {}):
        raise DiskDataError(f"Split '{split}' not found in dataset manifest of {folder}")
    return [load_scan(folder, scan_id) for scan_id in manifest['splits'][split]]


def dataset_digest(folder):
    # type: (str) -> str
    return manifest_digest(read_manifest(folder))
