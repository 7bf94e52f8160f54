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

"""Synthetic k-space acquisition.

Magnitude image sequences receive a smooth random B0 phase, are transformed
to centered k-space (DC at index H//2, W//2) and undersampled along the
phase-encode axis with per-frame Cartesian line masks. The resulting sparse
sample set is the only input the model ever sees.
"""

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import numpy as np

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
    DiskShapeError,
)

__all__ = [
    'KSpaceConfig',
    'ComplexImage',
    'UndersamplingMask',
    'KSpaceSampleSet',
    'as_generator',
    'dft2',
    'idft2',
    'naive_dft2',
    'conjugate_symmetry_gap',
    'b0_phase_field',
    'apply_b0_phase',
    'lines_per_frame',
    'generate_mask',
    'full_mask',
    'normalize_index',
    'extract_samples',
    'scatter_to_grid',
    'zero_filled_image',
    'synthesize_samples',
]


class KSpaceConfig(object):
    """B0 field and line selection parameters"""

    def __init__(self, b0_num_bumps=3, b0_width_min=0.15, b0_width_max=0.4,
                 b0_amplitude_std=np.pi / 2, line_std_fraction=1.0 / 6.0, force_dc=True):
        # type: (int, float, float, float, float, bool) -> None
        self.b0_num_bumps = int(b0_num_bumps)
        self.b0_width_min = float(b0_width_min)
        self.b0_width_max = float(b0_width_max)
        self.b0_amplitude_std = float(b0_amplitude_std)
        self.line_std_fraction = float(line_std_fraction)
        self.force_dc = bool(force_dc)

    @classmethod
    def from_params(cls, params):
        # type: (dict) -> KSpaceConfig
        return cls(**params)


class ComplexImage(object):
    """T x H x W complex values"""

    def __init__(self, values):
        # type: (np.ndarray) -> None
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim == 2:
            values = values[np.newaxis]
        if values.ndim != 3:
            raise DiskShapeError(f"ComplexImage expects T x H x W values, got {list(values.shape)}")
        self.values = values

    @property
    def real(self):
        # type: () -> np.ndarray
        return self.values.real

    @property
    def imag(self):
        # type: () -> np.ndarray
        return self.values.imag

    @property
    def shape(self):
        # type: () -> tuple
        return self.values.shape


class UndersamplingMask(object):
    """Per-frame phase-encode line selection"""

    def __init__(self, lines, acceleration):
        # type: (np.ndarray, float) -> None
        self.lines = np.asarray(lines, dtype=bool)
        self.acceleration = acceleration

    @property
    def frames(self):
        # type: () -> int
        return self.lines.shape[0]

    @property
    def height(self):
        # type: () -> int
        return self.lines.shape[1]

    def lines_in_frame(self, frame):
        # type: (int) -> np.ndarray
        return np.flatnonzero(self.lines[frame])


class KSpaceSampleSet(object):
    """Sparse (coordinate, value) pairs of one undersampled scan

    Coordinates are N x 3 rows of normalized (k_y, k_x, t); values are divided
    by ``value_scale`` so that the largest modulus of the set is 1.
    """

    def __init__(self, coordinates, values, dims, acceleration, value_scale=1.0):
        # type: (np.ndarray, np.ndarray, tuple, float, float) -> None
        self.coordinates = np.asarray(coordinates, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.complex128)
        self.dims = tuple(int(d) for d in dims)
        self.acceleration = acceleration
        self.value_scale = float(value_scale)

    def __len__(self):
        return self.values.shape[0]

    @property
    def num_samples(self):
        # type: () -> int
        return self.values.shape[0]

    def features(self):
        # type: () -> np.ndarray
        """N x 5 real matrix (k_y, k_x, t, Re v, Im v)"""
        return np.concatenate(
            [self.coordinates, self.values.real[:, None], self.values.imag[:, None]],
            axis=1,
        )

    def permuted(self, order):
        # type: (np.ndarray) -> KSpaceSampleSet
        return KSpaceSampleSet(
            self.coordinates[order], self.values[order], self.dims,
            self.acceleration, self.value_scale,
        )


def as_generator(seed):
    # type: (any) -> np.random.Generator
    """Accepts a seed, a SeedSequence or an existing Generator"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def dft2(image):
    # type: (ComplexImage) -> ComplexImage
    """Centered forward 2D DFT of every frame, unnormalized"""
    values = np.fft.ifftshift(image.values, axes=(-2, -1))
    values = np.fft.fft2(values, axes=(-2, -1))
    return ComplexImage(np.fft.fftshift(values, axes=(-2, -1)))


def idft2(kspace):
    # type: (ComplexImage) -> ComplexImage
    """Inverse of dft2, scaled by 1 / (H W)"""
    values = np.fft.ifftshift(kspace.values, axes=(-2, -1))
    values = np.fft.ifft2(values, axes=(-2, -1))
    return ComplexImage(np.fft.fftshift(values, axes=(-2, -1)))


def _centered_dft_matrix(size):
    # type: (int) -> np.ndarray
    centered = np.arange(size) - size // 2
    return np.exp(-2j * np.pi * np.outer(centered, centered) / size)


def naive_dft2(image):
    # type: (ComplexImage) -> ComplexImage
    """Direct double-sum evaluation of dft2, any frame size"""
    frames, height, width = image.shape
    out = np.zeros(image.shape, dtype=np.complex128)
    rows = np.arange(height) - height // 2
    cols = np.arange(width) - width // 2
    for t in range(frames):
        for u in range(height):
            for v in range(width):
                phase = np.exp(-2j * np.pi * (
                    rows[u] * rows[:, None] / height + cols[v] * cols[None, :] / width
                ))
                out[t, u, v] = np.sum(image.values[t] * phase)
    return ComplexImage(out)


def _mirror(values, axis):
    # type: (np.ndarray, int) -> np.ndarray
    # index i -> (2 * (n // 2) - i) mod n, the centered frequency -k
    size = values.shape[axis]
    return np.roll(np.flip(values, axis=axis), 2 * (size // 2) - size + 1, axis=axis)


def conjugate_symmetry_gap(kspace):
    # type: (ComplexImage) -> float
    """max |K(-u,-v) - conj(K(u,v))| after scaling K to unit max modulus"""
    values = kspace.values
    peak = np.abs(values).max()
    if peak == 0.0:
        return 0.0
    values = values / peak
    mirrored = _mirror(_mirror(values, -2), -1)
    return float(np.abs(mirrored - np.conj(values)).max())


def b0_phase_field(height, width, rng, config=None):
    # type: (int, int, np.random.Generator, KSpaceConfig) -> np.ndarray
    """Sum of Gaussian bumps with random centers, widths and amplitudes"""
    config = config or KSpaceConfig()
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    phase = np.zeros((height, width), dtype=np.float64)

    for _ in range(config.b0_num_bumps):
        center_y = rng.uniform(0.0, height)
        center_x = rng.uniform(0.0, width)
        sigma = rng.uniform(config.b0_width_min, config.b0_width_max) * height
        amplitude = rng.normal(0.0, 1.0) * config.b0_amplitude_std
        distance = (rows - center_y) ** 2 + (cols - center_x) ** 2
        phase += amplitude * np.exp(-distance / (2.0 * sigma ** 2))

    return phase


def apply_b0_phase(image, seed, config=None):
    # type: (np.ndarray, any, KSpaceConfig) -> ComplexImage
    """Multiply every frame by the same smooth random phase exp(i phi)"""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[np.newaxis]
    if np.any(image < 0):
        raise DiskDataError("apply_b0_phase expects a nonnegative magnitude image")

    rng = as_generator(seed)
    phase = b0_phase_field(image.shape[1], image.shape[2], rng, config)
    return ComplexImage(image * np.exp(1j * phase)[np.newaxis])


def lines_per_frame(height, acceleration):
    # type: (int, float) -> int
    """max(1, round(H / R)) with halves rounded up"""
    return max(1, int(np.floor(height / acceleration + 0.5)))


def generate_mask(frames, height, acceleration, seed, config=None):
    # type: (int, int, float, any, KSpaceConfig) -> UndersamplingMask
    """Draw phase-encode lines per frame from a Normal centered on DC"""
    config = config or KSpaceConfig()
    if not 1 <= acceleration <= height:
        raise DiskConfigError(
            f"Acceleration {acceleration} outside the admissible range [1, {height}]"
        )

    rng = as_generator(seed)
    count = lines_per_frame(height, acceleration)
    center = height // 2
    sigma = config.line_std_fraction * height
    lines = np.zeros((frames, height), dtype=bool)

    for t in range(frames):
        if count >= height:
            lines[t] = True
            continue

        chosen = set()
        if config.force_dc:
            chosen.add(center)
            lines[t, center] = True

        while len(chosen) < count:
            draws = np.rint(rng.normal(center, sigma, size=2 * count)).astype(np.int64)
            for line in np.clip(draws, 0, height - 1):
                if len(chosen) == count:
                    break
                if line not in chosen:
                    chosen.add(int(line))
                    lines[t, line] = True

    return UndersamplingMask(lines, acceleration)


def full_mask(frames, height):
    # type: (int, int) -> UndersamplingMask
    return UndersamplingMask(np.ones((frames, height), dtype=bool), 1)


def normalize_index(index, size):
    # type: (np.ndarray, int) -> np.ndarray
    """Map 0 -> -1 and size-1 -> +1; a singleton axis maps to 0"""
    index = np.asarray(index, dtype=np.float64)
    if size <= 1:
        return np.zeros_like(index)
    return 2.0 * index / (size - 1) - 1.0


def denormalize_coordinate(coordinate, size):
    # type: (np.ndarray, int) -> np.ndarray
    if size <= 1:
        return np.zeros_like(coordinate, dtype=np.int64)
    return np.rint((np.asarray(coordinate) + 1.0) * (size - 1) / 2.0).astype(np.int64)


def extract_samples(kspace, mask):
    # type: (ComplexImage, UndersamplingMask) -> KSpaceSampleSet
    """One sample per selected line and k_x column, ordered by (t, k_y, k_x)"""
    frames, height, width = kspace.shape
    if mask.lines.shape != (frames, height):
        raise DiskShapeError(
            f"Mask shape {list(mask.lines.shape)} does not match k-space {list(kspace.shape)}"
        )

    frame_idx, line_idx = np.nonzero(mask.lines)
    if frame_idx.size == 0:
        raise DiskDataError("Undersampling mask selects no samples")

    frame_idx = np.repeat(frame_idx, width)
    line_idx = np.repeat(line_idx, width)
    col_idx = np.tile(np.arange(width), frame_idx.size // width)

    values = kspace.values[frame_idx, line_idx, col_idx]
    scale = float(np.abs(values).max())
    if scale == 0.0:
        raise DiskDataError("Sampled k-space is identically zero")

    coordinates = np.stack([
        normalize_index(line_idx, height),
        normalize_index(col_idx, width),
        normalize_index(frame_idx, frames),
    ], axis=1)

    return KSpaceSampleSet(
        coordinates, values / scale, (frames, height, width), mask.acceleration, scale,
    )


def scatter_to_grid(samples):
    # type: (KSpaceSampleSet) -> tuple
    """Place samples back on their grid; returns (k-space, sampled mask)"""
    frames, height, width = samples.dims
    grid = np.zeros((frames, height, width), dtype=np.complex128)
    sampled = np.zeros((frames, height, width), dtype=bool)

    rows = denormalize_coordinate(samples.coordinates[:, 0], height)
    cols = denormalize_coordinate(samples.coordinates[:, 1], width)
    times = denormalize_coordinate(samples.coordinates[:, 2], frames)

    grid[times, rows, cols] = samples.values * samples.value_scale
    sampled[times, rows, cols] = True
    return ComplexImage(grid), sampled


def zero_filled_image(samples):
    # type: (KSpaceSampleSet) -> ComplexImage
    """Inverse DFT of the zero-filled grid; for previews and oracles only"""
    grid, _ = scatter_to_grid(samples)
    return idft2(grid)


def synthesize_samples(image, acceleration, rng, config=None):
    # type: (np.ndarray, float, np.random.Generator, KSpaceConfig) -> KSpaceSampleSet
    """B0 phase -> centered DFT -> fresh per-frame mask -> sparse sample set"""
    config = config or KSpaceConfig()
    rng = as_generator(rng)
    complex_image = apply_b0_phase(image, rng, config)
    kspace = dft2(complex_image)
    frames, height, _ = kspace.shape
    mask = generate_mask(frames, height, acceleration, rng, config)
    return extract_samples(kspace, mask)
