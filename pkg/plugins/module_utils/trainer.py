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

"""Optimization loop, checkpoints, full-grid prediction and split evaluation.

Every random draw of a training step comes from a generator seeded with
the state's ``(seed, step)``, so a run resumed from a checkpoint continues exactly
like an uninterrupted one.
"""

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import math
import os
import time

import numpy as np

from ansible_collections.kspace.disk_seg.plugins.module_utils import autodiff as ad
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_model import (
    ModelConfig,
    ModelParameters,
    decode,
    encode,
    forward,
    init_parameters,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
    DiskNumericalError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.encoding import (
    EncodingConfig,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.io_utils import (
    append_csv_rows,
    load_checkpoint,
    save_checkpoint,
    write_json,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.kspace import (
    KSpaceConfig,
    normalize_index,
    synthesize_samples,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.losses import (
    one_hot,
    total_loss,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.metrics import (
    SegmentationResult,
    evaluate_scan,
)

__all__ = [
    'ACCELERATIONS',
    'TrainConfig',
    'TrainState',
    'init_state',
    'sample_queries',
    'train_step',
    'fit',
    'grid_coordinates',
    'predict_full',
    'model_predictor',
    'acquire',
    'evaluate_split',
    'save_state',
    'load_state',
    'check_resume',
    'load_model',
]

ACCELERATIONS = (4, 8, 16, 32, 64)

LOG_FIELDS = ['step', 'loss', 'dice_val', 'wall_ms']

PARAM_PREFIX = 'param/'
MOMENT1_PREFIX = 'adam_m/'
MOMENT2_PREFIX = 'adam_v/'

# train settings that may change when a run is resumed
RESUMABLE_KEYS = ('steps', 'checkpoint_every')


class TrainConfig(object):
    """Optimization settings of a training run"""

    def __init__(self, acceleration=8, steps=5000, learning_rate=1e-4, batch_size=1,
                 queries_per_step=2048, fg_fraction=0.5, seed=0, checkpoint_every=500,
                 beta1=0.9, beta2=0.999, adam_eps=1e-8, dice_weight=1.0, bce_weight=1.0):
        # type: (int, int, float, int, int, float, int, int, float, float, float, float, float) -> None
        self.acceleration = int(acceleration)
        self.steps = int(steps)
        self.learning_rate = float(learning_rate)
        self.batch_size = int(batch_size)
        self.queries_per_step = int(queries_per_step)
        self.fg_fraction = float(fg_fraction)
        self.seed = int(seed)
        self.checkpoint_every = int(checkpoint_every)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.adam_eps = float(adam_eps)
        self.dice_weight = float(dice_weight)
        self.bce_weight = float(bce_weight)
        self.validate()

    def validate(self):
        # type: () -> None
        if self.acceleration not in ACCELERATIONS:
            raise DiskConfigError(
                f"train.acceleration must be one of {list(ACCELERATIONS)}, got {self.acceleration}"
            )
        for name in ('batch_size', 'queries_per_step', 'checkpoint_every'):
            if getattr(self, name) < 1:
                raise DiskConfigError(f"train.{name} must be at least 1, got {getattr(self, name)}")
        if self.steps < 0:
            raise DiskConfigError(f"train.steps must not be negative, got {self.steps}")
        if self.learning_rate < 0:
            raise DiskConfigError(f"train.learning_rate must not be negative, got {self.learning_rate}")
        if not 0.0 <= self.fg_fraction <= 1.0:
            raise DiskConfigError(f"train.fg_fraction must lie in [0, 1], got {self.fg_fraction}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0) or self.adam_eps <= 0:
            raise DiskConfigError("train.beta1 and train.beta2 must lie in [0, 1) and adam_eps be positive")

    @classmethod
    def from_params(cls, params):
        # type: (dict) -> TrainConfig
        return cls(**params)

    def to_dict(self):
        # type: () -> dict
        return dict(vars(self))


class TrainState(object):
    """Step counter, parameters, Adam moments and running loss statistics"""

    def __init__(self, params, step=0, moment1=None, moment2=None, seed=0):
        # type: (ModelParameters, int, dict, dict, int) -> None
        self.params = params
        self.step = int(step)
        self.seed = int(seed)
        self.moment1 = moment1 if moment1 is not None else {
            name: np.zeros_like(t.data) for name, t in params
        }
        self.moment2 = moment2 if moment2 is not None else {
            name: np.zeros_like(t.data) for name, t in params
        }
        self.loss_count = 0
        self.loss_mean = 0.0
        self.last_loss = None
        self.best_dice = None
        self.best_step = None

    def record_loss(self, loss):
        # type: (float) -> None
        self.loss_count += 1
        self.loss_mean += (loss - self.loss_mean) / self.loss_count
        self.last_loss = loss

    def stats(self):
        # type: () -> dict
        return dict(
            loss_count=self.loss_count,
            loss_mean=self.loss_mean,
            last_loss=self.last_loss,
            best_dice=self.best_dice,
            best_step=self.best_step,
        )


def init_state(model_cfg, train_cfg):
    # type: (ModelConfig, TrainConfig) -> TrainState
    return TrainState(init_parameters(model_cfg), seed=train_cfg.seed)


def step_generator(seed, step):
    # type: (int, int) -> np.random.Generator
    return np.random.default_rng([seed, step])


def batch_indices(num_scans, step, batch_size, seed):
    # type: (int, int, int, int) -> List[int]
    """Scan indices of a step, walking a fresh shuffle of the scans per epoch"""
    indices = []
    for slot in range(step * batch_size, (step + 1) * batch_size):
        epoch, position = divmod(slot, num_scans)
        order = np.random.default_rng([seed, epoch, num_scans]).permutation(num_scans)
        indices.append(int(order[position]))
    return indices


def grid_coordinates(dims, frames=None):
    # type: (tuple, List[int]) -> np.ndarray
    """Normalized (y, x, t) of every pixel, ordered by t, then y, then x"""
    num_frames, height, width = dims
    frames = range(num_frames) if frames is None else frames
    t, y, x = np.meshgrid(np.asarray(frames), np.arange(height), np.arange(width), indexing='ij')
    return np.stack([
        normalize_index(y.reshape(-1), height),
        normalize_index(x.reshape(-1), width),
        normalize_index(t.reshape(-1), num_frames),
    ], axis=1)


def sample_queries(scan, num_queries, fg_fraction, rng, classes=4):
    # type: (PhantomScan, int, float, np.random.Generator, int) -> tuple
    """(P x 3 coordinates, P x C one-hot targets) with foreground oversampling"""
    labels = scan.labels
    frames, height, width = labels.shape
    total = labels.size
    if num_queries > total:
        raise DiskConfigError(f"Cannot draw {num_queries} queries from a grid of {total} pixels")

    foreground = np.flatnonzero(labels.reshape(-1) > 0)
    num_fg = int(math.ceil(fg_fraction * num_queries)) if foreground.size else 0

    picks = np.concatenate([
        rng.choice(foreground, size=num_fg, replace=True) if num_fg else np.zeros(0, np.int64),
        rng.integers(0, total, size=num_queries - num_fg),
    ])
    t, y, x = np.unravel_index(picks, labels.shape)
    coordinates = np.stack([
        normalize_index(y, height),
        normalize_index(x, width),
        normalize_index(t, frames),
    ], axis=1)
    return coordinates, one_hot(labels.reshape(-1)[picks], classes)


def _adam_update(state, grads, cfg):
    # type: (TrainState, dict, TrainConfig) -> None
    t = state.step + 1
    correction1 = 1.0 - cfg.beta1 ** t
    correction2 = 1.0 - cfg.beta2 ** t

    for name, tensor in state.params:
        grad = grads.get(tensor)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        m = cfg.beta1 * state.moment1[name] + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * state.moment2[name] + (1.0 - cfg.beta2) * grad * grad
        state.moment1[name] = m
        state.moment2[name] = v
        if cfg.learning_rate == 0.0:
            continue
        step = cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.adam_eps)
        tensor.data = tensor.data - step


def train_step(state, scans, model_cfg, train_cfg, kspace_cfg=None):
    # type: (TrainState, List[PhantomScan], ModelConfig, TrainConfig, KSpaceConfig) -> tuple
    """One optimizer update on a batch of scans; returns (state, loss)

    A fresh B0 field and undersampling mask are drawn for every scan.
    """
    kspace_cfg = kspace_cfg or KSpaceConfig()
    rng = step_generator(state.seed, state.step)
    record = ad.current_record()
    record.clear()

    diagnostics = dict(
        step=state.step,
        scan_ids=[scan.scan_id for scan in scans],
        acceleration=train_cfg.acceleration,
        rng_seed=[state.seed, state.step],
    )

    try:
        loss = None
        for scan in scans:
            samples = synthesize_samples(scan.image, train_cfg.acceleration, rng, kspace_cfg)
            coordinates, targets = sample_queries(
                scan, train_cfg.queries_per_step, train_cfg.fg_fraction, rng, model_cfg.classes,
            )
            diagnostics.setdefault('num_samples', []).append(len(samples))
            probs = forward(samples, coordinates, state.params, model_cfg)
            scan_loss = total_loss(
                probs, targets, train_cfg.dice_weight, train_cfg.bce_weight,
            )
            loss = scan_loss if loss is None else ad.add(loss, scan_loss)

        loss = ad.scale(loss, 1.0 / len(scans))

    except DiskNumericalError as err:
        record.clear()
        diagnostics.update(err.details)
        raise DiskNumericalError(
            f"Training step {state.step} produced a non-finite value: {err}",
            details=diagnostics,
        )

    value = loss.item()
    if not np.isfinite(value):
        record.clear()
        diagnostics['loss'] = repr(value)
        raise DiskNumericalError(
            f"Training step {state.step} produced a non-finite loss", details=diagnostics,
        )

    grads = ad.backward(loss)
    _adam_update(state, grads, train_cfg)

    state.step += 1
    state.record_loss(value)
    return state, value


def predict_full(samples, params, model_cfg, chunk_size=8192, scan_id=None, frames=None):
    # type: (KSpaceSampleSet, ModelParameters, ModelConfig, int, str, List[int]) -> SegmentationResult
    """Encode once, then decode every grid coordinate in chunks

    ``frames`` restricts decoding to a subset of the frames.
    """
    expected = params['query_proj.weight'].shape[0]
    if expected != model_cfg.encoding.query_length:
        raise DiskConfigError(
            f"Checkpoint expects {expected} query features, configuration "
            f"produces {model_cfg.encoding.query_length}"
        )
    if chunk_size < 1:
        raise DiskConfigError(f"chunk_size must be at least 1, got {chunk_size}")
    if frames is not None:
        outside = [int(t) for t in frames if not 0 <= int(t) < samples.dims[0]]
        if outside or not len(frames):
            raise DiskDataError(
                f"Frames {outside or list(frames)} are not a usable selection of the "
                f"{samples.dims[0]} frames of {scan_id}"
            )

    coordinates = grid_coordinates(samples.dims, frames)
    chunks = []
    with ad.no_record():
        latent = encode(samples, params, model_cfg)
        for start in range(0, coordinates.shape[0], chunk_size):
            probs = decode(latent, coordinates[start:start + chunk_size], params, model_cfg)
            chunks.append(probs.data)

    return SegmentationResult(np.concatenate(chunks, axis=0), coordinates, scan_id, samples.dims)


def model_predictor(params, model_cfg, chunk_size=8192):
    # type: (ModelParameters, ModelConfig, int) -> callable
    def predictor(samples, scan):
        return predict_full(samples, params, model_cfg, chunk_size, scan.scan_id)
    return predictor


def acquire(scan, acceleration, seed, kspace_cfg=None):
    # type: (PhantomScan, int, int, KSpaceConfig) -> KSpaceSampleSet
    """Evaluation-time sample set of a scan, fixed by (seed, R, scan seed)"""
    rng = np.random.default_rng([seed, int(acceleration), int(scan.seed)])
    return synthesize_samples(scan.image, acceleration, rng, kspace_cfg or KSpaceConfig())


def evaluate_split(scans, accelerations, predictor, kspace_cfg=None, seed=1234, log=None):
    # type: (List[PhantomScan], List[int], callable, KSpaceConfig, int, callable) -> dict
    """Map of acceleration -> list of MetricReport, one per scan

    ``predictor(samples, scan)`` returns a SegmentationResult over the full grid.
    """
    kspace_cfg = kspace_cfg or KSpaceConfig()
    reports = {}
    for acceleration in accelerations:
        reports[acceleration] = []
        for scan in scans:
            samples = acquire(scan, acceleration, seed, kspace_cfg)
            result = predictor(samples, scan)
            reports[acceleration].append(evaluate_scan(result, scan.labels, acceleration))
        if log is not None:
            mean_dice = np.mean([r.dice_fg_mean for r in reports[acceleration]])
            log(f"R={acceleration}: mean foreground Dice {mean_dice:.4f} over {len(scans)} scans")
    return reports


def save_state(path, state, model_cfg, train_cfg):
    # type: (str, TrainState, ModelConfig, TrainConfig) -> None
    tensors = {}
    for name, tensor in state.params:
        tensors[PARAM_PREFIX + name] = tensor.data
        tensors[MOMENT1_PREFIX + name] = state.moment1[name]
        tensors[MOMENT2_PREFIX + name] = state.moment2[name]

    manifest = dict(
        config=model_cfg.to_dict(),
        encoding=model_cfg.encoding.to_dict(),
        train=train_cfg.to_dict(),
        step=state.step,
        rng_seed=state.seed,
        stats=state.stats(),
    )
    save_checkpoint(path, manifest, tensors)


def _model_config_from_manifest(manifest):
    # type: (dict) -> ModelConfig
    try:
        return ModelConfig(
            encoding=EncodingConfig(**manifest['encoding']), **manifest['config']
        )
    except (KeyError, TypeError) as err:
        raise DiskDataError(f"Checkpoint manifest lacks a usable model config: {err}")


def _params_from_tensors(model_cfg, tensors):
    # type: (ModelConfig, dict) -> ModelParameters
    arrays = {
        name[len(PARAM_PREFIX):]: array
        for name, array in tensors.items() if name.startswith(PARAM_PREFIX)
    }
    return ModelParameters.from_arrays(model_cfg, arrays)


def load_model(path):
    # type: (str) -> tuple
    """Returns (ModelParameters, ModelConfig, manifest) of a checkpoint"""
    manifest, tensors = load_checkpoint(path)
    model_cfg = _model_config_from_manifest(manifest)
    return _params_from_tensors(model_cfg, tensors), model_cfg, manifest


def load_state(path):
    # type: (str) -> tuple
    """Returns (TrainState, ModelConfig, manifest) for resuming a run"""
    manifest, tensors = load_checkpoint(path)
    model_cfg = _model_config_from_manifest(manifest)
    params = _params_from_tensors(model_cfg, tensors)

    moment1 = {}
    moment2 = {}
    for name, _ in params:
        try:
            moment1[name] = tensors[MOMENT1_PREFIX + name]
            moment2[name] = tensors[MOMENT2_PREFIX + name]
        except KeyError:
            raise DiskDataError(f"Checkpoint {path} has no optimizer moments for '{name}'")

    state = TrainState(
        params, step=manifest['step'], moment1=moment1, moment2=moment2,
        seed=manifest.get('rng_seed', 0),
    )
    stats = manifest.get('stats', {})
    state.loss_count = stats.get('loss_count', 0)
    state.loss_mean = stats.get('loss_mean', 0.0)
    state.last_loss = stats.get('last_loss')
    state.best_dice = stats.get('best_dice')
    state.best_step = stats.get('best_step')
    return state, model_cfg, manifest


def check_resume(manifest, train_cfg):
    # type: (dict, TrainConfig) -> None
    """Rejects resuming a checkpoint under different optimization settings

    Only the step budget and the checkpoint interval may change.
    """
    saved = manifest.get('train')
    if not isinstance(saved, dict):
        raise DiskDataError("Checkpoint manifest has no train settings to resume from")

    current = train_cfg.to_dict()
    changed = sorted(
        key for key in set(saved) | set(current)
        if key not in RESUMABLE_KEYS and saved.get(key) != current.get(key)
    )
    if changed:
        raise DiskConfigError(
            f"Checkpoint was trained with different train settings: {', '.join(changed)}",
            details={key: dict(saved=saved.get(key), current=current.get(key)) for key in changed},
        )


def checkpoint_name(step):
    # type: (int) -> str
    return f"ckpt_{step:06d}.zip"


def fit(train_scans, val_scans, model_cfg, train_cfg, out_dir, kspace_cfg=None,
        eval_seed=1234, chunk_size=8192, state=None, run_config=None, log=None):
    # type: (List[PhantomScan], List[PhantomScan], ModelConfig, TrainConfig, str, KSpaceConfig, int, int, TrainState, dict, callable) -> dict
    """Train up to ``train_cfg.steps`` and keep the best checkpoint by val Dice

    A fresh run writes the step 0 checkpoint first. Validation runs every
    ``checkpoint_every`` steps and after the last step.
    """
    if not train_scans:
        raise DiskDataError("Training split is empty")
    if not val_scans and train_cfg.steps > 0:
        raise DiskDataError("Validation split is empty")

    kspace_cfg = kspace_cfg or KSpaceConfig()
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, 'train_log.csv')
    if run_config is not None:
        write_json(os.path.join(out_dir, 'run_config.json'), run_config)

    checkpoints = []
    if state is None:
        state = init_state(model_cfg, train_cfg)
        path = os.path.join(out_dir, checkpoint_name(0))
        save_state(path, state, model_cfg, train_cfg)
        checkpoints.append(path)

    evaluations = 0
    while state.step < train_cfg.steps:
        started = time.perf_counter()
        batch = [
            train_scans[i]
            for i in batch_indices(len(train_scans), state.step, train_cfg.batch_size, state.seed)
        ]
        _, loss = train_step(state, batch, model_cfg, train_cfg, kspace_cfg)
        wall_ms = (time.perf_counter() - started) * 1000.0
        append_csv_rows(log_path, LOG_FIELDS, [
            dict(step=state.step, loss=repr(loss), dice_val='', wall_ms=f"{wall_ms:.1f}"),
        ])

        if state.step % train_cfg.checkpoint_every == 0 or state.step == train_cfg.steps:
            started = time.perf_counter()
            reports = evaluate_split(
                val_scans, [train_cfg.acceleration],
                model_predictor(state.params, model_cfg, chunk_size),
                kspace_cfg, eval_seed,
            )[train_cfg.acceleration]
            dice_val = float(np.mean([r.dice_fg_mean for r in reports]))
            wall_ms = (time.perf_counter() - started) * 1000.0
            append_csv_rows(log_path, LOG_FIELDS, [
                dict(step=state.step, loss='', dice_val=repr(dice_val), wall_ms=f"{wall_ms:.1f}"),
            ])
            evaluations += 1

            improved = state.best_dice is None or dice_val > state.best_dice
            if improved:
                state.best_dice = dice_val
                state.best_step = state.step

            path = os.path.join(out_dir, checkpoint_name(state.step))
            save_state(path, state, model_cfg, train_cfg)
            checkpoints.append(path)
            if improved:
                save_state(os.path.join(out_dir, 'best.zip'), state, model_cfg, train_cfg)

            if log is not None:
                log(f"step {state.step}: loss {state.loss_mean:.5f} (running), val Dice {dice_val:.4f}")

    return dict(
        step=state.step,
        checkpoints=checkpoints,
        evaluations=evaluations,
        best_dice=state.best_dice,
        best_step=state.best_step,
        last_loss=state.last_loss,
        log_path=log_path,
        state=state,
    )
