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

"""Perceiver encoder over k-space samples and a cross-attention decoder
that maps image-domain query coordinates to class probabilities.
"""

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

from collections import OrderedDict

import numpy as np

from ansible_collections.kspace.disk_seg.plugins.module_utils import autodiff as ad
from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskConfigError,
    DiskDataError,
    DiskShapeError,
)
from ansible_collections.kspace.disk_seg.plugins.module_utils.encoding import (
    EncodingConfig,
    build_input_tokens,
    build_query_tokens,
)

__all__ = [
    'ModelConfig',
    'ModelParameters',
    'LatentState',
    'init_parameters',
    'cross_attention',
    'self_attention',
    'encode',
    'decode',
    'forward',
]

# per-block parameter names, in packing order
BLOCK_FIELDS = (
    'q_norm.gain', 'q_norm.bias',
    'kv_norm.gain', 'kv_norm.bias',
    'w_q', 'b_q', 'w_k', 'b_k', 'w_v', 'b_v', 'w_o', 'b_o',
    'ff_norm.gain', 'ff_norm.bias',
    'w_1', 'b_1', 'w_2', 'b_2',
)


class ModelConfig(object):
    """Architecture hyperparameters of the network"""

    def __init__(self, layers=4, num_latents=128, width=128, ff_width=128, heads=4,
                 classes=4, latent_init_std=0.02, seed=0, encoding=None):
        # type: (int, int, int, int, int, int, float, int, EncodingConfig) -> None
        self.layers = int(layers)
        self.num_latents = int(num_latents)
        self.width = int(width)
        self.ff_width = int(ff_width)
        self.heads = int(heads)
        self.classes = int(classes)
        self.latent_init_std = float(latent_init_std)
        self.seed = int(seed)
        self.encoding = encoding if encoding is not None else EncodingConfig()
        self.validate()

    def validate(self):
        # type: () -> None
        for name in ('layers', 'num_latents', 'width', 'ff_width', 'heads'):
            if getattr(self, name) < 1:
                raise DiskConfigError(f"model.{name} must be at least 1, got {getattr(self, name)}")
        if self.width % self.heads != 0:
            raise DiskConfigError(
                f"model.width ({self.width}) must be divisible by model.heads ({self.heads})"
            )
        if self.classes < 2:
            raise DiskConfigError(f"model.classes must be at least 2, got {self.classes}")

    @property
    def head_width(self):
        # type: () -> int
        return self.width // self.heads

    @classmethod
    def from_params(cls, model_params, encoding_params=None):
        # type: (dict, dict) -> ModelConfig
        encoding = EncodingConfig.from_params(encoding_params or {})
        return cls(encoding=encoding, **model_params)

    def to_dict(self):
        # type: () -> dict
        return dict(
            layers=self.layers,
            num_latents=self.num_latents,
            width=self.width,
            ff_width=self.ff_width,
            heads=self.heads,
            classes=self.classes,
            latent_init_std=self.latent_init_std,
            seed=self.seed,
        )


class ModelParameters(object):
    """Named trainable tensors in a fixed packing order"""

    def __init__(self, tensors):
        # type: (OrderedDict) -> None
        self.tensors = OrderedDict(tensors)

    def __getitem__(self, name):
        # type: (str) -> ad.Tensor
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.items())

    def __len__(self):
        return len(self.tensors)

    def names(self):
        # type: () -> List[str]
        return list(self.tensors.keys())

    def block(self, prefix):
        # type: (str) -> dict
        """Parameters of one attention block keyed by their short field name"""
        return {field: self.tensors[f"{prefix}.{field}"] for field in BLOCK_FIELDS}

    def count(self):
        # type: () -> int
        return int(sum(t.size for t in self.tensors.values()))

    def to_vector(self):
        # type: () -> np.ndarray
        return np.concatenate([t.data.reshape(-1) for t in self.tensors.values()])

    def assign_vector(self, vector):
        # type: (np.ndarray) -> None
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.count(),):
            raise DiskShapeError(
                f"Parameter vector has shape {list(vector.shape)}, expected [{self.count()}]"
            )
        offset = 0
        for tensor in self.tensors.values():
            tensor.data = vector[offset:offset + tensor.size].reshape(tensor.shape).copy()
            offset += tensor.size

    @classmethod
    def from_vector(cls, cfg, vector):
        # type: (ModelConfig, np.ndarray) -> ModelParameters
        params = init_parameters(cfg)
        params.assign_vector(vector)
        return params

    def to_arrays(self):
        # type: () -> dict
        return {name: t.data.copy() for name, t in self.tensors.items()}

    @classmethod
    def from_arrays(cls, cfg, arrays):
        # type: (ModelConfig, dict) -> ModelParameters
        """Rebuild from named arrays, checking every shape against ``cfg``"""
        params = init_parameters(cfg)
        for name, tensor in params:
            if name not in arrays:
                raise DiskConfigError(f"Parameter '{name}' missing for the given model config")
            array = np.asarray(arrays[name], dtype=np.float64)
            if array.shape != tensor.shape:
                raise DiskConfigError(
                    f"Parameter '{name}' has shape {list(array.shape)}, "
                    f"model config requires {list(tensor.shape)}"
                )
            tensor.data = array.copy()
        return params


class LatentState(object):
    """M x d latent matrix produced by the encoder"""

    def __init__(self, tensor):
        # type: (ad.Tensor) -> None
        self.tensor = tensor

    @property
    def values(self):
        # type: () -> np.ndarray
        return self.tensor.data

    @property
    def shape(self):
        # type: () -> tuple
        return self.tensor.shape


def _dense(rng, fan_in, fan_out):
    # type: (np.random.Generator, int, int) -> tuple
    weight = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
    return weight, np.zeros(fan_out)


def _init_block(rng, prefix, width, ff_width):
    # type: (np.random.Generator, str, int, int) -> list
    arrays = []
    for norm in ('q_norm', 'kv_norm'):
        arrays.append((f"{prefix}.{norm}.gain", np.ones(width)))
        arrays.append((f"{prefix}.{norm}.bias", np.zeros(width)))
    for proj in ('q', 'k', 'v', 'o'):
        weight, bias = _dense(rng, width, width)
        arrays.append((f"{prefix}.w_{proj}", weight))
        arrays.append((f"{prefix}.b_{proj}", bias))
    arrays.append((f"{prefix}.ff_norm.gain", np.ones(width)))
    arrays.append((f"{prefix}.ff_norm.bias", np.zeros(width)))
    weight, bias = _dense(rng, width, ff_width)
    arrays.append((f"{prefix}.w_1", weight))
    arrays.append((f"{prefix}.b_1", bias))
    weight, bias = _dense(rng, ff_width, width)
    arrays.append((f"{prefix}.w_2", weight))
    arrays.append((f"{prefix}.b_2", bias))
    return arrays


def init_parameters(cfg, seed=None):
    # type: (ModelConfig, int) -> ModelParameters
    """Fan-in scaled normal weights, unit norm gains, H0 ~ N(0, std^2)"""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    d = cfg.width
    arrays = []

    weight, bias = _dense(rng, cfg.encoding.input_length, d)
    arrays += [('input_proj.weight', weight), ('input_proj.bias', bias)]
    weight, bias = _dense(rng, cfg.encoding.query_length, d)
    arrays += [('query_proj.weight', weight), ('query_proj.bias', bias)]

    arrays.append(('latents', rng.normal(0.0, cfg.latent_init_std, size=(cfg.num_latents, d))))

    for layer in range(cfg.layers):
        arrays += _init_block(rng, f"encoder.{layer}.cross", d, cfg.ff_width)
        arrays += _init_block(rng, f"encoder.{layer}.self", d, cfg.ff_width)
    for layer in range(cfg.layers):
        arrays += _init_block(rng, f"decoder.{layer}.cross", d, cfg.ff_width)

    arrays += [('decoder.out_norm.gain', np.ones(d)), ('decoder.out_norm.bias', np.zeros(d))]
    weight, bias = _dense(rng, d, cfg.classes)
    arrays += [('head.weight', weight), ('head.bias', bias)]

    return ModelParameters(
        (name, ad.Tensor(array, requires_grad=True)) for name, array in arrays
    )


def _split_heads(x, heads):
    # type: (ad.Tensor, int) -> ad.Tensor
    rows, width = x.shape
    return ad.transpose(ad.reshape(x, (rows, heads, width // heads)), (1, 0, 2))


def _merge_heads(x):
    # type: (ad.Tensor) -> ad.Tensor
    heads, rows, head_width = x.shape
    return ad.reshape(ad.transpose(x, (1, 0, 2)), (rows, heads * head_width))


def cross_attention(queries, context, weights, heads, return_weights=False):
    # type: (ad.Tensor, ad.Tensor, dict, int, bool) -> ad.Tensor
    """Pre-norm multi-head attention plus feed-forward, both with residuals

    ``queries`` is A x d, ``context`` B x d; the softmax runs over the B axis.
    With ``return_weights`` the h x A x B attention weights are returned too.
    """
    if context.shape[0] == 0:
        raise DiskDataError("cross_attention: context is empty")
    if queries.ndim != 2 or context.ndim != 2 or queries.shape[1] != context.shape[1]:
        raise DiskShapeError(
            f"cross_attention: queries {list(queries.shape)} and "
            f"context {list(context.shape)} widths differ"
        )

    width = queries.shape[1]
    head_width = width // heads

    q_in = ad.layer_norm(queries, weights['q_norm.gain'], weights['q_norm.bias'])
    kv_in = ad.layer_norm(context, weights['kv_norm.gain'], weights['kv_norm.bias'])

    q = _split_heads(ad.add(ad.matmul(q_in, weights['w_q']), weights['b_q']), heads)
    k = _split_heads(ad.add(ad.matmul(kv_in, weights['w_k']), weights['b_k']), heads)
    v = _split_heads(ad.add(ad.matmul(kv_in, weights['w_v']), weights['b_v']), heads)

    scores = ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / np.sqrt(head_width))
    attention = ad.softmax(scores, axis=-1)
    mixed = _merge_heads(ad.matmul(attention, v))

    hidden = ad.add(queries, ad.add(ad.matmul(mixed, weights['w_o']), weights['b_o']))

    ff_in = ad.layer_norm(hidden, weights['ff_norm.gain'], weights['ff_norm.bias'])
    ff = ad.gelu(ad.add(ad.matmul(ff_in, weights['w_1']), weights['b_1']))
    out = ad.add(hidden, ad.add(ad.matmul(ff, weights['w_2']), weights['b_2']))

    if return_weights:
        return out, attention.data
    return out


def self_attention(latents, weights, heads, return_weights=False):
    # type: (ad.Tensor, dict, int, bool) -> ad.Tensor
    return cross_attention(latents, latents, weights, heads, return_weights)


def encode(samples, params, cfg, warn=None):
    # type: (KSpaceSampleSet, ModelParameters, ModelConfig, callable) -> LatentState
    """Aggregate a sample set of any size N into the fixed latent matrix"""
    if len(samples) == 0:
        raise DiskDataError("Cannot encode an empty sample set")

    tokens = build_input_tokens(
        samples, cfg.encoding, params['input_proj.weight'], params['input_proj.bias'], warn,
    )
    latents = params['latents']
    for layer in range(cfg.layers):
        latents = cross_attention(latents, tokens, params.block(f"encoder.{layer}.cross"), cfg.heads)
        latents = self_attention(latents, params.block(f"encoder.{layer}.self"), cfg.heads)
    return LatentState(latents)


def decode(latent, queries, params, cfg, warn=None):
    # type: (LatentState, np.ndarray, ModelParameters, ModelConfig, callable) -> ad.Tensor
    """P x C class probabilities; queries never attend to each other"""
    if np.shape(queries)[0] == 0:
        raise DiskDataError("Cannot decode an empty query set")

    hidden = build_query_tokens(
        queries, cfg.encoding, params['query_proj.weight'], params['query_proj.bias'], warn,
    )
    for layer in range(cfg.layers):
        hidden = cross_attention(
            hidden, latent.tensor, params.block(f"decoder.{layer}.cross"), cfg.heads,
        )

    hidden = ad.layer_norm(hidden, params['decoder.out_norm.gain'], params['decoder.out_norm.bias'])
    logits = ad.add(ad.matmul(hidden, params['head.weight']), params['head.bias'])
    return ad.softmax(logits, axis=-1)


def forward(samples, queries, params, cfg, warn=None):
    # type: (KSpaceSampleSet, np.ndarray, ModelParameters, ModelConfig, callable) -> ad.Tensor
    return decode(encode(samples, params, cfg, warn), queries, params, cfg, warn)
