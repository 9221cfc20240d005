# Severity Curriculum - Arabic medical QA generation

import logging
from typing import Dict

import numpy as np

from engine.autodiff import Tensor, matmul, scale, transpose_last
from models.tiny_lm import INIT_STD, parameter_digest
from utils.errors import UnknownTarget

logger = logging.getLogger(__name__)

# Short target names expand to every layer
TARGET_ALIASES = {
    'q': 'attn.q',
    'k': 'attn.k',
    'v': 'attn.v',
    'o': 'attn.o',
    'mlp_in': 'mlp.w_in',
    'mlp_out': 'mlp.w_out',
}


class LoraPair:
    """Low-rank update for one (d_in, d_out) weight: A is (r, d_in), B is (d_out, r)"""

    def __init__(self, target, a, b, scaling):
        self.target = target
        self.a = a
        self.b = b
        self.scaling = scaling

    def delta(self, x):
        return scale(matmul(matmul(x, transpose_last(self.a)), transpose_last(self.b)), self.scaling)

    def weight_delta(self):
        """scaling * B @ A, transposed to the stored (d_in, d_out) layout"""
        return self.scaling * (self.b.data @ self.a.data).T


class AdaptedModel:
    def __init__(self, base, lora_config, adapters):
        self.base = base
        self.lora_config = lora_config
        self.adapters = adapters

    @property
    def config(self):
        return self.base.config

    def forward(self, ids):
        return self.base.forward(ids, adapters=self.adapters)

    def digest(self):
        return parameter_digest(trainable_parameters(self))


def resolve_targets(model, targets):
    names = []
    for target in targets:
        if target in TARGET_ALIASES:
            candidates = [f'layers.{i}.{TARGET_ALIASES[target]}' for i in range(model.config.n_layers)]
        elif target in model.params and target.startswith('layers.') and model.params[target].ndim == 2:
            candidates = [target]
        else:
            raise UnknownTarget(target)
        names.extend(name for name in candidates if name not in names)
    return names


def attach(model, config) -> AdaptedModel:
    """Frozen copy of the model with zero-effect adapters on the target weights"""
    targets = resolve_targets(model, config.targets)
    base = model.copy(trainable=False)
    rng = np.random.default_rng(config.seed)

    adapters = {}
    for target in targets:
        d_in, d_out = base.params[target].shape
        a = Tensor(rng.normal(0.0, INIT_STD, size=(config.rank, d_in)), requires_grad=True, name=f'{target}.lora_a')
        b = Tensor(np.zeros((d_out, config.rank)), requires_grad=True, name=f'{target}.lora_b')
        adapters[target] = LoraPair(target, a, b, config.scaling)

    logger.debug('Attached rank-%d adapters to %d weights', config.rank, len(adapters))
    return AdaptedModel(base, config, adapters)


def merge(adapted):
    """Plain trainable Model with every adapter update baked into its weight"""
    merged = adapted.base.copy(trainable=True)
    for target, pair in adapted.adapters.items():
        merged.params[target].data = merged.params[target].data + pair.weight_delta()
    return merged


def trainable_parameters(adapted) -> Dict[str, Tensor]:
    params = {}
    for target, pair in adapted.adapters.items():
        params[pair.a.name] = pair.a
        params[pair.b.name] = pair.b
    return params


def count_trainable(adapted):
    return sum(tensor.data.size for tensor in trainable_parameters(adapted).values())
