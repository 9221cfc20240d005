# Severity Curriculum - Arabic medical QA generation

import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from utils.errors import NonFiniteGradient


@dataclass
class AdamState:
    """First and second moments keyed by parameter name"""

    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def global_grad_norm(grads):
    return math.sqrt(sum(float(np.sum(grad * grad)) for grad in grads.values()))


def adam_step(params, state, lr, beta1=0.9, beta2=0.999, eps=1e-8, clip_norm=1.0):
    """
    Clip all gradients by their global L2 norm, then apply one bias-corrected
    Adam update in place. Returns the norm measured before clipping.
    """
    if lr <= 0:
        raise ValueError('learning rate must be > 0')

    grads = {}
    for name, param in params.items():
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient(name)
        grads[name] = grad

    norm = global_grad_norm(grads)
    if clip_norm is not None and norm > clip_norm:
        factor = clip_norm / norm
        grads = {name: grad * factor for name, grad in grads.items()}

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, param in params.items():
        grad = grads[name]
        m = beta1 * state.m.get(name, 0.0) + (1.0 - beta1) * grad
        v = beta2 * state.v.get(name, 0.0) + (1.0 - beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v
        param.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)

    return norm
