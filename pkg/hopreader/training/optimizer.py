"""AdaDelta с глобальным множителем шага, клиппинг по общей норме и EMA весов."""
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from hopreader.core.errors import ShapeError
from hopreader.model.params import ParamStore

Arrays = Dict[str, np.ndarray]


@dataclass
class OptimizerState:
    sq_grad: Arrays = field(default_factory=dict)    # E[g²]
    sq_delta: Arrays = field(default_factory=dict)   # E[Δx²]
    steps: int = 0

    @classmethod
    def zeros_like(cls, params: ParamStore) -> "OptimizerState":
        return cls(
            sq_grad={name: np.zeros_like(t.data) for name, t in params.items()},
            sq_delta={name: np.zeros_like(t.data) for name, t in params.items()},
        )


def adadelta_step(
    params: ParamStore,
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
    rho: float = 0.95,
    eps: float = 1e-6,
    lr_scale: float = 1.0,
) -> None:
    """
    E[g²] ← ρE[g²] + (1−ρ)g²
    Δx = −√(E[Δx²]+ε) / √(E[g²]+ε) · g
    E[Δx²] ← ρE[Δx²] + (1−ρ)Δx²
    θ ← θ + lr_scale·Δx
    """
    for name, t in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != t.shape:
            raise ShapeError(f"adadelta: gradient for '{name}' has shape {g.shape}, parameter {t.shape}")
        acc_g = state.sq_grad.setdefault(name, np.zeros_like(t.data))
        acc_d = state.sq_delta.setdefault(name, np.zeros_like(t.data))
        acc_g *= rho
        acc_g += (1.0 - rho) * g * g
        delta = -np.sqrt(acc_d + eps) / np.sqrt(acc_g + eps) * g
        acc_d *= rho
        acc_d += (1.0 - rho) * delta * delta
        t.data += lr_scale * delta
    state.steps += 1


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: Arrays, max_norm: float) -> float:
    """Масштабирует градиенты на месте, если общая норма больше max_norm. Возвращает норму до клиппинга."""
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def ema_update(shadow: Arrays, params: ParamStore, decay: float) -> Arrays:
    """shadow ← decay·shadow + (1−decay)·θ"""
    if not 0.0 <= decay < 1.0:
        raise ValueError(f"EMA decay must be in [0, 1), got {decay}")
    for name, t in params.items():
        s = shadow.get(name)
        if s is None:
            shadow[name] = t.data.copy()
            continue
        if s.shape != t.shape:
            raise ShapeError(f"ema: shadow '{name}' has shape {s.shape}, parameter {t.shape}")
        s *= decay
        s += (1.0 - decay) * t.data
    return shadow
