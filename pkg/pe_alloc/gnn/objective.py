"""
MU-MISO precoding objective for descriptor-built GNNs.

Channels ``H`` of shape ``(B, N_B, K)`` become representations
``(B, N_B, K, 2)`` holding ``(Re h, Im h)``; the model output is read the
same way as the precoder ``W`` and scaled by ``√P / max(‖W‖_F, √P)`` per
sample, which keeps ``‖W‖_F² ≤ P`` while staying differentiable.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from ..core.complex_ops import ComplexPair, cmatmul, hermitian
from ..core.exceptions import ContractViolationError
from ..core.tensor import Tensor, add, clip, getitem, log, mul, norm, reciprocal, sub, sum_axis
from .model import GnnModel

_LN2 = math.log(2.0)


def channel_features(channels: Any) -> np.ndarray:
    """``(..., N_B, K)`` complex channels as ``(..., N_B, K, 2)`` real features."""
    H = np.asarray(channels, dtype=np.complex128)
    return np.stack([H.real, H.imag], axis=-1)


def scale_onto_budget(raw: Tensor, p_max: float) -> Tensor:
    """Scale each sample of ``(B, N_B, K, 2)`` so that its Frobenius norm is at most ``√p_max``."""
    root = math.sqrt(p_max)
    fro = norm(raw, axis=(-3, -2, -1), keepdims=True)
    return mul(raw, mul(reciprocal(clip(fro, low=root)), root))


def ps_precoders(model: GnnModel, channels: Any, p_max: float) -> ComplexPair:
    """
    Precoders ``W`` of shape ``(B, N_B, K)`` for a batch of equal-size channels.

    Raises:
        ContractViolationError: If the model does not map 2 features to 2.
    """
    if model.spec.in_features != 2 or model.spec.out_features != 2:
        raise ContractViolationError("PS precoding needs a model mapping 2 features to 2")
    raw = model(channel_features(channels))
    scaled = scale_onto_budget(raw, p_max)
    lead = (slice(None),) * (scaled.ndim - 1)
    return ComplexPair(getitem(scaled, lead + (0,)), getitem(scaled, lead + (1,)))


def sum_rate_tensor(channels: Any, precoders: ComplexPair, noise_power: float) -> Tensor:
    """Per-sample sum SE (bits/s/Hz) of ``(B, N_B, K)`` channels and precoders."""
    H = ComplexPair.from_array(channels)
    received = cmatmul(hermitian(H), precoders).abs2()  # [b, k, j] = |h_k^H w_j|^2
    K = received.shape[-1]
    signal = sum_axis(mul(received, np.eye(K)), -1)
    interference = sub(sum_axis(received, -1), signal)
    sinr = mul(signal, reciprocal(add(interference, noise_power)))
    return mul(sum_axis(log(add(sinr, 1.0)), -1), 1.0 / _LN2)


def negative_sum_rate(
    model: GnnModel, channels: Any, p_max: float, noise_power: float
) -> Tensor:
    """Sum over the batch of ``-SE``; callers divide by their sample count."""
    W = ps_precoders(model, channels, p_max)
    return mul(sum_axis(sum_rate_tensor(channels, W, noise_power)), -1.0)
