"""
WMMSE MU-MISO step as two passes over an (AN, UE) state.

Layout: ``D[n, k] = [Re w_k[n], Im w_k[n], Re h_k[n], Im h_k[n], Re u_k, Im u_k, z_k]``
with receivers and weights repeated along the AN axis.

Receiver pass: APE_II along UE. The pairwise processor reads
``(d_k, d_j)`` and returns ``|h_k^H w_j|^2``, with the inner product formed
by an APE_I total along AN; the combiner forms ``h_k^H w_k`` the same way
and applies the MMSE receiver and weight.

Precoder pass: APE_I along UE. The processor emits the rows of
``z_j |u_j|^2 h_j h_j^H`` and ``z_j^2 |u_j|^2 h_j h_j^H``; the combiner
adds the user's own rows back, rebuilds both matrices and solves for
``w_k`` with the shared power dual. The matrix solve is an AN-equivariant
numpy leaf.
"""

from __future__ import annotations

import logging
from typing import Any, List, Tuple

import numpy as np

from ..baselines.channels import generate_channels
from ..baselines.problems import ProblemInstance
from ..baselines.wmmse_miso import (
    PSState,
    dual_precoders,
    init_ps_state,
    receive_terms,
    wmmse_ps_step,
)
from ..core import config
from ..core.pe_functions import OneSetTemplate, PairProcessor, RecursionStack, identity
from ..core.permutation import AxisRule, PermutationScheme
from ..core.tensor import Tensor
from .interfaces import RieCase
from .state import (
    Nested,
    RepresentationState,
    axis_total,
    complex_at,
    complex_features,
    real_feature,
    replace_slots,
    values,
)

logger = logging.getLogger(__name__)

PS_SLOTS: Tuple[str, ...] = ("w_re", "w_im", "h_re", "h_im", "u_re", "u_im", "z")
_W, _H, _U, _Z = 0, 2, 4, 6


def pack_ps(inst: ProblemInstance, state: PSState) -> RepresentationState:
    N_B, K = inst.channels.shape
    D = np.empty((N_B, K, len(PS_SLOTS)))
    D[..., _W], D[..., _W + 1] = state.precoders.real, state.precoders.imag
    D[..., _H], D[..., _H + 1] = inst.channels.real, inst.channels.imag
    D[..., _U] = np.broadcast_to(state.receivers.real, (N_B, K))
    D[..., _U + 1] = np.broadcast_to(state.receivers.imag, (N_B, K))
    D[..., _Z] = np.broadcast_to(state.weights, (N_B, K))
    return RepresentationState(
        "PS",
        D,
        PS_SLOTS,
        ("AN", "UE"),
        constants={"p_max": inst.p_max, "noise_power": inst.noise_power},
        iteration=state.iteration,
    )


def unpack_ps(state: RepresentationState) -> PSState:
    D = state.D
    return PSState(
        precoders=D[..., _W] + 1j * D[..., _W + 1],
        receivers=D[0, :, _U] + 1j * D[0, :, _U + 1],
        weights=D[0, :, _Z].copy(),
        iteration=state.iteration,
    )


# ============================================================================
# RECEIVER PASS
# ============================================================================

an_sum = axis_total(-3, identity, label="AN")


def build_receiver_stack(state: RepresentationState) -> RecursionStack:
    noise_power = state.constants["noise_power"]

    def cross_power(x_self: Any, x_nbr: Any) -> Tensor:
        # |h_k^H w_j|^2 for self k and neighbor j
        prod = np.conj(complex_at(x_self, _H)) * complex_at(x_nbr, _W)
        total = complex_at(an_sum(complex_features(prod)), 0)
        return real_feature(np.abs(total) ** 2)

    def receive(x: Any, pooled: Any) -> Tensor:
        prod = np.conj(complex_at(x, _H)) * complex_at(x, _W)
        signal = complex_at(an_sum(complex_features(prod)), 0)
        u, z = receive_terms(signal, values(pooled)[..., 0], noise_power)
        return replace_slots(x, {_U: u.real, _U + 1: u.imag, _Z: z})

    root = OneSetTemplate(
        "APE_II",
        Nested(receive, an_sum),
        PairProcessor(Nested(cross_power, an_sum)),
        axis=-2,
        label="UE",
    )
    return RecursionStack(root, set_axes=(-3, -2))


# ============================================================================
# PRECODER PASS
# ============================================================================


def gram_rows(x: Any) -> Tensor:
    """
    Rows of ``a_j h_j h_j^H`` and ``z_j a_j h_j h_j^H`` with ``a_j = z_j |u_j|^2``.

    Element ``[n, j]`` carries row ``n`` as ``4 N_B`` features: real and
    imaginary parts of both matrices.
    """
    d = values(x)
    h = complex_at(x, _H)
    a = d[..., _Z] * np.abs(complex_at(x, _U)) ** 2
    outer = np.einsum("nk,mk->nkm", h, np.conj(h))
    A = a[..., None] * outer
    C = (d[..., _Z] * a)[..., None] * outer
    return Tensor(np.concatenate([A.real, A.imag, C.real, C.imag], axis=-1))


def build_precoder_stack(state: RepresentationState) -> RecursionStack:
    p_max = state.constants["p_max"]

    def precode(x: Any, pooled: Any) -> Tensor:
        rows = values(gram_rows(x)) + values(pooled)
        N_B = rows.shape[-3]
        A = rows[..., :N_B] + 1j * rows[..., N_B : 2 * N_B]
        C = rows[..., 2 * N_B : 3 * N_B] + 1j * rows[..., 3 * N_B :]
        rhs = values(x)[..., _Z] * complex_at(x, _U) * complex_at(x, _H)
        W = np.empty_like(rhs)
        for k in range(rhs.shape[-1]):
            W[:, k] = dual_precoders(A[:, k, :], C[:, k, :], rhs[:, k : k + 1], p_max)[:, 0]
        return replace_slots(x, {_W: W.real, _W + 1: W.imag})

    root = OneSetTemplate("APE_I", precode, gram_rows, axis=-2, label="UE")
    return RecursionStack(root, set_axes=(-2,))


def rie_ps_step(state: RepresentationState) -> RepresentationState:
    D = build_receiver_stack(state)(state.D)
    return state.advance(build_precoder_stack(state)(D))


class PSCase(RieCase):
    @property
    def variant(self) -> str:
        return "PS"

    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        sizes = {
            "users": int(rng.integers(1, config.EQUIVALENCE_MAX_USERS + 1)),
            "bs_antennas": int(rng.integers(1, config.EQUIVALENCE_MAX_BS_ANTENNAS + 1)),
        }
        return generate_channels("PS", sizes, seed=int(rng.integers(2**31)))

    def initial_state(self, inst: ProblemInstance) -> PSState:
        return init_ps_state(inst)

    def raw_step(self, inst: ProblemInstance, raw: PSState) -> PSState:
        return wmmse_ps_step(inst, raw)

    def pack(self, inst: ProblemInstance, raw: PSState) -> RepresentationState:
        return pack_ps(inst, raw)

    def step(self, state: RepresentationState) -> RepresentationState:
        return rie_ps_step(state)

    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        return [build_receiver_stack(state), build_precoder_stack(state)]

    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        scheme = PermutationScheme.of(
            AxisRule.arbitrary("AN"), AxisRule.arbitrary("UE"), AxisRule.fixed()
        )
        return scheme, scheme
