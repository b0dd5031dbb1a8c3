"""
Approximated MU-MIMO WMMSE step as three recursions over an order-3 block
state.

Axes: AN^BS (``n``), AN^UE (rows, UE ``k`` antenna ``i`` at ``k N_U + i``)
and DS (columns, UE ``k`` stream ``m`` at ``k M + m``). Only diagonal
blocks (row UE == column UE) are populated:

    D[n, (k, i), (k, m)] = [u_mk[i], w_mk[n], H_k[i, n], C_k[i, n], 1]

with complex entries stored as (real, imaginary) slots and the last slot a
block mask. ``C_k`` is the channel of the inter-stream coefficient of the
precoder update (``H_k`` or ``sum_{j!=k} H_j``).

The first recursion is an NPE_II along DS with subsets of ``M`` streams.
``q1`` handles the other streams of the same UE and ``q3`` the streams of
other UEs; both read the (self, neighbor) pair and return the neighbor's
interference terms for both updates. Inner recursions are APE_I totals
along AN^UE and AN^BS, nested to depth three in the coefficients. The
output function keeps the off-diagonal blocks.
"""

from __future__ import annotations

import logging
from typing import Any, List, Optional, Tuple

import numpy as np

from ..baselines.channels import generate_channels
from ..baselines.problems import ProblemInstance
from ..baselines.wmmse_mimo import PMState, init_pm_state, intra_channels, wmmse_pm_step
from ..core import config
from ..core.exceptions import ContractViolationError
from ..core.feature_flags import get_pm_channel_form
from ..core.pe_functions import (
    OneSetTemplate,
    PairProcessor,
    RecursionStack,
    block_mask,
    identity,
)
from ..core.permutation import AxisRule, PermutationScheme
from ..core.tensor import Tensor
from .interfaces import RieCase
from .state import (
    Nested,
    RepresentationState,
    axis_total,
    complex_at,
    complex_features,
    replace_slots,
    values,
)

logger = logging.getLogger(__name__)

PM_SLOTS: Tuple[str, ...] = (
    "u_re", "u_im", "w_re", "w_im", "h_re", "h_im", "c_re", "c_im", "mask",
)
_U, _W, _H, _C, _MASK = 0, 2, 4, 6, 8


def pack_pm(
    inst: ProblemInstance, state: PMState, channel_form: Optional[str] = None
) -> RepresentationState:
    form = get_pm_channel_form(channel_form)
    H = inst.channels
    K, N_U, N_B = H.shape
    M = inst.streams
    C = intra_channels(H, form)

    D = np.zeros((N_B, K * N_U, K * M, len(PM_SLOTS)))
    for k in range(K):
        rows = slice(k * N_U, (k + 1) * N_U)
        cols = slice(k * M, (k + 1) * M)
        U, W = state.receivers[k], state.precoders[k]
        block = D[:, rows, cols, :]
        block[..., _U] = U.real[None, :, :]
        block[..., _U + 1] = U.imag[None, :, :]
        block[..., _W] = W.real[:, None, :]
        block[..., _W + 1] = W.imag[:, None, :]
        block[..., _H] = H[k].T.real[:, :, None]
        block[..., _H + 1] = H[k].T.imag[:, :, None]
        block[..., _C] = C[k].T.real[:, :, None]
        block[..., _C + 1] = C[k].T.imag[:, :, None]
        block[..., _MASK] = 1.0
    return RepresentationState(
        "PM",
        D,
        PM_SLOTS,
        ("AN_BS", "AN_UE", "DS"),
        constants={"ue_antennas": N_U, "streams": M, "channel_form": form},
        iteration=state.iteration,
    )


def unpack_pm(state: RepresentationState) -> PMState:
    N_U, M = state.constants["ue_antennas"], state.constants["streams"]
    D = state.D
    K = D.shape[1] // N_U
    U = np.stack(
        [D[0, k * N_U : (k + 1) * N_U, k * M : (k + 1) * M, _U] for k in range(K)]
    ) + 1j * np.stack(
        [D[0, k * N_U : (k + 1) * N_U, k * M : (k + 1) * M, _U + 1] for k in range(K)]
    )
    W = np.stack([D[:, k * N_U, k * M : (k + 1) * M, _W] for k in range(K)]) + 1j * np.stack(
        [D[:, k * N_U, k * M : (k + 1) * M, _W + 1] for k in range(K)]
    )
    return PMState(U, W, state.iteration)


def diagonal_mask(state: RepresentationState) -> np.ndarray:
    c = state.constants
    return block_mask(state.D.shape, (-3, -2), (c["ue_antennas"], c["streams"]))


# ============================================================================
# TEMPLATES
# ============================================================================

ue_sum = axis_total(-3, identity, label="AN_UE")
bs_sum = axis_total(-4, identity, label="AN_BS")


def _total(template: OneSetTemplate, z: np.ndarray) -> np.ndarray:
    return complex_at(template(complex_features(z)), 0)


def _stack(*zs: np.ndarray) -> Tensor:
    """Complex arrays broadcast together, as (real, imaginary) feature pairs."""
    shape = np.broadcast_shapes(*(z.shape for z in zs))
    parts = []
    for z in zs:
        z = np.broadcast_to(z, shape)
        parts.extend([z.real, z.imag])
    return Tensor(np.stack(parts, axis=-1))


def _pair_gram(t: Any) -> Tensor:
    """``conj(H_k w_pj)[i] (H_k w_mk)[i]`` from features ``[H_k, w_pj, w_mk]``."""
    H, w_nbr, w_self = complex_at(t, 0), complex_at(t, 2), complex_at(t, 4)
    g_nbr = _total(bs_sum, H * w_nbr)
    g_self = _total(bs_sum, H * w_self)
    return complex_features(np.conj(g_nbr) * g_self)


def _intra_coupling(t: Any) -> Tensor:
    """``conj(u_pk)[i] (C_k r_mk)[i]`` from features ``[C_k, r_mk, u_pk]``."""
    C, r_self, u_nbr = complex_at(t, 0), complex_at(t, 2), complex_at(t, 4)
    return complex_features(np.conj(u_nbr) * _total(bs_sum, C * r_self))


stream_gram = axis_total(-3, Nested(_pair_gram, bs_sum), label="AN_UE")
intra_coupling = axis_total(-3, Nested(_intra_coupling, bs_sum), label="AN_UE")


def _neighbor_terms(n_ue: int, same_ue: bool):
    def fn(x_self: Any, x_nbr: Any) -> Tensor:
        H_self = complex_at(x_self, _H)
        w_self = complex_at(x_self, _W)
        u_nbr = complex_at(x_nbr, _U)
        # neighbor precoder on every AN^UE row
        w_nbr = _total(ue_sum, complex_at(x_nbr, _W)) / n_ue
        r_self = _total(ue_sum, np.conj(H_self) * complex_at(x_self, _U))
        r_nbr = _total(ue_sum, np.conj(complex_at(x_nbr, _H)) * u_nbr)

        g_nbr = _total(bs_sum, H_self * w_nbr)
        coef_u = complex_at(stream_gram(_stack(H_self, w_nbr, w_self)), 0)
        if same_ue:
            C_self = complex_at(x_self, _C)
            coef_w = complex_at(intra_coupling(_stack(C_self, r_self, u_nbr)), 0)
        else:
            coef_w = _total(bs_sum, np.conj(r_nbr) * r_self)
        u_term = coef_u * g_nbr
        w_term = coef_w * r_nbr
        shape = np.broadcast_shapes(u_term.shape, w_term.shape)
        u_term, w_term = np.broadcast_to(u_term, shape), np.broadcast_to(w_term, shape)
        return Tensor(np.stack([u_term.real, u_term.imag, w_term.real, w_term.imag], axis=-1))

    if same_ue:
        return Nested(fn, ue_sum, bs_sum, stream_gram, intra_coupling)
    return Nested(fn, ue_sum, bs_sum, stream_gram)


def _combine(x: Any, pooled: Any) -> Tensor:
    d = values(x)
    s = values(pooled)
    H = complex_at(x, _H)
    g_self = _total(bs_sum, H * complex_at(x, _W))
    r_self = _total(ue_sum, np.conj(H) * complex_at(x, _U))
    same_u = s[..., 0] + 1j * s[..., 1]
    same_w = s[..., 2] + 1j * s[..., 3]
    other_u = s[..., 4] + 1j * s[..., 5]
    other_w = s[..., 6] + 1j * s[..., 7]
    u_new = 2.0 * g_self - same_u - other_u
    w_new = (2.0 * r_self - same_w - other_w) * d[..., _MASK]
    return replace_slots(
        x, {_U: u_new.real, _U + 1: u_new.imag, _W: w_new.real, _W + 1: w_new.imag}
    )


def build_pm_stack(state: RepresentationState) -> RecursionStack:
    c = state.constants
    root = OneSetTemplate(
        "NPE_II",
        Nested(_combine, ue_sum, bs_sum),
        PairProcessor(_neighbor_terms(c["ue_antennas"], same_ue=True)),
        axis=-2,
        q2=identity,
        q3=PairProcessor(_neighbor_terms(c["ue_antennas"], same_ue=False)),
        subset_size=c["streams"],
        label="DS",
    )
    return RecursionStack(root, set_axes=(-4, -3, -2), output_mask=diagonal_mask(state))


def rie_pm_step(state: RepresentationState) -> RepresentationState:
    """
    Raises:
        ContractViolationError: If an off-diagonal block is nonzero.
    """
    mask = diagonal_mask(state)
    if np.any(state.D * (1.0 - mask)):
        raise ContractViolationError("PM state has a nonzero off-diagonal block")
    return state.advance(build_pm_stack(state)(state.D))


def scale_to_spectral_norm(channels: np.ndarray, target: float) -> np.ndarray:
    norms = np.linalg.norm(channels, ord=2, axis=(-2, -1))
    return channels * (target / np.where(norms > 0, norms, 1.0))[:, None, None]


class PMCase(RieCase):
    def __init__(self, channel_form: Optional[str] = None):
        self.channel_form = get_pm_channel_form(channel_form)

    @property
    def variant(self) -> str:
        return "PM"

    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        N_U = int(rng.integers(1, config.EQUIVALENCE_MAX_UE_ANTENNAS + 1))
        sizes = {
            "users": int(rng.integers(1, config.EQUIVALENCE_MAX_USERS + 1)),
            "bs_antennas": int(rng.integers(1, config.EQUIVALENCE_MAX_BS_ANTENNAS + 1)),
            "ue_antennas": N_U,
            "streams": int(rng.integers(1, min(N_U, config.EQUIVALENCE_MAX_STREAMS) + 1)),
        }
        raw = generate_channels("PM", sizes, seed=int(rng.integers(2**31)))
        return ProblemInstance.pm(
            scale_to_spectral_norm(raw.channels, config.PM_EQUIVALENCE_SPECTRAL_NORM),
            streams=raw.streams,
            p_max=config.PM_EQUIVALENCE_P_MAX,
            noise_power=raw.noise_power,
        )

    def initial_state(self, inst: ProblemInstance) -> PMState:
        return init_pm_state(inst)

    def raw_step(self, inst: ProblemInstance, raw: PMState) -> PMState:
        return wmmse_pm_step(inst, raw, self.channel_form)

    def pack(self, inst: ProblemInstance, raw: PMState) -> RepresentationState:
        return pack_pm(inst, raw, self.channel_form)

    def step(self, state: RepresentationState) -> RepresentationState:
        return rie_pm_step(state)

    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        return [build_pm_stack(state)]

    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        c = state.constants
        scheme = PermutationScheme.of(
            AxisRule.arbitrary("AN_BS"),
            AxisRule.nested("AN_UE", c["ue_antennas"], outer_symbol="UE"),
            AxisRule.nested("DS", c["streams"], outer_symbol="UE"),
            AxisRule.fixed(),
        )
        return scheme, scheme
