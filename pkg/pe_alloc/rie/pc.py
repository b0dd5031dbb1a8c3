"""
WMMSE power control as two passes over a (receiver, transmitter) state.

Element ``(r, t)`` holds ``[v, u, z, direct, G[r, t], G[t, r]]``; the
iterate and the direct gain sit on the diagonal only. Both passes are an
APE_I along the transmitter axis whose processor nests an APE_I along the
receiver axis, followed by the identity-mask output function.
"""

from __future__ import annotations

import logging
from typing import Any, List, Tuple

import numpy as np

from ..baselines.channels import generate_channels
from ..baselines.problems import ProblemInstance
from ..baselines.wmmse_power import (
    PCState,
    init_pc_state,
    receive_update,
    transmit_update,
    wmmse_pc_step,
)
from ..core import config
from ..core.pe_functions import OneSetTemplate, RecursionStack, identity_mask
from ..core.permutation import AxisRule, PermutationScheme
from ..core.tensor import Tensor
from .interfaces import RieCase
from .state import Nested, RepresentationState, axis_total, real_feature, replace_slots, values

logger = logging.getLogger(__name__)

PC_SLOTS: Tuple[str, ...] = ("v", "u", "z", "direct", "gain", "gain_t")
_V, _U, _Z, _DIRECT, _GAIN, _GAIN_T = range(6)


def pack_pc(inst: ProblemInstance, state: PCState) -> RepresentationState:
    G = inst.gains
    K = G.shape[0]
    D = np.zeros((K, K, len(PC_SLOTS)))
    diag = np.arange(K)
    D[diag, diag, _V] = state.v
    D[diag, diag, _U] = state.u
    D[diag, diag, _Z] = state.z
    D[diag, diag, _DIRECT] = np.diag(G)
    D[..., _GAIN] = G
    D[..., _GAIN_T] = G.T
    return RepresentationState(
        "PC",
        D,
        PC_SLOTS,
        ("RX", "TX"),
        constants={"p_max": inst.p_max, "noise_power": inst.noise_power},
        iteration=state.iteration,
    )


def unpack_pc(state: RepresentationState) -> PCState:
    return PCState(
        v=np.diag(state.slot("v")).copy(),
        u=np.diag(state.slot("u")).copy(),
        z=np.diag(state.slot("z")).copy(),
        iteration=state.iteration,
    )


def _weighted_receiver(x: Any) -> Tensor:
    d = values(x)
    return real_feature(d[..., _Z] * d[..., _U] ** 2)


def _squared_power(x: Any) -> Tensor:
    return real_feature(values(x)[..., _V] ** 2)


weighted_receiver_total = axis_total(-3, _weighted_receiver, label="RX")
power_total = axis_total(-3, _squared_power, label="RX")


def _leakage(x: Any) -> Tensor:
    # z_j u_j^2 G[j, r]^2 at element (r, j)
    return real_feature(values(weighted_receiver_total(x))[..., 0] * values(x)[..., _GAIN_T] ** 2)


def _reception(x: Any) -> Tensor:
    # v_j^2 G[r, j]^2 at element (r, j)
    return real_feature(values(power_total(x))[..., 0] * values(x)[..., _GAIN] ** 2)


leakage = Nested(_leakage, weighted_receiver_total)
reception = Nested(_reception, power_total)


def build_transmit_stack(state: RepresentationState) -> RecursionStack:
    p_max = state.constants["p_max"]

    def transmit(x: Any, pooled: Any) -> Tensor:
        d = values(x)
        leak = values(leakage(x))[..., 0] + values(pooled)[..., 0]
        v = transmit_update(d[..., _Z] * d[..., _U] * d[..., _DIRECT], leak, p_max)
        return replace_slots(x, {_V: v})

    root = OneSetTemplate("APE_I", transmit, leakage, axis=-2, label="TX")
    return RecursionStack(root, set_axes=(-3, -2), output_mask=identity_mask(state.D.shape, (-3, -2)))


def build_receive_stack(state: RepresentationState) -> RecursionStack:
    noise_power = state.constants["noise_power"]

    def receive(x: Any, pooled: Any) -> Tensor:
        d = values(x)
        received = values(reception(x))[..., 0] + values(pooled)[..., 0]
        u, z = receive_update(d[..., _V], d[..., _DIRECT], received, noise_power)
        return replace_slots(x, {_U: u, _Z: z})

    root = OneSetTemplate("APE_I", receive, reception, axis=-2, label="TX")
    return RecursionStack(root, set_axes=(-3, -2), output_mask=identity_mask(state.D.shape, (-3, -2)))


def rie_pc_step(state: RepresentationState) -> RepresentationState:
    D = build_transmit_stack(state)(state.D)
    return state.advance(build_receive_stack(state)(D))


class PCCase(RieCase):
    @property
    def variant(self) -> str:
        return "PC"

    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        sizes = {
            "users": int(rng.integers(1, config.EQUIVALENCE_MAX_USERS + 1)),
            "bs_antennas": int(rng.integers(1, config.EQUIVALENCE_MAX_BS_ANTENNAS + 1)),
        }
        return generate_channels("PC", sizes, seed=int(rng.integers(2**31)))

    def initial_state(self, inst: ProblemInstance) -> PCState:
        return init_pc_state(inst.gains, inst.p_max, inst.noise_power)

    def raw_step(self, inst: ProblemInstance, raw: PCState) -> PCState:
        return wmmse_pc_step(inst.gains, inst.p_max, inst.noise_power, raw)

    def pack(self, inst: ProblemInstance, raw: PCState) -> RepresentationState:
        return pack_pc(inst, raw)

    def step(self, state: RepresentationState) -> RepresentationState:
        return rie_pc_step(state)

    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        return [build_transmit_stack(state), build_receive_stack(state)]

    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        scheme = PermutationScheme.of(
            AxisRule.arbitrary("K"), AxisRule.arbitrary("K"), AxisRule.fixed()
        )
        return scheme, scheme
