"""
Power allocation for fixed unit-norm beams, re-expressed on the beam and
channel pair instead of the gain matrix.

Layout: ``D[n, k] = [Re w_k[n], Im w_k[n], Re h_k[n], Im h_k[n], v_k, u_k, z_k]``
with the scalar iterate repeated along the AN axis. Each pass is an APE_II
along UE whose pairwise processor forms the cross gain ``|w^H h|`` with an
APE_I total along AN.
"""

from __future__ import annotations

import logging
from typing import Any, List, Tuple

import numpy as np

from ..baselines.channels import generate_channels
from ..baselines.problems import ProblemInstance, pair_gains
from ..baselines.wmmse_power import (
    PCState,
    init_pc_state,
    receive_update,
    transmit_update,
    wmmse_pc_step,
)
from ..core import config
from ..core.exceptions import ContractViolationError
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

FIXED_BEAM_SLOTS: Tuple[str, ...] = ("w_re", "w_im", "h_re", "h_im", "v", "u", "z")
_W, _H, _V, _U, _Z = 0, 2, 4, 5, 6

an_sum = axis_total(-3, identity, label="AN")


def pack_fixed_beam(inst: ProblemInstance, state: PCState) -> RepresentationState:
    """
    Raises:
        ContractViolationError: If the instance carries no (W, H) pair.
    """
    if not inst.has_pair:
        raise ContractViolationError("fixed-beam state needs the (W, H) pair of the instance")
    W, H = inst.beams, inst.channels
    N_B, K = H.shape
    D = np.empty((N_B, K, len(FIXED_BEAM_SLOTS)))
    D[..., _W], D[..., _W + 1] = W.real, W.imag
    D[..., _H], D[..., _H + 1] = H.real, H.imag
    D[..., _V] = np.broadcast_to(state.v, (N_B, K))
    D[..., _U] = np.broadcast_to(state.u, (N_B, K))
    D[..., _Z] = np.broadcast_to(state.z, (N_B, K))
    return RepresentationState(
        "PS_POWER",
        D,
        FIXED_BEAM_SLOTS,
        ("AN", "UE"),
        constants={"p_max": inst.p_max, "noise_power": inst.noise_power},
        iteration=state.iteration,
    )


def unpack_fixed_beam(state: RepresentationState) -> PCState:
    D = state.D
    return PCState(D[0, :, _V].copy(), D[0, :, _U].copy(), D[0, :, _Z].copy(), state.iteration)


def _gain(w_owner: Any, h_owner: Any) -> np.ndarray:
    """``|w^H h|`` with ``w`` read from ``w_owner`` and ``h`` from ``h_owner``."""
    prod = np.conj(complex_at(w_owner, _W)) * complex_at(h_owner, _H)
    return np.abs(complex_at(an_sum(complex_features(prod)), 0))


def _leak_from(x_self: Any, x_nbr: Any) -> Tensor:
    # z_j u_j^2 |w_k^H h_j|^2
    d = values(x_nbr)
    return real_feature(_gain(x_self, x_nbr) ** 2 * d[..., _Z] * d[..., _U] ** 2)


def _received_from(x_self: Any, x_nbr: Any) -> Tensor:
    # v_j^2 |w_j^H h_k|^2
    return real_feature(_gain(x_nbr, x_self) ** 2 * values(x_nbr)[..., _V] ** 2)


def build_transmit_stack(state: RepresentationState) -> RecursionStack:
    p_max = state.constants["p_max"]

    def transmit(x: Any, pooled: Any) -> Tensor:
        d = values(x)
        direct = _gain(x, x)
        leak = direct**2 * d[..., _Z] * d[..., _U] ** 2 + values(pooled)[..., 0]
        v = transmit_update(d[..., _Z] * d[..., _U] * direct, leak, p_max)
        return replace_slots(x, {_V: v})

    root = OneSetTemplate(
        "APE_II",
        Nested(transmit, an_sum),
        PairProcessor(Nested(_leak_from, an_sum)),
        axis=-2,
        label="UE",
    )
    return RecursionStack(root, set_axes=(-3, -2))


def build_receive_stack(state: RepresentationState) -> RecursionStack:
    noise_power = state.constants["noise_power"]

    def receive(x: Any, pooled: Any) -> Tensor:
        d = values(x)
        direct = _gain(x, x)
        received = direct**2 * d[..., _V] ** 2 + values(pooled)[..., 0]
        u, z = receive_update(d[..., _V], direct, received, noise_power)
        return replace_slots(x, {_U: u, _Z: z})

    root = OneSetTemplate(
        "APE_II",
        Nested(receive, an_sum),
        PairProcessor(Nested(_received_from, an_sum)),
        axis=-2,
        label="UE",
    )
    return RecursionStack(root, set_axes=(-3, -2))


def rie_fixed_beam_step(state: RepresentationState) -> RepresentationState:
    D = build_transmit_stack(state)(state.D)
    return state.advance(build_receive_stack(state)(D))


class FixedBeamCase(RieCase):
    @property
    def variant(self) -> str:
        return "PS_POWER"

    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        sizes = {
            "users": int(rng.integers(1, config.EQUIVALENCE_MAX_USERS + 1)),
            "bs_antennas": int(rng.integers(1, config.EQUIVALENCE_MAX_BS_ANTENNAS + 1)),
        }
        return generate_channels("PC", sizes, seed=int(rng.integers(2**31)))

    def initial_state(self, inst: ProblemInstance) -> PCState:
        return init_pc_state(pair_gains(inst.beams, inst.channels), inst.p_max, inst.noise_power)

    def raw_step(self, inst: ProblemInstance, raw: PCState) -> PCState:
        G = pair_gains(inst.beams, inst.channels)
        return wmmse_pc_step(G, inst.p_max, inst.noise_power, raw)

    def pack(self, inst: ProblemInstance, raw: PCState) -> RepresentationState:
        return pack_fixed_beam(inst, raw)

    def step(self, state: RepresentationState) -> RepresentationState:
        return rie_fixed_beam_step(state)

    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        return [build_transmit_stack(state), build_receive_stack(state)]

    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        scheme = PermutationScheme.of(
            AxisRule.arbitrary("AN"), AxisRule.arbitrary("UE"), AxisRule.fixed()
        )
        return scheme, scheme
