"""
Bandwidth iteration as one APE_I along the UE dimension.

Each user carries ``d_k = [p_k, B_k, mu_k, lambda, g_k]``. The processor
reads the power slot, so the pooled term is the power of every other user;
the combiner adds the user's own power back to form the total and applies
the four simultaneous updates.
"""

from __future__ import annotations

import logging
from typing import Any, List, Optional, Tuple

import numpy as np

from ..baselines.gd_bandwidth import PBState, gd_pb_step, init_pb_state, pb_user_update
from ..baselines.problems import ProblemInstance
from ..core import config
from ..core.feature_flags import get_pb_update_form
from ..core.pe_functions import OneSetTemplate, RecursionStack
from ..core.permutation import AxisRule, PermutationScheme
from ..core.tensor import Tensor, as_tensor
from .interfaces import RieCase
from .state import RepresentationState, values

logger = logging.getLogger(__name__)

PB_SLOTS: Tuple[str, ...] = ("p", "bandwidth", "mu", "lambda", "gain")


def pack_pb(
    inst: ProblemInstance,
    state: PBState,
    step_size: float = config.PB_STEP_SIZE,
    form: Optional[str] = None,
) -> RepresentationState:
    return RepresentationState(
        "PB",
        state.as_rows(inst.gains),
        PB_SLOTS,
        ("UE",),
        constants={
            "p_max": inst.p_max,
            "noise_density": inst.noise_density,
            "rate_target": inst.rate_target,
            "step_size": step_size,
            "form": form,
        },
        iteration=state.iteration,
    )


def unpack_pb(state: RepresentationState) -> PBState:
    return PBState(
        p=state.slot("p").copy(),
        bandwidth=state.slot("bandwidth").copy(),
        rate_multipliers=state.slot("mu").copy(),
        power_multiplier=float(np.mean(state.slot("lambda"))),
        iteration=state.iteration,
    )


def power_slot(x: Any) -> Tensor:
    """``q(d) = [1, 0, 0, 0, 0] d``."""
    return as_tensor(values(x)[..., 0:1])


def build_pb_stack(state: RepresentationState) -> RecursionStack:
    c = state.constants
    inst = ProblemInstance.pb(
        state.slot("gain"),
        p_max=c["p_max"],
        noise_density=c["noise_density"],
        rate_target=c["rate_target"],
    )
    form = get_pb_update_form(c.get("form"))
    step_size = c["step_size"]

    def combine(x: Any, pooled: Any) -> Tensor:
        d = values(x)
        total = d[..., 0] + values(pooled)[..., 0]
        p, b, mu, lam = pb_user_update(
            d[..., 0], d[..., 1], d[..., 2], d[..., 3], d[..., 4], total, inst, step_size, form
        )
        return Tensor(np.stack([p, b, mu, lam, d[..., 4]], axis=-1))

    root = OneSetTemplate("APE_I", combine, power_slot, axis=-2, label="UE")
    return RecursionStack(root, set_axes=(-2,))


def rie_pb_step(state: RepresentationState) -> RepresentationState:
    return state.advance(build_pb_stack(state)(state.D))


class PBCase(RieCase):
    def __init__(self, form: Optional[str] = None, step_size: float = config.PB_STEP_SIZE):
        self.form = get_pb_update_form(form)
        self.step_size = step_size

    @property
    def variant(self) -> str:
        return "PB"

    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        K = int(rng.integers(1, config.EQUIVALENCE_MAX_USERS + 1))
        return ProblemInstance.pb(rng.uniform(0.5, 5.0, size=K))

    def initial_state(self, inst: ProblemInstance) -> PBState:
        return init_pb_state(inst)

    def raw_step(self, inst: ProblemInstance, raw: PBState) -> PBState:
        return gd_pb_step(inst, raw, self.step_size, self.form)

    def pack(self, inst: ProblemInstance, raw: PBState) -> RepresentationState:
        return pack_pb(inst, raw, self.step_size, self.form)

    def step(self, state: RepresentationState) -> RepresentationState:
        return rie_pb_step(state)

    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        return [build_pb_stack(state)]

    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        scheme = PermutationScheme.of(AxisRule.arbitrary("UE"), AxisRule.fixed())
        return scheme, scheme
