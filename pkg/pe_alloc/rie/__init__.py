"""
Iterations of the reference solvers re-expressed as recursions of one-set
PE templates, with a side-by-side equivalence oracle.
"""

from .equivalence import EquivalenceReport, TrialTrace, verify_rie_equivalence
from .fixed_beam import FixedBeamCase, rie_fixed_beam_step
from .interfaces import RieCase
from .pb import PBCase, rie_pb_step
from .pc import PCCase, rie_pc_step
from .pm import PMCase, rie_pm_step
from .ps import PSCase, rie_ps_step
from .registry import VARIANT_REGISTRY, get_rie_case
from .state import RepresentationState

__all__ = [
    "EquivalenceReport",
    "FixedBeamCase",
    "PBCase",
    "PCCase",
    "PMCase",
    "PSCase",
    "RepresentationState",
    "RieCase",
    "TrialTrace",
    "VARIANT_REGISTRY",
    "get_rie_case",
    "rie_fixed_beam_step",
    "rie_pb_step",
    "rie_pc_step",
    "rie_pm_step",
    "rie_ps_step",
    "verify_rie_equivalence",
]
