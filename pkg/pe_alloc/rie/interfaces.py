"""
Interface shared by the re-expressed iterations.

Each case pairs a raw stepper from ``baselines`` with its re-expressed
stepper, and knows how to draw random instances, pack raw iterates into
representation states and name the permutation scheme of its step.
"""

from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Any, Callable, List, Tuple

import numpy as np

from ..baselines.problems import ProblemInstance
from ..core.pe_functions import RecursionStack, StackDescription
from ..core.permutation import PermutationScheme
from .state import RepresentationState


class RieCase(ABC):
    """
    One problem's raw iteration and its re-expression.

    Subclasses hold the flags they were built with (update forms), so a
    case object fixes both steppers to the same reading of the equations.
    """

    @property
    @abstractmethod
    def variant(self) -> str:
        """Registry name of the case (``PB``, ``PS``, ...)."""

    @abstractmethod
    def draw_instance(self, rng: np.random.Generator) -> ProblemInstance:
        """Random instance within the equivalence size caps."""

    @abstractmethod
    def initial_state(self, inst: ProblemInstance) -> Any:
        """Raw iterate the solver starts from."""

    @abstractmethod
    def raw_step(self, inst: ProblemInstance, raw: Any) -> Any:
        """One step of the baseline solver."""

    @abstractmethod
    def pack(self, inst: ProblemInstance, raw: Any) -> RepresentationState:
        """Lay a raw iterate out as a representation state."""

    @abstractmethod
    def step(self, state: RepresentationState) -> RepresentationState:
        """One re-expressed step."""

    @abstractmethod
    def stacks(self, state: RepresentationState) -> List[RecursionStack]:
        """Recursion stacks applied, in order, by one step."""

    @abstractmethod
    def schemes(self, state: RepresentationState) -> Tuple[PermutationScheme, PermutationScheme]:
        """Input and output permutation schemes of the step."""

    def sample_state(self, rng: np.random.Generator, warmup: int = 1) -> RepresentationState:
        """Packed state after ``warmup`` raw steps from a random instance."""
        inst = self.draw_instance(rng)
        raw = self.initial_state(inst)
        for _ in range(warmup):
            raw = self.raw_step(inst, raw)
        return self.pack(inst, raw)

    def describe(self, state: RepresentationState) -> List[StackDescription]:
        return [stack.describe() for stack in self.stacks(state)]

    def step_function(self, state: RepresentationState) -> Callable[[np.ndarray], np.ndarray]:
        """Step as a map of the array ``D``, with the layout and constants of ``state``."""

        def f(D: np.ndarray) -> np.ndarray:
            return self.step(replace(state, D=np.asarray(D, dtype=np.float64))).D

        return f
