"""
Problem instances and objective evaluation for the four allocation problems.

Variants:
    PB: bandwidth minimization under per-user rate targets and a total power
        budget. Channel gains ``g`` have shape ``(K,)``.
    PS: MU-MISO sum-SE precoding. ``H`` is ``(N_B, K)``; column ``k`` is the
        channel of UE ``k`` and the UE receives ``h_k^H x``.
    PM: MU-MIMO sum-SE precoding with ``M`` streams per UE. ``H`` is
        ``(K, N_U, N_B)``; UE ``k`` receives ``H_k x``.
    PC: interference-channel power control. ``G[k, j] = |w_j^H h_k|`` is the
        gain from transmitter ``j`` to receiver ``k``; the generating
        ``(W, H)`` pair is kept when the instance is built from it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError, DomainError

logger = logging.getLogger(__name__)

VARIANTS: Tuple[str, ...] = ("PB", "PS", "PM", "PC")


def _real(values: Any, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} must be finite")
    return arr


def _complex(values: Any, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """
    One random draw of an allocation problem.

    Use the ``pb``/``ps``/``pm``/``pc``/``pc_from_pair`` constructors; they
    convert arrays and validate shapes and signs.
    """

    variant: str
    p_max: float
    noise_power: float = config.RAYLEIGH_NOISE_POWER_W
    gains: Optional[np.ndarray] = None
    channels: Optional[np.ndarray] = None
    beams: Optional[np.ndarray] = None
    streams: int = 1
    noise_density: float = config.PB_NOISE_DENSITY
    rate_target: float = config.PB_RATE_TARGET

    def __post_init__(self) -> None:
        self.validate()

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def pb(
        cls,
        gains: Any,
        p_max: float = config.P_MAX_W,
        noise_density: float = config.PB_NOISE_DENSITY,
        rate_target: float = config.PB_RATE_TARGET,
    ) -> "ProblemInstance":
        return cls(
            "PB",
            p_max=float(p_max),
            gains=_real(gains, "gains").reshape(-1),
            noise_density=float(noise_density),
            rate_target=float(rate_target),
        )

    @classmethod
    def ps(
        cls,
        channels: Any,
        p_max: float = config.P_MAX_W,
        noise_power: float = config.RAYLEIGH_NOISE_POWER_W,
    ) -> "ProblemInstance":
        return cls(
            "PS",
            p_max=float(p_max),
            noise_power=float(noise_power),
            channels=_complex(channels, "channels"),
        )

    @classmethod
    def pm(
        cls,
        channels: Any,
        streams: int,
        p_max: float = config.P_MAX_W,
        noise_power: float = config.RAYLEIGH_NOISE_POWER_W,
    ) -> "ProblemInstance":
        return cls(
            "PM",
            p_max=float(p_max),
            noise_power=float(noise_power),
            channels=_complex(channels, "channels"),
            streams=int(streams),
        )

    @classmethod
    def pc(
        cls,
        gains: Any,
        p_max: float = config.P_MAX_W,
        noise_power: float = config.RAYLEIGH_NOISE_POWER_W,
    ) -> "ProblemInstance":
        return cls(
            "PC",
            p_max=float(p_max),
            noise_power=float(noise_power),
            gains=_real(gains, "gains"),
        )

    @classmethod
    def pc_from_pair(
        cls,
        beams: Any,
        channels: Any,
        p_max: float = config.P_MAX_W,
        noise_power: float = config.RAYLEIGH_NOISE_POWER_W,
    ) -> "ProblemInstance":
        """
        Build a power-control instance from unit-norm beams ``W`` and
        channels ``H`` (both ``(N_B, K)``), with ``G[k, j] = |w_j^H h_k|``.
        """
        W = _complex(beams, "beams")
        H = _complex(channels, "channels")
        return cls(
            "PC",
            p_max=float(p_max),
            noise_power=float(noise_power),
            gains=pair_gains(W, H),
            channels=H,
            beams=W,
        )

    # ------------------------------------------------------------------
    # Shape helpers
    # ------------------------------------------------------------------

    @property
    def users(self) -> int:
        if self.variant in ("PB", "PC"):
            return int(self.gains.shape[0])
        if self.variant == "PS":
            return int(self.channels.shape[1])
        return int(self.channels.shape[0])

    @property
    def bs_antennas(self) -> int:
        if self.channels is None:
            return 0
        return int(self.channels.shape[-1] if self.variant == "PM" else self.channels.shape[0])

    @property
    def ue_antennas(self) -> int:
        return int(self.channels.shape[1]) if self.variant == "PM" else 1

    @property
    def has_pair(self) -> bool:
        return self.beams is not None and self.channels is not None

    def validate(self) -> None:
        """
        Raises:
            ContractViolationError: On unknown variants, wrong shapes or
                negative/zero constants.
        """
        if self.variant not in VARIANTS:
            raise ContractViolationError(
                f"Invalid variant: {self.variant!r}. Valid options: {', '.join(VARIANTS)}"
            )
        if not self.p_max > 0:
            raise ContractViolationError(f"p_max must be positive, got {self.p_max}")
        if not self.noise_power > 0:
            raise ContractViolationError(f"noise_power must be positive, got {self.noise_power}")

        if self.variant == "PB":
            self._validate_pb()
        elif self.variant == "PS":
            if self.channels is None or self.channels.ndim != 2 or self.channels.size == 0:
                raise ContractViolationError("PS channels must be a non-empty (N_B, K) matrix")
        elif self.variant == "PM":
            if self.channels is None or self.channels.ndim != 3 or self.channels.size == 0:
                raise ContractViolationError("PM channels must be a non-empty (K, N_U, N_B) array")
            if not 1 <= self.streams <= self.channels.shape[1]:
                raise ContractViolationError(
                    f"streams must be in [1, N_U={self.channels.shape[1]}], got {self.streams}"
                )
        else:
            self._validate_pc()

    def _validate_pb(self) -> None:
        if self.gains is None or self.gains.ndim != 1 or self.gains.size == 0:
            raise ContractViolationError("PB gains must be a non-empty vector")
        if np.any(self.gains <= 0):
            raise ContractViolationError("PB gains must be positive")
        if not self.noise_density > 0 or not self.rate_target > 0:
            raise ContractViolationError("PB noise density and rate target must be positive")

    def _validate_pc(self) -> None:
        G = self.gains
        if G is None or G.ndim != 2 or G.shape[0] != G.shape[1] or G.size == 0:
            raise ContractViolationError("PC gains must be a non-empty square matrix")
        if np.any(G < 0):
            raise ContractViolationError("PC gains must be nonnegative")
        if self.beams is None:
            return
        W, H = self.beams, self.channels
        if H is None or W.shape != H.shape or W.shape[1] != G.shape[0]:
            raise ContractViolationError("PC beams and channels must both be (N_B, K)")
        norms = np.linalg.norm(W, axis=0)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ContractViolationError("PC beams must have unit-norm columns")


def pair_gains(beams: np.ndarray, channels: np.ndarray) -> np.ndarray:
    """``G[k, j] = |w_j^H h_k|`` for beams and channels of shape ``(N_B, K)``."""
    return np.abs(beams.conj().T @ channels).T


# ============================================================================
# OBJECTIVES
# ============================================================================


def pb_rates(inst: ProblemInstance, p: np.ndarray, bandwidth: np.ndarray) -> np.ndarray:
    """Per-user rates ``B log2(1 + p g / (N0 B))`` in bit/s."""
    p = np.asarray(p, dtype=np.float64)
    B = np.asarray(bandwidth, dtype=np.float64)
    if np.any(B <= 0):
        raise DomainError("bandwidth must be positive to evaluate rates")
    return B * np.log2(1.0 + p * inst.gains / (inst.noise_density * B))


def ps_sum_rate(channels: np.ndarray, precoders: np.ndarray, noise_power: float) -> float:
    """MU-MISO sum SE for ``H`` and ``W`` of shape ``(N_B, K)``."""
    received = np.abs(channels.conj().T @ precoders) ** 2  # [k, j] = |h_k^H w_j|^2
    signal = np.diag(received)
    interference = received.sum(axis=1) - signal
    return float(np.sum(np.log2(1.0 + signal / (interference + noise_power))))


def pm_sum_rate(channels: np.ndarray, precoders: np.ndarray, noise_power: float) -> float:
    """
    MU-MIMO log-det sum SE for ``H`` of shape ``(K, N_U, N_B)`` and ``W`` of
    shape ``(K, N_B, M)``.

    Raises:
        DomainError: If an interference-plus-noise matrix is not positive
            definite (cannot happen for positive noise power).
    """
    K, n_u, _ = channels.shape
    eye = np.eye(n_u)
    total = 0.0
    for k in range(K):
        Hk = channels[k]
        covariances = [Hk @ precoders[j] @ (Hk @ precoders[j]).conj().T for j in range(K)]
        interference = noise_power * eye + sum(
            (covariances[j] for j in range(K) if j != k), np.zeros((n_u, n_u))
        )
        sign_r, logdet_r = np.linalg.slogdet(interference)
        sign_s, logdet_s = np.linalg.slogdet(interference + covariances[k])
        if sign_r.real <= 0 or sign_s.real <= 0:
            raise DomainError("interference-plus-noise covariance is not positive definite")
        total += (logdet_s - logdet_r) / math.log(2.0)
    return float(total)


def pc_sum_rate(gains: np.ndarray, powers: np.ndarray, noise_power: float) -> float:
    """Interference-channel sum rate; ``G[k, j]`` is the gain from Tx ``j`` to Rx ``k``."""
    received = gains**2 * np.asarray(powers, dtype=np.float64)[None, :]
    signal = np.diag(received)
    interference = received.sum(axis=1) - signal
    return float(np.sum(np.log2(1.0 + signal / (interference + noise_power))))


def evaluate_objective(inst: ProblemInstance, variables: Any) -> float:
    """
    Exact objective of ``variables`` on ``inst``.

    Args:
        inst: Problem instance.
        variables: PB: bandwidth vector ``(K,)``; PS: precoders ``(N_B, K)``;
            PM: precoders ``(K, N_B, M)``; PC: powers ``(K,)``.

    Returns:
        Total bandwidth (PB) or sum SE in bit/s/Hz (PS, PM, PC).

    Raises:
        ContractViolationError: If ``variables`` has the wrong shape.
    """
    if inst.variant == "PB":
        B = _real(variables, "bandwidth")
        _expect_shape(B, (inst.users,))
        return float(np.sum(B))
    if inst.variant == "PS":
        W = _complex(variables, "precoders")
        _expect_shape(W, inst.channels.shape)
        return ps_sum_rate(inst.channels, W, inst.noise_power)
    if inst.variant == "PM":
        W = _complex(variables, "precoders")
        _expect_shape(W, (inst.users, inst.bs_antennas, inst.streams))
        return pm_sum_rate(inst.channels, W, inst.noise_power)
    p = _real(variables, "powers")
    _expect_shape(p, (inst.users,))
    return pc_sum_rate(inst.gains, p, inst.noise_power)


def _expect_shape(arr: np.ndarray, shape: Tuple[int, ...]) -> None:
    if arr.shape != tuple(shape):
        raise ContractViolationError(f"Expected variables of shape {tuple(shape)}, got {arr.shape}")
