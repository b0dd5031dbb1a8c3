"""
Random channel draws for every problem variant.

Two fading models are supported:
    rayleigh: i.i.d. CN(0, 1) entries (unit-variance, no path loss).
    rician:   sqrt(beta/(1+beta)) * LoS + sqrt(1/(1+beta)) * NLoS per user,
              with a uniform-linear-array steering vector at a random angle,
              scaled by the path loss 32.6 + 36.7 log10(d) dB of a random
              distance.

All draws come from ``numpy.random.default_rng(seed)`` and are deterministic
per seed.
"""

from __future__ import annotations

import logging
from typing import Any, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from .problems import ProblemInstance

logger = logging.getLogger(__name__)

FADING_MODELS: Tuple[str, ...] = ("rayleigh", "rician")


def path_loss_db(distance_m: Any) -> np.ndarray:
    """Path loss in dB at ``distance_m`` meters."""
    d = np.asarray(distance_m, dtype=np.float64)
    if np.any(d <= 0):
        raise ContractViolationError("distances must be positive meters")
    return config.PATH_LOSS_INTERCEPT_DB + config.PATH_LOSS_SLOPE_DB * np.log10(d)


def steering_vector(n_antennas: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response ``exp(j pi n sin(angle))``, unit-modulus entries."""
    return np.exp(1j * np.pi * np.arange(n_antennas) * np.sin(angle))


def _cn(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_rician(
    rng: np.random.Generator,
    n_antennas: int,
    angles: Sequence[float],
    factor: float = config.RICIAN_FACTOR,
) -> np.ndarray:
    """
    Rician columns ``(n_antennas, len(angles))`` without path loss.

    Raises:
        ContractViolationError: If the Rician factor is negative.
    """
    if factor < 0:
        raise ContractViolationError(f"Rician factor must be >= 0, got {factor}")
    angles = np.asarray(angles, dtype=np.float64)
    los = np.stack([steering_vector(n_antennas, a) for a in angles], axis=1)
    nlos = _cn(rng, (n_antennas, angles.size))
    return np.sqrt(factor / (1.0 + factor)) * los + np.sqrt(1.0 / (1.0 + factor)) * nlos


def _check_sizes(sizes: Mapping[str, int], keys: Sequence[str]) -> Tuple[int, ...]:
    values = []
    for key in keys:
        if key not in sizes:
            raise ContractViolationError(f"sizes missing {key!r}")
        value = int(sizes[key])
        if value < 1:
            raise ContractViolationError(f"size {key!r} must be positive, got {value}")
        values.append(value)
    return tuple(values)


class _Fading:
    """Per-user channel factory for one fading model."""

    def __init__(
        self,
        rng: np.random.Generator,
        model: str,
        users: int,
        factor: float,
        distances: Optional[Any],
    ):
        self.rng = rng
        self.model = model
        self.factor = factor
        if model == "rician":
            if distances is None:
                lo, hi = config.DISTANCE_RANGE_M
                distances = rng.uniform(lo, hi, size=users)
            distances = np.broadcast_to(np.asarray(distances, dtype=np.float64), (users,))
            self.amplitude = np.sqrt(10.0 ** (-path_loss_db(distances) / 10.0))
            self.angles = rng.uniform(-np.pi / 2, np.pi / 2, size=users)
        else:
            self.amplitude = np.ones(users)
            self.angles = np.zeros(users)

    def columns(self, n_antennas: int) -> np.ndarray:
        """``(n_antennas, K)`` complex channel, one column per user."""
        users = self.amplitude.size
        if self.model == "rician":
            base = draw_rician(self.rng, n_antennas, self.angles, self.factor)
        else:
            base = _cn(self.rng, (n_antennas, users))
        return base * self.amplitude[None, :]

    def matrices(self, rows: int, cols: int) -> np.ndarray:
        """``(K, rows, cols)`` per-user matrix channels."""
        users = self.amplitude.size
        if self.model == "rician":
            out = np.empty((users, rows, cols), dtype=np.complex128)
            for k in range(users):
                rx = steering_vector(rows, self.angles[k])
                tx = steering_vector(cols, self.angles[k])
                los = np.outer(rx, tx.conj())
                nlos = _cn(self.rng, (rows, cols))
                out[k] = (
                    np.sqrt(self.factor / (1.0 + self.factor)) * los
                    + np.sqrt(1.0 / (1.0 + self.factor)) * nlos
                )
        else:
            out = _cn(self.rng, (users, rows, cols))
        return out * self.amplitude[:, None, None]


def generate_channels(
    variant: str,
    sizes: Mapping[str, int],
    model: str = "rayleigh",
    seed: int = 0,
    factor: float = config.RICIAN_FACTOR,
    distances: Optional[Any] = None,
    p_max: float = config.P_MAX_W,
    noise_power: Optional[float] = None,
) -> ProblemInstance:
    """
    Draw one problem instance.

    Args:
        variant: "PB", "PS", "PM" or "PC".
        sizes: ``users`` always; ``bs_antennas`` for PS/PM/PC;
            ``ue_antennas`` and ``streams`` for PM.
        model: "rayleigh" or "rician".
        seed: RNG seed.
        factor: Rician factor (ignored for Rayleigh).
        distances: Rician distances in meters, scalar or per user; drawn
            uniformly from the configured range when omitted.
        p_max: Power budget in watts.
        noise_power: Noise power in watts; defaults to the model's constant.

    Returns:
        A validated ``ProblemInstance``.

    Raises:
        ContractViolationError: On unknown variants/models or bad sizes.
    """
    if model not in FADING_MODELS:
        raise ContractViolationError(
            f"Invalid fading model: {model!r}. Valid options: {', '.join(FADING_MODELS)}"
        )
    if factor < 0:
        raise ContractViolationError(f"Rician factor must be >= 0, got {factor}")
    if noise_power is None:
        noise_power = config.NOISE_POWER_W if model == "rician" else config.RAYLEIGH_NOISE_POWER_W

    rng = np.random.default_rng(seed)
    (users,) = _check_sizes(sizes, ["users"])
    fading = _Fading(rng, model, users, factor, distances)
    logger.debug("drawing %s %s channels, sizes=%s, seed=%s", model, variant, dict(sizes), seed)

    if variant == "PB":
        gains = np.abs(fading.columns(1)[0]) ** 2
        return ProblemInstance.pb(gains, p_max=p_max)
    if variant == "PS":
        (n_b,) = _check_sizes(sizes, ["bs_antennas"])
        return ProblemInstance.ps(fading.columns(n_b), p_max=p_max, noise_power=noise_power)
    if variant == "PM":
        n_b, n_u, streams = _check_sizes(sizes, ["bs_antennas", "ue_antennas", "streams"])
        return ProblemInstance.pm(
            fading.matrices(n_u, n_b), streams, p_max=p_max, noise_power=noise_power
        )
    if variant == "PC":
        (n_b,) = _check_sizes(sizes, ["bs_antennas"])
        H = fading.columns(n_b)
        beams = _unit_beams(rng, H)
        return ProblemInstance.pc_from_pair(beams, H, p_max=p_max, noise_power=noise_power)
    raise ContractViolationError(
        f"Invalid variant: {variant!r}. Valid options: PB, PS, PM, PC"
    )


def _unit_beams(rng: np.random.Generator, channels: np.ndarray) -> np.ndarray:
    """Matched-filter beams normalized to unit norm; random for zero columns."""
    norms = np.linalg.norm(channels, axis=0, keepdims=True)
    beams = np.where(norms > 0, channels / np.where(norms > 0, norms, 1.0), 0.0)
    for k in np.flatnonzero(norms[0] == 0):
        v = _cn(rng, (channels.shape[0],))
        beams[:, k] = v / np.linalg.norm(v)
    return beams
