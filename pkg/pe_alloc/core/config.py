"""
Numerical configuration for the permutation-equivariant allocation toolkit.

All internal math is in linear scale (watts, W/Hz, bit/s); constants quoted in
dBm are converted once, here or at experiment-config parse time.
"""

import math

# ============================================================================
# NUMERICS
# ============================================================================

FLOAT_DTYPE = "float64"  # double precision everywhere

EQUIVARIANCE_TOL = 1e-9
EQUIVARIANCE_TRIALS = 50
RIE_EQUIVALENCE_TOL = 1e-9

GRAD_CHECK_STEP = 1e-6
GRAD_CHECK_TOL = 1e-5
GRAD_CHECK_FLOOR = 1e-8  # denominator floor of the relative error

# Logit added to excluded pairs before a softmax; exp() underflows to 0.
ATTENTION_MASK_LOGIT = -1e30

# ============================================================================
# SIMULATION CONSTANTS
# ============================================================================

P_MAX_DBM = 30.0
NOISE_POWER_DBM = -80.0
P_MAX_W = 10 ** ((P_MAX_DBM - 30.0) / 10.0)  # 1 W
NOISE_POWER_W = 10 ** ((NOISE_POWER_DBM - 30.0) / 10.0)  # 1e-11 W

RICIAN_FACTOR = 10.0
PATH_LOSS_INTERCEPT_DB = 32.6
PATH_LOSS_SLOPE_DB = 36.7
DISTANCE_RANGE_M = (50.0, 150.0)

# Unit-variance Rayleigh experiments run at 10 dB SNR.
RAYLEIGH_NOISE_POWER_W = 0.1

# Bandwidth problem, canonical normalized units
PB_NOISE_DENSITY = 1.0
PB_RATE_TARGET = 1.0

# ============================================================================
# SOLVERS
# ============================================================================

PB_STEP_SIZE = 1e-2
PB_STEP_DECAY = 1.0  # geometric decay per iteration; 1.0 disables
PB_MAX_ITERS = 200_000
PB_TOL = 1e-9
PB_MULTIPLIER_CEILING = 1e6
PB_BANDWIDTH_FLOOR = 1e-12
PB_INITIAL_BANDWIDTH = 1.0
PB_INITIAL_MULTIPLIER = 1.0

WMMSE_MAX_ITERS = 500
WMMSE_TOL = 1e-8
WMMSE_MONOTONE_TOL = 1e-8
DUAL_BISECTION_TOL = 1e-10
DUAL_BISECTION_MAX_HALVINGS = 100

PC_MAX_ITERS = 2_000
PC_TOL = 1e-10

PM_DEFAULT_ITERS = 20
# Approximated MU-MIMO updates are not power-normalized; equivalence runs keep
# them in the bounded regime.
PM_EQUIVALENCE_SPECTRAL_NORM = 0.5
PM_EQUIVALENCE_P_MAX = 0.04

# ============================================================================
# RIE EQUIVALENCE
# ============================================================================

RIE_TRIALS = 100
RIE_ITERS = 20

# Instance sizes are drawn up to these caps.
EQUIVALENCE_MAX_USERS = 4
EQUIVALENCE_MAX_BS_ANTENNAS = 8
EQUIVALENCE_MAX_UE_ANTENNAS = 2
EQUIVALENCE_MAX_STREAMS = 2

# ============================================================================
# GNN
# ============================================================================

HIDDEN_WIDTH = 64
LAYER_COUNT = 3
LEARNING_RATE = 1e-3
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
BATCH_SIZE = 50
EPOCHS = 60
INIT_SCALE = 1.0  # multiplies the 1/sqrt(fan_in) weight scale

TRAIN_K_MEAN = 2.0
TRAIN_K_STD = 1.0
TRAIN_K_MAX = 6
TEST_K_RANGE = (1, 6)

BOOTSTRAP_RESAMPLES = 1000
CONFIDENCE_LEVEL = 0.95

# ============================================================================
# SERIALIZATION
# ============================================================================

PARAMS_FORMAT = "pe-alloc-params"
PARAMS_VERSION = 1
CHECKPOINT_FORMAT = "pe-alloc-checkpoint"
CHECKPOINT_VERSION = 1
INSTANCE_FORMAT = "pe-alloc-instance"
INSTANCE_VERSION = 1


def validate_config() -> bool:
    """
    Validate internal consistency of configuration.

    Raises:
        AssertionError: If a constant is out of range.
    """
    assert FLOAT_DTYPE == "float64", "RIE tolerance requires double precision"
    assert 0 < EQUIVARIANCE_TOL <= 1e-6
    assert 0 < RIE_EQUIVALENCE_TOL <= 1e-6
    assert RIE_TRIALS >= 1 and RIE_ITERS >= 1
    assert GRAD_CHECK_STEP > 0 and GRAD_CHECK_TOL > 0
    assert math.isclose(P_MAX_W, 1.0)
    assert math.isclose(NOISE_POWER_W, 1e-11)
    assert RICIAN_FACTOR >= 0
    assert 0 < PB_STEP_SIZE and 0 < PB_STEP_DECAY <= 1.0
    assert PB_MULTIPLIER_CEILING > PB_INITIAL_MULTIPLIER
    assert DUAL_BISECTION_MAX_HALVINGS >= 1
    assert 0 < PM_EQUIVALENCE_SPECTRAL_NORM <= 0.5
    assert HIDDEN_WIDTH > 0 and LAYER_COUNT > 0
    assert 0 < ADAM_BETAS[0] < 1 and 0 < ADAM_BETAS[1] < 1
    assert TRAIN_K_MEAN > TRAIN_K_STD > 0, "shifted exponential needs mean > std"
    assert TEST_K_RANGE[0] >= 1 and TEST_K_RANGE[1] >= TEST_K_RANGE[0]
    assert 0 < CONFIDENCE_LEVEL < 1
    return True


validate_config()
