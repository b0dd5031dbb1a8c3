"""
Unit tests for configuration module.
"""

import math

from pe_alloc.core import config


class TestSimulationConstants:
    """Constants quoted in dBm are stored in watts."""

    def test_transmit_power(self):
        assert config.P_MAX_DBM == 30.0
        assert math.isclose(config.P_MAX_W, 1.0)

    def test_noise_power(self):
        assert config.NOISE_POWER_DBM == -80.0
        assert math.isclose(config.NOISE_POWER_W, 1e-11, rel_tol=1e-12)

    def test_path_loss_model(self):
        assert config.PATH_LOSS_INTERCEPT_DB == 32.6
        assert config.PATH_LOSS_SLOPE_DB == 36.7
        assert config.RICIAN_FACTOR == 10.0


class TestTolerances:
    def test_double_precision(self):
        assert config.FLOAT_DTYPE == "float64"

    def test_equivalence_tolerances(self):
        assert config.RIE_EQUIVALENCE_TOL == 1e-9
        assert config.EQUIVARIANCE_TOL == 1e-9
        assert config.EQUIVARIANCE_TRIALS >= 50

    def test_dual_bisection(self):
        assert config.DUAL_BISECTION_TOL == 1e-10
        assert config.DUAL_BISECTION_MAX_HALVINGS == 100


class TestTrainingDefaults:
    def test_model_defaults(self):
        assert config.HIDDEN_WIDTH == 64
        assert config.LAYER_COUNT == 3
        assert config.LEARNING_RATE == 1e-3

    def test_size_mixture(self):
        assert config.TRAIN_K_MEAN == 2.0
        assert config.TRAIN_K_STD == 1.0


def test_validate_config_passes():
    assert config.validate_config() is True
