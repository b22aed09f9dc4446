"""
Shared pytest fixtures for all tests.

Design principle: every statistical test runs under a fixed seed, and every
probabilistic claim is checked against an exact brute-force oracle where the
dimension allows it.
"""

from pathlib import Path

import numpy as np
import pytest

from dtrecon.core.boolfn import random_tree_instance
from dtrecon.core.params import load_constants
from dtrecon.providers import (
    ConstantFunction,
    DictatorFunction,
    ParityFunction,
    TreeFunction,
)

# Project root
ROOT = Path(__file__).parent.parent


# ============================================================
# CONFIG FIXTURES
# ============================================================

@pytest.fixture
def params_config():
    """Load params.yaml config."""
    import yaml
    config_path = ROOT / "config" / "params.yaml"
    with open(config_path) as f:
        return yaml.safe_load(f)


@pytest.fixture
def experiments_config():
    """Load experiments.yaml config."""
    import yaml
    config_path = ROOT / "config" / "experiments.yaml"
    with open(config_path) as f:
        return yaml.safe_load(f)


# ============================================================
# RANDOMNESS
# ============================================================

@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(20240611)


# ============================================================
# ORACLE FIXTURES
# ============================================================

@pytest.fixture
def plus_one():
    return ConstantFunction(8, 1)


@pytest.fixture
def dictator3():
    """x_1 on three variables."""
    return DictatorFunction(3, 0)


@pytest.fixture
def parity2():
    """x_1 * x_2 on two variables."""
    return ParityFunction(2, 2)


@pytest.fixture
def tree_oracle():
    """A random size-8 tree on n = 10, with its tree."""
    tree = random_tree_instance(10, 8, np.random.default_rng(7))
    return TreeFunction(10, tree), tree


# ============================================================
# CONSTANT LEDGERS
# ============================================================

@pytest.fixture
def dictator_constants():
    """n = 64, s = 2, eps = 0.1: d = 1, p = 1/2, tau = 0.1."""
    return load_constants(c_d=0.001, c_p=5.0, c_tau=100.0)


@pytest.fixture
def small_constants():
    """
    n <= 16, s = 4, eps = 0.1: d = 4, p = 1/2, tau = 0.05 with reduced
    sample constants; desk-scale reconstructor runs in well under a second.
    """
    return load_constants(c_d=0.0005, c_p=10.0, c_tau=400.0, c_q=0.2, c_leaf=0.05)


@pytest.fixture
def closeness_constants():
    """n = 16, s = 8, eps = 0.1: d = 8, p = 1/2, tau = 0.03."""
    return load_constants(c_d=0.00029, c_p=15.0, c_tau=810.0, c_q=0.1, c_leaf=0.05)


@pytest.fixture
def tester_constants():
    """s = 8, eps = 0.05: d = 7, p = 1/2, tau = 0.02, m = ceil(2 ln(1/delta) / eps^2)."""
    return load_constants(c_d=3.0e-5, c_p=30.0, c_tau=4320.0, c_q=0.1, c_leaf=0.05)
