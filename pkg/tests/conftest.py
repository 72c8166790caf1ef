"""
Shared test fixtures for the NEPDF causal toolkit test suite.
"""

import os

import numpy as np
import pytest

# Ensure test environment variables are set before importing settings
os.environ.setdefault("NEPDF_THREADS", "1")
os.environ.setdefault("NEPDF_LOG_LEVEL", "WARNING")

from pipelines.nepdf import PairSample  # noqa: E402
from services.network import init_network  # noqa: E402

# Small network for fast training tests on 8x8 inputs.
TINY_ARCH = [
    {"kind": "conv3x3", "units": 4, "activation": "relu"},
    {"kind": "maxpool2x2"},
    {"kind": "flatten"},
    {"kind": "dense", "units": 8, "activation": "relu"},
    {"kind": "output"},
]


@pytest.fixture
def tiny_arch():
    """Layer descriptions of a small conv/pool/dense network."""
    return [dict(spec) for spec in TINY_ARCH]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def linear_pair():
    """Noiseless increasing linear pair labeled x -> y."""
    x = np.linspace(0.0, 1.0, 50)
    return PairSample(id="lin", x=x, y=2.0 * x + 3.0, label=1)


@pytest.fixture
def tiny_net():
    """3-class float64 network for 8x8 inputs."""
    return init_network(8, 3, arch=TINY_ARCH, seed=0, dtype=np.float64)


@pytest.fixture
def run_config_dict(tmp_path):
    """Small synthetic-source run configuration document."""
    return {
        "synth": {"n_samples": 24, "m_range": [60, 80]},
        "nepdf": {"k": 8},
        "net": {"arch": TINY_ARCH, "epochs": 2, "batch_size": 8, "early_stop_patience": 0},
        "eval": {"folds": 2, "mode": "direction"},
        "seed": 3,
        "output_dir": str(tmp_path / "runs"),
    }
