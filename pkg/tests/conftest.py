import json
from pathlib import Path

import numpy as np
import pytest

from orbitherm import groups
from orbitherm.config import parse_config
from orbitherm.drivers import make_table

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def load_cfg(name, **override):
    raw = json.loads((CONFIGS / f"{name}.json").read_text())
    raw.update(override)
    return parse_config(raw)


@pytest.fixture(scope="session")
def demo_group():
    return groups.SchottkyGroup([groups.hyperbolic_from_axis(-3, -1, 3.0),
                                 groups.hyperbolic_from_axis(1, 3, 3.0)])


@pytest.fixture(scope="session")
def small_cfg():
    return load_cfg("demo_zero_temp", n_range=[1, 6])


@pytest.fixture(scope="session")
def small_table(small_cfg):
    t = make_table(small_cfg)
    t.populate(small_cfg.phi)
    return t


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
