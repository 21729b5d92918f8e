import os

import pytest

from transport_inverse.cli import main
from transport_inverse.dataset import SolverConfig

# Cheap discretization for tests that only exercise plumbing.
COARSE = SolverConfig(n_q=8, n_x=20, h_t=0.05, t_f=3.0)
COARSE_JSON = '{"dataset": {"n_q": 8, "n_x": 20, "h_t": 0.05, "t_f": 3.0}}'


@pytest.fixture(scope="session")
def coarse_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "coarse.json"
    path.write_text(COARSE_JSON)
    return path


@pytest.fixture(scope="session")
def full_datasets(tmp_path_factory):
    """All four datasets at full resolution, generated once through the CLI (about 2 min)."""
    out = tmp_path_factory.mktemp("full")
    jobs = str(min(4, os.cpu_count() or 1))
    assert main(["gen-data", "--out", str(out), "--jobs", jobs]) == 0
    return out
