import json
import subprocess
import sys

import pytest

from rapidlearn.cli import preset_path


def run_cli(*args, env=None):
    return subprocess.run([sys.executable, "-m", "rapidlearn.cli", *args],
                          capture_output=True, text=True, env=env)


@pytest.fixture(scope="session")
def work_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("rapidlearn")


@pytest.fixture(scope="session")
def default_trace(work_dir):
    """The shipped synthetic workload, seed 42."""
    path = work_dir / "default-ddos.csv"
    res = run_cli("gen-trace", "--preset", "default-ddos", "--seed", "42",
                  "--out", str(path))
    assert res.returncode == 0, res.stderr
    return path, json.loads(res.stdout)


@pytest.fixture(scope="session")
def default_model(work_dir, default_trace):
    """Model trained on the default trace with default hyperparameters."""
    trace_path, _ = default_trace
    model_path = work_dir / "default.svc"
    res = run_cli("train", "--trace", str(trace_path), "--out", str(model_path),
                  "--seed", "42")
    assert res.returncode == 0, res.stderr
    return model_path, json.loads(res.stdout)


@pytest.fixture(scope="session")
def two_domain_scenario():
    return preset_path("two-domain")


@pytest.fixture(scope="session")
def one_switch_scenario():
    return preset_path("one-switch")
