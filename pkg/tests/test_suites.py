"""Light-scale runs of every registered suite: all gates must pass."""

import numpy as np
import pytest

from growthlab.dynamics import (MeasurePath, path_to_csv,
                                stationarity_diagnostic, simulate_symmetric)
from growthlab.gmc import CircleMeasure
from growthlab.rng import make_rng
from growthlab.suites import ExperimentConfig, run_suite

LIGHT = {
    "identities": dict(N=32, M=128, n_samples=300),
    "gmc": dict(N=32, M=128, n_samples=2000),
    "loewner": dict(N=32, M=256, n_samples=300),
    "invariance": dict(N=32, M=128, n_samples=2000, n_samples_main=4000),
    "dirichlet": dict(N=32, M=128, n_samples=2000, n_samples_main=3000),
    "dynamics": dict(N=32, M=128, n_samples=1000, n_samples_main=2000),
    "appendix": dict(N=16, M=64, n_samples=2000),
}


@pytest.mark.parametrize("suite", sorted(LIGHT))
def test_suite_gates_pass(suite):
    cfg = ExperimentConfig(suite=suite, seed=1, **LIGHT[suite])
    results = run_suite(cfg)
    failures = [r.name for r in results if not r.passed]
    assert not failures, failures


def test_measure_path_csv_roundtrip(tmp_path):
    path = simulate_symmetric(CircleMeasure.uniform(40 * np.pi, 16),
                              1 / np.sqrt(6), 1e-3, 0.01, 4, make_rng(1))
    out = tmp_path / "path.csv"
    path_to_csv(path, out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,mass_0")
    assert "mode_0" in lines[0]
    assert len(lines) == path.masses.shape[0] + 1
    row = lines[1].split(",")
    assert len(row) == 1 + 16 + path.fields[0].coeffs.size


def test_stationarity_diagnostic_reports():
    rep = stationarity_diagnostic(1 / np.sqrt(6), 1e-3, 0.02, 300, 8, 32,
                                  make_rng(2))
    assert set(rep) == {"observable_0_drift", "observable_0_stderr",
                        "observable_1_drift", "observable_1_stderr"}
    assert all(np.isfinite(v) for v in rep.values())
