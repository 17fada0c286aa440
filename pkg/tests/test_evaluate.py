import csv

import numpy as np
import pytest

from romclosure.env import EnvConfig
from romclosure.evaluate import (
    EvalReport,
    ModelResult,
    gp_trajectory,
    make_table,
    rmse_field,
    rollout_policy,
    true_projection_trajectory,
)
from romclosure.exceptions import DomainError
from romclosure.fom import TimeMesh, exact_solution
from romclosure.galerkin import Trajectory
from romclosure.estimator import ClosureDiscovery
from romclosure.pod import project
from romclosure.ppo import GaussianPolicy

TIMES = TimeMesh(500)
# published GP baseline at Re 1500
REFERENCE_GP_RMSE = 16.217e-3


class ConstantPolicy:
    def __init__(self, raw):
        self.raw = np.asarray(raw, dtype=float)

    def act(self, obs):
        return self.raw


def test_rmse_of_identical_trajectories_is_zero(re1000_basis):
    ror = true_projection_trajectory(1e-3, re1000_basis, TIMES)
    assert rmse_field(ror, ror, re1000_basis) == 0.0


def test_rmse_of_constant_offset(re1000_basis):
    ror = true_projection_trajectory(1e-3, re1000_basis, TIMES)
    shifted = ror.coeffs.copy()
    shifted[:, 0] += 0.02
    err = rmse_field(Trajectory(ror.times, shifted), ror, re1000_basis)
    psi1 = re1000_basis.modes[:, 0]
    assert err == pytest.approx(0.02 * np.sqrt(np.mean(psi1**2)), rel=1e-12)


def test_rmse_shape_checks(re1000_basis):
    ror = true_projection_trajectory(1e-3, re1000_basis, TIMES)
    with pytest.raises(DomainError):
        rmse_field(Trajectory(ror.times[:-1], ror.coeffs[:-1]), ror, re1000_basis)
    with pytest.raises(DomainError):
        rmse_field(Trajectory(ror.times + 0.1, ror.coeffs), ror, re1000_basis)


def test_ror_is_column_projection(re1000_basis):
    nu = 1 / 1500
    ror = true_projection_trajectory(nu, re1000_basis, TIMES)
    for j in (0, 250, 499):
        field = exact_solution(re1000_basis.grid.x, TIMES.t[j], nu)
        np.testing.assert_allclose(ror.coeffs[j], project(field, re1000_basis, 8), rtol=1e-12,
                                   atol=1e-15)


def test_gp_baseline_grows_with_reynolds(re1000_basis):
    errs = []
    for re in (1200, 1500, 2000):
        nu = 1 / re
        errs.append(rmse_field(gp_trajectory(nu, re1000_basis, TIMES),
                               true_projection_trajectory(nu, re1000_basis, TIMES), re1000_basis))
    assert errs[0] < errs[1] < errs[2]
    assert REFERENCE_GP_RMSE / 3 <= errs[1] <= REFERENCE_GP_RMSE * 3


def test_rollout_of_zero_closure_is_gp(re1000_basis):
    cfg = EnvConfig(mode="mmrl")
    traj, diverged = rollout_policy(ConstantPolicy(-np.ones(8)), cfg, 1 / 1500, re1000_basis)
    gp = gp_trajectory(1 / 1500, re1000_basis, TIMES)
    assert not diverged
    np.testing.assert_allclose(traj.coeffs, gp.coeffs, rtol=0, atol=1e-12)
    np.testing.assert_allclose(traj.times, TIMES.t, atol=1e-12)


def test_rollout_reports_divergence(re1000_basis):
    cfg = EnvConfig(mode="vmrl", eta_max=1e6)
    traj, diverged = rollout_policy(ConstantPolicy(np.ones(8)), cfg, 1e-3, re1000_basis)
    assert diverged
    assert traj.coeffs.shape[0] < 500


def test_model_result_statistics():
    res = ModelResult("X", 1500.0, [1.0, 2.0, 6.0])
    assert res.mean == 3.0
    assert res.median == 2.0
    assert res.two_std == pytest.approx(2 * np.std([1.0, 2.0, 6.0]))
    assert ModelResult("X", 1500.0, [4.0]).two_std == 0.0


def test_make_table(re1000_basis, tmp_path, rng):
    policy = GaussianPolicy.create(8, 8, (4,), rng=rng)
    runs = {
        "MMRL": [(ConstantPolicy(-0.8 * np.ones(8)), EnvConfig(mode="mmrl"))],
        "VMRL": [(policy, EnvConfig(mode="vmrl")), (ConstantPolicy(-np.ones(8)),
                                                    EnvConfig(mode="vmrl"))],
        "LMRL": [],
    }
    report = make_table(runs, re1000_basis, TIMES, (1500, 2000), tmp_path)
    assert report.absent == ["LMRL"]
    mm = report.get("MMRL", 1500)
    assert mm.two_std == 0.0 and len(mm.per_seed) == 1
    gp = report.get("GP", 2000)
    # the second VMRL "seed" is the GP model
    assert report.get("VMRL", 2000).per_seed[1] == pytest.approx(gp.mean, rel=1e-10)
    assert (tmp_path / "rmse_table.txt").exists()
    text = (tmp_path / "rmse_table.txt").read_text()
    assert "absent" in text and "RMSE (Re = 1500)" in text
    with open(tmp_path / "rmse_table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["model"] for r in rows} == {"GP", "MMRL", "VMRL"}
    for name in ("modal_trajectories_GP_1500.csv", "field_ROR_2000.csv",
                 "modal_trajectories_MMRL_1500.csv", "field_VMRL_2000.csv"):
        assert (tmp_path / name).exists()


def test_report_text_without_rows():
    report = EvalReport(re_list=[1500.0])
    report.absent = ["LMRL"]
    assert "absent" in report.to_text()


def test_closure_discovery_estimator(small_snapshots):
    est = ClosureDiscovery(mode="vmrl", n_resolved=4, n_total=8, nu=1e-2, total_updates=2,
                           ppo_params={"hidden_sizes": [8], "episodes_per_update": 1})
    assert est.get_params()["mode"] == "vmrl"
    est.fit(small_snapshots.values.T)
    coeffs = est.predict(150)
    assert coeffs.shape == (101, 4)
    assert np.all(np.isfinite(coeffs))
    assert est.score(150) < 0
    assert len(est.history_) == 2
