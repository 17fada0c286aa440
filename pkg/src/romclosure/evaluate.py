"""Evaluation of closure policies against the true reduced representation."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import ClosureEnv, EnvConfig
from .exceptions import DivergenceError, DomainError
from .fom import Grid, TimeMesh, exact_solution, generate_snapshots
from .io import write_field_csv, write_modal_csv
from .galerkin import Trajectory, build_tensors, initial_coefficients, integrate, rhs_gp
from .pod import PodBasis, compute_pod, project, reconstruct

log = logging.getLogger(__name__)

DEFAULT_RE = (1200.0, 1500.0, 2000.0)
MODEL_ORDER = ("GP", "LMRL", "MMRL", "VMRL")


def true_projection_trajectory(nu, basis: PodBasis, times: TimeMesh, r=None) -> Trajectory:
    """Coefficients ``<u(., t_j; nu), psi_k>`` at every snapshot instant."""
    r = basis.r_resolved if r is None else r
    fields = exact_solution(basis.grid.x[:, None], times.t[None, :], nu)
    return Trajectory(times=times.t, coeffs=project(fields, basis, r).T)


def gp_trajectory(nu, basis: PodBasis, times: TimeMesh, r=None) -> Trajectory:
    r = basis.r_resolved if r is None else r
    tensors = build_tensors(basis, nu, r)
    alpha0 = initial_coefficients(basis, nu, r)
    return integrate(lambda a: rhs_gp(a, tensors), alpha0, times.dt, times.n_snapshots - 1,
                     t0=times.t_min)


def rollout_policy(policy, env_config: EnvConfig, nu, basis: PodBasis, trace_path=None) -> tuple:
    """Deterministic (mean-action) closure rollout at viscosity ``nu``.

    Returns ``(trajectory, diverged)``. A diverged rollout keeps the states
    reached before the blow-up.
    """
    # rewards are not used here, so no snapshot data is needed at nu
    cfg = EnvConfig.from_dict({**env_config.to_dict(), "reward_kind": "vms"})
    env = ClosureEnv(cfg, basis, trace=trace_path is not None)
    obs = env.reset(nu)
    coeffs = [env.state.alpha_rom.copy()]
    done = False
    diverged = False
    while not done:
        result = env.step(policy.act(obs))
        obs = result.observation
        done = result.done
        diverged = result.info["diverged"]
        if not diverged:
            coeffs.append(env.state.alpha_rom.copy())
    if trace_path is not None:
        env.write_trace(trace_path)
    coeffs = np.array(coeffs)
    times = cfg.dt * np.arange(coeffs.shape[0])
    return Trajectory(times=times, coeffs=coeffs), diverged


def rmse_field(traj: Trajectory, ror: Trajectory, basis: PodBasis) -> float:
    """Space-time RMSE between the reconstructed fields of two trajectories."""
    if traj.coeffs.shape != ror.coeffs.shape:
        raise DomainError(f"trajectory shapes differ: {traj.coeffs.shape} vs {ror.coeffs.shape}")
    if not np.allclose(traj.times, ror.times, rtol=0.0, atol=1e-9):
        raise DomainError("trajectories are not on the same time mesh")
    diff = reconstruct(traj.coeffs - ror.coeffs, basis)
    return float(np.sqrt(np.mean(diff**2)))


@dataclass
class ModelResult:
    model: str
    re: float
    per_seed: list
    diverged: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_seed))

    @property
    def two_std(self) -> float:
        return 2.0 * float(np.std(self.per_seed)) if len(self.per_seed) > 1 else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.per_seed))


@dataclass
class EvalReport:
    re_list: list
    rows: dict = field(default_factory=dict)
    absent: list = field(default_factory=list)

    def get(self, model, re) -> ModelResult:
        return self.rows[(model, float(re))]

    def models(self):
        seen = {m for m, _ in self.rows}
        return [m for m in MODEL_ORDER if m in seen] + sorted(seen - set(MODEL_ORDER))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "re", "rmse_mean", "rmse_2std", "rmse_median", "n_seeds",
                        "n_diverged", "per_seed"])
            for model in self.models():
                for re in self.re_list:
                    res = self.rows.get((model, float(re)))
                    if res is None:
                        continue
                    w.writerow([model, re, repr(res.mean), repr(res.two_std), repr(res.median),
                                len(res.per_seed), sum(res.diverged),
                                ";".join(repr(float(v)) for v in res.per_seed)])

    def to_text(self) -> str:
        head = ["ROM"] + [f"RMSE (Re = {re:g})" for re in self.re_list]
        lines = []
        for model in self.models():
            cells = [model]
            for re in self.re_list:
                res = self.rows.get((model, float(re)))
                if res is None:
                    cells.append("-")
                elif len(res.per_seed) > 1:
                    cells.append(f"{res.mean * 1e3:.3f} +/- {res.two_std * 1e3:.3f} e-3")
                else:
                    cells.append(f"{res.mean * 1e3:.3f} e-3")
            lines.append(cells)
        for model in self.absent:
            lines.append([model] + ["absent"] * len(self.re_list))
        widths = [max(len(row[i]) for row in [head] + lines) for i in range(len(head))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        out = [fmt.format(*head), "  ".join("-" * w for w in widths)]
        out += [fmt.format(*row) for row in lines]
        return "\n".join(out)


def basis_from_header(header: dict) -> PodBasis:
    """Rebuild the training POD basis recorded in a checkpoint header."""
    data = header["data"]
    grid = Grid(data["n_points"], data.get("x_min", 0.0), data.get("x_max", 1.0))
    times = TimeMesh(data["n_snapshots"], data.get("t_min", 0.0), data.get("t_max", 1.0))
    snaps = generate_snapshots(grid, times, data["nu"])
    env = header["env"]
    return compute_pod(snaps, env["r"], env["r_total"])


def make_table(checkpoints: dict, basis: PodBasis, times: TimeMesh, re_list=DEFAULT_RE,
               out_dir=None) -> EvalReport:
    """RMSE table for the GP baseline and every trained model.

    ``checkpoints`` maps a model name (``LMRL``...) to a list of
    ``(policy, env_config)`` pairs, one per seed. Models mapped to an empty
    list are reported as absent.
    """
    report = EvalReport(re_list=[float(re) for re in re_list])
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for re in report.re_list:
        nu = 1.0 / re
        ror = true_projection_trajectory(nu, basis, times)
        try:
            gp = gp_trajectory(nu, basis, times)
            gp_rmse, gp_div = rmse_field(gp, ror, basis), False
        except DivergenceError:
            gp, gp_rmse, gp_div = None, float("inf"), True
        report.rows[("GP", re)] = ModelResult("GP", re, [gp_rmse], [gp_div])
        if out_dir is not None and gp is not None:
            write_modal_csv(out_dir / f"modal_trajectories_GP_{re:g}.csv", gp, ror)
            write_field_csv(out_dir / f"field_GP_{re:g}.csv", gp, basis)
            write_field_csv(out_dir / f"field_ROR_{re:g}.csv", ror, basis)

        for model, runs in checkpoints.items():
            if not runs:
                continue
            result = ModelResult(model, re, [], [])
            first = None
            for policy, env_config in runs:
                traj, diverged = rollout_policy(policy, env_config, nu, basis)
                if diverged or traj.coeffs.shape != ror.coeffs.shape:
                    log.warning("%s diverged at Re=%g", model, re)
                    result.per_seed.append(float("inf"))
                    result.diverged.append(True)
                    continue
                result.per_seed.append(rmse_field(traj, ror, basis))
                result.diverged.append(False)
                if first is None:
                    first = traj
            report.rows[(model, re)] = result
            if out_dir is not None and first is not None:
                write_modal_csv(out_dir / f"modal_trajectories_{model}_{re:g}.csv", first, ror)
                write_field_csv(out_dir / f"field_{model}_{re:g}.csv", first, basis)
    report.absent = [m for m, runs in checkpoints.items() if not runs]
    if out_dir is not None:
        report.write_csv(out_dir / "rmse_table.csv")
        (out_dir / "rmse_table.txt").write_text(report.to_text() + "\n")
    return report
