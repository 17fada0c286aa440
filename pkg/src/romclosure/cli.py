"""Command line interface: ``romclosure <subcommand> ...``."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from .evaluate import DEFAULT_RE, gp_trajectory, rollout_policy
from .fom import Grid, TimeMesh, generate_snapshots
from .io import load_basis, load_snapshots, save_basis, save_snapshots, write_trajectory_csv
from .pipeline import RunConfig, TrainingSetup, evaluate_checkpoints, train_mode
from .pod import compute_pod, ric

log = logging.getLogger("romclosure")


def _parse_re_list(value):
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma separated numbers, got {value!r}") from exc


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Reinforcement-learned eddy-viscosity closures for Burgers POD-Galerkin ROMs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("generate-data")
@click.option("--nu", type=float, default=1e-3, show_default=True)
@click.option("--n-points", type=int, default=1024, show_default=True)
@click.option("--n-snapshots", type=int, default=500, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def generate_data(nu, n_points, n_snapshots, out):
    """Sample the exact solution into a snapshot CSV."""
    snaps = generate_snapshots(Grid(n_points), TimeMesh(n_snapshots), nu)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_snapshots(out, snaps)
    click.echo(f"wrote {n_points}x{n_snapshots} snapshots (nu={nu:g}) to {out}")


@main.command("pod")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--r", type=int, default=8, show_default=True, help="Resolved modes.")
@click.option("--r-total", type=int, default=16, show_default=True, help="Test-model modes.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def pod(data_path, r, r_total, out):
    """Compute the POD basis of a snapshot file."""
    snaps = load_snapshots(data_path)
    basis = compute_pod(snaps, r, r_total)
    save_basis(out, basis, snaps.nu)
    click.echo(f"RIC({r}) = {ric(basis, r):.6f}%  RIC({r_total}) = {ric(basis, r_total):.6f}%")


@main.command("rom")
@click.option("--basis", "basis_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--re", type=float, required=True)
@click.option("--model", type=click.Choice(["gp"]), default="gp", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def rom(basis_dir, re, model, out):
    """Integrate the Galerkin ROM and write its modal trajectory."""
    basis, meta = load_basis(basis_dir)
    times = TimeMesh(meta.get("n_snapshots") or 500)
    traj = gp_trajectory(1.0 / re, basis, times)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out, traj)
    click.echo(f"wrote {model} trajectory at Re={re:g} to {out}")


def _train_one(cfg: RunConfig, setup, mode, seed, out_dir, trace):
    def progress(update, history, stats):
        if update % 10 == 0 or update == 1:
            log.info("%s seed %d update %d moving avg %.4f", mode, seed, update, history[-1][2])

    result, env_config = train_mode(setup, mode, seed, cfg.ppo, cfg.env, out_dir, progress)
    if trace:
        rollout_policy(result.agent.policy, env_config, env_config.nu, setup.basis,
                       trace_path=Path(out_dir) / "trace.csv")
    return result


@main.command("train")
@click.option("--mode", type=click.Choice(["lmrl", "mmrl", "vmrl"]), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--trace", is_flag=True, help="Write a per-step diagnostic CSV of the final policy.")
def train_cmd(mode, config_path, seed, out_dir, trace):
    """Train one closure policy with PPO."""
    cfg = RunConfig.load(config_path)
    setup = TrainingSetup.build(cfg.data, cfg.env.get("r", 8), cfg.env.get("r_total", 16))
    result = _train_one(cfg, setup, mode, seed, out_dir, trace)
    click.echo(f"final moving average reward {result.history[-1][2]:.6g}; "
               f"checkpoint {Path(out_dir) / 'policy.ckpt'}")


@main.command("evaluate")
@click.option("--checkpoints", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--re", "re_list", default=",".join(f"{r:g}" for r in DEFAULT_RE),
              show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def evaluate_cmd(checkpoints, re_list, out):
    """Tabulate field RMSE of every checkpoint below a directory."""
    report = evaluate_checkpoints(checkpoints, _parse_re_list(re_list), out)
    click.echo(report.to_text())


@main.command("reproduce-table1")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default="table1", show_default=True)
def reproduce_table1(config_path, out_dir):
    """Data, POD, training of every mode and seed, then the RMSE table."""
    cfg = RunConfig.load(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(
        {"data": cfg.data.to_dict(), "env": cfg.env, "ppo": cfg.ppo, "seeds": cfg.seeds,
         "modes": cfg.modes, "re_list": cfg.re_list}, indent=2) + "\n")
    setup = TrainingSetup.build(cfg.data, cfg.env.get("r", 8), cfg.env.get("r_total", 16))
    for mode in cfg.modes:
        for seed in cfg.seeds:
            click.echo(f"training {mode} seed {seed}")
            _train_one(cfg, setup, mode, seed, out / "runs" / mode / f"seed_{seed}", False)
    report = evaluate_checkpoints(out / "runs", cfg.re_list, out / "table")
    click.echo(report.to_text())


if __name__ == "__main__":
    main()
