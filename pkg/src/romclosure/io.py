"""File formats: snapshot data, POD basis directories, trajectory CSVs.

Snapshot files are CSV matrices (one row per grid point, one column per
snapshot) preceded by ``# key = value`` header lines describing the grid,
the time mesh and the viscosity.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError
from .fom import Grid, SnapshotSet, TimeMesh
from .galerkin import Trajectory
from .pod import PodBasis, reconstruct, ric_curve

DATA_MAGIC = "romclosure-snapshots v1"
BASIS_META = "basis.json"


def save_snapshots(path, snaps: SnapshotSet):
    header = [
        f"# {DATA_MAGIC}",
        f"# nu = {snaps.nu!r}",
        f"# n_points = {snaps.grid.n_points}",
        f"# x_min = {snaps.grid.x_min!r}",
        f"# x_max = {snaps.grid.x_max!r}",
        f"# n_snapshots = {snaps.times.n_snapshots}",
        f"# t_min = {snaps.times.t_min!r}",
        f"# t_max = {snaps.times.t_max!r}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        np.savetxt(fh, snaps.values, delimiter=",", fmt="%.17g")


def load_snapshots(path) -> SnapshotSet:
    meta = {}
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# {DATA_MAGIC}":
            raise ConfigurationError(f"{path} is not a romclosure snapshot file")
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    grid = Grid(int(meta["n_points"]), float(meta["x_min"]), float(meta["x_max"]))
    times = TimeMesh(int(meta["n_snapshots"]), float(meta["t_min"]), float(meta["t_max"]))
    return SnapshotSet(grid=grid, times=times, values=values, nu=float(meta["nu"]))


def save_basis(out_dir, basis: PodBasis, nu=None):
    """Write ``basis.csv``, ``singular_values.csv`` and ``basis.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "basis.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"psi_{k}" for k in range(1, basis.r_total + 1)])
        for x, row in zip(basis.grid.x, basis.modes):
            w.writerow([repr(float(x))] + [repr(float(v)) for v in row])
    with open(out / "singular_values.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "singular_value", "ric_percent"])
        for k, (s, r) in enumerate(zip(basis.singular_values, ric_curve(basis)), start=1):
            w.writerow([k, repr(float(s)), repr(float(r))])
    meta = {
        "n_points": basis.grid.n_points,
        "x_min": basis.grid.x_min,
        "x_max": basis.grid.x_max,
        "r_resolved": basis.r_resolved,
        "r_total": basis.r_total,
        "n_snapshots": basis.n_snapshots,
        "nu": nu,
    }
    (out / BASIS_META).write_text(json.dumps(meta, indent=2) + "\n")


def load_basis(path) -> tuple[PodBasis, dict]:
    path = Path(path)
    meta = json.loads((path / BASIS_META).read_text())
    grid = Grid(meta["n_points"], meta["x_min"], meta["x_max"])
    modes = np.loadtxt(path / "basis.csv", delimiter=",", skiprows=1, ndmin=2)[:, 1:]
    sv = np.loadtxt(path / "singular_values.csv", delimiter=",", skiprows=1, ndmin=2)[:, 1]
    basis = PodBasis(grid=grid, modes=modes, singular_values=sv, r_resolved=meta["r_resolved"],
                     r_total=meta["r_total"], n_snapshots=meta.get("n_snapshots"))
    return basis, meta


def write_trajectory_csv(path, traj: Trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"alpha_{k}" for k in range(1, traj.r + 1)])
        for t, row in zip(traj.times, traj.coeffs):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def write_modal_csv(path, traj: Trajectory, ror: Trajectory):
    r = traj.r
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"alpha_{k}_model" for k in range(1, r + 1)]
                   + [f"alpha_{k}_ror" for k in range(1, r + 1)])
        for t, a, b in zip(traj.times, traj.coeffs, ror.coeffs):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in a] + [repr(float(v)) for v in b])


def write_field_csv(path, traj: Trajectory, basis: PodBasis):
    """Long-format ``x, t, u`` table of the reconstructed field."""
    fields = reconstruct(traj.coeffs, basis)
    x = basis.grid.x
    with open(path, "w", newline="") as fh:
        fh.write("x,t,u\n")
        for t, u in zip(traj.times, fields):
            block = np.column_stack([x, np.full_like(x, t), u])
            np.savetxt(fh, block, delimiter=",", fmt="%.10g")
