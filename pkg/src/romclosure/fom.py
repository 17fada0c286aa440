"""Full-order data for the viscous Burgers problem.

Snapshots come from the closed-form solution on ``x, t in [0, 1]``; there is
no PDE time stepper.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform vertex-centred grid including both end points."""

    n_points: int = 1024
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise DomainError(f"n_points must be an integer >= 3, got {self.n_points}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise DomainError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class TimeMesh:
    n_snapshots: int = 500
    t_min: float = 0.0
    t_max: float = 1.0

    def __post_init__(self):
        if int(self.n_snapshots) != self.n_snapshots or self.n_snapshots < 2:
            raise DomainError(f"n_snapshots must be an integer >= 2, got {self.n_snapshots}")
        if not self.t_max > self.t_min:
            raise DomainError("t_max must exceed t_min")

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.n_snapshots - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_snapshots)


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Velocity snapshots, one column per time instant."""

    grid: Grid
    times: TimeMesh
    values: np.ndarray
    nu: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points, self.times.n_snapshots):
            raise DomainError(
                f"values has shape {values.shape}, expected "
                f"{(self.grid.n_points, self.times.n_snapshots)}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("snapshot values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def reynolds(self) -> float:
        return 1.0 / self.nu


def _check_nu(nu):
    if not np.isfinite(nu) or nu <= 0:
        raise DomainError(f"viscosity must be positive and finite, got {nu}")


def exact_solution(x, t, nu):
    """Closed-form Burgers velocity ``u(x, t)``.

    The textbook form contains ``t0 = exp(1 / (8 nu))``, which overflows for
    nu around 1e-3. It is evaluated here through the equivalent exponent

        E = x^2 / (4 nu (t+1)) + log(t+1) / 2 - 1 / (16 nu)

    so that ``u = (x / (t+1)) / (1 + exp(E))``.

    Parameters
    ----------
    x, t : float or array_like
        Broadcastable position(s) and time(s), ``t >= 0``.
    nu : float
        Kinematic viscosity (``1/Re``).

    Returns
    -------
    float or ndarray
    """
    _check_nu(nu)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
        raise DomainError("x and t must be finite")
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    tp1 = t + 1.0
    exponent = x**2 / (4.0 * nu * tp1) + 0.5 * np.log(tp1) - 1.0 / (16.0 * nu)
    # exp overflows past ~709; the quotient is 0 to double precision there anyway
    with np.errstate(over="ignore"):
        u = (x / tp1) / (1.0 + np.exp(exponent))
    if u.ndim == 0:
        return float(u)
    return u


def generate_snapshots(grid: Grid, times: TimeMesh, nu: float) -> SnapshotSet:
    values = exact_solution(grid.x[:, None], times.t[None, :], nu)
    return SnapshotSet(grid=grid, times=times, values=values, nu=float(nu))


def inner_product(f, g, grid: Grid) -> float:
    """Discrete L2 inner product ``sum_i f_i g_i dx`` (rectangle rule)."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[0] != grid.n_points or g.shape[0] != grid.n_points:
        raise DomainError(
            f"vectors of length {f.shape[0]} and {g.shape[0]} do not match "
            f"a grid of {grid.n_points} points"
        )
    return float(np.dot(f, g) * grid.dx)


def initial_field(grid: Grid, nu: float) -> np.ndarray:
    return exact_solution(grid.x, 0.0, nu)
