"""Galerkin ROM tensors, right-hand sides and the RK4 integrator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DivergenceError, DomainError
from .fom import Grid, initial_field
from .pod import PodBasis, project

DIVERGENCE_LIMIT = 1.0e3


def second_derivative(f, grid: Grid) -> np.ndarray:
    """Second-order finite-difference second derivative.

    Central differences in the interior and one-sided second-order stencils
    ``(2f0 - 5f1 + 4f2 - f3) / dx^2`` at the end points.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] < 5 or grid.n_points < 5:
        raise DomainError("second_derivative needs at least 5 grid points")
    if f.shape[0] != grid.n_points:
        raise DomainError(f"field length {f.shape[0]} != {grid.n_points}")
    h2 = grid.dx**2
    d = np.empty_like(f)
    d[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / h2
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
    d[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return d


def first_derivative(f, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.n_points or grid.n_points < 3:
        raise DomainError(f"field length {f.shape[0]} does not fit the grid")
    h = grid.dx
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return d


@dataclass(frozen=True, eq=False)
class RomTensors:
    """Galerkin operators for ``r`` modes, indexed ``[k, i]`` / ``[k, i, j]``.

    ``lin = nu * closure_kernel``; ``closure_kernel[k, i] = <psi_i'', psi_k>``
    and ``nonlin[k, i, j] = <-psi_i psi_j', psi_k>``.
    """

    r: int
    nu: float
    lin: np.ndarray
    nonlin: np.ndarray
    closure_kernel: np.ndarray

    def __post_init__(self):
        # flattened view so the quadratic term is one matvec
        object.__setattr__(self, "_nonlin_flat", self.nonlin.reshape(self.r, self.r * self.r))
        for arr in (self.lin, self.nonlin, self.closure_kernel):
            arr.setflags(write=False)

    def quadratic(self, alpha):
        return self._nonlin_flat @ np.outer(alpha, alpha).ravel()


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape[0] != self.times.shape[0]:
            raise DomainError("times and coeffs have different lengths")

    @property
    def r(self) -> int:
        return self.coeffs.shape[1]


def build_tensors(basis: PodBasis, nu: float, r: int | None = None) -> RomTensors:
    r = basis.r_resolved if r is None else r
    if not 1 <= r <= basis.r_total:
        raise DomainError(f"r must lie in [1, {basis.r_total}], got {r}")
    if not np.isfinite(nu) or nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    grid = basis.grid
    psi = basis.modes[:, :r]
    d2 = np.column_stack([second_derivative(psi[:, i], grid) for i in range(r)])
    d1 = np.column_stack([first_derivative(psi[:, i], grid) for i in range(r)])
    kernel = psi.T @ d2 * grid.dx
    nonlin = -np.einsum("xk,xi,xj->kij", psi, psi, d1, optimize=True) * grid.dx
    return RomTensors(r=r, nu=float(nu), lin=nu * kernel, nonlin=nonlin, closure_kernel=kernel)


def rhs_gp(alpha, tensors: RomTensors) -> np.ndarray:
    return tensors.lin @ alpha + tensors.quadratic(alpha)


def rhs_closure(alpha, tensors: RomTensors, eta) -> np.ndarray:
    """GP right-hand side plus the modal eddy-viscosity term ``eta_k (B alpha)_k``."""
    return rhs_gp(alpha, tensors) + eta * (tensors.closure_kernel @ alpha)


def rhs_test(alpha_tilde, tensors_tilde: RomTensors) -> np.ndarray:
    """Test-model dynamics: the GP system on all R~ modes.

    Its first R components, integrated in time, give the test state.
    """
    return rhs_gp(alpha_tilde, tensors_tilde)


def rk4_step(rhs, alpha, dt):
    k1 = rhs(alpha)
    k2 = rhs(alpha + 0.5 * dt * k1)
    k3 = rhs(alpha + 0.5 * dt * k2)
    k4 = rhs(alpha + dt * k3)
    return alpha + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def is_diverged(alpha, limit=DIVERGENCE_LIMIT) -> bool:
    return not np.all(np.isfinite(alpha)) or np.max(np.abs(alpha)) > limit


def integrate(rhs, alpha0, dt, n_steps, t0=0.0, limit=DIVERGENCE_LIMIT) -> Trajectory:
    """Classical RK4 from ``alpha0``; the returned trajectory includes it.

    Raises
    ------
    DivergenceError
        If the state becomes non-finite or exceeds ``limit`` in max norm.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    alpha = np.array(alpha0, dtype=float)
    out = np.empty((n_steps + 1, alpha.size))
    out[0] = alpha
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_steps):
            alpha = rk4_step(rhs, alpha, dt)
            if is_diverged(alpha, limit):
                raise DivergenceError(n + 1)
            out[n + 1] = alpha
    times = t0 + dt * np.arange(n_steps + 1)
    return Trajectory(times=times, coeffs=out)


def initial_coefficients(basis: PodBasis, nu: float, r: int) -> np.ndarray:
    return project(initial_field(basis.grid, nu), basis, r)


class GalerkinROM(BaseEstimator):
    """Galerkin ROM with an optional constant modal eddy viscosity.

    Parameters
    ----------
    basis : PodBasis
        Spatial modes (typically from the training Reynolds number).
    nu : float
        Viscosity the ROM is built for.
    n_modes : int or None
        Number of modes; defaults to ``basis.r_resolved``.
    eta : float, array_like or None
        Modal eddy viscosity; ``None`` gives the plain GP model.
    dt : float
        RK4 time step.
    """

    def __init__(self, basis=None, nu=1e-3, n_modes=None, eta=None, dt=1.0 / 499):
        self.basis = basis
        self.nu = nu
        self.n_modes = n_modes
        self.eta = eta
        self.dt = dt

    def fit(self, X=None, y=None):
        if self.basis is None:
            raise DomainError("GalerkinROM needs a PodBasis")
        self.tensors_ = build_tensors(self.basis, self.nu, self.n_modes)
        return self

    def rhs(self, alpha):
        if self.eta is None:
            return rhs_gp(alpha, self.tensors_)
        return rhs_closure(alpha, self.tensors_, np.asarray(self.eta, dtype=float))

    def predict(self, alpha0=None, n_steps=499):
        """Integrate from ``alpha0`` (default: the projected initial field)."""
        if alpha0 is None:
            alpha0 = initial_coefficients(self.basis, self.nu, self.tensors_.r)
        return integrate(self.rhs, alpha0, self.dt, n_steps)
