"""Proper orthogonal decomposition of Burgers snapshots."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError, RankError
from .fom import Grid, SnapshotSet, TimeMesh


@dataclass(frozen=True, eq=False)
class PodBasis:
    """Orthonormal spatial modes under the ``dx``-weighted inner product.

    ``modes[:, :r_resolved]`` spans the resolved space and
    ``modes[:, r_resolved:r_total]`` the test scales.
    """

    grid: Grid
    modes: np.ndarray
    singular_values: np.ndarray
    r_resolved: int
    r_total: int
    n_snapshots: int | None = None

    def __post_init__(self):
        if not 1 <= self.r_resolved < self.r_total:
            raise DomainError(
                f"need 1 <= r_resolved < r_total, got {self.r_resolved}, {self.r_total}"
            )
        if np.shape(self.modes) != (self.grid.n_points, self.r_total):
            raise DomainError(f"modes has shape {np.shape(self.modes)}")
        for name in ("modes", "singular_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def resolved(self) -> np.ndarray:
        return self.modes[:, : self.r_resolved]

    @property
    def coefficient_rms(self) -> np.ndarray:
        """RMS over the training snapshots of each modal coefficient."""
        n = self.n_snapshots or self.singular_values.size
        return self.singular_values[: self.r_total] * np.sqrt(self.grid.dx / n)


def _numerical_rank(s, shape):
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = s[0] * max(shape) * np.finfo(float).eps
    return int(np.sum(s > tol))


def compute_pod(snapshots: SnapshotSet, r_resolved: int = 8, r_total: int = 16) -> PodBasis:
    """Leading left singular vectors of the snapshot matrix.

    No mean is subtracted. Modes are rescaled by ``1/sqrt(dx)`` so that
    ``inner_product(psi_i, psi_j) == delta_ij``, and each mode is signed so
    that its largest-magnitude entry is positive.
    """
    values = snapshots.values
    if not 1 <= r_resolved < r_total <= values.shape[1]:
        raise DomainError(
            f"need 1 <= r_resolved < r_total <= n_snapshots, got "
            f"{r_resolved}, {r_total}, {values.shape[1]}"
        )
    u, s, _ = np.linalg.svd(values, full_matrices=False)
    rank = _numerical_rank(s, values.shape)
    if rank < r_total:
        raise RankError(r_total, rank)

    modes = u[:, :r_total] / np.sqrt(snapshots.grid.dx)
    peak = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[peak, np.arange(r_total)])
    modes = modes * signs
    return PodBasis(
        grid=snapshots.grid,
        modes=np.ascontiguousarray(modes),
        singular_values=s.copy(),
        r_resolved=int(r_resolved),
        r_total=int(r_total),
        n_snapshots=values.shape[1],
    )


def ric(basis_or_sv, k: int) -> float:
    """Relative information content (percent) of the leading ``k`` modes."""
    s = getattr(basis_or_sv, "singular_values", basis_or_sv)
    s = np.asarray(s, dtype=float)
    if not 1 <= k <= s.size:
        raise DomainError(f"k must lie in [1, {s.size}], got {k}")
    energy = s**2
    return float(100.0 * energy[:k].sum() / energy.sum())


def ric_curve(basis_or_sv) -> np.ndarray:
    s = np.asarray(getattr(basis_or_sv, "singular_values", basis_or_sv), dtype=float)
    energy = np.cumsum(s**2)
    return 100.0 * energy / energy[-1]


def project(field, basis: PodBasis, k_max: int | None = None) -> np.ndarray:
    """Modal coefficients ``<field, psi_k>`` for ``k = 1..k_max``.

    ``field`` may also be a matrix with one field per column, in which case
    the result has one coefficient vector per column.
    """
    k_max = basis.r_total if k_max is None else k_max
    if not 1 <= k_max <= basis.r_total:
        raise DomainError(f"k_max must lie in [1, {basis.r_total}], got {k_max}")
    field = np.asarray(field, dtype=float)
    if field.shape[0] != basis.grid.n_points:
        raise DomainError(
            f"field length {field.shape[0]} does not match grid of {basis.grid.n_points}"
        )
    return basis.modes[:, :k_max].T @ field * basis.grid.dx


def reconstruct(coeffs, basis: PodBasis) -> np.ndarray:
    """``sum_k coeffs_k psi_k``; a 2-D ``coeffs`` is treated as rows of time."""
    coeffs = np.asarray(coeffs, dtype=float)
    k = coeffs.shape[-1]
    if k > basis.r_total:
        raise DomainError(f"{k} coefficients exceed the {basis.r_total} available modes")
    return coeffs @ basis.modes[:, :k].T


class POD(TransformerMixin, BaseEstimator):
    """Scikit-learn front end for :func:`compute_pod`.

    Rows of ``X`` are snapshots (samples) and columns are grid points, the
    transpose of :class:`SnapshotSet.values`.

    Parameters
    ----------
    n_resolved : int
        Number of resolved modes R.
    n_total : int
        Number of resolved plus test modes R~.
    x_min, x_max : float
        Domain bounds, used for the quadrature weight.
    """

    def __init__(self, n_resolved=8, n_total=16, x_min=0.0, x_max=1.0):
        self.n_resolved = n_resolved
        self.n_total = n_total
        self.x_min = x_min
        self.x_max = x_max

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        grid = Grid(X.shape[1], self.x_min, self.x_max)
        snaps = SnapshotSet(grid=grid, times=TimeMesh(X.shape[0]), values=X.T, nu=1.0)
        self.basis_ = compute_pod(snaps, self.n_resolved, self.n_total)
        self.singular_values_ = self.basis_.singular_values
        self.components_ = self.basis_.modes.T
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} grid points, got {X.shape[1]}")
        return project(X.T, self.basis_).T

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        return reconstruct(check_array(X, dtype=float), self.basis_)

    def ric(self, k):
        check_is_fitted(self, "basis_")
        return ric(self.basis_, k)
