import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from romclosure.exceptions import DomainError, RankError
from romclosure.fom import Grid, SnapshotSet, TimeMesh, inner_product
from romclosure.pod import POD, PodBasis, compute_pod, project, reconstruct, ric, ric_curve


def gram(basis):
    return basis.modes.T @ basis.modes * basis.grid.dx


def test_training_basis_orthonormality(re1000_basis):
    err = np.abs(gram(re1000_basis) - np.eye(16)).max()
    assert err < 1e-8
    assert inner_product(re1000_basis.modes[:, 0], re1000_basis.modes[:, 0],
                         re1000_basis.grid) == pytest.approx(1.0, abs=1e-8)


def test_sign_convention(re1000_basis):
    modes = re1000_basis.modes
    peaks = modes[np.argmax(np.abs(modes), axis=0), np.arange(modes.shape[1])]
    assert np.all(peaks > 0)


def test_singular_values_sorted(re1000_basis):
    s = re1000_basis.singular_values
    assert s.size == 500
    assert np.all(s >= 0)
    assert np.all(np.diff(s) <= 0)


def test_against_correlation_eigendecomposition(rng):
    grid = Grid(10)
    values = rng.standard_normal((10, 5))
    snaps = SnapshotSet(grid=grid, times=TimeMesh(5), values=values, nu=1.0)
    basis = compute_pod(snaps, 2, 5)
    # brute force: eigenvectors of the 5x5 snapshot correlation matrix
    lam, v = np.linalg.eigh(values.T @ values)
    order = np.argsort(lam)[::-1]
    lam, v = lam[order], v[:, order]
    np.testing.assert_allclose(basis.singular_values**2, lam, rtol=1e-10)
    for k in range(5):
        phi = values @ v[:, k] / np.sqrt(lam[k]) / np.sqrt(grid.dx)
        phi *= np.sign(phi[np.argmax(np.abs(phi))])
        np.testing.assert_allclose(basis.modes[:, k], phi, atol=1e-10)
    assert np.abs(gram(basis) - np.eye(5)).max() < 1e-10


def test_rank_deficiency_is_reported():
    grid = Grid(8)
    profile = np.linspace(0, 1, 8) ** 2
    snaps = SnapshotSet(grid=grid, times=TimeMesh(2), values=np.column_stack([profile, profile]),
                        nu=1.0)
    with pytest.raises(RankError) as info:
        compute_pod(snaps, 1, 2)
    assert info.value.achievable == 1
    assert "rank 1" in str(info.value)


def test_invalid_mode_counts(small_snapshots):
    for r, rt in [(0, 2), (3, 3), (4, 2), (4, 1000)]:
        with pytest.raises(DomainError):
            compute_pod(small_snapshots, r, rt)


def test_ric_examples(re1000_basis):
    n = re1000_basis.singular_values.size
    assert ric(re1000_basis, n) == pytest.approx(100.0, abs=1e-8)
    assert ric(np.array([2.0, 0.0]), 1) == 100.0
    assert ric(np.array([3.0, 4.0]), 1) == pytest.approx(36.0)
    with pytest.raises(DomainError):
        ric(re1000_basis, 0)
    with pytest.raises(DomainError):
        ric(re1000_basis, n + 1)


def test_ric_monotone(re1000_basis):
    curve = ric_curve(re1000_basis)
    assert np.all(np.diff(curve) >= 0)
    assert curve[-1] == pytest.approx(100.0, abs=1e-8)
    assert ric(re1000_basis, 8) > ric(re1000_basis, 4) > ric(re1000_basis, 1)


def test_project_examples(re1000_basis):
    psi = re1000_basis.modes
    np.testing.assert_allclose(project(psi[:, 1], re1000_basis, 3), [0, 1, 0], atol=1e-10)
    np.testing.assert_array_equal(project(np.zeros(1024), re1000_basis, 4), np.zeros(4))
    coeffs = project(2 * psi[:, 0] + 0.5 * psi[:, 2], re1000_basis)
    expected = np.zeros(16)
    expected[[0, 2]] = [2.0, 0.5]
    np.testing.assert_allclose(coeffs, expected, atol=1e-10)
    with pytest.raises(DomainError):
        project(np.zeros(10), re1000_basis)
    with pytest.raises(DomainError):
        project(np.zeros(1024), re1000_basis, 17)


def test_reconstruct_examples(re1000_basis):
    e1 = np.zeros(5)
    e1[0] = 1
    np.testing.assert_array_equal(reconstruct(e1, re1000_basis), re1000_basis.modes[:, 0])
    np.testing.assert_array_equal(reconstruct(np.zeros(3), re1000_basis), np.zeros(1024))
    with pytest.raises(DomainError):
        reconstruct(np.zeros(17), re1000_basis)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=16))
def test_projection_idempotent(coeffs):
    basis = _cached_basis()
    coeffs = np.array(coeffs)
    back = project(reconstruct(coeffs, basis), basis, coeffs.size)
    np.testing.assert_allclose(back, coeffs, atol=1e-10)


_BASIS = {}


def _cached_basis():
    if "b" not in _BASIS:
        from romclosure.fom import generate_snapshots

        _BASIS["b"] = compute_pod(generate_snapshots(Grid(1024), TimeMesh(500), 1e-3), 8, 16)
    return _BASIS["b"]


@pytest.mark.parametrize("k", [1, 4, 8, 16])
def test_energy_identity(re1000_snapshots, re1000_basis, k):
    values = re1000_snapshots.values
    approx = reconstruct(project(values, re1000_basis, k).T, re1000_basis).T
    rel = np.linalg.norm(values - approx) / np.linalg.norm(values)
    s = re1000_basis.singular_values
    expected = np.sqrt((s[k:] ** 2).sum() / (s**2).sum())
    assert rel == pytest.approx(expected, rel=1e-6, abs=1e-12)
    assert rel**2 * 100 == pytest.approx(100 - ric(re1000_basis, k), rel=1e-5, abs=1e-10)


def test_pod_estimator_round_trip(small_snapshots):
    X = small_snapshots.values.T
    pod = POD(n_resolved=4, n_total=8).fit(X)
    assert pod.get_params() == {"n_resolved": 4, "n_total": 8, "x_min": 0.0, "x_max": 1.0}
    coeffs = pod.transform(X)
    assert coeffs.shape == (101, 8)
    direct = compute_pod(small_snapshots, 4, 8)
    np.testing.assert_allclose(pod.components_.T, direct.modes)
    np.testing.assert_allclose(coeffs, project(X.T, direct).T)
    back = pod.inverse_transform(coeffs)
    assert back.shape == X.shape
    assert pod.ric(8) == pytest.approx(ric(direct, 8))


def test_basis_is_immutable(re1000_basis):
    assert isinstance(re1000_basis, PodBasis)
    with pytest.raises(ValueError):
        re1000_basis.modes[0, 0] = 1.0
