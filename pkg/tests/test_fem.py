import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import generated, pipeline
from killing_index import fem
from killing_index.geometry import shape_operator

# Lowest Jacobi eigenvalues, frozen from the continuum spectra:
# Clifford torus 2|m|^2 - 4 over m in Z^2; totally geodesic S^2 l(l+1) - 2.
CLIFFORD_ORACLE = [-4.0] + [-2.0] * 4 + [0.0] * 4 + [4.0] * 4
EQUATORIAL_ORACLE = [-2.0] + [0.0] * 3 + [4.0] * 5 + [10.0] * 7


def ops_for(name, **params):
    return pipeline(name, **params)[2]


@pytest.mark.parametrize("name,params", [
    ("clifford", dict(nu=12, nv=10)),
    ("equatorial-sphere", dict(subdiv=2)),
    ("flat-torus", dict(n=6)),
    ("round-sphere", dict(r=1.5, subdiv=2)),
])
def test_stiffness_properties(name, params):
    ops = ops_for(name, **params)
    K = ops.K.toarray()
    np.testing.assert_allclose(K, K.T, atol=1e-14)
    np.testing.assert_allclose(K @ np.ones(len(K)), 0.0, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() > -1e-10
    assert np.all(ops.mass > 0)


@pytest.mark.parametrize("name,params,value", [
    ("clifford", dict(nu=12, nv=10), 4.0),
    ("equatorial-sphere", dict(subdiv=2), 2.0),
    ("flat-torus", dict(n=6), 0.0),
    ("round-sphere", dict(r=2.0, subdiv=2), 0.5),
])
def test_potential(name, params, value):
    np.testing.assert_allclose(ops_for(name, **params).V_pot, value, rtol=1e-13, atol=1e-15)


def test_clifford_spectrum_matches_oracle():
    spec = fem.jacobi_spectrum(ops_for("clifford", nu=16, nv=16), 13, 0.5)
    np.testing.assert_allclose(spec.eigenvalues[:9], CLIFFORD_ORACLE[:9], atol=1e-9)
    # higher modes carry O(h^2) error at this resolution
    np.testing.assert_allclose(spec.eigenvalues[9:], CLIFFORD_ORACLE[9:], rtol=0.1)
    assert (spec.index, spec.nullity) == (5, 4)


def test_equatorial_spectrum_matches_oracle():
    spec = fem.jacobi_spectrum(ops_for("equatorial-sphere", subdiv=4), 16, 0.5)
    np.testing.assert_allclose(spec.eigenvalues, EQUATORIAL_ORACLE, atol=0.05)
    assert (spec.index, spec.nullity) == (1, 3)


@pytest.mark.parametrize("n", [5, 8])
def test_flat_torus_discrete_oracle_exact(n):
    # With the diagonal split the cotan Laplacian is the 5-point stencil.
    h = 1.0 / n
    s = np.sin(np.pi * np.arange(n) / n) ** 2
    expect = np.sort((4 / h**2) * (s[:, None] + s[None, :]).ravel())[:12]
    spec = fem.jacobi_spectrum(ops_for("flat-torus", n=n), 12, 1.0)
    np.testing.assert_allclose(spec.eigenvalues, expect, rtol=1e-10, atol=1e-9)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_sphere_spectrum_scales_with_radius(r):
    spec = fem.jacobi_spectrum(ops_for("round-sphere", r=r, subdiv=4), 9, 0.5 / r**2)
    expect = np.array([-2.0] + [0.0] * 3 + [4.0] * 5) / r**2
    np.testing.assert_allclose(spec.eigenvalues, expect, atol=0.01 / r**2)


def test_rayleigh_of_constant_on_clifford():
    ops = ops_for("clifford", nu=16, nv=16)
    assert fem.rayleigh_quotient(ops, np.ones(ops.num_vertices)) == pytest.approx(-4.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_rayleigh_homogeneous(seed, c):
    ops = ops_for("clifford", nu=8, nv=8)
    u = np.random.default_rng(seed).standard_normal(ops.num_vertices)
    assert fem.rayleigh_quotient(ops, c * u) == pytest.approx(fem.rayleigh_quotient(ops, u), rel=1e-10)
    assert fem.rayleigh_quotient(ops, -u) == pytest.approx(fem.rayleigh_quotient(ops, u), rel=1e-12)


def test_rayleigh_of_zero_raises():
    ops = ops_for("clifford", nu=8, nv=8)
    with pytest.raises(ValueError, match="zero function"):
        fem.rayleigh_quotient(ops, np.zeros(ops.num_vertices))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_courant_fischer(seed):
    ops = ops_for("clifford", nu=10, nv=8)
    spec = fem.jacobi_spectrum(ops, 6, 0.5)
    u = np.random.default_rng(seed).standard_normal(ops.num_vertices)
    assert fem.rayleigh_quotient(ops, u) >= spec.eigenvalues[0] - 1e-10
    # orthogonal to the first five, the quotient is at least the sixth
    X = spec.eigenvectors[:, :5]
    u = u - X @ (X.T @ (ops.mass * u))
    assert fem.rayleigh_quotient(ops, u) >= spec.eigenvalues[5] - 1e-8


def test_eigenvectors_orthonormal_and_accurate():
    ops = ops_for("clifford", nu=16, nv=16)
    spec = fem.jacobi_spectrum(ops, 13, 0.5)
    X = spec.eigenvectors
    np.testing.assert_allclose(X.T @ (ops.mass[:, None] * X), np.eye(13), atol=1e-10)
    assert spec.residuals.max() < 1e-8
    for lam, x in zip(spec.eigenvalues, X.T):
        assert fem.rayleigh_quotient(ops, x) == pytest.approx(lam, abs=1e-9)


def test_truncation_detected():
    spec = fem.jacobi_spectrum(ops_for("clifford", nu=16, nv=16), 7, 0.5)
    assert spec.truncated
    with pytest.raises(fem.TruncatedSpectrumError, match="request more"):
        fem.index_nullity(spec)
    spec = fem.jacobi_spectrum(ops_for("clifford", nu=16, nv=16), 10, 0.5)
    assert fem.index_nullity(spec)[:2] == (5, 4)


@pytest.mark.parametrize("constrained", [False, True])
def test_dense_and_krylov_agree(constrained):
    ops = ops_for("clifford", nu=24, nv=24)
    solve = fem.cmc_spectrum if constrained else fem.jacobi_spectrum
    dense = solve(ops, 12, 0.3)
    krylov = solve(ops, 12, 0.3, dense_limit=0)
    assert (dense.solver, krylov.solver) == ("dense", "krylov")
    np.testing.assert_allclose(krylov.eigenvalues, dense.eigenvalues, atol=1e-9)
    assert krylov.residuals.max() < 1e-8


@pytest.mark.parametrize("dense_limit", [fem.DENSE_LIMIT, 0])
def test_cmc_eigenvectors_have_zero_mean(dense_limit):
    ops = ops_for("round-sphere", r=1.0, subdiv=3)
    spec = fem.cmc_spectrum(ops, 8, 0.25, dense_limit=dense_limit)
    np.testing.assert_allclose(ops.mass @ spec.eigenvectors, 0.0, atol=1e-10)
    assert spec.constrained
    assert (spec.index, spec.nullity) == (0, 3)


@pytest.mark.parametrize("name,params,tol", [
    ("clifford", dict(nu=16, nv=16), 0.5),
    ("equatorial-sphere", dict(subdiv=3), 0.5),
    ("round-sphere", dict(r=1.0, subdiv=3), 0.5),
    ("flat-torus", dict(n=6), 1.0),
])
def test_cmc_index_bounded_by_unconstrained(name, params, tol):
    ops = ops_for(name, **params)
    full = fem.jacobi_spectrum(ops, 14, tol)
    cmc = fem.cmc_spectrum(ops, 13, tol)
    assert cmc.index <= full.index
    # interlacing under one linear constraint
    assert np.all(cmc.eigenvalues >= full.eigenvalues[:13] - 1e-9)
    assert np.all(cmc.eigenvalues <= full.eigenvalues[1:14] + 1e-9)


def test_flat_torus_cmc_drops_constants():
    ops = ops_for("flat-torus", n=6)
    assert fem.jacobi_spectrum(ops, 5, 1.0).nullity == 1
    assert fem.cmc_spectrum(ops, 5, 1.0).nullity == 0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_spectrum_invariant_under_relabeling(seed):
    out = generated("clifford", nu=10, nv=8)
    perm = np.random.default_rng(seed).permutation(out.mesh.num_vertices)
    mesh = out.mesh.relabeled(perm)
    geom = shape_operator(mesh, out.ambient, out.analytic)
    ops = fem.assemble_jacobi_operators(mesh, geom, out.ambient)
    a = fem.jacobi_spectrum(ops_for("clifford", nu=10, nv=8), 10, 0.5).eigenvalues
    b = fem.jacobi_spectrum(ops, 10, 0.5).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_default_tol_zero_uses_oracle():
    out = generated("clifford", nu=16, nv=16)
    ops = ops_for("clifford", nu=16, nv=16)
    assert fem.default_tol_zero(ops, out.oracle) == pytest.approx(0.5)
    assert fem.default_tol_zero(ops, [(0.0, 1), (-3.0, 1), (8.0, 2)]) == pytest.approx(0.75)
    assert fem.default_tol_zero(ops) > 0


def test_csv_output(tmp_path):
    spec = fem.jacobi_spectrum(ops_for("clifford", nu=8, nv=8), 5, 0.5)
    path = tmp_path / "spec.csv"
    spec.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["k", "lambda", "residual"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3, 4, 5]
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], spec.eigenvalues)


@pytest.mark.parametrize("bad", [dict(m=0), dict(m=10**6), dict(m=3, tol_zero=0.0)])
def test_bad_arguments(bad):
    with pytest.raises(ValueError):
        fem.jacobi_spectrum(ops_for("clifford", nu=8, nv=8), **bad)


def test_non_delaunay_warning():
    out = generated("schwarz-p", resolution=16)
    geom = out.geometry()
    with pytest.warns(RuntimeWarning, match="non-Delaunay"):
        fem.assemble_jacobi_operators(out.mesh, geom, out.ambient)
