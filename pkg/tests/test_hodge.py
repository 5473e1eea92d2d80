import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import generated, octahedron, pipeline
from killing_index import hodge
from killing_index.ambient import AmbientSpace
from killing_index.geometry import shape_operator
from killing_index.mesh import Mesh

CASES = [
    ("flat-torus", dict(n=6), 1),
    ("clifford", dict(nu=16, nv=16), 1),
    ("schwarz-p", dict(resolution=16), 3),
]


def dec_for(name, **params):
    out, geom, _, _ = pipeline(name, **params)
    return hodge.dec_operators(out.mesh, geom)


@pytest.mark.parametrize("name,params,genus", CASES)
def test_d1_d0_vanishes(name, params, genus):
    dec = dec_for(name, **params)
    assert abs(dec.d1 @ dec.d0).max() == 0


@pytest.mark.parametrize("name,params,genus", CASES)
def test_harmonic_dimension_and_quality(name, params, genus):
    out, geom, _, basis = pipeline(name, **params)
    assert basis.dimension == 2 * genus
    assert basis.max_residual <= 1e-8
    assert basis.gap_ratio >= 10
    dec = hodge.dec_operators(out.mesh, geom)
    W = basis.forms
    if basis.gram == "star1":
        np.testing.assert_allclose(W.T @ (dec.star1[:, None] * W), np.eye(2 * genus), atol=1e-10)
    assert basis.fields.shape == (2 * genus, out.mesh.num_faces, 2)


def test_star1_on_unit_grid():
    out = generated("flat-torus", n=6)
    dec = dec_for("flat-torus", n=6)
    e = out.mesh.lifted_faces()  # axis edges have one zero coordinate offset
    lengths = {}
    for f, tri in zip(out.mesh.face_edges, e):
        for k in range(3):
            lengths[f[k]] = np.linalg.norm(tri[(k + 1) % 3] - tri[k])
    L = np.array([lengths[i] for i in range(out.mesh.num_edges)])
    axis = np.isclose(L, 1 / 6)
    # right isosceles triangles: cot 45 on both sides of axis edges, cot 90 on diagonals
    np.testing.assert_allclose(dec.star1[axis], 1.0, atol=1e-12)
    np.testing.assert_allclose(dec.star1[~axis], 0.0, atol=1e-12)


def test_octahedron_star0_uniform():
    v, f = octahedron()
    mesh = Mesh(v, f)
    geom = shape_operator(mesh, AmbientSpace.for_mesh(mesh))
    dec = hodge.dec_operators(mesh, geom)
    np.testing.assert_allclose(dec.star0, 4 * (np.sqrt(3) / 2) / 3)
    np.testing.assert_allclose(dec.star2, 2 / np.sqrt(3))


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3))
def test_whitney_exact_for_linear_gradients(a, b, c):
    out, geom, _, _ = pipeline("round-sphere", r=1.0, subdiv=2)
    mesh = out.mesh
    u = mesh.vertices @ np.array([a, b, c])
    omega = u[mesh.edges[:, 1]] - u[mesh.edges[:, 0]]
    xi = hodge.whitney_vector(mesh, geom, omega)
    # gradient of the linear function restricted to each flat face
    expect = geom.frames.to_tangent(np.broadcast_to([a, b, c], (mesh.num_faces, 3)))
    np.testing.assert_allclose(xi, expect, atol=1e-10)


def test_whitney_of_zero_form():
    out, geom, _, _ = pipeline("clifford", nu=8, nv=8)
    np.testing.assert_array_equal(hodge.whitney_vector(out.mesh, geom, np.zeros(out.mesh.num_edges)), 0.0)


def test_flat_torus_coordinate_form_is_constant():
    out, geom, _, basis = pipeline("flat-torus", n=6)
    norms = np.linalg.norm(basis.fields, axis=-1)
    np.testing.assert_allclose(norms, np.broadcast_to(norms[:, :1], norms.shape), rtol=1e-10)
    # star1-normalised: |xi|^2 * area = 1
    np.testing.assert_allclose(norms[:, 0] ** 2 * geom.area, 1.0, rtol=1e-10)


def test_rotate90():
    np.testing.assert_array_equal(hodge.rotate90(None, [1.0, 0.0]), [0.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2))
def test_rotate90_properties(v):
    v = np.array(v)
    r = hodge.rotate90(None, v)
    np.testing.assert_array_equal(hodge.rotate90(None, r), -v)
    assert np.linalg.norm(r) == pytest.approx(np.linalg.norm(v))
    assert abs(np.dot(r, v)) <= 1e-15 * np.dot(v, v)


def test_genus_zero_empty_basis():
    out, geom, _, basis = pipeline("round-sphere", r=1.0, subdiv=2)
    assert basis.dimension == 0
    assert basis.fields.shape == (0, out.mesh.num_faces, 2)
    assert basis.max_residual == 0.0
    assert basis.gap_ratio == float("inf")


def test_negative_genus_rejected():
    out, geom, _, _ = pipeline("clifford", nu=8, nv=8)
    with pytest.raises(ValueError):
        hodge.harmonic_basis(out.mesh, hodge.dec_operators(out.mesh, geom), -1)


def test_wrong_genus_raises():
    out, geom, _, _ = pipeline("clifford", nu=8, nv=8)
    with pytest.raises(hodge.HarmonicBasisError, match="not resolved"):
        hodge.harmonic_basis(out.mesh, hodge.dec_operators(out.mesh, geom), 2)


def test_csv_outputs(tmp_path):
    out, geom, _, basis = pipeline("clifford", nu=8, nv=8)
    basis.write_edge_csv(tmp_path / "e.csv", out.mesh)
    basis.write_face_csv(tmp_path / "f.csv", geom)
    rows = list(csv.reader((tmp_path / "e.csv").open()))
    assert rows[0] == ["edge", "v0", "v1", "omega1", "omega2"]
    assert len(rows) == out.mesh.num_edges + 1
    rows = list(csv.reader((tmp_path / "f.csv").open()))
    assert rows[0] == ["face", "field", "x0", "x1", "x2", "x3"]
    assert len(rows) == 2 * out.mesh.num_faces + 1


def test_basis_deterministic():
    out, geom, _, basis = pipeline("schwarz-p", resolution=16)
    again = hodge.harmonic_basis(out.mesh, hodge.dec_operators(out.mesh, geom), 3, geom=geom)
    np.testing.assert_array_equal(again.forms, basis.forms)
