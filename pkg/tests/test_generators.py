import numpy as np
import pytest

from conftest import generated
from killing_index import generators
from killing_index.generators import GeneratorError
from killing_index.mesh import topology


@pytest.mark.parametrize("name,params", [
    ("clifford", dict(nu=5, nv=7)),
    ("equatorial-sphere", dict(subdiv=1)),
    ("flat-torus", dict(n=3)),
    ("flat-torus", dict(n=5, normal_axis=0)),
    ("round-sphere", dict(r=0.3, subdiv=0)),
    ("schwarz-p", dict(resolution=16)),
])
def test_outputs_are_valid(name, params):
    out = generated(name, **params)
    assert out.name == name
    assert topology(out.mesh).is_valid
    geom = out.geometry()
    assert geom.source_tag == ("estimated" if out.analytic is None else "analytic")
    assert np.all(geom.face_areas > 0)


@pytest.mark.parametrize("name,params", [
    ("clifford", dict(nu=8, nv=8)),
    ("equatorial-sphere", dict(subdiv=2)),
    ("flat-torus", dict(n=6)),
    ("round-sphere", dict(r=2.0, subdiv=2)),
])
def test_oracle_lists_sorted_with_positive_multiplicity(name, params):
    out = generated(name, **params)
    for source in (out.oracle, out.cmc_oracle):
        lams = [lam for lam, _ in source]
        assert lams == sorted(lams)
        assert all(m >= 1 for _, m in source)
    # the constrained oracle drops the constant mode
    assert out.cmc_oracle == out.oracle[1:]


def test_clifford_oracle_values():
    out = generated("clifford", nu=8, nv=8)
    np.testing.assert_array_equal(out.oracle_eigenvalues(13), [-4] + [-2] * 4 + [0] * 4 + [4] * 4)
    # 2|m|^2 - 4 with |m|^2 = 5 has eight lattice points
    assert (6.0, 8) in out.oracle


def test_sphere_oracle_scales():
    out = generated("round-sphere", r=2.0, subdiv=2)
    np.testing.assert_allclose(out.oracle_eigenvalues(9), np.array([-2] + [0] * 3 + [4] * 5) / 4)


def test_flat_torus_continuum_oracle():
    out = generated("flat-torus", n=6)
    cont = out.notes["continuum_oracle"]
    assert cont[0] == (0.0, 1)
    assert cont[1][0] == pytest.approx(4 * np.pi**2) and cont[1][1] == 4


def test_clifford_vertices_on_torus():
    v = generated("clifford", nu=10, nv=6).mesh.vertices
    np.testing.assert_allclose(v[:, 0] ** 2 + v[:, 1] ** 2, 0.5, rtol=1e-14)
    np.testing.assert_allclose(v[:, 2] ** 2 + v[:, 3] ** 2, 0.5, rtol=1e-14)


@pytest.mark.parametrize("resolution", [16, 20, 24, 32, 40])
def test_schwarz_p_genus_three(resolution):
    out = generated("schwarz-p", resolution=resolution)
    assert topology(out.mesh).genus == 3
    assert out.approximate and out.oracle is None
    x = 2 * np.pi * out.mesh.vertices
    assert np.abs(np.cos(x).sum(axis=1)).max() < 1e-8


def test_schwarz_p_is_deterministic():
    a = generators.schwarz_p(16).mesh
    b = generators.schwarz_p(16).mesh
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.faces, b.faces)


@pytest.mark.parametrize("call,match", [
    (lambda: generators.schwarz_p(8), "resolution >= 16"),
    (lambda: generators.clifford_torus(2, 8), None),
    (lambda: generators.equatorial_sphere(0), "subdiv"),
    (lambda: generators.flat_torus_surface(n=2), "n >= 3"),
    (lambda: generators.flat_torus_surface(normal_axis=3), "normal_axis"),
    (lambda: generators.flat_torus_surface(lattice=[[1, 1, 0], [0, 1, 0], [0, 0, 1]]), "diagonal"),
    (lambda: generators.round_sphere(r=-1.0), "radius"),
])
def test_bad_parameters(call, match):
    with pytest.raises(GeneratorError, match=match):
        call()


def test_oracle_too_short():
    out = generated("clifford", nu=8, nv=8)
    with pytest.raises(GeneratorError, match="too short"):
        out.oracle_eigenvalues(10**6)
    with pytest.raises(GeneratorError, match="no spectral oracle"):
        generated("schwarz-p", resolution=16).oracle_eigenvalues(3)
