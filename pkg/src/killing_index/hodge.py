"""Discrete exterior calculus on triangle meshes and harmonic 1-forms."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .geometry import SurfaceGeometry
from .mesh import Mesh

DENSE_LIMIT = 2500
GAP_FACTOR = 10.0
SEED = 7


class HarmonicBasisError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DecOperators:
    d0: sp.csr_matrix  # E x V
    d1: sp.csr_matrix  # F x E
    star0: np.ndarray
    star1: np.ndarray
    star2: np.ndarray

    @property
    def num_negative_star1(self) -> int:
        return int(np.sum(self.star1 < 0))


def dec_operators(mesh: Mesh, geom: SurfaceGeometry) -> DecOperators:
    E, V, F = mesh.num_edges, mesh.num_vertices, mesh.num_faces
    e = mesh.edges
    d0 = sp.csr_matrix(
        (np.concatenate([-np.ones(E), np.ones(E)]),
         (np.concatenate([np.arange(E), np.arange(E)]), np.concatenate([e[:, 0], e[:, 1]]))),
        shape=(E, V),
    )
    d1 = sp.csr_matrix(
        (mesh.face_edge_signs.reshape(-1).astype(float),
         (np.repeat(np.arange(F), 3), mesh.face_edges.reshape(-1))),
        shape=(F, E),
    )
    cots = kernels.cotan_weights(geom.frames.layout)
    # corner k faces halfedge k+1
    opp = np.roll(mesh.face_edges, -1, axis=1).reshape(-1)
    star1 = 0.5 * np.bincount(opp, weights=cots.reshape(-1), minlength=E)
    return DecOperators(d0, d1, geom.vertex_areas.copy(), star1, 1.0 / geom.face_areas)


def hodge_laplacian_1(dec: DecOperators) -> sp.csr_matrix:
    """``L1 = d0 star0^-1 d0^T star1 + star1^-1 d1^T star2 d1`` (needs nonzero star1)."""
    s1 = dec.star1
    if np.any(s1 == 0):
        raise ZeroDivisionError("star1 has zero entries")
    a = dec.d0 @ sp.diags(1.0 / dec.star0) @ dec.d0.T @ sp.diags(s1)
    b = sp.diags(1.0 / s1) @ dec.d1.T @ sp.diags(dec.star2) @ dec.d1
    return (a + b).tocsr()


def _symmetric_pencil(dec: DecOperators):
    # star1 * L1, symmetric PSD for any sign pattern of star1
    codiff = dec.d0.T @ sp.diags(dec.star1)  # V x E
    A = codiff.T @ sp.diags(1.0 / dec.star0) @ codiff + dec.d1.T @ sp.diags(dec.star2) @ dec.d1
    A = 0.5 * (A + A.T)
    b = np.abs(dec.star1)
    b = np.maximum(b, 1e-3 * b.mean())
    return A.tocsc(), b


def form_residuals(dec: DecOperators, forms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relative closedness ``|d w|`` and co-closedness ``|delta w|`` residuals per form.

    Each is normalised by the same sum taken with absolute values, so it is
    scale free and at most 1.
    """
    forms = np.asarray(forms, dtype=float).reshape(dec.d0.shape[0], -1)
    absd1 = abs(dec.d1)
    absd0t = abs(dec.d0.T)
    dw = np.linalg.norm(dec.d1 @ forms, axis=0)
    dw_scale = np.linalg.norm(absd1 @ np.abs(forms), axis=0)
    s = dec.star1[:, None] * forms
    cw = np.linalg.norm(dec.d0.T @ s, axis=0)
    cw_scale = np.linalg.norm(absd0t @ np.abs(s), axis=0)
    return dw / np.where(dw_scale > 0, dw_scale, 1.0), cw / np.where(cw_scale > 0, cw_scale, 1.0)


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    forms: np.ndarray  # (E, 2g)
    fields: np.ndarray  # (2g, F, 2) per-face coordinates in (t1, t2)
    eigenvalues: np.ndarray  # the 2g + 1 smallest
    closed_residuals: np.ndarray
    coclosed_residuals: np.ndarray
    gram: str  # inner product the forms are orthonormal in

    @property
    def dimension(self) -> int:
        return self.forms.shape[1]

    @property
    def gap_ratio(self) -> float:
        g2 = self.dimension
        if g2 == 0 or len(self.eigenvalues) <= g2:
            return float("inf")
        top = max(abs(self.eigenvalues[g2 - 1]), np.finfo(float).tiny)
        return float(self.eigenvalues[g2] / top)

    @property
    def max_residual(self) -> float:
        if self.dimension == 0:
            return 0.0
        return float(max(self.closed_residuals.max(), self.coclosed_residuals.max()))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "gap_ratio": self.gap_ratio,
            "closed_residuals": [float(x) for x in self.closed_residuals],
            "coclosed_residuals": [float(x) for x in self.coclosed_residuals],
            "orthonormal_in": self.gram,
        }

    def write_edge_csv(self, path, mesh: Mesh) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["edge", "v0", "v1"] + [f"omega{a + 1}" for a in range(self.dimension)])
            for e, (a, b) in enumerate(mesh.edges.tolist()):
                w.writerow([e, a, b] + [repr(float(x)) for x in self.forms[e]])

    def write_face_csv(self, path, geom: SurfaceGeometry) -> None:
        amb = geom.frames.to_ambient(self.fields)  # (2g, F, d)
        d = amb.shape[-1] if self.dimension else geom.frames.N.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["face", "field"] + [f"x{i}" for i in range(d)])
            for a in range(self.dimension):
                for f in range(amb.shape[1]):
                    w.writerow([f, a + 1] + [repr(float(x)) for x in amb[a, f]])


def whitney_vector(mesh: Mesh, geom: SurfaceGeometry, omega) -> np.ndarray:
    """Per-face constant vector fields dual to edge 1-forms.

    ``omega`` has shape ``(E,)`` or ``(E, m)``; the result has shape ``(F, 2)``
    or ``(m, F, 2)`` in each face's ``(t1, t2)`` frame.
    """
    omega = np.asarray(omega, dtype=float)
    single = omega.ndim == 1
    om = omega.reshape(mesh.num_edges, -1)
    rhs = om[mesh.face_edges] * mesh.face_edge_signs[..., None]  # (F, 3, m)
    coeffs = kernels.edge_lstsq(geom.frames.layout, rhs)  # (F, 2, m)
    out = np.transpose(coeffs, (2, 0, 1))
    return out[0] if single else out


def rotate90(geom: SurfaceGeometry | None, field) -> np.ndarray:
    """Quarter turn ``(a, b) -> (-b, a)`` of per-face tangent coordinates."""
    field = np.asarray(field, dtype=float)
    out = np.empty_like(field)
    out[..., 0] = -field[..., 1]
    out[..., 1] = field[..., 0]
    return out


def _lowest_pairs(A, b, k):
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        lam, X = scipy.linalg.eigh(A.toarray(), np.diag(b), subset_by_index=[0, k - 1])
        return lam, X
    scale = float(A.diagonal().mean() / b.mean())
    sigma = -1e-4 * scale
    B = sp.diags(b).tocsc()
    lu = spla.splu((A - sigma * B).tocsc())
    opinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    v0 = np.random.default_rng(SEED).standard_normal(n)
    lam, X = spla.eigsh(A, k=k, M=B, sigma=sigma, which="LM", OPinv=opinv, v0=v0, tol=0.0)
    order = np.argsort(lam)
    return lam[order], X[:, order]


def harmonic_basis(mesh: Mesh, dec: DecOperators, genus: int, harmonic_tol: float = 1e-8,
                   geom: SurfaceGeometry | None = None) -> HarmonicBasis:
    """The ``2 * genus`` lowest eigenvectors of the 1-form Hodge Laplacian.

    The symmetric pencil ``(star1 L1, |star1|)`` is used, with ``|star1|``
    floored at ``1e-3`` of its mean so it stays definite on meshes with
    right-angled or obtuse corners; its kernel is exactly the harmonic space.
    The returned forms are orthonormal in the ``star1`` inner product when that
    is positive definite on the harmonic space, else in the floored one.
    """
    if genus < 0:
        raise ValueError("genus must be nonnegative")
    E, F = mesh.num_edges, mesh.num_faces
    if genus == 0:
        empty = np.zeros(0)
        return HarmonicBasis(np.zeros((E, 0)), np.zeros((0, F, 2)), empty, empty, empty, "star1")
    g2 = 2 * genus
    A, b = _symmetric_pencil(dec)
    lam, X = _lowest_pairs(A, b, g2 + 1)
    top = max(abs(lam[g2 - 1]), np.finfo(float).tiny)
    if lam[g2] < GAP_FACTOR * top:
        raise HarmonicBasisError(
            f"harmonic basis not resolved: eigenvalues {lam[g2 - 1]:.3e} and {lam[g2]:.3e} "
            f"are not separated by a factor {GAP_FACTOR:g}"
        )
    W = X[:, :g2]
    G = W.T @ (dec.star1[:, None] * W)
    G = 0.5 * (G + G.T)
    evals, evecs = np.linalg.eigh(G)
    gram = "star1"
    if evals.min() <= 1e-10 * evals.max():
        G = W.T @ (b[:, None] * W)
        evals, evecs = np.linalg.eigh(0.5 * (G + G.T))
        gram = "floored |star1|"
    W = W @ (evecs / np.sqrt(evals)) @ evecs.T
    # deterministic sign: largest entry of each form positive
    idx = np.argmax(np.abs(W), axis=0)
    W = W * np.sign(W[idx, np.arange(g2)])
    closed, coclosed = form_residuals(dec, W)
    if geom is None:
        fields = np.zeros((g2, F, 2))
    else:
        fields = whitney_vector(mesh, geom, W)
    return HarmonicBasis(W, fields, lam, closed, coclosed, gram)
