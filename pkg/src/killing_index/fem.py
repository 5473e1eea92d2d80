"""Discrete Jacobi operator and its spectrum.

Sign convention: the second variation is

    Q(u) = u^T K u - sum_v V_pot[v] * M[v] * u[v]**2,

with ``K`` the cotangent stiffness matrix (positive semidefinite), ``M`` the
lumped vertex areas and ``V_pot = |A|^2 + Ric(N, N)``. Eigenvalues are those of
the pencil ``(K - diag(V_pot) M, M)``; the index counts negative ones.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .ambient import AmbientSpace, ricci_normal
from .geometry import SurfaceGeometry
from .mesh import Mesh

DENSE_LIMIT = 6000
SEED = 20240607


class SpectrumError(RuntimeError):
    pass


class TruncatedSpectrumError(SpectrumError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    K: sp.csr_matrix
    mass: np.ndarray  # diagonal of M
    V_pot: np.ndarray

    @property
    def M(self) -> sp.dia_matrix:
        return sp.diags(self.mass)

    @property
    def jacobi(self) -> sp.csr_matrix:
        """``K - diag(V_pot * mass)``, the matrix of ``Q``."""
        return (self.K - sp.diags(self.V_pot * self.mass)).tocsr()

    @property
    def num_vertices(self) -> int:
        return len(self.mass)


def cotan_stiffness(faces: np.ndarray, cots: np.ndarray, num_vertices: int) -> sp.csr_matrix:
    """Assemble ``K`` from per-corner cotangents (corner ``k`` faces edge ``k+1 -> k+2``)."""
    i = np.roll(faces, -1, axis=1).reshape(-1)
    j = np.roll(faces, -2, axis=1).reshape(-1)
    w = 0.5 * cots.reshape(-1)
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    K = sp.coo_matrix((vals, (rows, cols)), shape=(num_vertices, num_vertices)).tocsr()
    K.sum_duplicates()
    return K


def assemble_jacobi_operators(mesh: Mesh, geom: SurfaceGeometry, ambient: AmbientSpace) -> DiscreteOperators:
    cots = kernels.cotan_weights(geom.frames.layout)
    K = cotan_stiffness(mesh.faces, cots, mesh.num_vertices)
    off = K.copy()
    off.setdiag(0)
    if (off.data > 1e-12 * np.abs(K.diagonal()).max()).any():
        warnings.warn("negative cotangent edge weights (non-Delaunay mesh)", RuntimeWarning, stacklevel=2)
    V_pot = geom.A2 + ricci_normal(ambient, geom.vertex_normals)
    return DiscreteOperators(K, geom.vertex_areas.copy(), np.asarray(V_pot, dtype=float))


def quadratic_form(ops: DiscreteOperators, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ (ops.K @ u) - np.sum(ops.V_pot * ops.mass * u * u))


def mass_inner(ops: DiscreteOperators, u, v) -> float:
    return float(np.sum(ops.mass * np.asarray(u) * np.asarray(v)))


def rayleigh_quotient(ops: DiscreteOperators, u) -> float:
    u = np.asarray(u, dtype=float)
    denom = mass_inner(ops, u, u)
    if denom == 0.0:
        raise ValueError("Rayleigh quotient of the zero function")
    return quadratic_form(ops, u) / denom


def default_tol_zero(ops: DiscreteOperators, oracle=None) -> float:
    """Nullity threshold.

    With an oracle (list of ``(eigenvalue, multiplicity)``), a quarter of the
    smallest nonzero ``|eigenvalue|``; otherwise ``1e-3 * (max|V_pot| +
    mean diag(M^-1 K))``.
    """
    if oracle:
        nz = [abs(lam) for lam, _ in oracle if abs(lam) > 1e-12]
        if nz:
            return 0.25 * min(nz)
    return 1e-3 * (np.max(np.abs(ops.V_pot)) + np.mean(ops.K.diagonal() / ops.mass))


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (V, m), M-orthonormal columns
    residuals: np.ndarray
    tol_zero: float
    constrained: bool = False
    solver: str = "dense"
    extra: dict = field(default_factory=dict)

    @property
    def index(self) -> int:
        return int(np.sum(self.eigenvalues < -self.tol_zero))

    @property
    def nullity(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.tol_zero))

    @property
    def truncated(self) -> bool:
        return bool(self.eigenvalues[-1] <= self.tol_zero)

    @property
    def certificate_gap(self) -> float:
        """Distance from the nearest eigenvalue outside ``[-tol, tol]`` to that band."""
        lam = self.eigenvalues
        outside = np.abs(lam) > self.tol_zero
        if not outside.any():
            return 0.0
        return float(np.min(np.abs(lam[outside]) - self.tol_zero))

    @property
    def null_margin(self) -> float:
        """``tol - max|lambda|`` over eigenvalues counted as null (``tol`` if none)."""
        lam = self.eigenvalues
        inside = np.abs(lam) <= self.tol_zero
        if not inside.any():
            return float(self.tol_zero)
        return float(self.tol_zero - np.max(np.abs(lam[inside])))

    @property
    def gap_report(self) -> dict:
        return {"certificate_gap": self.certificate_gap, "null_margin": self.null_margin}

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "index": self.index,
            "nullity": self.nullity,
            "tol_zero": float(self.tol_zero),
            "certificate_gap": self.certificate_gap,
            "null_margin": self.null_margin,
            "truncated": self.truncated,
            "constrained": self.constrained,
            "solver": self.solver,
            "max_residual": float(np.max(self.residuals)),
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "lambda", "residual"])
            for k, (lam, r) in enumerate(zip(self.eigenvalues, self.residuals), start=1):
                w.writerow([k, repr(float(lam)), repr(float(r))])


def index_nullity(spec: Spectrum) -> tuple[int, int, float]:
    if spec.truncated:
        raise TruncatedSpectrumError(
            "counts may be truncated: largest computed eigenvalue is within the null band; "
            "request more eigenpairs"
        )
    return spec.index, spec.nullity, spec.certificate_gap


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    s = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    s[s == 0] = 1.0
    return vecs * s


def _residuals(A, mass, lam, X) -> np.ndarray:
    R = A @ X - X * (mass[:, None] * lam[None, :])
    return np.linalg.norm(R / np.sqrt(mass)[:, None], axis=0)


def _householder(c: np.ndarray) -> np.ndarray:
    v = c.copy()
    v[0] += np.copysign(1.0, c[0])
    return v / np.linalg.norm(v)


def _dense_solve(ops: DiscreteOperators, m: int, constrained: bool):
    s = np.sqrt(ops.mass)
    A = ops.jacobi.toarray()
    A /= s[:, None]
    A /= s[None, :]
    A = 0.5 * (A + A.T)
    if not constrained:
        lam, Y = scipy.linalg.eigh(A, subset_by_index=[0, m - 1], driver="evr")
    else:
        v = _householder(s / np.linalg.norm(s))
        W = A - 2.0 * np.outer(A @ v, v)
        B = W - 2.0 * np.outer(v, v @ W)
        B = 0.5 * (B + B.T)
        lam, Z = scipy.linalg.eigh(B[1:, 1:], subset_by_index=[0, m - 1], driver="evr")
        Y = Z - 2.0 * np.outer(v[1:], v[1:] @ Z)
        Y = np.vstack([-2.0 * v[0] * (v[1:] @ Z), Y])
    return lam, Y / s[:, None]


def _sparse_solve(ops: DiscreteOperators, m: int, constrained: bool):
    A = ops.jacobi.tocsc()
    n = ops.num_vertices
    Mm = sp.diags(ops.mass).tocsc()
    sigma = -float(np.max(ops.V_pot)) - 1.0
    rng = np.random.default_rng(SEED)
    v0 = rng.standard_normal(n)
    shifted = (A - sigma * Mm).tocsc()
    if not constrained:
        lu = spla.splu(shifted)
        opinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    else:
        c = ops.mass.copy()
        border = sp.bmat([[shifted, sp.csc_matrix(c[:, None])], [sp.csc_matrix(c[None, :]), None]]).tocsc()
        lu = spla.splu(border)

        def solve(b):
            b = np.asarray(b).reshape(-1)
            return lu.solve(np.concatenate([b, [0.0]]))[:n]

        opinv = spla.LinearOperator((n, n), matvec=solve, dtype=float)
        v0 = v0 - np.dot(c, v0) / c.sum()
    try:
        lam, X = spla.eigsh(A, k=m, M=Mm, sigma=sigma, which="LM", OPinv=opinv, v0=v0, tol=0.0)
    except spla.ArpackError as exc:
        raise SpectrumError(f"eigensolver failed to converge: {exc}") from exc
    order = np.argsort(lam)
    lam, X = lam[order], X[:, order]
    # M-orthonormalise (ARPACK returns M-orthogonal vectors up to rounding)
    G = X.T @ (ops.mass[:, None] * X)
    L = np.linalg.cholesky(0.5 * (G + G.T))
    X = np.linalg.solve(L, X.T).T
    return lam, X


def _spectrum(ops, m, tol_zero, constrained, dense_limit):
    n = ops.num_vertices - (1 if constrained else 0)
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}]")
    if tol_zero is None:
        tol_zero = default_tol_zero(ops)
    if tol_zero <= 0:
        raise ValueError("tol_zero must be positive")
    if ops.num_vertices <= dense_limit:
        lam, X = _dense_solve(ops, m, constrained)
        solver = "dense"
    else:
        lam, X = _sparse_solve(ops, m, constrained)
        solver = "krylov"
    X = _fix_signs(X)
    res = _residuals(ops.jacobi, ops.mass, lam, X)
    return Spectrum(np.asarray(lam), X, res, float(tol_zero), constrained, solver)


def jacobi_spectrum(ops: DiscreteOperators, m: int, tol_zero: float | None = None,
                    dense_limit: int = DENSE_LIMIT) -> Spectrum:
    """The ``m`` smallest eigenpairs of ``(K - diag(V_pot) M, M)``."""
    return _spectrum(ops, m, tol_zero, False, dense_limit)


def cmc_spectrum(ops: DiscreteOperators, m: int, tol_zero: float | None = None,
                 dense_limit: int = DENSE_LIMIT) -> Spectrum:
    """Spectrum of ``Q`` restricted to functions with zero mean ``sum M u = 0``."""
    return _spectrum(ops, m, tol_zero, True, dense_limit)
