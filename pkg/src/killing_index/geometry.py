"""Discrete first and second fundamental forms.

Conventions: the face normal follows the right-hand rule on the face
orientation (on the 3-sphere: ``det[p, t1, t2, N] = +1``), the shape operator
is ``S = -dN`` restricted to the tangent plane, and ``2H = tr S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .ambient import AmbientSpace, lift_face
from .mesh import Mesh


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class FaceFrames:
    """Per-face frames. ``t1, t2, N`` are ambient vectors, ``layout`` is the
    isometric planar image of the triangle expressed in the ``(t1, t2)`` frame."""

    positions: np.ndarray  # (F, 3, d) lifted corners
    points: np.ndarray  # (F, d) base point of the frame
    N: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    area: np.ndarray
    layout: np.ndarray  # (F, 3, 2)

    def to_ambient(self, coeffs: np.ndarray) -> np.ndarray:
        """Map per-face tangent coordinates ``(..., F, 2)`` to ambient vectors."""
        return coeffs[..., 0:1] * self.t1 + coeffs[..., 1:2] * self.t2

    def to_tangent(self, vectors: np.ndarray) -> np.ndarray:
        """Components of ambient vectors along ``(t1, t2)``."""
        return np.stack(
            [np.einsum("...fd,fd->...f", vectors, self.t1),
             np.einsum("...fd,fd->...f", vectors, self.t2)],
            axis=-1,
        )


def _normalize(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def _cross4(a, b, c):
    # Vector orthogonal to a, b, c with det[a, b, c, n] = |n|^2.
    m = np.stack([a, b, c], axis=1)  # (F, 3, 4)
    cols = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
    out = np.empty((len(a), 4))
    for l, keep in enumerate(cols):
        out[:, l] = (-1) ** (l + 1) * np.linalg.det(m[:, :, keep])
    return out


def face_frames(mesh: Mesh, ambient: AmbientSpace) -> FaceFrames:
    pos = lift_face(ambient, mesh)
    layout, area = kernels.triangle_layout(pos)
    mean = area.mean()
    if (area <= 1e-12 * mean).any():
        raise GeometryError("degenerate face")
    e1 = pos[:, 1] - pos[:, 0]
    e2 = pos[:, 2] - pos[:, 0]
    bary = pos.mean(axis=1)
    if ambient.variant == "sphere3":
        p = _normalize(bary)
        e1 = e1 - np.einsum("fd,fd->f", e1, p)[:, None] * p
        e2 = e2 - np.einsum("fd,fd->f", e2, p)[:, None] * p
        t1 = _normalize(e1)
        t2 = _normalize(e2 - np.einsum("fd,fd->f", e2, t1)[:, None] * t1)
        N = _normalize(_cross4(p, t1, t2))
        points = p
    else:
        N = _normalize(np.cross(e1, e2))
        t1 = _normalize(e1)
        t2 = np.cross(N, t1)
        points = bary
    return FaceFrames(pos, points, N, t1, t2, area, layout)


@dataclass(frozen=True)
class AnalyticGeometry:
    """Closed-form surface data supplied by a generator.

    Each callable takes an ``(n, d)`` array of ambient points.

    normal : unit normal field, oriented like the mesh faces
    shape_tensor : ``(n, d, d)`` symmetric ambient tensor whose restriction to
        the tangent plane is the shape operator
    principal : ``(n, 2)`` principal curvatures (ascending)
    """

    normal: Callable
    shape_tensor: Callable
    principal: Callable


@dataclass(frozen=True)
class SurfaceGeometry:
    frames: FaceFrames
    face_S: np.ndarray  # (F, 2, 2) in the (t1, t2) frame
    vertex_normals: np.ndarray
    vertex_areas: np.ndarray
    H: np.ndarray
    A2: np.ndarray
    source_tag: str

    @property
    def face_areas(self):
        return self.frames.area

    @property
    def face_normals(self):
        return self.frames.N

    @property
    def face_H(self):
        return 0.5 * (self.face_S[:, 0, 0] + self.face_S[:, 1, 1])

    @property
    def face_A2(self):
        return np.einsum("fij,fij->f", self.face_S, self.face_S)

    @property
    def area(self) -> float:
        return float(self.frames.area.sum())

    @property
    def mean_curvature(self) -> float:
        """Area-weighted mean of the vertex mean curvature."""
        return float(np.dot(self.H, self.vertex_areas) / self.vertex_areas.sum())

    def H_deviation(self) -> float:
        """Largest deviation of vertex ``H`` from its mean, relative to ``max(1, |H|)``."""
        h = self.mean_curvature
        return float(np.max(np.abs(self.H - h)) / max(1.0, abs(h)))

    def summary(self) -> dict:
        return {
            "area": self.area,
            "max_abs_H": float(np.max(np.abs(self.H))),
            "mean_H": self.mean_curvature,
            "mean_A2": float(np.dot(self.A2, self.vertex_areas) / self.vertex_areas.sum()),
            "source_tag": self.source_tag,
        }


def vertex_areas(mesh: Mesh, area: np.ndarray) -> np.ndarray:
    vals = np.repeat((area / 3.0)[:, None, None], 3, axis=1)
    return kernels.vertex_scatter(mesh.faces, vals, mesh.num_vertices)[:, 0]


def _vertex_average(mesh, area, va, face_values):
    # face_values (F, M) -> area-weighted vertex means (V, M)
    w = (area / 3.0)[:, None] * face_values
    vals = np.repeat(w[:, None, :], 3, axis=1)
    return kernels.vertex_scatter(mesh.faces, vals, mesh.num_vertices) / va[:, None]


def vertex_average(mesh: Mesh, frames: FaceFrames, face_values, va=None):
    """Area-weighted average of per-face values at vertices (``(F,)`` or ``(F, M)``)."""
    fv = np.asarray(face_values, dtype=float)
    squeeze = fv.ndim == 1
    if va is None:
        va = vertex_areas(mesh, frames.area)
    out = _vertex_average(mesh, frames.area, va, fv.reshape(len(fv), -1))
    return out[:, 0] if squeeze else out


def estimated_vertex_normals(mesh: Mesh, ambient: AmbientSpace, frames: FaceFrames,
                             weighting: str = "max"):
    """Vertex normals from face normals.

    ``weighting="max"`` uses the corner weights ``sin(theta) / (|e1| |e2|)``,
    which reproduce the exact normal for vertices inscribed in a sphere;
    ``"area"`` is the plain area-weighted average.
    """
    if weighting == "area":
        n = vertex_average(mesh, frames, frames.N)
    elif weighting == "max":
        L = frames.layout
        w = np.empty((mesh.num_faces, 3))
        for k in range(3):
            u = L[:, (k + 1) % 3] - L[:, k]
            v = L[:, (k + 2) % 3] - L[:, k]
            w[:, k] = (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]) / ((u * u).sum(1) * (v * v).sum(1))
        n = kernels.vertex_scatter(mesh.faces, w[:, :, None] * frames.N[:, None, :], mesh.num_vertices)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    if ambient.variant == "sphere3":
        p = mesh.vertices
        n = n - np.einsum("vd,vd->v", n, p)[:, None] * p
    return _normalize(n)


def _face_shape_fit(mesh, frames, vnormals):
    # Fit S e_k = -(N_head - N_tail) tangential over the three halfedges.
    f = mesh.faces
    dn = vnormals[np.roll(f, -1, axis=1)] - vnormals[f]  # (F, 3, d)
    comp = np.stack(
        [np.einsum("fkd,fd->fk", dn, frames.t1), np.einsum("fkd,fd->fk", dn, frames.t2)],
        axis=-1,
    )
    rows = kernels.edge_lstsq(frames.layout, -comp)  # rows[f, :, a] = S[a, :]
    S = np.transpose(rows, (0, 2, 1))
    if not np.all(np.isfinite(S)):
        raise GeometryError("degenerate fit (rank-deficient edge system)")
    return 0.5 * (S + np.transpose(S, (0, 2, 1)))


def _analytic_face_shape(frames, analytic: AnalyticGeometry):
    T = analytic.shape_tensor(frames.points)
    basis = np.stack([frames.t1, frames.t2], axis=1)  # (F, 2, d)
    proj = np.einsum("fad,fde,fbe->fab", basis, T, basis)
    proj = 0.5 * (proj + np.transpose(proj, (0, 2, 1)))
    _, vecs = np.linalg.eigh(proj)
    k = analytic.principal(frames.points)
    # Restore the exact principal curvatures in the projected eigenframe.
    return np.einsum("fai,fi,fbi->fab", vecs, k, vecs)


def shape_operator(mesh: Mesh, ambient: AmbientSpace, analytic: AnalyticGeometry | None = None,
                   frames: FaceFrames | None = None) -> SurfaceGeometry:
    """Per-face shape operators and per-vertex ``H``, ``|A|^2``.

    With ``analytic`` the closed forms are evaluated (normals and curvatures at
    vertices, shape operators at face base points); otherwise vertex normals
    come from :func:`estimated_vertex_normals` and each face's shape operator
    is fitted to the normal variation along its edges.
    """
    if frames is None:
        frames = face_frames(mesh, ambient)
    va = vertex_areas(mesh, frames.area)
    if analytic is not None:
        vn = np.asarray(analytic.normal(mesh.vertices), dtype=float)
        S = _analytic_face_shape(frames, analytic)
        k = np.asarray(analytic.principal(mesh.vertices), dtype=float)
        H = 0.5 * k.sum(axis=1)
        A2 = (k * k).sum(axis=1)
        tag = "analytic"
    else:
        vn = estimated_vertex_normals(mesh, ambient, frames)
        S = _face_shape_fit(mesh, frames, vn)
        face_tr = S[:, 0, 0] + S[:, 1, 1]
        face_a2 = np.einsum("fij,fij->f", S, S)
        avg = _vertex_average(mesh, frames.area, va, np.stack([0.5 * face_tr, face_a2], axis=1))
        H, A2 = avg[:, 0], avg[:, 1]
        tag = "estimated"
    return SurfaceGeometry(frames, S, vn, va, H, A2, tag)
