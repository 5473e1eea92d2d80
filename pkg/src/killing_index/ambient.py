"""Ambient 3-manifolds carrying a global orthonormal Killing frame.

Three spaces are implemented: Euclidean 3-space, the unit 3-sphere seen as the
group of unit quaternions (left-invariant frame ``p*i, p*j, p*k``), and flat
3-tori ``R^3 / lattice`` (constant frame).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

FRAME_NORM_TOL = 1e-9
UNIT_TOL = 1e-9


class AmbientError(ValueError):
    pass


def quat_mul(p, q):
    """Hamilton product of quaternions stored as ``(w, x, y, z)`` (broadcasts)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


QUAT_I = np.array([0.0, 1.0, 0.0, 0.0])
QUAT_J = np.array([0.0, 0.0, 1.0, 0.0])
QUAT_K = np.array([0.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class AmbientSpace:
    """One of ``euclidean3``, ``sphere3`` (radius 1) or ``flattorus3``."""

    variant: str
    lattice: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in ("euclidean3", "sphere3", "flattorus3"):
            raise AmbientError(f"unknown ambient {self.variant!r}")
        if self.variant == "flattorus3":
            lat = np.eye(3) if self.lattice is None else np.array(self.lattice, dtype=float)
            if lat.shape != (3, 3) or abs(np.linalg.det(lat)) < 1e-12:
                raise AmbientError("flat torus lattice must be an invertible 3x3 matrix")
            lat.setflags(write=False)
            object.__setattr__(self, "lattice", lat)
        elif self.lattice is not None:
            raise AmbientError("only flattorus3 takes a lattice")

    @classmethod
    def euclidean3(cls):
        return cls("euclidean3")

    @classmethod
    def sphere3(cls):
        return cls("sphere3")

    @classmethod
    def flattorus3(cls, lattice=None):
        return cls("flattorus3", np.eye(3) if lattice is None else lattice)

    @classmethod
    def for_mesh(cls, mesh: Mesh) -> "AmbientSpace":
        if mesh.ambient_tag == "flattorus3":
            return cls("flattorus3", mesh.lattice)
        return cls(mesh.ambient_tag)

    @property
    def dim(self) -> int:
        """Number of chart coordinates."""
        return 4 if self.variant == "sphere3" else 3

    @property
    def shortest_lattice_vector(self) -> float:
        lat = self.lattice
        best = np.inf
        for n in itertools.product(range(-2, 3), repeat=3):
            if any(n):
                best = min(best, float(np.linalg.norm(lat @ np.array(n, dtype=float))))
        return best

    @property
    def injectivity_radius(self) -> float:
        if self.variant == "flattorus3":
            return 0.5 * self.shortest_lattice_vector
        if self.variant == "sphere3":
            return np.pi
        return np.inf

    def to_dict(self) -> dict:
        d = {"variant": self.variant}
        if self.lattice is not None:
            d["lattice"] = self.lattice.tolist()
        return d


def _check_points(ambient: AmbientSpace, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != ambient.dim:
        raise AmbientError(f"{ambient.variant} points need {ambient.dim} coordinates")
    if ambient.variant == "sphere3":
        dev = np.abs(np.linalg.norm(p, axis=-1) - 1.0)
        if np.max(dev) > FRAME_NORM_TOL:
            raise AmbientError(f"point off the unit 3-sphere (| |p| - 1 | = {np.max(dev):.2e})")
    return p


def killing_frame(ambient: AmbientSpace, p) -> np.ndarray:
    """Orthonormal Killing frame at ``p``.

    Returns an array of shape ``p.shape[:-1] + (3, dim)``: row ``i`` is
    ``X_i(p)``. Accepts a single point or a stack of points.
    """
    p = _check_points(ambient, p)
    if ambient.variant == "sphere3":
        return np.stack([quat_mul(p, QUAT_I), quat_mul(p, QUAT_J), quat_mul(p, QUAT_K)], axis=-2)
    return np.broadcast_to(np.eye(3), p.shape[:-1] + (3, 3)).copy()


def ricci_normal(ambient: AmbientSpace, N) -> float:
    """Ricci curvature ``Ric(N, N)`` of a unit vector ``N``."""
    N = np.asarray(N, dtype=float)
    dev = np.abs(np.linalg.norm(N, axis=-1) - 1.0)
    if np.max(dev) > UNIT_TOL:
        raise AmbientError("ricci_normal needs a unit vector")
    value = 2.0 if ambient.variant == "sphere3" else 0.0
    if N.ndim == 1:
        return value
    return np.full(N.shape[:-1], value)


@dataclass(frozen=True)
class FramePointData:
    X: np.ndarray  # (..., 3, dim) Killing frame
    g: np.ndarray  # (..., 3) normal components <X_i, N>
    E: np.ndarray  # (..., 3, dim) tangential projections X_i - g_i N


def frame_at(ambient: AmbientSpace, p, N) -> FramePointData:
    X = killing_frame(ambient, p)
    N = np.asarray(N, dtype=float)
    g = np.einsum("...id,...d->...i", X, N)
    E = X - g[..., :, None] * N[..., None, :]
    return FramePointData(X, g, E)


def lift_face(ambient: AmbientSpace, mesh: Mesh, face=None) -> np.ndarray:
    """Chart positions of one face (shape (3, dim)) or of every face (F, 3, dim).

    On a flat torus the positions are lifted along the stored edge shifts and
    the lifted triangle must be shorter than the injectivity radius on every
    side; otherwise the shifts are inconsistent and ``AmbientError`` is raised.
    """
    pos = mesh.lifted_faces() if face is None else mesh.lifted_faces()[face][None]
    if ambient.variant == "flattorus3":
        lengths = np.linalg.norm(pos - np.roll(pos, -1, axis=-2), axis=-1)
        limit = ambient.injectivity_radius
        if lengths.max() >= limit:
            bad = int(np.argmax(lengths.max(axis=-1)))
            raise AmbientError(
                f"face too large for chart (face {bad if face is None else face}: "
                f"edge {lengths.max():.3g} >= {limit:.3g})"
            )
    return pos if face is None else pos[0]
