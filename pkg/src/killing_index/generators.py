"""Closed surfaces with known geometry, used as ground truth.

Every generator returns a :class:`GeneratorOutput` whose mesh orientation
agrees with the attached closed-form normal. ``oracle`` lists
``(eigenvalue, multiplicity)`` pairs of the Jacobi pencil, ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientSpace
from .geometry import AnalyticGeometry, SurfaceGeometry, shape_operator
from .mesh import Mesh, MeshError, topology


class GeneratorError(ValueError):
    pass


@dataclass
class GeneratorOutput:
    name: str
    params: dict
    mesh: Mesh
    analytic: AnalyticGeometry | None = None
    oracle: list | None = None
    cmc_oracle: list | None = None
    approximate: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def ambient(self) -> AmbientSpace:
        return AmbientSpace.for_mesh(self.mesh)

    def geometry(self) -> SurfaceGeometry:
        return shape_operator(self.mesh, self.ambient, self.analytic)

    def oracle_eigenvalues(self, count: int, cmc: bool = False) -> np.ndarray:
        """First ``count`` oracle eigenvalues with multiplicity."""
        source = self.cmc_oracle if cmc else self.oracle
        if source is None:
            raise GeneratorError(f"{self.name} has no spectral oracle")
        out = []
        for lam, mult in source:
            out.extend([lam] * mult)
            if len(out) >= count:
                break
        if len(out) < count:
            raise GeneratorError("oracle list too short")
        return np.array(out[:count])


def _grid_faces(nu: int, nv: int) -> np.ndarray:
    # Lower-left diagonal split of every grid square, counterclockwise in (u, v).
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    ip, jp = (i + 1) % nu, (j + 1) % nv
    a = i * nv + j
    b = ip * nv + j
    c = ip * nv + jp
    d = i * nv + jp
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def _lattice_oracle(scale_u: float, scale_v: float, limit: float, shift: float = 0.0):
    """Eigenvalues ``scale_u*m1^2 + scale_v*m2^2 + shift`` with multiplicities up to ``limit``."""
    counts: dict[float, int] = {}
    bound = int(math.ceil(math.sqrt(limit / min(scale_u, scale_v)))) + 1
    for m1 in range(-bound, bound + 1):
        for m2 in range(-bound, bound + 1):
            lam = scale_u * m1 * m1 + scale_v * m2 * m2
            if lam <= limit:
                key = round(lam + shift, 12)
                counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items())


def clifford_torus(nu: int, nv: int) -> GeneratorOutput:
    """Clifford torus ``(cos u, sin u, cos v, sin v)/sqrt(2)`` in the unit 3-sphere."""
    if nu < 3 or nv < 3:
        raise GeneratorError("clifford torus needs nu, nv >= 3")
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    U, Vv = np.meshgrid(u, v, indexing="ij")
    U, Vv = U.reshape(-1), Vv.reshape(-1)
    verts = np.stack([np.cos(U), np.sin(U), np.cos(Vv), np.sin(Vv)], 1) / np.sqrt(2.0)
    # unit norm to rounding; renormalise so the 1e-12 sphere check holds
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    mesh = Mesh(verts, _grid_faces(nu, nv), "sphere3")

    def angles(p):
        return np.arctan2(p[:, 1], p[:, 0]), np.arctan2(p[:, 3], p[:, 2])

    def normal(p):
        a, b = angles(p)
        return np.stack([np.cos(a), np.sin(a), -np.cos(b), -np.sin(b)], 1) / np.sqrt(2.0)

    def shape_tensor(p):
        a, b = angles(p)
        z = np.zeros_like(a)
        du = np.stack([-np.sin(a), np.cos(a), z, z], 1)
        dv = np.stack([z, z, -np.sin(b), np.cos(b)], 1)
        return -np.einsum("fi,fj->fij", du, du) + np.einsum("fi,fj->fij", dv, dv)

    def principal(p):
        return np.tile([-1.0, 1.0], (len(p), 1))

    # flat metric with fundamental domain (sqrt(2) pi)^2: lambda = 2|m|^2 - 4
    oracle = _lattice_oracle(2.0, 2.0, 200.0, shift=-4.0)
    return GeneratorOutput("clifford", {"nu": nu, "nv": nv}, mesh,
                           AnalyticGeometry(normal, shape_tensor, principal), oracle, oracle[1:])


def icosphere(subdiv: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosphere in R^3, outward counterclockwise faces."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    F = faces
    for _ in range(subdiv):
        cache: dict[tuple[int, int], int] = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = V[a] + V[b]
                V.append(m / np.linalg.norm(m))
                cache[key] = len(V) - 1
            return cache[key]

        nf = []
        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = nf
    return np.array(V), np.array(F, dtype=np.int64)


def _sphere_oracle(scale: float, lmax: int = 30):
    return [((l * (l + 1) - 2.0) * scale, 2 * l + 1) for l in range(lmax + 1)]


def equatorial_sphere(subdiv: int) -> GeneratorOutput:
    """Totally geodesic 2-sphere ``x4 = 0`` in the unit 3-sphere."""
    if subdiv < 1:
        raise GeneratorError("equatorial sphere needs subdiv >= 1")
    v3, faces = icosphere(subdiv)
    verts = np.hstack([v3, np.zeros((len(v3), 1))])
    mesh = Mesh(verts, faces, "sphere3")
    e4 = np.array([0.0, 0.0, 0.0, 1.0])
    analytic = AnalyticGeometry(
        normal=lambda p: np.tile(e4, (len(p), 1)),
        shape_tensor=lambda p: np.zeros((len(p), 4, 4)),
        principal=lambda p: np.zeros((len(p), 2)),
    )
    oracle = _sphere_oracle(1.0)
    return GeneratorOutput("equatorial-sphere", {"subdiv": subdiv}, mesh, analytic, oracle, oracle[1:])


def flat_torus_surface(lattice=None, normal_axis: int = 2, n: int = 8) -> GeneratorOutput:
    """Coordinate 2-torus orthogonal to ``normal_axis`` in the flat 3-torus."""
    lat = np.eye(3) if lattice is None else np.array(lattice, dtype=float)
    if lat.shape != (3, 3) or np.any(np.abs(lat - np.diag(np.diag(lat))) > 0):
        raise GeneratorError("flat torus surface needs a diagonal lattice")
    if np.any(np.diag(lat) <= 0):
        raise GeneratorError("lattice diagonal must be positive")
    if n < 3:
        raise GeneratorError("flat torus surface needs n >= 3")
    if normal_axis not in (0, 1, 2):
        raise GeneratorError("normal_axis must be 0, 1 or 2")
    ax_a, ax_b = (normal_axis + 1) % 3, (normal_axis + 2) % 3
    La, Lb = lat[ax_a, ax_a], lat[ax_b, ax_b]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    verts = np.zeros((n * n, 3))
    verts[:, ax_a] = i.reshape(-1) * La / n
    verts[:, ax_b] = j.reshape(-1) * Lb / n
    faces = _grid_faces(n, n)
    # unwrapped grid coordinates of every corner, relative to corner 0
    ij = np.stack([faces // n, faces % n], axis=-1)
    rel = ij - ij[:, :1]
    rel = (rel + n // 2) % n - n // 2 if n > 2 else rel
    shifts: dict[tuple[int, int], tuple[int, int, int]] = {}
    for f in range(len(faces)):
        for k in range(3):
            kn = (k + 1) % 3
            step = rel[f, kn] - rel[f, k]
            wrap = (ij[f, k] + step - ij[f, kn]) // n
            if wrap.any():
                s = [0, 0, 0]
                s[ax_a], s[ax_b] = int(wrap[0]), int(wrap[1])
                shifts[(int(faces[f, k]), int(faces[f, kn]))] = tuple(s)
    mesh = Mesh(verts, faces, "flattorus3", shifts, lat)
    nvec = np.zeros(3)
    nvec[normal_axis] = 1.0
    analytic = AnalyticGeometry(
        normal=lambda p: np.tile(nvec, (len(p), 1)),
        shape_tensor=lambda p: np.zeros((len(p), 3, 3)),
        principal=lambda p: np.zeros((len(p), 2)),
    )
    ha, hb = La / n, Lb / n
    lam = (4 / ha**2) * np.sin(np.pi * np.arange(n) / n)[:, None] ** 2 \
        + (4 / hb**2) * np.sin(np.pi * np.arange(n) / n)[None, :] ** 2
    vals, counts = np.unique(np.round(lam.reshape(-1), 9), return_counts=True)
    oracle = [(float(a), int(c)) for a, c in zip(vals, counts)]
    return GeneratorOutput("flat-torus", {"n": n, "normal_axis": normal_axis, "lattice": lat.tolist()},
                           mesh, analytic, oracle, oracle[1:],
                           notes={"continuum_oracle": _lattice_oracle(4 * np.pi**2 / La**2,
                                                                      4 * np.pi**2 / Lb**2, 1e3)})


def round_sphere(r: float = 1.0, subdiv: int = 4) -> GeneratorOutput:
    """Sphere of radius ``r`` in R^3 (CMC). Outward normal, so ``H = -1/r``."""
    if r <= 0:
        raise GeneratorError("radius must be positive")
    if subdiv < 0:
        raise GeneratorError("subdiv must be >= 0")
    v3, faces = icosphere(subdiv)
    mesh = Mesh(r * v3, faces, "euclidean3")
    analytic = AnalyticGeometry(
        normal=lambda p: p / np.linalg.norm(p, axis=1, keepdims=True),
        shape_tensor=lambda p: np.broadcast_to(-np.eye(3) / r, (len(p), 3, 3)).copy(),
        principal=lambda p: np.full((len(p), 2), -1.0 / r),
    )
    oracle = _sphere_oracle(1.0 / r**2)
    return GeneratorOutput("round-sphere", {"r": r, "subdiv": subdiv}, mesh, analytic, oracle, oracle[1:])


SCHWARZ_SMOOTHING = 10


def _project_to_level_set(p: np.ndarray, steps: int = 4) -> np.ndarray:
    p = p.copy()
    for _ in range(steps):
        phi = np.cos(2 * np.pi * p).sum(axis=1)
        grad = -2 * np.pi * np.sin(2 * np.pi * p)
        p -= (phi / (grad * grad).sum(axis=1))[:, None] * grad
    return p


def _smooth_on_level_set(mesh: Mesh, iters: int, step: float = 0.5) -> Mesh:
    """Tangential Laplacian smoothing, reprojected onto the level set each pass.

    Marching cubes leaves slivers (angles far below 1 degree) that wreck
    normal-based curvature estimates; a few passes bring the minimum angle
    above 20 degrees without changing connectivity.
    """
    pos = mesh.vertices.copy()
    e = mesh.edges
    s = mesh.edge_shift_array.astype(float)
    deg = np.bincount(e.reshape(-1), minlength=len(pos)).astype(float)
    for _ in range(iters):
        vec = pos[e[:, 1]] + s - pos[e[:, 0]]
        acc = np.zeros_like(pos)
        np.add.at(acc, e[:, 0], vec)
        np.add.at(acc, e[:, 1], -vec)
        acc /= deg[:, None]
        grad = np.sin(2 * np.pi * pos)
        nrm = grad / np.linalg.norm(grad, axis=1)[:, None]
        acc -= np.einsum("vd,vd->v", acc, nrm)[:, None] * nrm
        moved = _project_to_level_set(pos + step * acc)
        wrap = np.floor(moved)
        pos = moved - wrap
        s = s + wrap[e[:, 1]] - wrap[e[:, 0]]
    s = np.rint(s).astype(np.int64)
    shifts = {(int(a), int(b)): tuple(int(x) for x in si) for (a, b), si in zip(e, s) if si.any()}
    return Mesh(pos, mesh.faces, "flattorus3", shifts, mesh.lattice)


def schwarz_p(resolution: int = 24) -> GeneratorOutput:
    """Level set ``cos 2pi x + cos 2pi y + cos 2pi z = 0`` in the unit flat 3-torus.

    An approximation of the Schwarz P surface (genus 3); the level set is not
    exactly minimal and no spectral oracle is attached. The marching-cubes
    mesh is welded across the cell faces, then smoothed tangentially with the
    vertices kept on the level set.
    """
    from skimage.measure import marching_cubes

    if resolution < 16:
        raise GeneratorError("resolution >= 16 required")
    n = int(resolution)
    # Distinct irrational offsets per axis keep grid samples off the level set
    # (equal offsets hit exact zeros, e.g. three phases 2pi/3 apart).
    offset = np.mod(np.arange(1, 4) * (math.sqrt(5.0) - 1.0) / 2.0, 1.0)
    idx = np.arange(n + 1) % n
    X, Y, Z = np.meshgrid((idx + offset[0]) / n, (idx + offset[1]) / n, (idx + offset[2]) / n,
                          indexing="ij")
    field_ = np.cos(2 * np.pi * X) + np.cos(2 * np.pi * Y) + np.cos(2 * np.pi * Z)
    if np.abs(field_).min() < 1e-9:
        raise GeneratorError("marching-cubes topology failure: grid sample on the level set")
    # grid units; sample n is an exact copy of sample 0
    verts, faces, _, _ = marching_cubes(field_, level=0.0, allow_degenerate=False, method="lewiner")
    canon = np.mod(verts, n)
    key = np.round(canon * 1e6).astype(np.int64) % (n * 10**6)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    verts = (verts + offset) / n
    canon = (canon + offset) / n
    new_pos = canon[first]
    # Newton steps onto the level set; the moves are O(h^2), far below any
    # shift threshold, so the same displacement is applied to the raw copies
    moved = _project_to_level_set(new_pos)
    verts = verts + (moved - new_pos)[inverse]
    new_pos = moved
    raw = verts[faces]
    new_faces = inverse[faces]
    shifts: dict[tuple[int, int], tuple[int, int, int]] = {}
    for f in range(len(new_faces)):
        for k in range(3):
            kn = (k + 1) % 3
            a, b = int(new_faces[f, k]), int(new_faces[f, kn])
            d = (raw[f, kn] - raw[f, k]) - (new_pos[b] - new_pos[a])
            s = tuple(int(v) for v in np.round(d))
            if any(s):
                prev = shifts.get((a, b))
                if prev is not None and prev != s:
                    raise GeneratorError("marching-cubes topology failure (inconsistent shifts)")
                shifts[(a, b)] = s
    try:
        mesh = Mesh(new_pos, new_faces, "flattorus3", shifts, np.eye(3))
        topo = topology(mesh)
    except MeshError as exc:
        raise GeneratorError(f"marching-cubes topology failure: {exc}") from exc
    if topo.genus != 3:
        raise GeneratorError(f"marching-cubes topology failure: genus {topo.genus} != 3")
    mesh = _smooth_on_level_set(mesh, SCHWARZ_SMOOTHING)
    return GeneratorOutput("schwarz-p", {"resolution": n}, mesh, None, None, None, approximate=True)


GENERATORS = {
    "clifford": clifford_torus,
    "equatorial-sphere": equatorial_sphere,
    "flat-torus": flat_torus_surface,
    "round-sphere": round_sphere,
    "schwarz-p": schwarz_p,
}
