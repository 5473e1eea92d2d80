"""Triangulated closed surfaces: connectivity, validation, topology and file I/O.

The OFF/OBJ readers understand a small comment-based extension used for
flat-torus meshes::

    # ambient flattorus3
    # lattice 1 0 0 0 1 0 0 0 1
    # shift 12 13 1 0 0

A shift line states that the chart position of the head vertex, seen from the
tail, is ``x[head] + lattice @ shift``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

AMBIENT_TAGS = ("euclidean3", "sphere3", "flattorus3")
AMBIENT_DIM = {"euclidean3": 3, "sphere3": 4, "flattorus3": 3}

AREA_RTOL = 1e-12
SPHERE_NORM_TOL = 1e-12


class MeshError(ValueError):
    """Base class for mesh problems."""


class MeshParseError(MeshError):
    """Malformed mesh file."""


class MeshValidationError(MeshError):
    """The mesh violates one of the closed/manifold/oriented invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class Mesh:
    """Immutable closed oriented triangle mesh.

    Parameters
    ----------
    vertices : array_like of shape (V, 3) or (V, 4)
        Chart positions. Four coordinates for ``sphere3`` (points of the unit
        3-sphere in 4-space), three otherwise.
    faces : array_like of shape (F, 3)
        Counterclockwise vertex triples.
    ambient_tag : str
        One of ``euclidean3``, ``sphere3``, ``flattorus3``.
    edge_shifts : dict, optional
        ``{(tail, head): (s1, s2, s3)}`` integer lattice translations. Only
        allowed for ``flattorus3``. Missing edges have zero shift; giving both
        directions of an edge requires them to be negatives of each other.
    lattice : array_like of shape (3, 3), optional
        Column generators of the torus lattice (default identity).
    validate : bool
        Run :meth:`validate` and raise on any violation.
    """

    def __init__(
        self,
        vertices,
        faces,
        ambient_tag: str = "euclidean3",
        edge_shifts: dict | None = None,
        lattice=None,
        validate: bool = True,
    ):
        if ambient_tag not in AMBIENT_TAGS:
            raise MeshError(f"unknown ambient {ambient_tag!r}")
        vertices = np.array(vertices, dtype=float)
        faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if vertices.ndim != 2 or vertices.shape[1] != AMBIENT_DIM[ambient_tag]:
            raise MeshValidationError(
                [f"vertex dimension {vertices.shape[-1] if vertices.ndim == 2 else '?'} "
                 f"does not match ambient {ambient_tag} "
                 f"(expected {AMBIENT_DIM[ambient_tag]})"]
            )
        if edge_shifts and ambient_tag != "flattorus3":
            raise MeshValidationError(["edge shifts are only allowed for flattorus3"])
        if lattice is not None and ambient_tag != "flattorus3":
            raise MeshValidationError(["a lattice is only allowed for flattorus3"])
        if ambient_tag == "flattorus3":
            lattice = np.eye(3) if lattice is None else np.array(lattice, dtype=float)
            if lattice.shape != (3, 3):
                raise MeshValidationError(["lattice must be 3x3"])
        vertices.setflags(write=False)
        faces.setflags(write=False)
        if lattice is not None:
            lattice.setflags(write=False)
        self.vertices = vertices
        self.faces = faces
        self.ambient_tag = ambient_tag
        self.lattice = lattice
        self.edge_shifts = {
            (int(a), int(b)): tuple(int(s) for s in v) for (a, b), v in (edge_shifts or {}).items()
        }
        if validate:
            violations = self.validate()
            if violations:
                raise MeshValidationError(violations)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    # -- connectivity --------------------------------------------------------

    @cached_property
    def _halfedges(self):
        f = self.faces
        tails = f.reshape(-1)
        heads = np.roll(f, -1, axis=1).reshape(-1)
        return tails, heads

    @cached_property
    def _edge_table(self):
        tails, heads = self._halfedges
        lo = np.minimum(tails, heads)
        hi = np.maximum(tails, heads)
        keys = np.stack([lo, hi], axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        sign = np.where(tails == lo, 1, -1).astype(np.int64)
        return edges, inverse, sign

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) vertex pairs with ``edges[:, 0] < edges[:, 1]``."""
        e = self._edge_table[0]
        e.setflags(write=False)
        return e

    @cached_property
    def face_edges(self) -> np.ndarray:
        """(F, 3) edge index of halfedge ``faces[f, k] -> faces[f, k+1]``."""
        return self._edge_table[1].reshape(-1, 3)

    @cached_property
    def face_edge_signs(self) -> np.ndarray:
        """(F, 3) +1 where the halfedge agrees with the stored edge direction."""
        return self._edge_table[2].reshape(-1, 3)

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(E, 2) the face on the positive side, then the negative side."""
        ef = np.full((self.num_edges, 2), -1, dtype=np.int64)
        fe = self.face_edges.reshape(-1)
        sg = self.face_edge_signs.reshape(-1)
        fid = np.repeat(np.arange(self.num_faces), 3)
        ef[fe[sg > 0], 0] = fid[sg > 0]
        ef[fe[sg < 0], 1] = fid[sg < 0]
        return ef

    @cached_property
    def edge_shift_array(self) -> np.ndarray:
        """(E, 3) integer shift along each stored edge direction (lo -> hi)."""
        out = np.zeros((self.num_edges, 3), dtype=np.int64)
        if not self.edge_shifts:
            return out
        lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
        for (a, b), s in self.edge_shifts.items():
            if (a, b) in lookup:
                out[lookup[(a, b)]] = s
            elif (b, a) in lookup:
                out[lookup[(b, a)]] = [-x for x in s]
        return out

    @cached_property
    def face_shifts(self) -> np.ndarray:
        """(F, 3, 3) shift of halfedge ``k`` of every face."""
        return self.edge_shift_array[self.face_edges] * self.face_edge_signs[..., None]

    def lifted_faces(self) -> np.ndarray:
        """(F, 3, d) vertex positions of each face in a common chart.

        Vertex 0 of a face stays at its stored position; vertices 1 and 2 are
        translated along the shifts of the halfedges leaving vertex 0.
        """
        pos = self.vertices[self.faces].copy()
        if self.ambient_tag == "flattorus3" and self.edge_shifts:
            sh = self.face_shifts
            lat = self.lattice
            pos[:, 1] += sh[:, 0] @ lat.T
            pos[:, 2] -= sh[:, 2] @ lat.T
        return pos

    # -- validation ----------------------------------------------------------

    def validate(self) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        out: list[str] = []
        V, F = self.num_vertices, self.num_faces
        f = self.faces
        if F == 0:
            return ["mesh has no faces"]
        if f.min() < 0 or f.max() >= V:
            return ["face references a missing vertex"]
        if not np.all(np.isfinite(self.vertices)):
            out.append("non-finite vertex coordinates")
        rep = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if rep.any():
            out.append(f"degenerate face: {int(rep.sum())} faces repeat a vertex index")
            return out

        tails, heads = self._halfedges
        _, inverse, sign = self._edge_table
        ecount = np.bincount(inverse, minlength=self.num_edges)
        pos = np.bincount(inverse, weights=(sign > 0), minlength=self.num_edges)
        if (ecount == 1).any():
            out.append(f"open boundary: {int((ecount == 1).sum())} edges have one face")
        if (ecount > 2).any():
            out.append("non-manifold edge: an edge is shared by more than two faces")
        elif ((ecount == 2) & (pos != 1)).any():
            out.append("inconsistent orientation: neighbouring faces traverse an edge "
                       "in the same direction")
        if out:
            return out

        used = np.zeros(V, dtype=bool)
        used[f.reshape(-1)] = True
        if not used.all():
            out.append(f"{int((~used).sum())} isolated vertices")
        bad = self._nonmanifold_vertices()
        if bad:
            out.append(f"non-manifold vertex: {len(bad)} vertices have a disconnected fan")

        if self.ambient_tag == "sphere3":
            dev = np.abs(np.linalg.norm(self.vertices, axis=1) - 1.0)
            if dev.max() > SPHERE_NORM_TOL:
                out.append(f"off-sphere vertex: max | |p| - 1 | = {dev.max():.3e}")

        if self.ambient_tag == "flattorus3":
            if abs(np.linalg.det(self.lattice)) < 1e-12:
                out.append("lattice is singular")
            edge_set = {(int(a), int(b)) for a, b in self.edges}
            for (a, b), s in self.edge_shifts.items():
                if (min(a, b), max(a, b)) not in edge_set:
                    out.append(f"mismatched shifts: shift given for non-edge {a}->{b}")
                    break
                rev = self.edge_shifts.get((b, a))
                if rev is not None and any(x != -y for x, y in zip(s, rev)):
                    out.append(f"mismatched shifts: edge {a}->{b} shift {s} vs reverse {rev}")
                    break

        if not out:
            areas = _triangle_areas(self.lifted_faces())
            thresh = AREA_RTOL * areas.mean()
            if (areas <= thresh).any():
                out.append(f"degenerate face: {int((areas <= thresh).sum())} faces below area tolerance")
        return out

    def _nonmanifold_vertices(self) -> list[int]:
        # Each corner maps the outgoing neighbour to the incoming one; a manifold
        # vertex has exactly one cycle through its fan.
        nxt: dict[tuple[int, int], int] = {}
        f = self.faces
        for a, b, c in f.tolist():
            nxt[(a, b)] = c
            nxt[(b, c)] = a
            nxt[(c, a)] = b
        seen: set[tuple[int, int]] = set()
        bad = []
        cycles: dict[int, int] = {}
        for key in nxt:
            if key in seen:
                continue
            v = key[0]
            cycles[v] = cycles.get(v, 0) + 1
            cur = key
            while cur not in seen:
                seen.add(cur)
                cur = (v, nxt[cur])
                if cur not in nxt:
                    break
        for v, n in cycles.items():
            if n != 1:
                bad.append(v)
        return bad

    def relabeled(self, perm) -> "Mesh":
        """Copy of the mesh with vertex ``i`` moved to index ``perm[i]``."""
        perm = np.asarray(perm)
        verts = np.empty_like(self.vertices)
        verts[perm] = self.vertices
        shifts = {(int(perm[a]), int(perm[b])): s for (a, b), s in self.edge_shifts.items()}
        return Mesh(verts, perm[self.faces], self.ambient_tag, shifts or None,
                    self.lattice if self.ambient_tag == "flattorus3" else None)


def _triangle_areas(pos: np.ndarray) -> np.ndarray:
    e1 = pos[:, 1] - pos[:, 0]
    e2 = pos[:, 2] - pos[:, 0]
    a = np.einsum("ij,ij->i", e1, e1)
    b = np.einsum("ij,ij->i", e2, e2)
    c = np.einsum("ij,ij->i", e1, e2)
    return 0.5 * np.sqrt(np.maximum(a * b - c * c, 0.0))


@dataclass(frozen=True)
class TopologyReport:
    num_vertices: int
    num_edges: int
    num_faces: int
    euler_characteristic: int
    genus: int
    is_valid: bool = True
    violations: list = field(default_factory=list)

    @property
    def betti1(self) -> int:
        return 2 * self.genus

    def to_dict(self) -> dict:
        return {
            "V": self.num_vertices,
            "E": self.num_edges,
            "F": self.num_faces,
            "chi": self.euler_characteristic,
            "genus": self.genus,
        }


def genus_from_euler(chi: int) -> int:
    if (2 - chi) % 2 or chi > 2:
        raise MeshError(f"Euler characteristic {chi} is not that of a closed orientable surface")
    return (2 - chi) // 2


def topology(mesh: Mesh) -> TopologyReport:
    V, E, F = mesh.num_vertices, mesh.num_edges, mesh.num_faces
    chi = V - E + F
    violations = mesh.validate()
    return TopologyReport(V, E, F, chi, genus_from_euler(chi), not violations, violations)


# -- file I/O -----------------------------------------------------------------


def _parse_extension(line: str, ext: dict):
    parts = line.lstrip("#").split()
    if not parts:
        return
    key = parts[0].lower()
    try:
        if key == "ambient" and len(parts) >= 2:
            ext["ambient"] = parts[1].lower()
        elif key == "lattice":
            vals = [float(x) for x in parts[1:]]
            if len(vals) != 9:
                raise MeshParseError("lattice line needs 9 numbers")
            ext["lattice"] = np.array(vals).reshape(3, 3)
        elif key == "shift":
            if len(parts) != 6:
                raise MeshParseError("shift line needs: v_from v_to s1 s2 s3")
            a, b, s1, s2, s3 = (int(x) for x in parts[1:])
            ext.setdefault("shifts", {})
            if (a, b) in ext["shifts"]:
                raise MeshParseError(f"duplicate shift for edge {a}->{b}")
            ext["shifts"][(a, b)] = (s1, s2, s3)
    except ValueError as exc:
        if isinstance(exc, MeshParseError):
            raise
        raise MeshParseError(f"bad extension line: {line.strip()!r}") from exc


def _read_off(lines):
    ext: dict = {}
    data = []
    for raw in lines:
        s = raw.strip()
        if s.startswith("#"):
            _parse_extension(s, ext)
            continue
        s = s.split("#", 1)[0].strip()
        if s:
            data.append(s)
    if not data:
        raise MeshParseError("empty OFF file")
    header = data[0].split()
    if header[0] not in ("OFF", "4OFF"):
        raise MeshParseError(f"not an OFF file (header {header[0]!r})")
    rest = header[1:]
    idx = 1
    if not rest:
        if len(data) < 2:
            raise MeshParseError("missing OFF counts line")
        rest = data[1].split()
        idx = 2
    try:
        nv, nf = int(rest[0]), int(rest[1])
    except (ValueError, IndexError) as exc:
        raise MeshParseError("bad OFF counts line") from exc
    if len(data) < idx + nv + nf:
        raise MeshParseError("OFF file truncated")
    try:
        verts = [[float(x) for x in data[idx + i].split()] for i in range(nv)]
    except ValueError as exc:
        raise MeshParseError("bad vertex line") from exc
    if len({len(v) for v in verts}) > 1:
        raise MeshParseError("vertices have inconsistent coordinate counts")
    faces = []
    for i in range(nf):
        try:
            vals = [int(x) for x in data[idx + nv + i].split()]
        except ValueError as exc:
            raise MeshParseError("bad face line") from exc
        if not vals or vals[0] != 3 or len(vals) < 4:
            raise MeshParseError("only triangular faces are supported")
        faces.append(vals[1:4])
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64).reshape(-1, 3), ext


def _read_obj(lines):
    ext: dict = {}
    verts, faces = [], []
    for raw in lines:
        s = raw.strip()
        if s.startswith("#"):
            _parse_extension(s, ext)
            continue
        parts = s.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    k = int(tok.split("/")[0])
                    idx.append(k - 1 if k > 0 else len(verts) + k)
                if len(idx) != 3:
                    raise MeshParseError("only triangular faces are supported")
                faces.append(idx)
        except ValueError as exc:
            raise MeshParseError(f"bad OBJ line: {s!r}") from exc
    if len({len(v) for v in verts}) > 1:
        raise MeshParseError("vertices have inconsistent coordinate counts")
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64).reshape(-1, 3), ext


def load_mesh(path, ambient_tag: str | None = None) -> Mesh:
    """Read and validate an OFF or OBJ file.

    ``ambient_tag`` defaults to the file's ``# ambient`` line, then to
    ``euclidean3``; a conflict between the two is an error.
    """
    path = os.fspath(path)
    with open(path) as fh:
        lines = fh.readlines()
    if path.lower().endswith(".obj"):
        verts, faces, ext = _read_obj(lines)
    else:
        verts, faces, ext = _read_off(lines)
    declared = ext.get("ambient")
    if declared is not None and declared not in AMBIENT_TAGS:
        raise MeshParseError(f"unknown ambient {declared!r}")
    if ambient_tag is not None and declared is not None and ambient_tag != declared:
        raise MeshValidationError([f"file declares ambient {declared}, requested {ambient_tag}"])
    tag = ambient_tag or declared or "euclidean3"
    return Mesh(verts, faces, tag, ext.get("shifts"), ext.get("lattice"))


def _fmt(x: float) -> str:
    return "%.17g" % x


def _extension_lines(mesh: Mesh) -> list[str]:
    out = [f"# ambient {mesh.ambient_tag}"]
    if mesh.ambient_tag == "flattorus3":
        out.append("# lattice " + " ".join(_fmt(x) for x in mesh.lattice.reshape(-1)))
        for (a, b), s in sorted(mesh.edge_shifts.items()):
            if any(s):
                out.append(f"# shift {a} {b} {s[0]} {s[1]} {s[2]}")
    return out


def write_mesh(mesh: Mesh, path, header_comments=()) -> None:
    """Write OFF (default) or OBJ (by ``.obj`` suffix) with the extension lines."""
    path = os.fspath(path)
    lines = []
    if path.lower().endswith(".obj"):
        lines += [f"# {c}" for c in header_comments]
        lines += _extension_lines(mesh)
        lines += ["v " + " ".join(_fmt(x) for x in v) for v in mesh.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    else:
        lines.append("4OFF" if mesh.vertices.shape[1] == 4 else "OFF")
        lines += [f"# {c}" for c in header_comments]
        lines += _extension_lines(mesh)
        lines.append(f"{mesh.num_vertices} {mesh.num_faces} {mesh.num_edges}")
        lines += [" ".join(_fmt(x) for x in v) for v in mesh.vertices]
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces.tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
