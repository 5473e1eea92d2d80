"""Vectorised numpy versions of the per-face kernels.

Used when the compiled ``_core`` extension is unavailable. Signatures and
results match ``_core`` to rounding.
"""

import numpy as np


def triangle_layout(pos):
    """Isometric planar layout of each triangle.

    Parameters
    ----------
    pos : (F, 3, d) float array
        Lifted corner positions.

    Returns
    -------
    layout : (F, 3, 2) float array
        Corner 0 at the origin, corner 1 on the positive x-axis, corner 2 in
        the upper half plane.
    area : (F,) float array
    """
    pos = np.ascontiguousarray(pos, dtype=float)
    e1 = pos[:, 1] - pos[:, 0]
    e2 = pos[:, 2] - pos[:, 0]
    l1 = np.sqrt(np.einsum("ij,ij->i", e1, e1))
    x2 = np.einsum("ij,ij->i", e1, e2) / l1
    y2 = np.sqrt(np.maximum(np.einsum("ij,ij->i", e2, e2) - x2 * x2, 0.0))
    layout = np.zeros((len(pos), 3, 2))
    layout[:, 1, 0] = l1
    layout[:, 2, 0] = x2
    layout[:, 2, 1] = y2
    return layout, 0.5 * l1 * y2


def cotan_weights(layout):
    """(F, 3) cotangent of the interior angle at each corner."""
    layout = np.asarray(layout, dtype=float)
    u = np.roll(layout, -1, axis=1) - layout
    v = np.roll(layout, 1, axis=1) - layout
    dot = np.einsum("fki,fki->fk", u, v)
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return dot / cross


def edge_lstsq(layout, rhs):
    """Per-face least-squares fit of linear forms from halfedge data.

    Finds ``x[f, :, m]`` minimising ``sum_k (e_k . x - rhs[f, k, m])**2`` where
    ``e_k`` is the halfedge from corner ``k`` to ``k + 1``.

    Parameters
    ----------
    layout : (F, 3, 2) float array
    rhs : (F, 3, M) float array

    Returns
    -------
    (F, 2, M) float array
    """
    layout = np.asarray(layout, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    e = np.roll(layout, -1, axis=1) - layout
    a = np.einsum("fki,fkj->fij", e, e)
    b = np.einsum("fki,fkm->fim", e, rhs)
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    inv = np.empty_like(a)
    inv[:, 0, 0] = a[:, 1, 1]
    inv[:, 1, 1] = a[:, 0, 0]
    inv[:, 0, 1] = -a[:, 0, 1]
    inv[:, 1, 0] = -a[:, 1, 0]
    inv /= det[:, None, None]
    return np.einsum("fij,fjm->fim", inv, b)


def vertex_scatter(faces, values, num_vertices):
    """Sum per-corner values into vertices, in face order.

    Parameters
    ----------
    faces : (F, 3) int array
    values : (F, 3, M) float array
        Contribution of each corner.
    """
    faces = np.asarray(faces, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    idx = faces.reshape(-1)
    flat = values.reshape(len(idx), -1)
    out = np.zeros((num_vertices, flat.shape[1]))
    for m in range(flat.shape[1]):
        out[:, m] = np.bincount(idx, weights=flat[:, m], minlength=num_vertices)
    return out
