"""Hot numeric kernels with numba and pure-numpy twin implementations.

Kernels here are the per-edge convolution (forward and backward) and the raw
edge geometry pass (lengths, dihedral angles, opposite angles, length/height
ratios). Angles use atan2 of cross/dot, which is the numerically stable
equivalent of arccos of the clamped dot product.

Dispatch: by default each kernel uses whichever implementation wins on the
shapes this package runs (see benchmarks/bench_kernels.py): the geometry
pass compiles to a ~8x faster numba loop, while the convolution is matmul
shaped and stays with BLAS-backed numpy beyond a handful of channels. Set
``MESHFORMS_NUMBA=0`` to force pure numpy everywhere (also the automatic
fallback when numba is missing) or ``MESHFORMS_NUMBA=1`` to force the numba
twins everywhere. Both implementations of every kernel stay importable
(``*_numpy`` / ``*_numba``) for the benchmark and the equivalence tests.
"""

from __future__ import annotations

import os

import numpy as np

_ENV = os.environ.get("MESHFORMS_NUMBA", "").strip()

if _ENV == "0":
    _HAVE_NUMBA = False
else:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised only without numba
        if _ENV == "1":
            raise
        _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA


# ---------------------------------------------------------------------------
# convolution over the ordered 4-neighbor ring


def conv_forward_numpy(features, neighbors, weights, bias):
    """out(e) = bias + w0 f(e) + w1 |f(a)-f(c)| + w2 (f(a)+f(c))
                       + w3 |f(b)-f(d)| + w4 (f(b)+f(d))

    Sentinel (-1) neighbor slots contribute zero vectors.
    """
    E, C = features.shape
    padded = np.vstack([features, np.zeros((1, C))])
    idx = np.where(neighbors < 0, E, neighbors)
    fa = padded[idx[:, 0]]
    fb = padded[idx[:, 1]]
    fc = padded[idx[:, 2]]
    fd = padded[idx[:, 3]]
    d1 = fa - fc
    d2 = fb - fd
    out = features @ weights[0]
    out += np.abs(d1) @ weights[1]
    out += (fa + fc) @ weights[2]
    out += np.abs(d2) @ weights[3]
    out += (fb + fd) @ weights[4]
    out += bias
    return out


def conv_backward_numpy(grad_out, features, neighbors, weights):
    """Reverse-mode gradients; |x| has subgradient 0 at x = 0."""
    E, C = features.shape
    padded = np.vstack([features, np.zeros((1, C))])
    idx = np.where(neighbors < 0, E, neighbors)
    fa = padded[idx[:, 0]]
    fb = padded[idx[:, 1]]
    fc = padded[idx[:, 2]]
    fd = padded[idx[:, 3]]
    s1 = np.sign(fa - fc)
    s2 = np.sign(fb - fd)

    grad_w = np.empty_like(weights)
    grad_w[0] = features.T @ grad_out
    grad_w[1] = np.abs(fa - fc).T @ grad_out
    grad_w[2] = (fa + fc).T @ grad_out
    grad_w[3] = np.abs(fb - fd).T @ grad_out
    grad_w[4] = (fb + fd).T @ grad_out
    grad_bias = grad_out.sum(axis=0)

    t1 = grad_out @ weights[1].T
    t2 = grad_out @ weights[2].T
    t3 = grad_out @ weights[3].T
    t4 = grad_out @ weights[4].T

    grad_f = np.zeros((E + 1, C))
    np.add.at(grad_f, idx[:, 0], s1 * t1 + t2)
    np.add.at(grad_f, idx[:, 2], -s1 * t1 + t2)
    np.add.at(grad_f, idx[:, 1], s2 * t3 + t4)
    np.add.at(grad_f, idx[:, 3], -s2 * t3 + t4)
    grad_f = grad_f[:E]
    grad_f += grad_out @ weights[0].T
    return grad_f, grad_w, grad_bias


def _conv_forward_loop(features, neighbors, weights, bias):
    E, C = features.shape
    Co = bias.shape[0]
    out = np.empty((E, Co))
    for e in range(E):
        na, nb, nc, nd = neighbors[e, 0], neighbors[e, 1], neighbors[e, 2], neighbors[e, 3]
        for o in range(Co):
            acc = bias[o]
            for c in range(C):
                fa = features[na, c] if na >= 0 else 0.0
                fb = features[nb, c] if nb >= 0 else 0.0
                fc = features[nc, c] if nc >= 0 else 0.0
                fd = features[nd, c] if nd >= 0 else 0.0
                acc += features[e, c] * weights[0, c, o]
                acc += abs(fa - fc) * weights[1, c, o]
                acc += (fa + fc) * weights[2, c, o]
                acc += abs(fb - fd) * weights[3, c, o]
                acc += (fb + fd) * weights[4, c, o]
            out[e, o] = acc
    return out


def _conv_backward_loop(grad_out, features, neighbors, weights):
    E, C = features.shape
    Co = grad_out.shape[1]
    grad_w = np.zeros(weights.shape)
    grad_bias = np.zeros(Co)
    grad_f = np.zeros((E, C))
    for e in range(E):
        na, nb, nc, nd = neighbors[e, 0], neighbors[e, 1], neighbors[e, 2], neighbors[e, 3]
        for o in range(Co):
            g = grad_out[e, o]
            grad_bias[o] += g
            for c in range(C):
                fa = features[na, c] if na >= 0 else 0.0
                fb = features[nb, c] if nb >= 0 else 0.0
                fc = features[nc, c] if nc >= 0 else 0.0
                fd = features[nd, c] if nd >= 0 else 0.0
                d1 = fa - fc
                d2 = fb - fd
                grad_w[0, c, o] += features[e, c] * g
                grad_w[1, c, o] += abs(d1) * g
                grad_w[2, c, o] += (fa + fc) * g
                grad_w[3, c, o] += abs(d2) * g
                grad_w[4, c, o] += (fb + fd) * g
                grad_f[e, c] += weights[0, c, o] * g
                s1 = 0.0
                if d1 > 0.0:
                    s1 = 1.0
                elif d1 < 0.0:
                    s1 = -1.0
                s2 = 0.0
                if d2 > 0.0:
                    s2 = 1.0
                elif d2 < 0.0:
                    s2 = -1.0
                ga = (s1 * weights[1, c, o] + weights[2, c, o]) * g
                gc = (-s1 * weights[1, c, o] + weights[2, c, o]) * g
                gb = (s2 * weights[3, c, o] + weights[4, c, o]) * g
                gd = (-s2 * weights[3, c, o] + weights[4, c, o]) * g
                if na >= 0:
                    grad_f[na, c] += ga
                if nc >= 0:
                    grad_f[nc, c] += gc
                if nb >= 0:
                    grad_f[nb, c] += gb
                if nd >= 0:
                    grad_f[nd, c] += gd
    return grad_f, grad_w, grad_bias


# ---------------------------------------------------------------------------
# raw edge geometry


def edge_geometry_numpy(vertices, edges, edge_faces, faces):
    """Per-edge length, dihedral angle, opposite angles, length/height ratios.

    Returns (lengths, dihedrals, opposite_angle_pairs, ratio_pairs, bad_face)
    where pairs are unsorted per incident-face slot and missing boundary slots
    are zero. ``bad_face`` is the first zero-area face index, or -1.
    """
    tri = vertices[faces]
    normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    cross_norm = np.linalg.norm(normal, axis=1)
    bad = np.flatnonzero(cross_norm == 0.0)
    bad_face = int(bad[0]) if len(bad) else -1
    safe = np.where(cross_norm == 0.0, 1.0, cross_norm)
    unit = normal / safe[:, None]

    u = vertices[edges[:, 0]]
    v = vertices[edges[:, 1]]
    lengths = np.linalg.norm(u - v, axis=1)

    interior = edge_faces[:, 1] >= 0
    f1 = edge_faces[:, 0]
    f2 = np.where(interior, edge_faces[:, 1], f1)
    n1 = unit[f1]
    n2 = unit[f2]
    cr = np.cross(n1, n2)
    dihedral = np.arctan2(np.linalg.norm(cr, axis=1), (n1 * n2).sum(axis=1))
    dihedral = np.where(interior, dihedral, 0.0)

    face_vertex_sum = faces.sum(axis=1)
    edge_vertex_sum = edges.sum(axis=1)
    opp_angles = np.zeros((len(edges), 2))
    ratios = np.zeros((len(edges), 2))
    for slot in range(2):
        fk = edge_faces[:, slot]
        present = fk >= 0
        fk_safe = np.where(present, fk, 0)
        apex = face_vertex_sum[fk_safe] - edge_vertex_sum
        w = vertices[apex]
        wu = u - w
        wv = v - w
        cw = np.cross(wu, wv)
        ang = np.arctan2(np.linalg.norm(cw, axis=1), (wu * wv).sum(axis=1))
        opp_angles[:, slot] = np.where(present, ang, 0.0)
        ratios[:, slot] = np.where(
            present, lengths * lengths / safe[fk_safe], 0.0
        )
    return lengths, dihedral, opp_angles, ratios, bad_face


def _edge_geometry_loop(vertices, edges, edge_faces, faces):
    E = edges.shape[0]
    F = faces.shape[0]
    unit = np.empty((F, 3))
    cross_norm = np.empty(F)
    bad_face = -1
    for fi in range(F):
        ax = vertices[faces[fi, 1], 0] - vertices[faces[fi, 0], 0]
        ay = vertices[faces[fi, 1], 1] - vertices[faces[fi, 0], 1]
        az = vertices[faces[fi, 1], 2] - vertices[faces[fi, 0], 2]
        bx = vertices[faces[fi, 2], 0] - vertices[faces[fi, 0], 0]
        by = vertices[faces[fi, 2], 1] - vertices[faces[fi, 0], 1]
        bz = vertices[faces[fi, 2], 2] - vertices[faces[fi, 0], 2]
        nx = ay * bz - az * by
        ny = az * bx - ax * bz
        nz = ax * by - ay * bx
        nn = np.sqrt(nx * nx + ny * ny + nz * nz)
        cross_norm[fi] = nn
        if nn == 0.0:
            if bad_face < 0:
                bad_face = fi
            unit[fi, 0] = 0.0
            unit[fi, 1] = 0.0
            unit[fi, 2] = 0.0
        else:
            unit[fi, 0] = nx / nn
            unit[fi, 1] = ny / nn
            unit[fi, 2] = nz / nn

    lengths = np.empty(E)
    dihedral = np.empty(E)
    opp_angles = np.zeros((E, 2))
    ratios = np.zeros((E, 2))
    for e in range(E):
        ui = edges[e, 0]
        vi = edges[e, 1]
        dx = vertices[ui, 0] - vertices[vi, 0]
        dy = vertices[ui, 1] - vertices[vi, 1]
        dz = vertices[ui, 2] - vertices[vi, 2]
        ln = np.sqrt(dx * dx + dy * dy + dz * dz)
        lengths[e] = ln
        f1 = edge_faces[e, 0]
        f2 = edge_faces[e, 1]
        if f2 >= 0:
            cx = unit[f1, 1] * unit[f2, 2] - unit[f1, 2] * unit[f2, 1]
            cy = unit[f1, 2] * unit[f2, 0] - unit[f1, 0] * unit[f2, 2]
            cz = unit[f1, 0] * unit[f2, 1] - unit[f1, 1] * unit[f2, 0]
            dot = (
                unit[f1, 0] * unit[f2, 0]
                + unit[f1, 1] * unit[f2, 1]
                + unit[f1, 2] * unit[f2, 2]
            )
            dihedral[e] = np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz), dot)
        else:
            dihedral[e] = 0.0
        for slot in range(2):
            fk = edge_faces[e, slot]
            if fk < 0:
                continue
            apex = faces[fk, 0] + faces[fk, 1] + faces[fk, 2] - ui - vi
            ax = vertices[ui, 0] - vertices[apex, 0]
            ay = vertices[ui, 1] - vertices[apex, 1]
            az = vertices[ui, 2] - vertices[apex, 2]
            bx = vertices[vi, 0] - vertices[apex, 0]
            by = vertices[vi, 1] - vertices[apex, 1]
            bz = vertices[vi, 2] - vertices[apex, 2]
            cx = ay * bz - az * by
            cy = az * bx - ax * bz
            cz = ax * by - ay * bx
            dot = ax * bx + ay * by + az * bz
            opp_angles[e, slot] = np.arctan2(
                np.sqrt(cx * cx + cy * cy + cz * cz), dot
            )
            if cross_norm[fk] > 0.0:
                ratios[e, slot] = ln * ln / cross_norm[fk]
    return lengths, dihedral, opp_angles, ratios, bad_face


if _HAVE_NUMBA:
    conv_forward_numba = njit(cache=True)(_conv_forward_loop)
    conv_backward_numba = njit(cache=True)(_conv_backward_loop)
    edge_geometry_numba = njit(cache=True)(_edge_geometry_loop)
    if _ENV == "1":
        conv_forward = conv_forward_numba
        conv_backward = conv_backward_numba
    else:
        conv_forward = conv_forward_numpy
        conv_backward = conv_backward_numpy
    edge_geometry = edge_geometry_numba
else:
    conv_forward_numba = None
    conv_backward_numba = None
    edge_geometry_numba = None
    conv_forward = conv_forward_numpy
    conv_backward = conv_backward_numpy
    edge_geometry = edge_geometry_numpy
