"""Shared geometry fixtures and fuzz-corpus helpers."""

import numpy as np
import pytest

from meshforms import DatasetSpec, Mesh, build_edge_topology, generate


def oriented_closed_mesh(vertices, face_sets):
    """Orient each face triple outward from the centroid (for convex shells)."""
    vertices = np.asarray(vertices, dtype=float)
    center = vertices.mean(axis=0)
    faces = []
    for i, j, k in face_sets:
        p, q, r = vertices[[i, j, k]]
        normal = np.cross(q - p, r - p)
        if normal @ (p - center) < 0:
            faces.append((i, k, j))
        else:
            faces.append((i, j, k))
    return Mesh(vertices, np.array(faces))


@pytest.fixture
def tetrahedron():
    verts = np.array(
        [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
    )
    return oriented_closed_mesh(verts, [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])


@pytest.fixture
def flat_pair():
    """Two coplanar triangles sharing the unit edge (0)-(1), same winding."""
    verts = np.array(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.5, 1.0, 0.0), (0.5, -1.0, 0.0)]
    )
    return Mesh(verts, np.array([(0, 1, 2), (1, 0, 3)]))


@pytest.fixture
def equilateral_flat_pair():
    s = np.sqrt(3.0) / 2.0
    verts = np.array(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.5, s, 0.0), (0.5, -s, 0.0)]
    )
    return Mesh(verts, np.array([(0, 1, 2), (1, 0, 3)]))


@pytest.fixture
def perpendicular_pair():
    verts = np.array(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.5, 1.0, 0.0), (0.5, 0.0, -1.0)]
    )
    return Mesh(verts, np.array([(0, 1, 2), (1, 0, 3)]))


@pytest.fixture
def square_diagonal_pair():
    """Unit square split along its diagonal; both opposite angles are right."""
    verts = np.array(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)]
    )
    return Mesh(verts, np.array([(0, 1, 2), (0, 2, 3)]))


@pytest.fixture(scope="session")
def icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = []
    for a, b in [(1, phi), (-1, phi), (1, -phi), (-1, -phi)]:
        verts.extend([(a, b, 0.0), (0.0, a, b), (b, 0.0, a)])
    verts = np.array(verts)
    from itertools import combinations

    face_sets = []
    for i, j, k in combinations(range(12), 3):
        p, q, r = verts[[i, j, k]]
        n = np.cross(q - p, r - p)
        d = verts @ n - p @ n
        if (d <= 1e-9).all() or (d >= -1e-9).all():
            face_sets.append((i, j, k))
    return oriented_closed_mesh(verts, face_sets)


def fuzz_corpus(count, seed=0, edge_range=(150, 400)):
    """Random closed manifold meshes of mixed families."""
    per_class = -(-count // 6)
    spec = DatasetSpec(
        "primitive-zoo", classes=6, per_class=per_class, edge_range=edge_range, seed=seed
    )
    return [s.mesh for s in generate(spec)][:count]


@pytest.fixture(scope="session")
def small_corpus():
    return fuzz_corpus(20, seed=11)


def random_interior_edge(topology, rng):
    interior = np.flatnonzero(topology.interior_mask)
    return int(interior[rng.integers(len(interior))])
