"""Edge-topology construction and manifold validation."""

import numpy as np
import pytest

from meshforms import (
    Mesh,
    TopologyError,
    build_edge_topology,
    euler_genus,
    parse_obj,
    validate_manifold,
    write_obj,
)
from meshforms.topology import SENTINEL

from conftest import fuzz_corpus


def brute_force_neighbors(mesh):
    """Independent adjacency oracle: edges sharing a face with e, as sets."""
    edge_ids = {}
    edges_of_face = []
    for face in mesh.faces:
        ids = []
        for k in range(3):
            key = tuple(sorted((int(face[k]), int(face[(k + 1) % 3]))))
            if key not in edge_ids:
                edge_ids[key] = len(edge_ids)
            ids.append(edge_ids[key])
        edges_of_face.append(ids)
    neighbor_sets = {e: set() for e in edge_ids.values()}
    for ids in edges_of_face:
        for e in ids:
            neighbor_sets[e].update(x for x in ids if x != e)
    return edge_ids, neighbor_sets


class TestBuildTopology:
    def test_single_triangle(self):
        mesh = Mesh(np.eye(3), np.array([[0, 1, 2]]))
        topo = build_edge_topology(mesh)
        assert topo.edge_count == 3
        for e in range(3):
            assert topo.edge_faces[e, 0] == 0
            assert topo.edge_faces[e, 1] == SENTINEL
            valid = topo.neighbors[e] != SENTINEL
            assert valid.sum() == 2
            assert (topo.neighbors[e, 2:] == SENTINEL).all()

    def test_two_triangles_shared_edge(self, flat_pair):
        topo = build_edge_topology(flat_pair)
        assert topo.edge_count == 5
        shared = [e for e in range(5) if topo.edge_faces[e, 1] != SENTINEL]
        assert len(shared) == 1
        assert (topo.neighbors[shared[0]] != SENTINEL).all()
        outer = [e for e in range(5) if e != shared[0]]
        for e in outer:
            assert (topo.neighbors[e] != SENTINEL).sum() == 2

    def test_tetrahedron_against_brute_force(self, tetrahedron):
        topo = build_edge_topology(tetrahedron)
        assert topo.edge_count == 6
        edge_ids, neighbor_sets = brute_force_neighbors(tetrahedron)
        remap = {
            edge_ids[tuple(sorted(e))]: i for i, e in enumerate(topo.edges.tolist())
        }
        for key, oracle_id in edge_ids.items():
            e = remap[oracle_id]
            assert tuple(sorted(topo.edges[e].tolist())) == key
            got = {int(x) for x in topo.neighbors[e]}
            expected = {remap[x] for x in neighbor_sets[oracle_id]}
            assert got == expected
            assert len(got) == 4

    def test_neighbor_pairs_lie_in_incident_faces(self, tetrahedron):
        topo = build_edge_topology(tetrahedron)
        for e in range(topo.edge_count):
            for slot in range(2):
                face = topo.edge_faces[e, slot]
                pair = topo.neighbors[e, 2 * slot : 2 * slot + 2]
                face_edge_set = set(topo.face_edges[face].tolist())
                assert int(pair[0]) in face_edge_set
                assert int(pair[1]) in face_edge_set

    def test_ccw_order_within_face(self, flat_pair):
        # in face (0,1,2): edge (0,1) is followed by (1,2) then (2,0)
        topo = build_edge_topology(flat_pair)
        e01 = int(np.flatnonzero((topo.edges == [0, 1]).all(axis=1))[0])
        e12 = int(np.flatnonzero((topo.edges == [1, 2]).all(axis=1))[0])
        e02 = int(np.flatnonzero((topo.edges == [0, 2]).all(axis=1))[0])
        assert topo.neighbors[e01, 0] == e12
        assert topo.neighbors[e01, 1] == e02

    def test_deterministic_edge_order(self, icosahedron):
        t1 = build_edge_topology(icosahedron)
        t2 = build_edge_topology(parse_obj(write_obj(icosahedron)))
        assert np.array_equal(t1.edges, t2.edges)
        assert np.array_equal(t1.neighbors, t2.neighbors)

    def test_neighbor_symmetry_on_corpus(self, small_corpus):
        for mesh in small_corpus[:8]:
            topo = build_edge_topology(mesh)
            for e in range(topo.edge_count):
                for nb in topo.neighbors[e]:
                    if nb != SENTINEL:
                        assert e in topo.neighbors[nb]

    def test_euler_characteristic_integer_genus(self, small_corpus):
        for mesh in small_corpus:
            topo = build_edge_topology(mesh)
            g = euler_genus(mesh, topo)
            assert g == int(g) and g >= 0


def three_triangle_fan_edge():
    verts = np.array(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, -1, 0)], dtype=float
    )
    faces = np.array([(0, 1, 2), (1, 0, 3), (0, 1, 4)])
    return Mesh(verts, faces)


class TestValidation:
    def test_tetrahedron_clean(self, tetrahedron):
        assert validate_manifold(tetrahedron).is_clean

    def test_three_faces_on_one_edge(self):
        mesh = three_triangle_fan_edge()
        report = validate_manifold(mesh)
        assert not report.is_clean
        assert (0, 1, 3) in report.non_manifold_edges
        assert "(0, 1)" in report.summary()
        with pytest.raises(TopologyError):
            build_edge_topology(mesh)

    def test_orientation_defect(self):
        # second face traverses the shared edge (0,1) in the same direction
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], dtype=float)
        mesh = Mesh(verts, np.array([(0, 1, 2), (0, 1, 3)]))
        report = validate_manifold(mesh)
        assert report.orientation_conflicts == [(0, 1)]
        with pytest.raises(TopologyError):
            build_edge_topology(mesh)

    def test_isolated_vertex(self):
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (9, 9, 9)], dtype=float)
        mesh = Mesh(verts, np.array([(0, 1, 2)]))
        report = validate_manifold(mesh)
        assert report.isolated_vertices == [3]
        with pytest.raises(TopologyError):
            build_edge_topology(mesh)

    def test_duplicate_faces(self):
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0)], dtype=float)
        mesh = Mesh(verts, np.array([(0, 1, 2), (0, 2, 1)]))
        report = validate_manifold(mesh)
        assert report.duplicate_faces == [(0, 1)]
        with pytest.raises(TopologyError):
            build_edge_topology(mesh)

    def test_report_iff_build_accepts(self, small_corpus):
        for mesh in small_corpus[:6]:
            assert validate_manifold(mesh).is_clean
            build_edge_topology(mesh)  # must not raise

    def test_boundary_strip_is_clean(self, flat_pair):
        assert validate_manifold(flat_pair).is_clean
