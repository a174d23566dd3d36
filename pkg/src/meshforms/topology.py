"""Edge connectivity: per-edge incident faces and the ordered 4-neighbor ring.

Edges are enumerated in first-appearance order over the face list and stored
with the smaller vertex index first, which keeps edge ids deterministic for a
given byte-identical input. For an interior edge ``e`` whose first incident
face reads ``e -> a -> b`` counter-clockwise and whose second reads
``e -> c -> d``, the neighbor tuple is ``(a, b, c, d)``; missing slots on
boundary edges hold the sentinel ``-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError
from .mesh import Mesh

SENTINEL = -1


class EdgeTopology:
    """Connectivity arrays for the edges of a validated mesh.

    edges: (E, 2) int64, smaller vertex first.
    edge_faces: (E, 2) int64 face ids, second slot -1 on boundary edges.
    neighbors: (E, 4) int64 edge ids (a, b, c, d), -1 sentinels on boundaries.
    face_edges: (F, 3) int64, edge id at position i spans face[i], face[i+1].
    vertex_edges: per-vertex list of incident edge ids (ascending).
    """

    __slots__ = ("edges", "edge_faces", "neighbors", "face_edges", "vertex_edges")

    def __init__(self, edges, edge_faces, neighbors, face_edges, vertex_edges):
        self.edges = edges
        self.edge_faces = edge_faces
        self.neighbors = neighbors
        self.face_edges = face_edges
        self.vertex_edges = vertex_edges

    @property
    def edge_count(self):
        return len(self.edges)

    def is_interior(self, edge):
        return self.edge_faces[edge, 1] != SENTINEL

    @property
    def interior_mask(self):
        return self.edge_faces[:, 1] != SENTINEL


@dataclass
class ValidationReport:
    """Findings from :func:`validate_manifold`; empty means accepted."""

    non_manifold_edges: list = field(default_factory=list)  # (u, v, face count)
    orientation_conflicts: list = field(default_factory=list)  # (u, v)
    isolated_vertices: list = field(default_factory=list)
    duplicate_faces: list = field(default_factory=list)  # (face i, face j)

    @property
    def is_clean(self):
        return not (
            self.non_manifold_edges
            or self.orientation_conflicts
            or self.isolated_vertices
            or self.duplicate_faces
        )

    def summary(self):
        if self.is_clean:
            return "mesh is a consistently oriented 2-manifold"
        lines = []
        for u, v, n in self.non_manifold_edges:
            lines.append(f"edge ({u}, {v}) has {n} incident faces")
        for u, v in self.orientation_conflicts:
            lines.append(f"edge ({u}, {v}) is traversed twice in the same direction")
        for v in self.isolated_vertices:
            lines.append(f"vertex {v} belongs to no face")
        for i, j in self.duplicate_faces:
            lines.append(f"faces {i} and {j} share the same vertex set")
        return "\n".join(lines)


def _face_entries(faces):
    """Yield (face index, corner index, u, v) for each directed face edge."""
    for fi in range(len(faces)):
        f = faces[fi]
        for k in range(3):
            yield fi, k, int(f[k]), int(f[(k + 1) % 3])


def validate_manifold(mesh: Mesh) -> ValidationReport:
    """Check edge degrees, orientation consistency, stray vertices, duplicates.

    An empty report is exactly the condition under which
    :func:`build_edge_topology` succeeds. Face self-intersection is not
    examined.
    """
    report = ValidationReport()
    face_count = {}
    directed = {}
    for fi, _, u, v in _face_entries(mesh.faces):
        key = (u, v) if u < v else (v, u)
        face_count[key] = face_count.get(key, 0) + 1
        if (u, v) in directed:
            if (u, v) not in report.orientation_conflicts:
                report.orientation_conflicts.append((u, v))
        else:
            directed[(u, v)] = fi
    for (u, v), n in face_count.items():
        if n > 2:
            report.non_manifold_edges.append((u, v, n))
    used = np.zeros(mesh.vertex_count, dtype=bool)
    if mesh.face_count:
        used[mesh.faces.reshape(-1)] = True
    report.isolated_vertices = [int(v) for v in np.flatnonzero(~used)]
    seen_sets = {}
    for fi in range(mesh.face_count):
        key = tuple(sorted(mesh.faces[fi].tolist()))
        if key in seen_sets:
            report.duplicate_faces.append((seen_sets[key], fi))
        else:
            seen_sets[key] = fi
    return report


def build_edge_topology(mesh: Mesh) -> EdgeTopology:
    """Construct edge connectivity, rejecting non-manifold or misoriented input."""
    edge_ids = {}
    edges = []
    edge_faces = []
    directed_seen = set()
    face_edges = np.empty((mesh.face_count, 3), dtype=np.int64)
    face_slots = np.empty((mesh.face_count, 3), dtype=np.int64)  # 0 or 1 per corner
    for fi, k, u, v in _face_entries(mesh.faces):
        if (u, v) in directed_seen:
            raise TopologyError(
                f"inconsistent orientation: edge ({u}, {v}) traversed twice "
                "in the same direction"
            )
        directed_seen.add((u, v))
        key = (u, v) if u < v else (v, u)
        eid = edge_ids.get(key)
        if eid is None:
            eid = len(edges)
            edge_ids[key] = eid
            edges.append(key)
            edge_faces.append([fi, SENTINEL])
            face_slots[fi, k] = 0
        else:
            if edge_faces[eid][1] != SENTINEL:
                raise TopologyError(
                    f"non-manifold edge {key}: more than 2 incident faces"
                )
            edge_faces[eid][1] = fi
            face_slots[fi, k] = 1
        face_edges[fi, k] = eid

    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    edge_faces = np.array(edge_faces, dtype=np.int64).reshape(-1, 2)

    neighbors = np.full((len(edges), 4), SENTINEL, dtype=np.int64)
    for fi in range(mesh.face_count):
        fe = face_edges[fi]
        for k in range(3):
            eid = fe[k]
            base = 0 if face_slots[fi, k] == 0 else 2
            neighbors[eid, base] = fe[(k + 1) % 3]
            neighbors[eid, base + 1] = fe[(k + 2) % 3]

    vertex_edges = [[] for _ in range(mesh.vertex_count)]
    for eid, (u, v) in enumerate(edges):
        vertex_edges[int(u)].append(eid)
        vertex_edges[int(v)].append(eid)
    for v, incident in enumerate(vertex_edges):
        if not incident and mesh.face_count:
            raise TopologyError(f"isolated vertex {v}")

    seen_sets = {}
    for fi in range(mesh.face_count):
        key = tuple(sorted(mesh.faces[fi].tolist()))
        if key in seen_sets:
            raise TopologyError(
                f"faces {seen_sets[key]} and {fi} share the same vertex set"
            )
        seen_sets[key] = fi

    return EdgeTopology(edges, edge_faces, neighbors, face_edges, vertex_edges)


def euler_genus(mesh: Mesh, topology: EdgeTopology):
    """Genus from V - E + F = 2 - 2g; meaningful for closed meshes."""
    chi = mesh.vertex_count - topology.edge_count + mesh.face_count
    return (2 - chi) / 2
