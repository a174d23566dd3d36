"""Triangle-mesh container, Wavefront OBJ I/O, and rigid transforms.

Supported OBJ subset: ``v``, ``f`` and ``#`` comment lines. Polygon faces are
fan-triangulated, ``vt``/``vn``/material references are discarded. Vertex
coordinates are written with 9 significant digits so a write/parse round trip
reproduces them to that precision and face lists exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMeshError, MeshError, ObjParseError

_COORD_FMT = "%.9g"


class Mesh:
    """Immutable vertex/face arrays with consistent counter-clockwise winding.

    vertices: (V, 3) float64, model units.
    faces: (F, 3) int64 vertex indices, CCW seen from outside.
    """

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        vertices = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
        faces = np.ascontiguousarray(np.asarray(faces, dtype=np.int64))
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (V, 3), got {vertices.shape}")
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (F, 3), got {faces.shape}")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinate")
        if faces.size:
            if faces.min() < 0 or faces.max() >= len(vertices):
                raise MeshError("face references a vertex index out of range")
            degenerate = (
                (faces[:, 0] == faces[:, 1])
                | (faces[:, 1] == faces[:, 2])
                | (faces[:, 0] == faces[:, 2])
            )
            if degenerate.any():
                bad = int(np.flatnonzero(degenerate)[0])
                raise MeshError(f"face {bad} repeats a vertex index")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        self.vertices = vertices
        self.faces = faces

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def face_count(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        """Same connectivity, new vertex positions."""
        return Mesh(vertices, self.faces)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.faces, other.faces
        )

    def __repr__(self):
        return f"Mesh({self.vertex_count} vertices, {self.face_count} faces)"


@dataclass(frozen=True)
class RigidMotion:
    """Rotation + translation + uniform scale applied as ``s * R @ v + t``."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    uniform_scale: float = 1.0

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        trans = np.asarray(self.translation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise MeshError("rotation must be a 3x3 matrix")
        if trans.shape != (3,):
            raise MeshError("translation must be a 3-vector")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-12:
            raise MeshError("rotation columns are not orthonormal within 1e-12")
        if np.linalg.det(rot) < 0.0:
            raise MeshError("rotation must have determinant +1")
        if not self.uniform_scale > 0.0:
            raise MeshError("uniform_scale must be positive")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @staticmethod
    def identity():
        return RigidMotion(np.eye(3))


def apply_motion(mesh: Mesh, motion: RigidMotion) -> Mesh:
    """Transform every vertex by ``scale * R @ v + t``; connectivity unchanged."""
    moved = (
        motion.uniform_scale * (mesh.vertices @ motion.rotation.T)
        + motion.translation
    )
    return mesh.with_vertices(moved)


def normalize_unit_box(mesh: Mesh) -> Mesh:
    """Center at the origin and scale so the longest bounding-box side is 1."""
    if mesh.vertex_count == 0:
        raise EmptyMeshError("cannot normalize a mesh without vertices")
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0.0:
        raise MeshError("degenerate mesh: all vertices coincide")
    center = (hi + lo) / 2.0
    return mesh.with_vertices((mesh.vertices - center) / extent)


def _parse_face_ref(token, vertex_count, line_number):
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise ObjParseError(f"bad face vertex reference {token!r}", line_number)
    if idx < 1 or idx > vertex_count:
        raise ObjParseError(
            f"face vertex reference {idx} out of range 1..{vertex_count}",
            line_number,
        )
    return idx - 1


def parse_obj(data) -> Mesh:
    """Parse OBJ text (bytes or str) into a Mesh.

    Polygon faces are fan-triangulated around their first vertex; texture and
    normal references after ``/`` are discarded.
    """
    if isinstance(data, (bytes, bytearray)):
        text = bytes(data).decode("utf-8", errors="replace")
    else:
        text = data
    vertices = []
    face_lines = []  # (line_number, tokens), resolved after all vertices known
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex line needs 3 coordinates", line_number)
            try:
                vertices.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise ObjParseError(
                    f"malformed vertex coordinate in {line!r}", line_number
                )
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError("face line needs at least 3 vertices", line_number)
            face_lines.append((line_number, parts[1:]))
        else:
            continue  # vt, vn, usemtl, s, o, g, ...
    if not vertices:
        raise EmptyMeshError("OBJ input contains no vertices")
    if not face_lines:
        raise EmptyMeshError("OBJ input contains no faces")
    faces = []
    for line_number, tokens in face_lines:
        refs = [_parse_face_ref(t, len(vertices), line_number) for t in tokens]
        for i in range(1, len(refs) - 1):
            faces.append((refs[0], refs[i], refs[i + 1]))
    try:
        return Mesh(np.array(vertices), np.array(faces))
    except MeshError as exc:
        raise ObjParseError(str(exc)) from exc


def write_obj(mesh: Mesh) -> bytes:
    """Serialize a mesh to deterministic OBJ text."""
    out = []
    for v in mesh.vertices:
        out.append("v %s %s %s" % tuple(_COORD_FMT % c for c in v))
    for f in mesh.faces:
        out.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    out.append("")
    return "\n".join(out).encode("ascii")


def write_edge_field(edges, values) -> bytes:
    """Per-edge scalar sidecar: one ``i j value`` line, 0-based vertex indices."""
    edges = np.asarray(edges, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if len(edges) != len(values):
        raise MeshError(
            f"edge field has {len(values)} values for {len(edges)} edges"
        )
    lines = [
        "%d %d %s" % (e[0], e[1], _COORD_FMT % v) for e, v in zip(edges, values)
    ]
    lines.append("")
    return "\n".join(lines).encode("ascii")


def edge_field_path(obj_path):
    """Sidecar path convention: ``<mesh>.obj`` -> ``<mesh>.edges.txt``."""
    import pathlib

    p = pathlib.Path(obj_path)
    return p.with_suffix(".edges.txt")


def save_obj(path, mesh: Mesh, edges=None, edge_field=None):
    """Write an OBJ file, plus the edge-scalar sidecar when a field is given."""
    import pathlib

    p = pathlib.Path(path)
    p.write_bytes(write_obj(mesh))
    if edge_field is not None:
        if edges is None:
            raise MeshError("edge_field requires the edge list")
        edge_field_path(p).write_bytes(write_edge_field(edges, edge_field))
