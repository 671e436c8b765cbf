"""Icosphere triangulations pushed through a surface map, plus OBJ export."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TopologyError
from .geometry import FrameSet, _chunked, _frameset_tuple

_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_V = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=float)
_ICO_F = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def icosphere(subdiv):
    """Unit-sphere vertices and outward-oriented triangles, 20 * 4**subdiv faces."""
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")
    verts = list(_ICO_V / np.linalg.norm(_ICO_V, axis=1, keepdims=True))
    faces = _ICO_F.copy()
    for _ in range(subdiv):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = np.empty((4 * len(faces), 3), dtype=np.int64)
        for k, (a, b, c) in enumerate(faces):
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new[4 * k:4 * k + 4] = [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return np.array(verts), faces


@dataclass
class SurfaceMesh:
    p: np.ndarray          # vertex parameters on the unit sphere
    vertices: np.ndarray   # vertex positions on the surface
    faces: np.ndarray
    frames: FrameSet       # exact surface frames at the vertices
    surface: object = None

    @property
    def face_vectors(self):
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    @property
    def face_areas(self):
        a, b, c = self.face_vectors
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    @property
    def face_normals(self):
        a, b, c = self.face_vectors
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @property
    def face_projectors(self):
        n = self.face_normals
        return np.eye(3) - n[:, :, None] * n[:, None, :]

    @property
    def vertex_areas(self):
        """Lumped (barycentric) vertex areas."""
        m = np.zeros(len(self.vertices))
        np.add.at(m, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return m

    @property
    def area(self):
        return float(np.sum(self.face_areas))

    def check(self):
        """Closed, consistently oriented, non-degenerate; raises TopologyError."""
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        keys = directed[:, 0] * len(self.vertices) + directed[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise TopologyError("inconsistent orientation: a directed edge repeats")
        rev = directed[:, 1] * len(self.vertices) + directed[:, 0]
        if not np.all(np.isin(rev, keys)):
            raise TopologyError("mesh is not closed: some edge has a single triangle")
        if np.min(self.face_areas) <= 1e-14:
            raise TopologyError("degenerate triangle")
        return True


def build_mesh(surface, subdiv):
    """Icosphere of the given subdivision level mapped through the surface."""
    if surface.n != 2:
        raise ValueError("meshes are built for n = 2 surfaces only")
    p, faces = icosphere(subdiv)
    X = surface.map(p)
    fs = FrameSet(*_chunked(lambda q: _frameset_tuple(surface, q), p))
    mesh = SurfaceMesh(p, X, faces, fs, surface)
    mesh.check()
    return mesh


def write_obj(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"# {getattr(mesh.surface, 'label', 'surface')}\n")
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
        for a, b, c in mesh.faces + 1:
            fh.write(f"f {a} {b} {c}\n")


def read_obj(path):
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts), np.array(faces)


def write_vertex_scalars(path, values, name="value"):
    """Sidecar file with one scalar per OBJ vertex, in vertex order."""
    with open(path, "w") as fh:
        fh.write(f"# {name}\n")
        for v in np.asarray(values).ravel():
            fh.write(f"{v:.12g}\n")
