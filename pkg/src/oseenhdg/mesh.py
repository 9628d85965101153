"""Structured triangulations of the unit square with facet connectivity.

Every unit-grid square is split by the diagonal from its lower-left to its
upper-right corner, giving 2*n^2 counterclockwise triangles. Facets are
stored once, with two-sided element adjacency, a canonical orientation
(from the lower to the higher vertex index) and per-side outward normals.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeshTopology:
    n: int
    vertices: np.ndarray  # (nv, 2)
    elements: np.ndarray  # (ne, 3) vertex ids, counterclockwise
    element_diameters: np.ndarray  # (ne,) max edge length
    facet_vertices: np.ndarray  # (nfc, 2) vertex ids, low < high
    facet_lengths: np.ndarray  # (nfc,)
    facet_boundary: np.ndarray  # (nfc,) bool
    facet_elements: np.ndarray  # (nfc, 2) element ids, -1 on missing side
    facet_local_edges: np.ndarray  # (nfc, 2) local edge index per side, -1
    facet_normals: np.ndarray  # (nfc, 2, 2) outward normal per side
    elem_facets: np.ndarray  # (ne, 3) facet id of each local edge
    elem_facet_dirs: np.ndarray  # (ne, 3) +1 if local edge runs low->high
    elem_edge_normals: np.ndarray  # (ne, 3, 2) outward unit normals
    elem_edge_lengths: np.ndarray  # (ne, 3)
    vertex_on_boundary: np.ndarray  # (nv,) bool

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.elements)

    @property
    def num_facets(self):
        return len(self.facet_vertices)

    @property
    def h_max(self):
        return float(self.element_diameters.max())


def build_uniform_mesh(n):
    """Uniform triangulation of (0,1)^2 with n subdivisions per side."""
    if n < 1:
        raise ValueError("mesh subdivision count must be >= 1")
    nv1 = n + 1
    xs = np.linspace(0.0, 1.0, nv1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(ix, iy):
        return iy * nv1 + ix

    elements = []
    for iy in range(n):
        for ix in range(n):
            ll, lr = vid(ix, iy), vid(ix + 1, iy)
            ur, ul = vid(ix + 1, iy + 1), vid(ix, iy + 1)
            elements.append((ll, lr, ur))
            elements.append((ll, ur, ul))
    elements = np.array(elements, dtype=np.int64)
    ne = len(elements)

    edge_pairs = ((0, 1), (1, 2), (2, 0))
    facet_index = {}
    facet_vertices = []
    facet_sides = []  # list of [(elem, local_edge, dir), ...]
    elem_facets = np.empty((ne, 3), dtype=np.int64)
    elem_facet_dirs = np.empty((ne, 3), dtype=np.int64)
    for e, tri in enumerate(elements):
        for ell, (a, b) in enumerate(edge_pairs):
            va, vb = int(tri[a]), int(tri[b])
            key = (min(va, vb), max(va, vb))
            f = facet_index.get(key)
            if f is None:
                f = len(facet_vertices)
                facet_index[key] = f
                facet_vertices.append(key)
                facet_sides.append([])
            facet_sides[f].append((e, ell, 1 if va < vb else -1))
            elem_facets[e, ell] = f
            elem_facet_dirs[e, ell] = 1 if va < vb else -1
    facet_vertices = np.array(facet_vertices, dtype=np.int64)
    nfc = len(facet_vertices)

    coords = vertices[elements]  # (ne, 3, 2)
    edge_vecs = np.stack(
        [coords[:, b] - coords[:, a] for a, b in edge_pairs], axis=1
    )  # (ne, 3, 2)
    elem_edge_lengths = np.linalg.norm(edge_vecs, axis=2)
    element_diameters = elem_edge_lengths.max(axis=1)
    # counterclockwise vertex order makes the rotated tangent point outward
    elem_edge_normals = (
        np.stack([edge_vecs[:, :, 1], -edge_vecs[:, :, 0]], axis=2)
        / elem_edge_lengths[:, :, None]
    )

    facet_elements = np.full((nfc, 2), -1, dtype=np.int64)
    facet_local_edges = np.full((nfc, 2), -1, dtype=np.int64)
    facet_normals = np.zeros((nfc, 2, 2))
    facet_boundary = np.empty(nfc, dtype=bool)
    for f, sides in enumerate(facet_sides):
        for s, (e, ell, _) in enumerate(sides):
            facet_elements[f, s] = e
            facet_local_edges[f, s] = ell
            facet_normals[f, s] = elem_edge_normals[e, ell]
        facet_boundary[f] = len(sides) == 1
    facet_lengths = np.linalg.norm(
        vertices[facet_vertices[:, 1]] - vertices[facet_vertices[:, 0]], axis=1
    )

    vertex_on_boundary = np.zeros(len(vertices), dtype=bool)
    boundary_facets = facet_vertices[facet_boundary]
    vertex_on_boundary[boundary_facets.ravel()] = True

    mesh = MeshTopology(
        n=n,
        vertices=vertices,
        elements=elements,
        element_diameters=element_diameters,
        facet_vertices=facet_vertices,
        facet_lengths=facet_lengths,
        facet_boundary=facet_boundary,
        facet_elements=facet_elements,
        facet_local_edges=facet_local_edges,
        facet_normals=facet_normals,
        elem_facets=elem_facets,
        elem_facet_dirs=elem_facet_dirs,
        elem_edge_normals=elem_edge_normals,
        elem_edge_lengths=elem_edge_lengths,
        vertex_on_boundary=vertex_on_boundary,
    )
    for arr in vars(mesh).values():
        if isinstance(arr, np.ndarray):
            arr.setflags(write=False)
    return mesh


def facet_normal_consistency(mesh):
    """True iff interior facets carry opposite per-side normals and every
    stored normal points out of its element."""
    for f in range(mesh.num_facets):
        sides = 1 if mesh.facet_boundary[f] else 2
        if sides == 2:
            if not np.allclose(
                mesh.facet_normals[f, 0], -mesh.facet_normals[f, 1], atol=1e-14
            ):
                return False
        va, vb = mesh.facet_vertices[f]
        midpoint = 0.5 * (mesh.vertices[va] + mesh.vertices[vb])
        for s in range(sides):
            e = mesh.facet_elements[f, s]
            centroid = mesh.vertices[mesh.elements[e]].mean(axis=0)
            if np.dot(mesh.facet_normals[f, s], centroid - midpoint) >= 0.0:
                return False
    return True


def signed_area(mesh):
    """Signed area of each element (positive for counterclockwise order)."""
    coords = mesh.vertices[mesh.elements]
    d1 = coords[:, 1] - coords[:, 0]
    d2 = coords[:, 2] - coords[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def dump_mesh(mesh, path):
    """Plain-text dump (vertices, elements, facets) for debugging."""
    with open(path, "w") as fh:
        fh.write(f"vertices {mesh.num_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"elements {mesh.num_elements}\n")
        for tri in mesh.elements:
            fh.write(" ".join(str(v) for v in tri) + "\n")
        fh.write(f"facets {mesh.num_facets}\n")
        for f in range(mesh.num_facets):
            va, vb = mesh.facet_vertices[f]
            e0, e1 = mesh.facet_elements[f]
            flag = int(mesh.facet_boundary[f])
            fh.write(
                f"{va} {vb} boundary={flag} elems={e0},{e1} "
                f"len={mesh.facet_lengths[f]!r}\n"
            )
