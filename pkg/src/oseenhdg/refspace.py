"""Reference-element machinery: nodal P_k bases on the unit triangle and the
unit edge, and quadrature rules of requested polynomial exactness.

The reference triangle is {(x, y) : x >= 0, y >= 0, x + y <= 1} with vertices
V0=(0,0), V1=(1,0), V2=(0,1); reference edges run V0->V1, V1->V2, V2->V0.
The reference edge interval is [0, 1].
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MAX_TRIANGLE_EXACTNESS = 20
MAX_EDGE_EXACTNESS = 30
SUPPORTED_DEGREES = (1, 2, 3)

TRI_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# local edge L joins local vertices EDGE_VERTICES[L]
EDGE_VERTICES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule; ``points`` is (nq, 2) on the triangle, (nq,) on
    the edge. Weights sum to the reference measure (1/2 resp. 1)."""

    points: np.ndarray
    weights: np.ndarray
    exactness: int


def triangle_rule(exactness):
    """Conical-product Gauss rule on the reference triangle.

    Exact (up to roundoff) for all polynomials of total degree <= exactness.
    """
    if not 0 <= exactness <= MAX_TRIANGLE_EXACTNESS:
        raise ValueError(
            f"triangle exactness {exactness} outside 0..{MAX_TRIANGLE_EXACTNESS}"
        )
    npt = exactness // 2 + 1
    # x-direction carries the (1-x) area weight via Gauss-Jacobi
    xi, wx = roots_jacobi(npt, 1.0, 0.0)
    x = 0.5 * (1.0 + xi)
    wx = 0.25 * wx
    tau, wt = leggauss(npt)
    t = 0.5 * (1.0 + tau)
    wt = 0.5 * wt
    pts = np.empty((npt * npt, 2))
    wts = np.empty(npt * npt)
    for i in range(npt):
        for j in range(npt):
            pts[i * npt + j] = (x[i], (1.0 - x[i]) * t[j])
            wts[i * npt + j] = wx[i] * wt[j]
    return QuadratureRule(pts, wts, exactness)


def edge_rule(exactness):
    """Gauss-Legendre rule on the reference edge [0, 1]."""
    if not 0 <= exactness <= MAX_EDGE_EXACTNESS:
        raise ValueError(f"edge exactness {exactness} outside 0..{MAX_EDGE_EXACTNESS}")
    npt = exactness // 2 + 1
    tau, w = leggauss(npt)
    return QuadratureRule(0.5 * (1.0 + tau), 0.5 * w, exactness)


def _lattice_nodes(k):
    """Lagrange nodes: vertices, then k-1 equispaced nodes per edge (in edge
    direction), then the interior lattice."""
    nodes = [tuple(v) for v in TRI_VERTICES]
    for a, b in EDGE_VERTICES:
        va, vb = TRI_VERTICES[a], TRI_VERTICES[b]
        for j in range(1, k):
            t = j / k
            nodes.append(tuple((1.0 - t) * va + t * vb))
    for i in range(1, k):
        for j in range(1, k - i):
            nodes.append((i / k, j / k))
    return np.array(nodes)


class ReferenceBasis:
    """Nodal Lagrange basis of degree k on the reference triangle plus the
    matching 1D basis on the reference edge.

    Node ordering on the triangle follows :func:`_lattice_nodes`; on the edge
    it is [t=0, t=1, t=1/k, ..., t=(k-1)/k] so that endpoint dofs come first.
    ``edge_node_ids[L]`` lists the triangle nodes lying on local edge L in
    that same order.
    """

    def __init__(self, k):
        if k not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported degree {k}; choose from {SUPPORTED_DEGREES}")
        self.k = k
        self.dim_tri = (k + 1) * (k + 2) // 2
        self.dim_edge = k + 1
        self.nodes_tri = _lattice_nodes(k)
        self.nodes_edge = np.array([0.0, 1.0] + [j / k for j in range(1, k)])
        self.powers = [(a, b) for a in range(k + 1) for b in range(k + 1 - a)]
        vand = self._tri_monomials(self.nodes_tri)
        self._coeff = np.linalg.inv(vand)  # phi_i = sum_m coeff[m, i] x^a y^b
        vand1 = np.vander(self.nodes_edge, self.dim_edge, increasing=True)
        self._coeff_edge = np.linalg.inv(vand1)
        self.edge_node_ids = []
        for ell, (a, b) in enumerate(EDGE_VERTICES):
            ids = [a, b] + [3 + ell * (k - 1) + j for j in range(k - 1)]
            self.edge_node_ids.append(tuple(ids))

    def _tri_monomials(self, pts):
        pts = np.atleast_2d(pts)
        cols = [pts[:, 0] ** a * pts[:, 1] ** b for a, b in self.powers]
        return np.stack(cols, axis=1)

    def tri_values(self, pts):
        """Basis values, shape (dim_tri, npts)."""
        return (self._tri_monomials(pts) @ self._coeff).T

    def tri_gradients(self, pts):
        """Basis gradients, shape (dim_tri, npts, 2)."""
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        dx = np.stack(
            [a * x ** max(a - 1, 0) * y**b if a else 0.0 * x for a, b in self.powers],
            axis=1,
        )
        dy = np.stack(
            [b * x**a * y ** max(b - 1, 0) if b else 0.0 * x for a, b in self.powers],
            axis=1,
        )
        return np.stack([(dx @ self._coeff).T, (dy @ self._coeff).T], axis=-1)

    def edge_values(self, t):
        """1D basis values, shape (dim_edge, npts)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vand = np.vander(t, self.dim_edge, increasing=True)
        return (vand @ self._coeff_edge).T

    def edge_trace_values(self, ell, t):
        """Triangle basis values restricted to local edge ``ell``, shape
        (dim_tri, npts); t runs from local vertex ell to vertex (ell+1)%3."""
        return self.tri_values(self._edge_points(ell, t))

    def edge_trace_gradients(self, ell, t):
        return self.tri_gradients(self._edge_points(ell, t))

    @staticmethod
    def _edge_points(ell, t):
        a, b = EDGE_VERTICES[ell]
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        return (1.0 - t) * TRI_VERTICES[a] + t * TRI_VERTICES[b]


@lru_cache(maxsize=None)
def reference_basis(k):
    return ReferenceBasis(k)


def eval_basis(k, pts):
    """Values and gradients of the degree-k triangle basis at ``pts``.

    Returns (values, gradients) with shapes (dim_tri, npts) and
    (dim_tri, npts, 2).
    """
    basis = reference_basis(k)
    return basis.tri_values(pts), basis.tri_gradients(pts)


def eval_edge_basis(k, t):
    """Values of the degree-k edge basis at parameters ``t`` in [0, 1]."""
    return reference_basis(k).edge_values(t)
