"""Weighted digraphs, Laplacians and the consensus-complement basis.

Convention: ``adjacency[i, j] = a_ij`` is the weight node ``i`` places on
node ``j`` (node ``i`` listens to ``j``), so the edge ``i -> j`` points from
the listener to the node it hears. Indices are 0-based.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NotHurwitz, NullspaceNotOneDimensional

RANK_RTOL = 1e-9
MAX_HURWITZ_DIM = 64


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("adjacency weights must be finite and non-negative")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero (no self-loops)")
        a.flags.writeable = False
        object.__setattr__(self, "adjacency", a)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, m, edges):
        """Build from ``(i, j, weight)`` triples."""
        a = np.zeros((m, m))
        for i, j, w in edges:
            a[i, j] = w
        return cls(a)

    def has_edge(self, i, j) -> bool:
        return bool(self.adjacency[i, j] > 0)

    def __eq__(self, other):
        return isinstance(other, WeightedDigraph) and np.array_equal(self.adjacency, other.adjacency)


def line_graph(m, weight=0.1):
    """Directed chain where node ``i`` listens to node ``i + 1``."""
    return WeightedDigraph.from_edges(m, [(i, i + 1, weight) for i in range(m - 1)])


def complete_graph(m, weight=1.0):
    a = np.full((m, m), weight)
    np.fill_diagonal(a, 0.0)
    return WeightedDigraph(a)


def build_laplacian(g: WeightedDigraph) -> np.ndarray:
    a = g.adjacency
    lap = -a.copy()
    # diagonal is defined from the off-diagonal row sums, never measured
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    lap.flags.writeable = False
    return lap


def is_globally_reachable(g: WeightedDigraph, i: int) -> bool:
    m = g.node_count
    if not 0 <= i < m:
        raise IndexError(f"node index {i} out of range for {m} nodes")
    # search backwards along edges: j reaches i iff i reaches j in the reversed graph
    seen = np.zeros(m, dtype=bool)
    seen[i] = True
    queue = deque([i])
    incoming = g.adjacency.T > 0
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(incoming[k]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def find_globally_reachable(g: WeightedDigraph) -> set:
    return {i for i in range(g.node_count) if is_globally_reachable(g, i)}


def left_null_vector(lap, rtol=RANK_RTOL) -> np.ndarray:
    """Normalized w >= 0 with w^T L = 0, by pivoted elimination on L^T.

    Raises NullspaceNotOneDimensional unless rank(L) == m - 1.
    """
    a = np.array(lap, dtype=float).T
    m = a.shape[0]
    if m == 1:
        return np.ones(1)
    pivot_cols = []
    row = 0
    scale = np.abs(a).max()
    if scale == 0:
        raise NullspaceNotOneDimensional("zero Laplacian has an m-dimensional nullspace")
    for col in range(m):
        if row == m:
            break
        p = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[p, col]) <= rtol * scale:
            continue
        a[[row, p]] = a[[p, row]]
        a[row] /= a[row, col]
        others = np.arange(m) != row
        a[others] -= np.outer(a[others, col], a[row])
        pivot_cols.append(col)
        row += 1
    free = [c for c in range(m) if c not in pivot_cols]
    if len(free) != 1:
        raise NullspaceNotOneDimensional(f"Laplacian nullspace has dimension {len(free)}, expected 1")
    f = free[0]
    w = np.zeros(m)
    w[f] = 1.0
    for r, c in enumerate(pivot_cols):
        w[c] = -a[r, f]
    w /= w.sum()
    # clean rounding noise on the zero pattern
    w[np.abs(w) < 1e-14] = 0.0
    return w


def build_complement_basis(m: int) -> np.ndarray:
    """Orthonormal basis of the subspace orthogonal to the ones vector.

    Columns 2..m of the Householder reflector sending e_1 to 1/sqrt(m).
    """
    if m < 2:
        raise ValueError(f"complement basis needs m >= 2, got {m}")
    v = -np.full(m, 1.0 / np.sqrt(m))
    v[0] += 1.0
    h = np.eye(m) - 2.0 * np.outer(v, v) / (v @ v)
    basis = h[:, 1:].copy()
    basis.flags.writeable = False
    return basis


def projected_laplacian(lap, basis) -> np.ndarray:
    lap = np.asarray(lap)
    basis = np.asarray(basis)
    if lap.shape[0] != lap.shape[1] or basis.shape != (lap.shape[0], lap.shape[0] - 1):
        raise ValueError(f"dimension mismatch: L {lap.shape}, basis {basis.shape}")
    return basis.T @ lap @ basis


def solve_lyapunov_kron(a, q=None, rtol=RANK_RTOL):
    """Solve A^T P + P A = -Q through the vectorized Kronecker system.

    Raises NotHurwitz when the system is numerically singular, i.e. when some
    pair of eigenvalues of A sums to zero.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"A must be square, got {a.shape}")
    if n > MAX_HURWITZ_DIM:
        raise ValueError(f"dimension {n} exceeds limit {MAX_HURWITZ_DIM}")
    q = np.eye(n) if q is None else np.asarray(q, dtype=float)
    eye = np.eye(n)
    # row-major vec: vec(A^T P) = (A^T kron I) vec(P), vec(P A) = (I kron A^T) vec(P)
    k = np.kron(a.T, eye) + np.kron(eye, a.T)
    with warnings.catch_warnings():
        # singularity is judged from the pivots below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(k, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= rtol * pivots.max():
        raise NotHurwitz("Lyapunov equation is not uniquely solvable")
    p = sla.lu_solve((lu, piv), -q.ravel()).reshape(n, n)
    return 0.5 * (p + p.T)


def is_hurwitz(a) -> bool:
    """Lyapunov test: A is Hurwitz iff A^T P + P A = -I has a solution P > 0."""
    try:
        p = solve_lyapunov_kron(a)
        np.linalg.cholesky(p)
    except (NotHurwitz, np.linalg.LinAlgError):
        return False
    return True
