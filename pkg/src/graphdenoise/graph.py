"""Weighted pixel graphs built from bilateral and guided filter weights.

Graphs are stored as the upper triangle (``i <= j``) of the symmetric
adjacency matrix, diagonal self-loops included.  A full CSR copy is kept
for matrix-vector products.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._box import box_mean_array
from .signal import Signal

STENCILS = ("window", "5-point")


class SingularScalingError(ValueError):
    """Normalized Laplacian requested for a graph with a zero diagonal entry."""


class SingularPreconditionerError(ValueError):
    """A degree is zero, so ``D`` cannot be inverted."""


@dataclass(frozen=True)
class BfParams:
    """Bilateral weights ``exp(-|p_i-p_j|^2/2s_s^2) * exp(-|g_i-g_j|^2/2s_r^2)``.

    ``sigma_s`` defaults to ``half_width``.  ``stencil`` selects the
    neighborhood on 2D grids: a ``(2h+1) x (2h+1)`` square window or the
    5-point stencil.  1D signals always use a ``2h+1`` window.
    """

    sigma_r: float = 0.1
    half_width: int = 1
    sigma_s: Optional[float] = None
    stencil: str = "window"

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError(f"half_width must be >= 1, got {self.half_width}")
        if self.sigma_s is None:
            object.__setattr__(self, "sigma_s", float(self.half_width))
        if not (self.sigma_s > 0 and self.sigma_r > 0):
            raise ValueError("sigma_s and sigma_r must be positive")
        if self.stencil not in STENCILS:
            raise ValueError(f"stencil must be one of {STENCILS}, got {self.stencil!r}")


@dataclass(frozen=True)
class GfParams:
    rho: int = 5
    epsilon: float = 0.01

    def __post_init__(self):
        if self.rho < 1 or self.rho % 2 == 0:
            raise ValueError(f"rho must be odd and >= 1, got {self.rho}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


class WeightedGraph:
    """Undirected weighted graph on ``n`` vertices.

    Parameters
    ----------
    n : int
        Number of vertices.
    rows, cols, weights : array_like
        Edge list.  Each undirected edge must appear once; pairs with
        ``i > j`` are flipped into the upper triangle.  Duplicates are summed.
    shape : tuple, optional
        Grid shape of the underlying signal, ``(n,)`` by default.
    """

    def __init__(self, n, rows, cols, weights, shape=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if not (rows.shape == cols.shape == weights.shape):
            raise ValueError("rows, cols and weights must have equal length")
        if rows.size and (min(rows.min(), cols.min()) < 0
                          or max(rows.max(), cols.max()) >= n):
            raise ValueError("edge index out of range")
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        upper = sp.coo_matrix((weights, (lo, hi)), shape=(n, n)).tocsr()
        upper.sum_duplicates()
        upper = upper.tocoo()

        self.n = int(n)
        self.shape = tuple(shape) if shape is not None else (self.n,)
        self.rows = upper.row.astype(np.int64)
        self.cols = upper.col.astype(np.int64)
        self.weights = upper.data
        off = self.rows != self.cols
        full = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights[off]]),
             (np.concatenate([self.rows, self.cols[off]]),
              np.concatenate([self.cols, self.rows[off]]))),
            shape=(n, n))
        self.adjacency = full.tocsr()
        self.adjacency.sort_indices()
        self.degrees = np.asarray(self.adjacency.sum(axis=1)).ravel()
        for arr in (self.rows, self.cols, self.weights, self.degrees):
            arr.setflags(write=False)

    @classmethod
    def from_dense(cls, w, shape=None) -> "WeightedGraph":
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if not np.allclose(w, w.T, rtol=0, atol=1e-12):
            raise ValueError("adjacency matrix must be symmetric")
        i, j = np.nonzero(np.triu(w))
        return cls(w.shape[0], i, j, w[i, j], shape=shape)

    @property
    def self_loops(self) -> np.ndarray:
        return self.adjacency.diagonal()

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.weights >= 0))

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def __repr__(self):
        return (f"WeightedGraph(n={self.n}, shape={self.shape}, "
                f"edges={self.weights.size})")


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Path ``0 - 1 - ... - n-1`` with equal edge weights and no self-loops."""
    i = np.arange(n - 1)
    return WeightedGraph(n, i, i + 1, np.full(n - 1, float(weight)))


def _offsets(shape, half_width: int, stencil: str = "window"):
    """Neighbor offsets that are positive in lexicographic order."""
    if len(shape) == 1:
        return [(o,) for o in range(1, half_width + 1)]
    if stencil == "5-point":
        return [(0, 1), (1, 0)]
    h = half_width
    return [(dr, dc) for dr in range(0, h + 1) for dc in range(-h, h + 1)
            if dr > 0 or dc > 0]


def neighborhood(shape, i: int, half_width: int = 1,
                 stencil: str = "window") -> list[int]:
    """Vertices adjacent to ``i`` (``i`` included), truncated at borders."""
    n = int(np.prod(shape))
    if not 0 <= i < n:
        raise ValueError(f"vertex {i} out of range for shape {tuple(shape)}")
    if len(shape) == 1:
        return list(range(max(0, i - half_width), min(n, i + half_width + 1)))
    rows, cols = shape
    r, c = divmod(i, cols)
    offs = _offsets(shape, half_width, stencil)
    out = {i}
    for dr, dc in offs:
        for s in (1, -1):
            rr, cc = r + s * dr, c + s * dc
            if 0 <= rr < rows and 0 <= cc < cols:
                out.add(rr * cols + cc)
    return sorted(out)


def _edge_pairs(shape, offset):
    """Index pairs ``(i, i + offset)`` with both ends inside the grid."""
    if len(shape) == 1:
        (o,) = offset
        i = np.arange(shape[0] - o)
        return i, i + o
    rows, cols = shape
    dr, dc = offset
    r = np.arange(0, rows - dr)
    c = np.arange(max(0, -dc), cols - max(0, dc))
    rr, cc = np.meshgrid(r, c, indexing="ij")
    i = (rr * cols + cc).ravel()
    return i, i + dr * cols + dc


def bf_graph(guidance: Signal, params: BfParams) -> WeightedGraph:
    """Bilateral-filter graph of ``guidance``; self-loops have weight 1."""
    g = guidance.values
    n = g.size
    rows, cols, weights = [np.arange(n)], [np.arange(n)], [np.ones(n)]
    two_ss = 2.0 * params.sigma_s ** 2
    two_sr = 2.0 * params.sigma_r ** 2
    for off in _offsets(guidance.shape, params.half_width, params.stencil):
        i, j = _edge_pairs(guidance.shape, off)
        if i.size == 0:
            continue
        dist2 = float(sum(o * o for o in off))
        w = np.exp(-dist2 / two_ss) * np.exp(-(g[i] - g[j]) ** 2 / two_sr)
        rows.append(i)
        cols.append(j)
        weights.append(w)
    return WeightedGraph(n, np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(weights), shape=guidance.shape)


def gf_weight_matrix(guidance: Signal, params: GfParams) -> WeightedGraph:
    """Symmetric matrix ``W(g)`` realized implicitly by the guided filter.

    ``W_ij = |w|^-2 * sum_k (1 + (g_i - mu_k)(g_j - mu_k) / (var_k + eps))``
    over windows ``k`` containing both ``i`` and ``j``.  Window statistics
    use truncated windows at the borders while the prefactor keeps the
    full window size ``|w|``, so row sums equal 1 only away from the
    borders.  Entries may be negative.
    """
    shape = guidance.shape
    g = guidance.as_array()
    rho = params.rho
    mu = box_mean_array(g, rho)
    var = box_mean_array(g * g, rho) - mu * mu
    scale = 1.0 / (var + params.epsilon)
    size_w = rho ** len(shape)
    r = rho // 2
    n = g.size

    flat_g, flat_mu, flat_scale = g.ravel(), mu.ravel(), scale.ravel()
    k_all = np.arange(n)
    k_pos = np.unravel_index(k_all, shape)
    win = list(itertools.product(range(-r, r + 1), repeat=len(shape)))

    # window member at offset a for every center k, -1 where out of bounds
    members = []
    for a in win:
        pos = [p + o for p, o in zip(k_pos, a)]
        ok = np.ones(n, dtype=bool)
        for p, s in zip(pos, shape):
            ok &= (p >= 0) & (p < s)
        idx = np.full(n, -1, dtype=np.int64)
        idx[ok] = np.ravel_multi_index([p[ok] for p in pos], shape)
        members.append(idx)

    rows, cols, vals = [], [], []
    for ia, ib in itertools.combinations_with_replacement(range(len(win)), 2):
        i, j = members[ia], members[ib]
        ok = (i >= 0) & (j >= 0)
        i, j, k = i[ok], j[ok], k_all[ok]
        v = 1.0 + (flat_g[i] - flat_mu[k]) * (flat_g[j] - flat_mu[k]) * flat_scale[k]
        # an unordered offset pair lands on exactly one triangle entry;
        # WeightedGraph flips it to i <= j
        rows.append(i)
        cols.append(j)
        vals.append(v / size_w ** 2)
    return WeightedGraph(n, np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), shape=shape)


class LaplacianOperator:
    """Matrix-free ``L = D - W`` or its diagonal-scaled form ``S L S``.

    With ``normalized=True``, ``S = diag(L)^(-1/2)`` and the operator has a
    unit diagonal.
    """

    def __init__(self, graph: WeightedGraph, normalized: bool = False):
        self.graph = graph
        self.normalized = bool(normalized)
        self._diag = graph.degrees - graph.self_loops
        self._scale = None
        if self.normalized:
            if np.any(self._diag <= 0):
                bad = int(np.flatnonzero(self._diag <= 0)[0])
                raise SingularScalingError(
                    f"diag(L) has non-positive entry at vertex {bad}")
            self._scale = 1.0 / np.sqrt(self._diag)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shape(self):
        return (self.graph.n, self.graph.n)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self._scale is not None:
            x = self._scale * x
        y = self.graph.degrees * x - self.graph.adjacency @ x
        if self._scale is not None:
            y = self._scale * y
        return y

    __matmul__ = matvec

    def diagonal(self) -> np.ndarray:
        if self.normalized:
            return np.ones(self.n)
        return self._diag.copy()

    def to_dense(self) -> np.ndarray:
        lap = np.diag(self.graph.degrees) - self.graph.to_dense()
        if self._scale is not None:
            lap = self._scale[:, None] * lap * self._scale[None, :]
        return lap

    def to_sparse(self) -> sp.csr_matrix:
        lap = sp.diags(self.graph.degrees) - self.graph.adjacency
        if self._scale is not None:
            s = sp.diags(self._scale)
            lap = s @ lap @ s
        return sp.csr_matrix(lap)


def laplacian(graph: WeightedGraph, normalized: bool = False) -> LaplacianOperator:
    return LaplacianOperator(graph, normalized)


def degree_matvec(graph: WeightedGraph, x) -> np.ndarray:
    return graph.degrees * np.asarray(x, dtype=np.float64)


def degree_solve(graph: WeightedGraph, x) -> np.ndarray:
    d = graph.degrees
    if np.any(d == 0):
        bad = int(np.flatnonzero(d == 0)[0])
        raise SingularPreconditionerError(f"zero degree at vertex {bad}")
    return np.asarray(x, dtype=np.float64) / d


def gershgorin_check(graph: WeightedGraph) -> bool:
    """True when ``max_i d_i <= 2``."""
    return bool(graph.degrees.max() <= 2.0)
