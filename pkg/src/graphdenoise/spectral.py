"""Dense spectral reference: eigendecomposition, graph Fourier transform and
an ideal low-pass filter.  Meant for validation at desk scale only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .signal import Signal

MAX_DENSE_SIZE = 4096
JACOBI_MAX_SIZE = 256


class CapacityError(ValueError):
    """Matrix too large for the dense eigensolver."""


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T


def _round_robin(m: int):
    """Rounds of disjoint index pairs covering all pairs of ``range(m)``, m even."""
    players = list(range(m))
    for _ in range(m - 1):
        yield players[: m // 2], players[m // 2:][::-1]
        players = [players[0]] + [players[-1]] + players[1:-1]


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Pairs are visited in round-robin order, so every round applies ``n/2``
    rotations on disjoint index pairs at once.  Sweeps stop once the
    off-diagonal Frobenius norm drops below ``tol`` times the Frobenius
    norm of the input.

    Returns
    -------
    (eigenvalues, eigenvectors), unsorted.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    m = n + (n % 2)
    if m != n:
        # a decoupled padding row keeps the pairing even
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(m)
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), np.eye(n)
    rounds = [(np.array(p), np.array(q)) for p, q in _round_robin(m)]

    offdiag = ~np.eye(m, dtype=bool)
    for _ in range(max_sweeps):
        # measured directly; sum(a^2) - sum(diag^2) cancels catastrophically
        if np.linalg.norm(a[offdiag]) <= tol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(1.0, theta))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    return np.diag(a)[:n].copy(), v[:n, :n].copy()


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # first component that is clearly nonzero is made positive
    mags = np.abs(u)
    first = np.argmax(mags > 1e-12 * mags.max(axis=0), axis=0)
    signs = np.sign(u[first, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def eig_sym(matrix, method: str = "auto") -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_SIZE``, LAPACK above).  Eigenvectors are unit length with
    their first nonzero component positive.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n > MAX_DENSE_SIZE:
        raise CapacityError(f"dense eigensolver limited to n <= {MAX_DENSE_SIZE}, got {n}")
    asym = np.max(np.abs(a - a.T)) if n else 0.0
    if asym > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    a = 0.5 * (a + a.T)
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_SIZE else "lapack"
    if method == "jacobi":
        w, u = jacobi_eigh(a)
    elif method == "lapack":
        w, u = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    w, u = w[order], u[:, order]
    u = _fix_signs(u / np.linalg.norm(u, axis=0))
    return SpectralDecomposition(w, u)


def _coeff_vector(x, n: int) -> np.ndarray:
    v = x.values if isinstance(x, Signal) else np.asarray(x, dtype=np.float64).ravel()
    if v.size != n:
        raise ValueError(f"length {v.size} does not match decomposition size {n}")
    return v


def gft(decomp: SpectralDecomposition, x) -> np.ndarray:
    """Graph Fourier coefficients ``U^T x``."""
    return decomp.eigenvectors.T @ _coeff_vector(x, decomp.n)


def igft(decomp: SpectralDecomposition, coefficients, shape=None) -> Signal:
    c = _coeff_vector(coefficients, decomp.n)
    values = decomp.eigenvectors @ c
    return Signal(values, shape if shape is not None else (decomp.n,))


def ideal_lowpass(decomp: SpectralDecomposition, x, cutoff: float) -> Signal:
    """Keep only the frequencies ``lambda_i <= cutoff``.

    Eigenvalues within ``1e-12 * max|lambda|`` of the cutoff count as kept,
    so ``cutoff=0`` retains a null space computed as ``+1e-17``.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    coeffs = gft(decomp, x)
    slack = 1e-12 * max(1.0, float(np.abs(decomp.eigenvalues).max(initial=0.0)))
    coeffs[decomp.eigenvalues > cutoff + slack] = 0.0
    shape = x.shape if isinstance(x, Signal) else None
    return igft(decomp, coeffs, shape)


def random_walk_decomposition(graph: WeightedGraph, method: str = "auto"):
    """Spectrum of ``D^-1/2 L D^-1/2``, the symmetric form of ``D^-1 L``.

    ``D^-1 W = D^-1/2 (I - N) D^1/2`` with ``N`` this matrix, so bilateral
    iterations act on the coefficients of ``D^1/2 x`` as ``(1 - mu)^k``.

    Returns
    -------
    decomp : SpectralDecomposition
    sqrt_d : ndarray
        ``D^1/2`` as a vector, for mapping signals into that basis.
    """
    d = graph.degrees
    if np.any(d <= 0):
        raise ValueError("degrees must be positive")
    sqrt_d = np.sqrt(d)
    lap = np.diag(d) - graph.to_dense()
    sym = lap / sqrt_d[:, None] / sqrt_d[None, :]
    return eig_sym(0.5 * (sym + sym.T), method=method), sqrt_d
