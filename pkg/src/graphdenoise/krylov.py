"""Krylov-subspace polynomial filters on a graph Laplacian.

Both filters start from the noisy signal and run a small, fixed number of
iterations of a solver for ``L x = 0`` (flexible preconditioned CG) or for
the smallest eigenpair of the pencil ``(L, D)`` (single-vector LOBPCG).
The iteration count is the smoothing parameter; running them to
convergence flattens the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from .graph import LaplacianOperator, SingularPreconditionerError
from .signal import Signal

BETA_RULES = ("printed", "standard")
DROP_TOL = 1e-8


class DegenerateBasisError(ValueError):
    """Every trial vector was dropped as linearly dependent."""


@dataclass(frozen=True)
class KrylovConfig:
    """Iteration budget and options shared by the CG and LOBPCG filters.

    ``beta_rule="printed"`` uses ``s^T (r - r_old) / (s_old^T s_old)``;
    ``"standard"`` swaps the denominator for ``s_old^T r_old``
    (flexible Polak-Ribiere CG).
    """

    k_max: int = 20
    constraint_e: bool = False
    breakdown_tol: float = 1e-14
    beta_rule: str = "printed"

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if not 0 < self.breakdown_tol < 1:
            raise ValueError("breakdown_tol must lie in (0, 1)")
        if self.beta_rule not in BETA_RULES:
            raise ValueError(f"beta_rule must be one of {BETA_RULES}")


@dataclass
class KrylovInfo:
    iterations: int = 0
    status: str = "max_iter"
    residual_norms: list = field(default_factory=list)
    rayleigh_quotients: list = field(default_factory=list)


@dataclass
class LobpcgState:
    x: np.ndarray
    p: Optional[np.ndarray]
    lam: float


class RitzPairs(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    coefficients: np.ndarray


def _as_vector(x, n: int) -> np.ndarray:
    v = x.values if isinstance(x, Signal) else np.asarray(x, dtype=np.float64)
    v = np.array(v, dtype=np.float64).ravel()
    if v.size != n:
        raise ValueError(f"vector of length {v.size} does not match operator size {n}")
    return v


def _degrees(lap: LaplacianOperator, degrees) -> np.ndarray:
    d = lap.graph.degrees if degrees is None else np.asarray(degrees, dtype=np.float64)
    if d.shape != (lap.n,):
        raise ValueError("degree vector does not match operator size")
    if np.any(d <= 0):
        raise SingularPreconditionerError("preconditioner needs positive degrees")
    return d


def _wrap(x0, values):
    if isinstance(x0, Signal):
        return x0.with_values(values)
    return values


def pcg_filter(lap: LaplacianOperator, x0, config: KrylovConfig = KrylovConfig(),
               degrees=None, callback: Optional[Callable] = None,
               return_info: bool = False):
    """Run ``k_max`` steps of preconditioned CG on ``L x = 0`` from ``x0``.

    Parameters
    ----------
    lap : LaplacianOperator
    x0 : Signal or ndarray
        Noisy signal; also the starting guess.
    config : KrylovConfig
    degrees : ndarray, optional
        Diagonal of the preconditioner ``D``; the graph degrees by default.
    callback : callable, optional
        Called as ``callback(k, x_k)`` after every completed iteration.
    return_info : bool
        Also return a :class:`KrylovInfo`.

    Returns
    -------
    Signal or ndarray (same type as ``x0``), optionally with the info.

    Notes
    -----
    The result is a polynomial filter ``p_k(D^-1 L) x0``.  Since
    ``e^T L = 0`` every update keeps ``e^T D x`` fixed.  Breakdown
    (``|p^T q|`` or ``|r|`` negligible) stops early instead of raising.
    """
    d = _degrees(lap, degrees)
    x = _as_vector(x0, lap.n)
    tol = config.breakdown_tol
    info = KrylovInfo()

    r = -lap.matvec(x)
    r0 = np.linalg.norm(r)
    info.residual_norms.append(r0)
    if r0 == 0:
        info.status = "converged"
    else:
        p = s_old = r_old = None
        for k in range(1, config.k_max + 1):
            if np.linalg.norm(r) <= tol * r0:
                info.status = "converged"
                break
            s = r / d
            if k == 1:
                p = s
            else:
                denom = s_old @ s_old if config.beta_rule == "printed" else s_old @ r_old
                beta = (s @ (r - r_old)) / denom
                p = s + beta * p
            q = lap.matvec(p)
            pq = p @ q
            if abs(pq) <= tol * np.linalg.norm(p) * np.linalg.norm(q) or pq == 0:
                info.status = "breakdown"
                break
            alpha = (s @ r) / pq
            x = x + alpha * p
            r_old, s_old = r, s
            r = r - alpha * q
            info.iterations = k
            info.residual_norms.append(np.linalg.norm(r))
            if callback is not None:
                callback(k, x)

    out = _wrap(x0, x)
    return (out, info) if return_info else out


def _project_out_ones(v: np.ndarray) -> np.ndarray:
    return v - v.mean()


def rayleigh_ritz(lap: LaplacianOperator, degrees, basis: Sequence) -> RitzPairs:
    """Rayleigh-Ritz for the pencil ``(L, D)`` on ``span(basis)``.

    The basis is D-orthonormalized by Gram-Schmidt with one reorthogonalization
    pass.  A vector whose D-norm falls below ``1e-8`` of its original norm
    after orthogonalization (or is zero to begin with) is dropped.

    Returns
    -------
    RitzPairs
        ``values`` ascending, ``vectors`` (n x m) the Ritz vectors, and
        ``coefficients`` (len(basis) x m) expressing each Ritz vector in the
        original basis; dropped vectors get zero coefficients.
    """
    d = np.asarray(degrees, dtype=np.float64)
    if len(basis) == 0:
        raise DegenerateBasisError("empty trial basis")
    nb = len(basis)
    q_vecs, q_coef = [], []
    for j, v in enumerate(basis):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != d.shape:
            raise ValueError("basis vector does not match operator size")
        norm0 = np.sqrt(v @ (d * v))
        if not norm0 > 0:
            continue
        u = v.copy()
        c = np.zeros(nb)
        c[j] = 1.0
        for _ in range(2):
            for qv, qc in zip(q_vecs, q_coef):
                h = qv @ (d * u)
                u -= h * qv
                c -= h * qc
        norm = np.sqrt(u @ (d * u))
        if norm < DROP_TOL * norm0:
            continue
        q_vecs.append(u / norm)
        q_coef.append(c / norm)
    if not q_vecs:
        raise DegenerateBasisError("all trial vectors are linearly dependent or zero")

    Q = np.column_stack(q_vecs)
    C = np.column_stack(q_coef)
    LQ = np.column_stack([lap.matvec(q) for q in q_vecs])
    A = Q.T @ LQ
    B = Q.T @ (d[:, None] * Q)
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    values, y = scipy.linalg.eigh(A, B)
    return RitzPairs(values, Q @ y, C @ y)


def _rayleigh_quotient(lap, d, x):
    return (x @ lap.matvec(x)) / (x @ (d * x))


def lobpcg_filter(lap: LaplacianOperator, x0, config: KrylovConfig = KrylovConfig(),
                  degrees=None, precond: Optional[Callable] = None,
                  callback: Optional[Callable] = None, return_info: bool = False):
    """Smooth ``x0`` with ``k_max`` steps of single-vector LOBPCG.

    Each step takes ``w = T r`` with ``r = L x - lambda D x``, does
    Rayleigh-Ritz on ``span{x, w, p}`` for ``(L, D)`` and keeps the Ritz
    vector of the smallest Ritz value.

    Parameters
    ----------
    lap : LaplacianOperator
    x0 : Signal or ndarray
        Nonzero starting signal.
    config : KrylovConfig
        ``constraint_e`` keeps every iterate Euclidean-orthogonal to the
        all-ones vector.
    degrees : ndarray, optional
        Diagonal of ``D``; the graph degrees by default.
    precond : callable, optional
        ``T``, applied as ``precond(r)``.  Defaults to ``r / d``.
    callback : callable, optional
        ``callback(k, x_k)`` with the unit D-norm iterate after step ``k``.
    return_info : bool
        Also return a :class:`KrylovInfo` whose ``rayleigh_quotients`` lists
        ``lambda_0, ..., lambda_k``.

    Notes
    -----
    The eigenvector scale is arbitrary, so the output is rescaled: without
    the constraint so that ``e^T D x`` matches ``x0``; with the constraint
    the mean of ``x0`` is split off first, the iterate is scaled by its
    D-projection onto the remainder, and the mean is added back.
    """
    d = _degrees(lap, degrees)
    T = precond if precond is not None else (lambda r: r / d)
    x_in = _as_vector(x0, lap.n)
    if not np.any(x_in):
        raise ValueError("LOBPCG needs a nonzero starting vector")
    project = _project_out_ones if config.constraint_e else (lambda v: v)

    mean = x_in.mean() if config.constraint_e else 0.0
    target = x_in - mean
    x = project(x_in)
    if not np.any(np.abs(x) > 1e-15 * np.abs(x_in).max()):
        raise ValueError("starting vector is constant; nothing left after the constraint")
    x = x / np.sqrt(x @ (d * x))
    state = LobpcgState(x=x, p=None, lam=_rayleigh_quotient(lap, d, x))
    info = KrylovInfo()
    info.rayleigh_quotients.append(state.lam)

    for k in range(1, config.k_max + 1):
        Lx = lap.matvec(state.x)
        Dx = d * state.x
        r = Lx - state.lam * Dx
        rnorm = np.linalg.norm(r)
        info.residual_norms.append(rnorm)
        if rnorm <= config.breakdown_tol * (np.linalg.norm(Lx) + abs(state.lam) * np.linalg.norm(Dx)):
            info.status = "converged"
            break
        w = project(np.asarray(T(r), dtype=np.float64))
        basis = [state.x, w] if state.p is None else [state.x, w, state.p]
        ritz = rayleigh_ritz(lap, d, basis)
        coef = ritz.coefficients[:, 0]
        tau, cw = coef[0], coef[1]
        gamma = coef[2] if state.p is not None else 0.0
        p_term = gamma * state.p if state.p is not None else 0.0
        if abs(cw) > 1e-12:
            tau, gamma = tau / cw, gamma / cw
            p_new = w + (p_term / cw)
            x_new = p_new + tau * state.x
        else:
            p_new = cw * w + p_term
            x_new = p_new + tau * state.x
        x_new = project(x_new)
        x_new = x_new / np.sqrt(x_new @ (d * x_new))
        state = LobpcgState(x=x_new, p=project(p_new),
                            lam=_rayleigh_quotient(lap, d, x_new))
        info.iterations = k
        info.rayleigh_quotients.append(state.lam)
        if callback is not None:
            callback(k, state.x)

    x = state.x
    if config.constraint_e:
        scale = (x @ (d * target)) / (x @ (d * x))
        out = mean + scale * x
    else:
        mass = np.sum(d * x)
        if abs(mass) > 1e-12 * np.sum(d * np.abs(x)) and np.sum(d * x_in) != 0:
            out = x * (np.sum(d * x_in) / mass)
        else:
            out = x * ((x @ (d * x_in)) / (x @ (d * x)))
    out = _wrap(x0, out)
    return (out, info) if return_info else out
