"""ADMM solver for group-sparse local patch coding.

Each target candidate is a ``d x l`` matrix ``X`` of patch features. It is coded
against a dictionary ``D = [D_1, ..., D_k]`` of ``k`` templates, each holding
the same ``l`` patches, by solving::

    minimize_C  ||X - D C||_F^2 + lam * sum_q max |C_q(:)|
    subject to  C >= 0,  1' C = 1'

where ``C_q`` is the ``l x l`` block of ``C`` belonging to template ``q``. The
block maxima are replaced by a vector ``m`` and a nonnegative slack ``U`` with
``C + U = m (x) 1 1'``; ADMM then alternates an exact equality-constrained
quadratic solve in ``(C, U)``, a simplex projection for ``C_hat``, a clamp for
``U_hat`` and dual ascent.

Internally iterates are stored transposed in a batch layout ``(n, l, l*k)``:
row ``j`` of candidate ``i`` is code column ``j``, so ``n`` candidates sharing a
dictionary advance together and every simplex projection works on a
contiguous row.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._validation import NumericalError, check_finite_matrix, check_positive_int
from .projections import _simplex_rows

__all__ = [
    "Dictionary",
    "SolverConfig",
    "SolverState",
    "Precomputation",
    "SolverDiagnostics",
    "BatchDiagnostics",
    "precompute",
    "init_state",
    "update_cu",
    "update_chat",
    "update_uhat",
    "update_duals",
    "residuals",
    "objective",
    "smooth_gradient",
    "solve",
    "solve_batch",
]


@dataclass(frozen=True)
class Dictionary:
    """Patch dictionary: column ``q*l + r`` is patch ``r`` of template ``q``."""

    data: np.ndarray
    l: int
    k: int

    def __post_init__(self):
        l = check_positive_int(self.l, "l")
        k = check_positive_int(self.k, "k")
        data = check_finite_matrix(self.data, "D")
        if data.shape[1] != l * k:
            raise ValueError(f"D has {data.shape[1]} columns, expected l*k = {l * k}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "k", k)

    @property
    def d(self):
        return self.data.shape[0]

    def block(self, q):
        return self.data[:, q * self.l:(q + 1) * self.l]


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.1
    mu: float = 0.1
    max_iters: int = 100
    tol: float = 1e-4

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        check_positive_int(self.max_iters, "max_iters")


@dataclass
class Precomputation:
    """Cached factorizations for the (C, U) update.

    ``G = 2 D'D + 2 mu I`` is Cholesky-factored once and its inverse kept for
    batched products. ``G_inv_S = G^-1 S`` with ``S = I_k (x) 1_l`` and the
    ``k x k`` Schur matrix ``l^2 I - mu l S' G^-1 S`` eliminate ``m`` exactly.
    """

    dictionary: Dictionary
    mu: float
    lam: float
    G: np.ndarray
    G_factor: tuple
    G_inv: np.ndarray
    G_inv_S: np.ndarray
    schur: np.ndarray
    schur_factor: tuple
    schur_inv: np.ndarray

    @property
    def l(self):
        return self.dictionary.l

    @property
    def k(self):
        return self.dictionary.k


@dataclass
class SolverState:
    """ADMM iterates for one candidate; every matrix is ``(l*k, l)``."""

    C: np.ndarray
    U: np.ndarray
    C_hat: np.ndarray
    U_hat: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    m: np.ndarray
    iter: int = 0
    residual_trace: list = field(default_factory=list)


@dataclass
class SolverDiagnostics:
    converged: bool
    n_iter: int
    r1: float
    r2: float
    objective: float
    objective_trace: list
    residual_trace: list


@dataclass
class BatchDiagnostics:
    converged: np.ndarray
    n_iter: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


def precompute(D, cfg):
    """Factor the (C, U)-update system for dictionary ``D`` and config ``cfg``.

    Raises
    ------
    NumericalError
        If either system fails a Cholesky factorization.
    """
    if not isinstance(D, Dictionary):
        raise TypeError("D must be a Dictionary")
    l, k = D.l, D.k
    lk = l * k
    G = 2.0 * D.data.T @ D.data + 2.0 * cfg.mu * np.eye(lk)
    try:
        G_factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(
            f"2 D'D + 2 mu I is not positive definite (mu={cfg.mu}, "
            f"min diag={G.diagonal().min():.3e})") from exc
    G_inv = linalg.cho_solve(G_factor, np.eye(lk))
    G_inv = 0.5 * (G_inv + G_inv.T)
    S = np.kron(np.eye(k), np.ones((l, 1)))
    G_inv_S = G_inv @ S
    schur = l * l * np.eye(k) - cfg.mu * l * (S.T @ G_inv_S)
    schur = 0.5 * (schur + schur.T)
    try:
        schur_factor = linalg.cho_factor(schur, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("reduced system for m is singular") from exc
    schur_inv = linalg.cho_solve(schur_factor, np.eye(k))
    schur_inv = 0.5 * (schur_inv + schur_inv.T)
    return Precomputation(D, cfg.mu, cfg.lam, G, G_factor, G_inv, G_inv_S,
                          schur, schur_factor, schur_inv)


def _block_sums(A, l, k):
    # (n, l, l*k) -> (n, k)
    return A.sum(axis=1).reshape(-1, k, l).sum(axis=2)


def _cu_step(C_hat, U_hat, u1, u2, DtX2, pre, lam, mu):
    """Exact (C, U, m) minimizer of the augmented Lagrangian, batch layout.

    ``u1``, ``u2`` are the scaled duals ``Lambda / mu``.
    """
    l, k = pre.l, pre.k
    n = C_hat.shape[0]
    B = U_hat - u2
    R = C_hat - u1
    R -= B
    R *= mu
    R += DtX2
    C = (R.reshape(n * l, l * k) @ pre.G_inv).reshape(n, l, l * k)
    rhs = _block_sums(C, l, k)
    rhs += _block_sums(B, l, k)
    rhs -= lam / mu
    m = rhs @ pre.schur_inv
    C += (mu * (m @ pre.G_inv_S.T))[:, None, :]
    U = np.repeat(m, l, axis=1)[:, None, :] - C
    return C, U, m


def _chat_step(C, u1):
    n, l, lk = C.shape
    return _simplex_rows((C + u1).reshape(n * l, lk)).reshape(n, l, lk)


def _uhat_step(U, u2):
    V = U + u2
    return np.maximum(V, 0.0, out=V)


def _as_batch(a):
    return a.T[None]


def _from_batch(a):
    return a[0].T.copy()


def init_state(l, k):
    """Uniform feasible start: ``C_hat = 1/(l k)``, everything else zero."""
    lk = l * k
    full = np.full((lk, l), 1.0 / lk)
    zeros = np.zeros((lk, l))
    return SolverState(C=full.copy(), U=zeros.copy(), C_hat=full, U_hat=zeros.copy(),
                       Lambda1=zeros.copy(), Lambda2=zeros.copy(), m=np.zeros(k))


def update_cu(state, X, pre, cfg):
    """Return the exact ``(C, U, m)`` update for a single-candidate state."""
    X = check_finite_matrix(X, "X", shape=(pre.dictionary.d, pre.l))
    DtX2 = _as_batch(2.0 * pre.dictionary.data.T @ X)
    C, U, m = _cu_step(_as_batch(state.C_hat), _as_batch(state.U_hat),
                       _as_batch(state.Lambda1 / cfg.mu), _as_batch(state.Lambda2 / cfg.mu),
                       DtX2, pre, cfg.lam, cfg.mu)
    return _from_batch(C), _from_batch(U), m[0]


def update_chat(state, cfg):
    """Column-wise simplex projection of ``C + Lambda1 / mu``."""
    return _from_batch(_chat_step(_as_batch(state.C), _as_batch(state.Lambda1 / cfg.mu)))


def update_uhat(state, cfg):
    return _uhat_step(state.U, state.Lambda2 / cfg.mu)


def update_duals(state, cfg):
    L1 = state.Lambda1 + cfg.mu * (state.C - state.C_hat)
    L2 = state.Lambda2 + cfg.mu * (state.U - state.U_hat)
    return L1, L2


def residuals(state):
    """Primal residuals ``(||C - C_hat||_F, ||U - U_hat||_F)``."""
    return (float(np.linalg.norm(state.C - state.C_hat)),
            float(np.linalg.norm(state.U - state.U_hat)))


def _objective_batch(Ct, X, D, lam, l, k):
    # Ct: (n, l, lk) transposed codes, X: (n, d, l) -> (n,)
    n = Ct.shape[0]
    fit = X - np.einsum("dp,njp->ndj", D, Ct)
    blockmax = np.abs(Ct).reshape(n, l, k, l).max(axis=(1, 3))
    return np.einsum("ndj,ndj->n", fit, fit) + lam * blockmax.sum(axis=1)


def objective(C, X, D, lam):
    """``||X - D C||_F^2 + lam * sum_q max|C_q|`` for a single code."""
    if not isinstance(D, Dictionary):
        raise TypeError("D must be a Dictionary")
    C = check_finite_matrix(C, "C", shape=(D.l * D.k, D.l))
    X = check_finite_matrix(X, "X", shape=(D.d, D.l))
    return float(_objective_batch(_as_batch(C), X[None], D.data, lam, D.l, D.k)[0])


def smooth_gradient(C, X, D):
    """Gradient of ``||X - D C||_F^2`` with respect to ``C``."""
    Dm = D.data if isinstance(D, Dictionary) else np.asarray(D, dtype=float)
    return -2.0 * Dm.T @ (X - Dm @ C)


def _check_candidates(Xs, pre):
    Xs = np.asarray(Xs, dtype=float)
    d, l = pre.dictionary.d, pre.l
    if Xs.ndim != 3 or Xs.shape[1:] != (d, l):
        raise ValueError(f"candidates must have shape (n, {d}, {l}), got {Xs.shape}")
    if not np.all(np.isfinite(Xs)):
        raise ValueError("candidate features contain non-finite entries")
    return Xs


def solve_batch(Xs, pre, cfg, record_objective=False, chunk_size=32):
    """Code ``n`` candidates against one dictionary.

    Each candidate stops as soon as its own relative residual
    ``max(r1, r2) / max(1, ||C||_F)`` drops to ``cfg.tol``, so results match
    independent single-candidate solves. Candidates are processed in chunks
    of ``chunk_size`` to keep the working arrays cache-resident.

    Parameters
    ----------
    Xs : ndarray, shape (n, d, l)
    pre : Precomputation
    cfg : SolverConfig
    record_objective : bool
        Evaluate the objective every iteration. Needed to hand back the best
        iterate of candidates that hit ``max_iters``; otherwise the last
        (always feasible) ``C_hat`` is returned.

    Returns
    -------
    C_hat : ndarray, shape (n, l*k, l)
    diag : BatchDiagnostics
    """
    Xs = _check_candidates(Xs, pre)
    if pre.mu != cfg.mu or pre.lam != cfg.lam:
        raise ValueError("precomputation was built with a different (lam, mu)")
    parts = [_solve_chunk(Xs[i:i + chunk_size], pre, cfg, record_objective)
             for i in range(0, len(Xs), chunk_size)]
    if not parts:
        lk, l = pre.l * pre.k, pre.l
        empty = np.zeros(0)
        return np.zeros((0, lk, l)), BatchDiagnostics(empty.astype(bool), empty.astype(int),
                                                      empty, empty)
    codes = np.concatenate([p[0] for p in parts])
    diag = BatchDiagnostics(*(np.concatenate([getattr(p[1], f) for p in parts])
                              for f in ("converged", "n_iter", "r1", "r2")))
    return codes, diag


def _solve_chunk(Xs, pre, cfg, record_objective):
    D = pre.dictionary.data
    l, k = pre.l, pre.k
    lk = l * k
    n = Xs.shape[0]
    mu, lam = cfg.mu, cfg.lam

    out = np.empty((n, l, lk))
    conv = np.zeros(n, dtype=bool)
    n_iter = np.zeros(n, dtype=int)
    r1_out = np.zeros(n)
    r2_out = np.zeros(n)

    idx = np.arange(n)
    DtX2 = 2.0 * (Xs.transpose(0, 2, 1) @ D)
    C_hat = np.full((n, l, lk), 1.0 / lk)
    U_hat = np.zeros((n, l, lk))
    u1 = np.zeros((n, l, lk))
    u2 = np.zeros((n, l, lk))
    if record_objective:
        best_obj = np.full(n, np.inf)
        best_C = C_hat.copy()

    for it in range(1, cfg.max_iters + 1):
        C, U, _ = _cu_step(C_hat, U_hat, u1, u2, DtX2, pre, lam, mu)
        C_hat = _chat_step(C, u1)
        U_hat = _uhat_step(U, u2)
        dC = C - C_hat
        dU = U - U_hat
        u1 += dC
        u2 += dU
        r1 = np.sqrt(np.einsum("njp,njp->n", dC, dC))
        r2 = np.sqrt(np.einsum("njp,njp->n", dU, dU))
        scale = np.maximum(1.0, np.sqrt(np.einsum("njp,njp->n", C, C)))
        ok = np.maximum(r1, r2) / scale <= cfg.tol
        if record_objective:
            obj = _objective_batch(C_hat, Xs[idx], D, lam, l, k)
            better = obj < best_obj
            best_obj[better] = obj[better]
            best_C[better] = C_hat[better]
        done = ok if it < cfg.max_iters else np.ones_like(ok)
        if done.any():
            fin = idx[done]
            out[fin] = C_hat[done]
            if record_objective:
                stuck = done & ~ok
                out[idx[stuck]] = best_C[stuck]
            conv[fin] = ok[done]
            n_iter[fin] = it
            r1_out[fin] = r1[done]
            r2_out[fin] = r2[done]
            keep = ~done
            if not keep.any():
                break
            idx = idx[keep]
            DtX2, C_hat, U_hat, u1, u2 = (a[keep] for a in (DtX2, C_hat, U_hat, u1, u2))
            if record_objective:
                best_obj = best_obj[keep]
                best_C = best_C[keep]

    return out.transpose(0, 2, 1).copy(), BatchDiagnostics(conv, n_iter, r1_out, r2_out)


def solve(X, D, pre, cfg):
    """Code a single ``d x l`` candidate; returns ``(C_hat, SolverDiagnostics)``.

    Non-convergence is reported through ``diag.converged`` rather than raised,
    and the lowest-objective feasible iterate is returned in that case.
    """
    if pre.dictionary is not D:
        if not (pre.dictionary.l == D.l and pre.dictionary.k == D.k
                and np.array_equal(pre.dictionary.data, D.data)):
            raise ValueError("precomputation was built for a different dictionary")
    X = check_finite_matrix(X, "X", shape=(D.d, D.l))
    if pre.mu != cfg.mu or pre.lam != cfg.lam:
        raise ValueError("precomputation was built with a different (lam, mu)")
    l, k = D.l, D.k
    state = init_state(l, k)
    obj_trace = []
    best = (np.inf, state.C_hat)
    converged = False
    for it in range(1, cfg.max_iters + 1):
        state.C, state.U, state.m = update_cu(state, X, pre, cfg)
        state.C_hat = update_chat(state, cfg)
        state.U_hat = update_uhat(state, cfg)
        state.Lambda1, state.Lambda2 = update_duals(state, cfg)
        state.iter = it
        r1, r2 = residuals(state)
        state.residual_trace.append((r1, r2))
        obj = objective(state.C_hat, X, D, cfg.lam)
        obj_trace.append(obj)
        if obj < best[0]:
            best = (obj, state.C_hat)
        if max(r1, r2) / max(1.0, float(np.linalg.norm(state.C))) <= cfg.tol:
            converged = True
            break
    C_hat = state.C_hat if converged else best[1]
    r1, r2 = state.residual_trace[-1]
    diag = SolverDiagnostics(converged, state.iter, r1, r2, objective(C_hat, X, D, cfg.lam),
                             obj_trace, state.residual_trace)
    return C_hat, diag
