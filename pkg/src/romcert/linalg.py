"""Dense matrix-equation kernels.

Lyapunov and Sylvester equations are solved with the Bartels-Stewart
method: both coefficient matrices are brought to real Schur form and the
transformed equation is solved block by block, with 1x1 and 2x2 diagonal
blocks handled by small Kronecker systems.  Shifted solves
``(i alpha I - A) x = b`` provide the frequency-domain moments.

Every solve is recorded in :data:`solve_log`, so callers can audit how many
solves of which size a computation performed.
"""
from __future__ import annotations

import threading
import warnings
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (CommonEigenvalueError, ConvergenceError, DimensionError,
                     NonFiniteError, SingularShiftError, UnstableSystemError)

__all__ = [
    "SolverConfig",
    "config",
    "SchurForm",
    "ShiftedSolve",
    "schur",
    "solve_lyapunov",
    "solve_sylvester",
    "shifted_solve",
    "solve_log",
    "ResidualWarning",
]


@dataclass
class SolverConfig:
    """Residual and separation tolerances used by the solvers."""

    matrix_equation_rtol: float = 1e-8
    shifted_rtol: float = 1e-10
    eigen_gap_rtol: float = 1e-10
    psd_tol: float = 1e-10


config = SolverConfig()


class ResidualWarning(RuntimeWarning):
    pass


class SolveLog:
    """Thread-safe counter of linear-algebra solves keyed by ``(kind, size)``."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = Counter()

    def record(self, kind, size):
        with self._lock:
            self._counts[(kind, size)] += 1

    def snapshot(self) -> Counter:
        with self._lock:
            return Counter(self._counts)

    def count(self, kind=None, min_size=0) -> int:
        snap = self.snapshot()
        return sum(v for (k, s), v in snap.items()
                   if (kind is None or k == kind) and s >= min_size)

    @contextmanager
    def recording(self):
        """Yield a Counter that receives the solves performed inside the block."""
        before = self.snapshot()
        delta = Counter()
        try:
            yield delta
        finally:
            after = self.snapshot()
            after.subtract(before)
            delta.update({k: v for k, v in after.items() if v})


solve_log = SolveLog()


@dataclass(frozen=True, eq=False)
class SchurForm:
    """Real Schur decomposition ``A = Q @ Tm @ Q.T``."""

    Q: np.ndarray
    Tm: np.ndarray

    @property
    def blocks(self) -> list[slice]:
        return _diagonal_blocks(self.Tm)

    def eigenvalues(self) -> np.ndarray:
        ev = []
        for blk in self.blocks:
            B = self.Tm[blk, blk]
            if B.shape[0] == 1:
                ev.append(complex(B[0, 0]))
            else:
                ev.extend(np.linalg.eigvals(B))
        return np.array(ev, dtype=complex)


@dataclass(frozen=True, eq=False)
class ShiftedSolve:
    """Solution of ``(i alpha I - A) x = b``."""

    alpha: float
    solution: np.ndarray
    residual: float


def _check_finite(name, M):
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} has non-finite entries")


def _diagonal_blocks(T):
    n = T.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blocks.append(slice(i, i + 2))
            i += 2
        else:
            blocks.append(slice(i, i + 1))
            i += 1
    return blocks


def schur(A) -> SchurForm:
    """Real Schur form of a square matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    _check_finite("A", A)
    try:
        Tm, Q = scipy.linalg.schur(A, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"QR iteration did not converge: {exc}") from exc
    return SchurForm(Q, Tm)


def _small_sylvester(r, s, rhs):
    """Solve ``r @ y + y @ s = rhs`` for blocks of size at most 2."""
    p, q = rhs.shape
    if p == 1 and q == 1:
        den = r[0, 0] + s[0, 0]
        if den == 0.0:
            raise CommonEigenvalueError("singular 1x1 block in back-substitution")
        return rhs / den
    K = np.kron(np.eye(q), r) + np.kron(s.T, np.eye(p))
    try:
        y = np.linalg.solve(K, rhs.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise CommonEigenvalueError("singular block in back-substitution") from exc
    return y.reshape((p, q), order="F")


def _quasi_triangular_sylvester(R, S, F, s_lower=False):
    """Solve ``R Y + Y S = F`` with R upper quasi-triangular.

    S is upper quasi-triangular, or lower quasi-triangular when ``s_lower``.
    """
    p, q = F.shape
    Y = np.zeros((p, q))
    rblocks = _diagonal_blocks(R)
    if s_lower:
        sblocks = _diagonal_blocks(S.T)[::-1]
    else:
        sblocks = _diagonal_blocks(S)
    for js in sblocks:
        if s_lower:
            G = F[:, js] - Y[:, js.stop:] @ S[js.stop:, js]
        else:
            G = F[:, js] - Y[:, :js.start] @ S[:js.start, js]
        s_jj = S[js, js]
        for ib in reversed(rblocks):
            rhs = G[ib] - R[ib, ib.stop:] @ Y[ib.stop:, js]
            Y[ib, js] = _small_sylvester(R[ib, ib], s_jj, rhs)
    return Y


def _relative_residual(res, rhs):
    return np.linalg.norm(res) / max(1.0, np.linalg.norm(rhs))


def _check_residual(what, rel):
    if rel > config.matrix_equation_rtol:
        warnings.warn(f"{what} residual {rel:.3e} exceeds {config.matrix_equation_rtol:.1e}",
                      ResidualWarning, stacklevel=3)


def solve_sylvester(A, B, C, schur_a: SchurForm | None = None,
                    schur_b: SchurForm | None = None) -> np.ndarray:
    """Solve ``A X + X B + C = 0``.

    Parameters
    ----------
    A : (p, p) array
    B : (q, q) array
    C : (p, q) array
    schur_a, schur_b
        Precomputed real Schur forms of A and B, reused across calls.

    Raises
    ------
    CommonEigenvalueError
        If A and -B have a common eigenvalue up to a relative gap of
        ``config.eigen_gap_rtol * (||A|| + ||B||)``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    p, q = A.shape[0], B.shape[0]
    if A.shape != (p, p) or B.shape != (q, q) or C.shape != (p, q):
        raise DimensionError(f"incompatible shapes A{A.shape}, B{B.shape}, C{C.shape}")
    _check_finite("C", C)
    sa = schur_a if schur_a is not None else schur(A)
    sb = schur_b if schur_b is not None else schur(B)

    ea, eb = sa.eigenvalues(), sb.eigenvalues()
    gap = np.min(np.abs(ea[:, None] + eb[None, :]))
    scale = np.linalg.norm(A, 1) + np.linalg.norm(B, 1)
    if gap <= config.eigen_gap_rtol * scale:
        raise CommonEigenvalueError(
            f"A and -B share an eigenvalue (gap {gap:.3e}, scale {scale:.3e})")

    F = -(sa.Q.T @ C @ sb.Q)
    Y = _quasi_triangular_sylvester(sa.Tm, sb.Tm, F)
    X = sa.Q @ Y @ sb.Q.T
    solve_log.record("sylvester", max(p, q))
    _check_residual("Sylvester", _relative_residual(A @ X + X @ B + C, C))
    return X


def solve_lyapunov(A, W, schur_at: SchurForm | None = None) -> np.ndarray:
    """Solve ``A.T X + X A + W = 0`` for a Hurwitz matrix A.

    The result is symmetrized.  ``schur_at`` may carry a precomputed Schur
    form of ``A.T``.

    Raises
    ------
    UnstableSystemError
        If A has an eigenvalue with nonnegative real part.
    """
    A = np.asarray(A, dtype=float)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    N = A.shape[0]
    if A.shape != (N, N) or W.shape != (N, N):
        raise DimensionError(f"incompatible shapes A{A.shape}, W{W.shape}")
    _check_finite("W", W)
    W = 0.5 * (W + W.T)
    # A.T = U R U.T, hence A = U R.T U.T and the equation becomes R Y + Y R.T = -U.T W U
    sf = schur_at if schur_at is not None else schur(A.T)
    ev = sf.eigenvalues()
    if np.max(ev.real) >= 0.0:
        raise UnstableSystemError(
            f"Lyapunov solve needs a Hurwitz matrix, spectral abscissa is {np.max(ev.real):.3e}")
    U, R = sf.Q, sf.Tm
    Y = _quasi_triangular_sylvester(R, R.T, -(U.T @ W @ U), s_lower=True)
    X = U @ Y @ U.T
    X = 0.5 * (X + X.T)
    solve_log.record("lyapunov", N)
    _check_residual("Lyapunov", _relative_residual(A.T @ X + X @ A + W, W))
    return X


def shifted_solve(A, b, alpha: float) -> ShiftedSolve:
    """Solve ``(i alpha I - A) x = b`` in complex arithmetic.

    One step of iterative refinement is applied when the first residual
    misses ``config.shifted_rtol``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=complex).ravel()
    N = A.shape[0]
    if A.shape != (N, N) or b.size != N:
        raise DimensionError(f"incompatible shapes A{A.shape}, b{b.shape}")
    _check_finite("A", A)
    M = 1j * float(alpha) * np.eye(N) - A
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(M, check_finite=False)
            if np.any(np.diag(lu[0]) == 0):
                raise SingularShiftError(f"i*{alpha} is an eigenvalue of A")
            x = scipy.linalg.lu_solve(lu, b, check_finite=False)
        except (np.linalg.LinAlgError, ValueError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularShiftError(f"shifted matrix at alpha={alpha} is singular") from exc
    nb = max(np.linalg.norm(b), np.finfo(float).tiny)
    r = b - M @ x
    if np.linalg.norm(r) > config.shifted_rtol * nb:
        x = x + scipy.linalg.lu_solve(lu, r, check_finite=False)
        r = b - M @ x
    rel = float(np.linalg.norm(r) / nb)
    if not np.all(np.isfinite(x)):
        raise SingularShiftError(f"shifted solve at alpha={alpha} produced non-finite values")
    if rel > config.shifted_rtol:
        warnings.warn(f"shifted solve residual {rel:.3e} exceeds {config.shifted_rtol:.1e}",
                      ResidualWarning, stacklevel=2)
    solve_log.record("shifted", N)
    return ShiftedSolve(float(alpha), x, rel)
