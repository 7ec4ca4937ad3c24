"""Gramians, Hankel singular values, and balancing-related reduction.

Balancing uses the square-root method: with Gramian factors ``P = R R^T`` and
``Q = L L^T``, the SVD ``L^T R = Z diag(hsv) Y^T`` yields the projections

    W_n^T = diag(hsv_n)^{-1/2} Z_n^T L^T,     V_n = R Y_n diag(hsv_n)^{-1/2}

onto the n dominant balanced states.  Only the retained singular values are
inverted, so non-minimal systems are handled without ever forming an
ill-conditioned full balancing transformation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import DimensionError, HSVGapError, ReductionError, UnstableSystemError
from .linalg import config, solve_lyapunov, solve_log
from .lti import StateSpaceModel

__all__ = [
    "GramianPair",
    "BalancedRealization",
    "ReducedModel",
    "gramians",
    "balance",
    "truncate_bt",
    "truncate_spa",
    "reduce",
    "apriori_constant",
]

# relative threshold below which Hankel singular values are treated as zero
# when forming the numerically minimal balanced realization
MINIMAL_HSV_RTOL = 1e-8
HSV_GAP_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class GramianPair:
    P: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """A reduced model together with how it was built and its a priori constant."""

    model: StateSpaceModel
    method: str
    alpha: float
    n: int
    hsv: np.ndarray
    Wt: np.ndarray | None = None

    def project_state(self, x0) -> np.ndarray:
        """Reduced initial state ``Wt @ x0``."""
        if self.Wt is None:
            raise ValueError("this reduced model carries no projection")
        return self.Wt @ np.asarray(x0, dtype=float)

    @property
    def sigma_next(self) -> float:
        return float(self.hsv[self.n]) if self.n < self.hsv.size else 0.0


def gramians(model: StateSpaceModel) -> GramianPair:
    """Controllability and observability Gramians of a stable model.

    Raises
    ------
    UnstableSystemError
    """
    if not model.stable:
        raise UnstableSystemError(
            f"Gramians need an asymptotically stable model (abscissa {model.abscissa:.3e})")
    A, b, c = model.A, model.b, model.c
    P = solve_lyapunov(A.T, np.outer(b, b))
    Q = solve_lyapunov(A, np.outer(c, c))
    solve_log.record("gramians", model.order)
    return GramianPair(P, Q)


def _psd_factor(M, name):
    """Return F with ``M ~= F F^T`` after clamping round-off negatives."""
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    scale = max(float(np.trace(M)), np.finfo(float).tiny)
    if w[0] < -config.psd_tol * scale:
        raise ReductionError(f"{name} is not positive semidefinite "
                             f"(eigenvalue {w[0]:.3e}, trace {scale:.3e})")
    w = np.clip(w, 0.0, None)
    return U * np.sqrt(w)


def apriori_constant(hsv, n) -> float:
    """Twice the sum of the neglected Hankel singular values, counted with multiplicity."""
    return 2.0 * float(np.sum(hsv[n:]))


class BalancedRealization:
    """Balancing data of a stable model.

    Attributes
    ----------
    hsv : (N,) array
        Hankel singular values, nonincreasing.
    Tb : (r, N) array
        Map from original to balanced coordinates of the numerically minimal
        part (``r`` states with ``hsv > MINIMAL_HSV_RTOL * hsv[0]``).
    Tb_inv : (N, r) array
        Right inverse of ``Tb``.
    """

    def __init__(self, model: StateSpaceModel, gramian_pair: GramianPair):
        self.fom = model
        self.gramians = gramian_pair
        R = _psd_factor(gramian_pair.P, "controllability Gramian")
        L = _psd_factor(gramian_pair.Q, "observability Gramian")
        Z, s, Yt = scipy.linalg.svd(L.T @ R)
        self.hsv = s
        self._R, self._L, self._Z, self._Y = R, L, Z, Yt.T
        if s[0] > 0:
            self.rank = int(np.count_nonzero(s > MINIMAL_HSV_RTOL * s[0]))
        else:
            self.rank = 0

    @property
    def order(self) -> int:
        return self.fom.order

    def projection(self, n: int):
        """Return ``(Wt, V)``, the left and right projections onto n balanced states."""
        if not 0 < n <= self.order:
            raise DimensionError(f"projection order {n} outside [1, {self.order}]")
        s = self.hsv[:n]
        if s[-1] <= 0:
            raise ReductionError(f"sigma_{n} vanishes; the system has fewer than {n} "
                                 "controllable and observable states")
        isq = 1.0 / np.sqrt(s)
        Wt = (self._Z[:, :n] * isq).T @ self._L.T
        V = self._R @ (self._Y[:, :n] * isq)
        return Wt, V

    @cached_property
    def _minimal(self):
        if self.rank == 0:
            return np.zeros((0, self.order)), np.zeros((self.order, 0))
        return self.projection(self.rank)

    @property
    def Tb(self) -> np.ndarray:
        return self._minimal[0]

    @property
    def Tb_inv(self) -> np.ndarray:
        return self._minimal[1]

    @cached_property
    def model(self) -> StateSpaceModel:
        """Balanced realization of the numerically minimal part."""
        Wt, V = self.Tb, self.Tb_inv
        f = self.fom
        return StateSpaceModel(Wt @ f.A @ V, Wt @ f.b, f.c @ V, f.d)

    def check_gap(self, n: int):
        N = self.order
        if not 1 <= n < N:
            raise DimensionError(f"reduced order must satisfy 1 <= n < N = {N}, got {n}")
        sn, snext = self.hsv[n - 1], self.hsv[n]
        if sn - snext < HSV_GAP_RTOL * self.hsv[0] or sn <= 0:
            raise HSVGapError(n, float(sn), float(snext))


def balance(model: StateSpaceModel, gramian_pair: GramianPair | None = None) -> BalancedRealization:
    if gramian_pair is None:
        gramian_pair = gramians(model)
    return BalancedRealization(model, gramian_pair)


def _require_stable(rom: StateSpaceModel, method: str, n: int):
    if not rom.stable:
        raise ReductionError(f"{method} ROM of order {n} is not asymptotically stable "
                             f"(abscissa {rom.abscissa:.3e})")


def truncate_bt(balanced: BalancedRealization, n: int) -> ReducedModel:
    """Balanced truncation to order n."""
    balanced.check_gap(n)
    Wt, V = balanced.projection(n)
    f = balanced.fom
    rom = StateSpaceModel(Wt @ f.A @ V, Wt @ f.b, f.c @ V, f.d)
    _require_stable(rom, "BT", n)
    return ReducedModel(rom, "BT", apriori_constant(balanced.hsv, n), n, balanced.hsv, Wt)


def truncate_spa(balanced: BalancedRealization, n: int) -> ReducedModel:
    """Balanced singular perturbation approximation of order n.

    The weak states are residualized (their derivatives set to zero).  The
    complement is represented by orthonormal bases of ``ker(W_n^T)`` and
    ``ker(V_n^T)``; residualization is invariant under the choice of basis
    there, so the result equals residualization in balanced coordinates.
    """
    balanced.check_gap(n)
    f = balanced.fom
    Wt1, V1 = balanced.projection(n)
    V2 = scipy.linalg.null_space(Wt1)
    W2 = scipy.linalg.null_space(V1.T)
    A, b, c = f.A, f.b, f.c
    A11, A12 = Wt1 @ A @ V1, Wt1 @ A @ V2
    A21, A22 = W2.T @ A @ V1, W2.T @ A @ V2
    b1, b2 = Wt1 @ b, W2.T @ b
    c1, c2 = c @ V1, c @ V2
    try:
        lu = scipy.linalg.lu_factor(A22)
        if np.linalg.cond(A22) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ReductionError(f"residualized block is singular at n = {n}") from exc
    X21 = scipy.linalg.lu_solve(lu, A21)
    x2 = scipy.linalg.lu_solve(lu, b2)
    rom = StateSpaceModel(A11 - A12 @ X21, b1 - A12 @ x2, c1 - c2 @ X21, f.d - c2 @ x2)
    _require_stable(rom, "SPA", n)
    return ReducedModel(rom, "SPA", apriori_constant(balanced.hsv, n), n, balanced.hsv, Wt1)


def reduce(model_or_balanced, n: int, method: str = "BT") -> ReducedModel:
    """Reduce with ``method`` in {"BT", "SPA"}; balances first if given a model."""
    bal = model_or_balanced
    if isinstance(bal, StateSpaceModel):
        bal = balance(bal)
    method = method.upper()
    if method == "BT":
        return truncate_bt(bal, n)
    if method == "SPA":
        return truncate_spa(bal, n)
    raise ValueError(f"unknown reduction method {method!r}; expected BT or SPA")
