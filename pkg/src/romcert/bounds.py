"""Finite-time error bounds for balancing-related reduced models.

The reduction error ``e = y - y_hat`` is the output of the error system::

    A_e = blkdiag(A, A_hat),  b_e = [b; b_hat],  c_e = [c, -c_hat],  d_e = d - d_hat

The input is split into a truncated Fourier series ``w`` of order K plus a
remainder ``u - w``.  The error then splits into three parts which are bounded
separately:

* the periodic steady-state response to ``w``, whose norm follows in closed
  form from the moments ``Pi_l = (i 2 pi l / T - A_e)^{-1} b_e``,
* the free response to the mismatch ``x_c`` between the actual initial state
  and the steady-state initial state, bounded through the observability
  Gramian of the error system,
* the response to ``u - w``, bounded by the a priori constant.

Everything that does not depend on the input or on the initial state is
collected by :func:`offline_precompute`; the returned :class:`OfflineBound`
evaluates the bound for new inputs without any solve of FOM dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CacheMissError, DimensionError, GridError, UnstableSystemError
from .linalg import SchurForm, config, schur, shifted_solve, solve_lyapunov, solve_sylvester
from .lti import SampledSignal, StateSpaceModel, TimeGrid, output_l2_norm, simulate
from .reduction import ReducedModel

__all__ = [
    "ErrorSystem",
    "ErrorGramian",
    "FourierApproximation",
    "SteadyStateData",
    "BoundReport",
    "build_error_system",
    "error_gramian",
    "initial_condition_bound",
    "fourier_approximation",
    "fourier_basis",
    "remainder_norm",
    "steady_state_moments",
    "aposteriori_bound",
    "offline_precompute",
    "OfflineBound",
    "reduction_error",
    "MIN_POINTS_PER_HARMONIC",
    "DEFAULT_FOURIER_ORDER",
]

MIN_POINTS_PER_HARMONIC = 20
DEFAULT_FOURIER_ORDER = 10
# identity-form remainder is replaced by the direct norm beyond this deviation
REMAINDER_FALLBACK_RTOL = 1e-6


def _unwrap(rom):
    return rom.model if isinstance(rom, ReducedModel) else rom


@dataclass(frozen=True, eq=False)
class ErrorSystem:
    fom: StateSpaceModel
    rom: StateSpaceModel

    @cached_property
    def model(self) -> StateSpaceModel:
        f, r = self.fom, self.rom
        N, n = f.order, r.order
        A = np.zeros((N + n, N + n))
        A[:N, :N] = f.A
        A[N:, N:] = r.A
        return StateSpaceModel(A, np.concatenate([f.b, r.b]), np.concatenate([f.c, -r.c]),
                               f.d - r.d)

    @property
    def A(self):
        return self.model.A

    @property
    def b(self):
        return self.model.b

    @property
    def c(self):
        return self.model.c

    @property
    def d(self) -> float:
        return self.model.d

    @property
    def sizes(self):
        return self.fom.order, self.rom.order

    def stack_state(self, x0=None, xhat0=None) -> np.ndarray:
        N, n = self.sizes
        x0 = np.zeros(N) if x0 is None else np.asarray(x0, dtype=float).ravel()
        xhat0 = np.zeros(n) if xhat0 is None else np.asarray(xhat0, dtype=float).ravel()
        if x0.size != N or xhat0.size != n:
            raise DimensionError(f"initial states must have lengths {N} and {n}")
        return np.concatenate([x0, xhat0])


def build_error_system(fom: StateSpaceModel, rom) -> ErrorSystem:
    rom = _unwrap(rom)
    if not isinstance(fom, StateSpaceModel) or not isinstance(rom, StateSpaceModel):
        raise DimensionError("error system needs two StateSpaceModel instances")
    return ErrorSystem(fom, rom)


@dataclass(frozen=True, eq=False)
class ErrorGramian:
    """Observability Gramian ``[[Q, S], [S^T, Qhat]]`` of the error system."""

    Q: np.ndarray
    S: np.ndarray
    Qhat: np.ndarray

    @cached_property
    def assembled(self) -> np.ndarray:
        G = np.block([[self.Q, self.S], [self.S.T, self.Qhat]])
        return 0.5 * (G + G.T)

    @cached_property
    def factor(self) -> np.ndarray:
        """F with ``assembled ~= F @ F.T``; round-off negative eigenvalues are dropped."""
        w, U = np.linalg.eigh(self.assembled)
        scale = max(float(np.sum(np.abs(w))), np.finfo(float).tiny)
        if w[0] < -config.psd_tol * scale:
            raise ValueError(f"error Gramian is indefinite (eigenvalue {w[0]:.3e})")
        return U * np.sqrt(np.clip(w, 0.0, None))

    def quadratic_norm(self, xc) -> float:
        """``sqrt(xc^T G xc)`` through the factorization."""
        return float(np.linalg.norm(self.factor.T @ np.asarray(xc, dtype=float)))


def error_gramian(fom: StateSpaceModel, rom, Q_fom=None,
                  fom_schur_t: SchurForm | None = None) -> ErrorGramian:
    """Error-system observability Gramian, reusing the FOM Gramian when given.

    ``fom_schur_t`` is an optional Schur form of ``fom.A.T``, shared across
    reduced models of one FOM.
    """
    rom = _unwrap(rom)
    for m, label in ((fom, "FOM"), (rom, "ROM")):
        if not m.stable:
            raise UnstableSystemError(f"{label} is not asymptotically stable")
    if fom_schur_t is None:
        fom_schur_t = schur(fom.A.T)
    if Q_fom is None:
        Q_fom = solve_lyapunov(fom.A, np.outer(fom.c, fom.c), schur_at=fom_schur_t)
    Qhat = solve_lyapunov(rom.A, np.outer(rom.c, rom.c))
    # A^T S + S A_hat - c^T c_hat = 0
    S = solve_sylvester(fom.A.T, rom.A, -np.outer(fom.c, rom.c), schur_a=fom_schur_t)
    return ErrorGramian(np.asarray(Q_fom, dtype=float), S, Qhat)


def initial_condition_bound(eg: ErrorGramian, xc) -> float:
    """L2 bound on the free error response from initial state ``xc``, any horizon."""
    xc = np.asarray(xc, dtype=float).ravel()
    if xc.size != eg.assembled.shape[0]:
        raise DimensionError(f"state of length {xc.size} for a Gramian of order "
                             f"{eg.assembled.shape[0]}")
    return eg.quadratic_norm(xc)


def fourier_basis(t, K: int, T: float) -> np.ndarray:
    """Rows ``1, cos(2 pi l t/T) (l=1..K), sin(2 pi l t/T) (l=1..K)``."""
    t = np.asarray(t, dtype=float)
    arg = (2.0 * np.pi / T) * np.outer(np.arange(1, K + 1), t)
    return np.vstack([np.ones((1, t.size)), np.cos(arg), np.sin(arg)])


def _basis_norms_sq(K, T):
    return np.concatenate([[T], np.full(2 * K, T / 2.0)])


def _select(K_max, K):
    """Row indices of the order-K basis inside an order-K_max basis."""
    idx = np.arange(1, K + 1)
    return np.concatenate([[0], idx, K_max + idx])


class _Quadrature:
    """Trapezoid-weighted Fourier basis on a grid, reused across inputs."""

    def __init__(self, grid: TimeGrid, K_max: int):
        _check_resolution(grid, K_max)
        self.grid = grid
        self.K_max = K_max
        self.basis = fourier_basis(grid.nodes, K_max, grid.T)
        w = np.full(grid.m, grid.h)
        w[0] = w[-1] = grid.h / 2.0
        self.weights = w
        self.weighted = self.basis * w

    def approximate(self, u: SampledSignal, K: int) -> "FourierApproximation":
        if K > self.K_max:
            raise CacheMissError(f"order {K} exceeds precomputed order {self.K_max}")
        rows = _select(self.K_max, K)
        T = self.grid.T
        uv = u.values
        lam = (self.weighted[rows] @ uv) / _basis_norms_sq(K, T)
        norm_wK = float(np.sqrt(T * lam[0] ** 2 + 0.5 * T * np.sum(lam[1:] ** 2)))
        norm_u = float(np.sqrt(self.weights @ (uv * uv)))
        diff = uv - lam @ self.basis[rows]
        direct = float(np.sqrt(self.weights @ (diff * diff)))
        return FourierApproximation(K, T, lam, norm_wK, norm_u, direct)


def _check_resolution(grid: TimeGrid, K: int):
    if K < 0 or int(K) != K:
        raise ValueError(f"Fourier order must be a nonnegative integer, got {K}")
    if grid.m < MIN_POINTS_PER_HARMONIC * K:
        raise GridError(f"{grid.m} grid points cannot resolve harmonic {K}; "
                        f"need at least {MIN_POINTS_PER_HARMONIC * K}")


@dataclass(frozen=True, eq=False)
class FourierApproximation:
    """Truncated Fourier series ``w^K`` of a sampled input on ``[0, T]``.

    ``lam`` is ordered as ``[lambda_0, cos coefficients 1..K, sin coefficients 1..K]``.
    """

    K: int
    T: float
    lam: np.ndarray
    norm_wK: float
    norm_u: float
    remainder_direct: float

    @property
    def remainder_identity(self) -> float:
        return float(np.sqrt(max(0.0, self.norm_u ** 2 - self.norm_wK ** 2)))

    def __call__(self, t) -> np.ndarray:
        return self.lam @ fourier_basis(t, self.K, self.T)

    def sample(self, grid: TimeGrid) -> SampledSignal:
        return SampledSignal(grid, self(grid.nodes))


def fourier_approximation(u: SampledSignal, K: int) -> FourierApproximation:
    """Fourier coefficients of ``u`` up to order K by trapezoidal quadrature.

    Raises
    ------
    GridError
        If the grid has fewer than ``20 K`` points.
    """
    return _Quadrature(u.grid, K).approximate(u, K)


def remainder_norm(fa: FourierApproximation) -> float:
    """``||u - w^K||`` from the orthogonality identity, guarded by the direct norm."""
    ident = fa.remainder_identity
    if abs(ident - fa.remainder_direct) > REMAINDER_FALLBACK_RTOL * fa.norm_u:
        return fa.remainder_direct
    return ident


@dataclass(frozen=True, eq=False)
class SteadyStateData:
    """Moments of the error system and the steady state induced by ``w^K``.

    ``moments[l]`` is ``(i 2 pi l / T - A_e)^{-1} b_e``; ``transfer[l]`` is
    ``c_e @ moments[l] + d_e``.
    """

    moments: np.ndarray
    transfer: np.ndarray
    x_st0: np.ndarray
    norm_Fst: float


def _moments(es: ErrorSystem, K: int, T: float):
    f, r = es.fom, es.rom
    N, n = es.sizes
    Pi = np.empty((K + 1, N + n), dtype=complex)
    for ell in range(K + 1):
        alpha = 2.0 * np.pi * ell / T
        Pi[ell, :N] = shifted_solve(f.A, f.b, alpha).solution
        Pi[ell, N:] = shifted_solve(r.A, r.b, alpha).solution
    transfer = Pi @ es.c + es.d
    return Pi, transfer


def _steady_state(Pi, transfer, lam, K, T):
    lam0, lc, ls = lam[0], lam[1:K + 1], lam[K + 1:]
    g = np.abs(transfer[:K + 1]) ** 2
    norm_sq = T * g[0] * lam0 ** 2 + 0.5 * T * np.sum(g[1:] * (lc ** 2 + ls ** 2))
    x_st0 = lam0 * Pi[0].real + lc @ Pi[1:K + 1].real + ls @ Pi[1:K + 1].imag
    return x_st0, float(np.sqrt(norm_sq))


def steady_state_moments(es: ErrorSystem, fa: FourierApproximation) -> SteadyStateData:
    if not es.model.stable:
        raise UnstableSystemError("error system is not asymptotically stable")
    Pi, transfer = _moments(es, fa.K, fa.T)
    x_st0, norm = _steady_state(Pi, transfer, fa.lam, fa.K, fa.T)
    return SteadyStateData(Pi, transfer, x_st0, norm)


@dataclass(frozen=True)
class BoundReport:
    """Terms of the a posteriori bound and the a priori comparator.

    ``apriori`` is ``alpha * ||u|| + delta_x0`` where ``delta_x0`` bounds the
    free response to the stacked initial state.
    """

    K: int
    term_steady: float
    term_transient: float
    term_rest: float
    gamma: float
    alpha: float
    norm_u: float
    remainder: float
    delta_x0: float
    apriori: float
    actual_error: float | None = None

    @property
    def remainder_rel(self) -> float:
        return self.remainder / self.norm_u if self.norm_u > 0 else 0.0

    def is_rigorous(self, slack: float = 1e-6) -> bool:
        if self.actual_error is None:
            raise ValueError("no measured error attached to this report")
        return self.actual_error <= self.gamma + slack


def _report(K, ssd_x_st0, norm_Fst, fa, eg, alpha, x_stack, actual=None) -> BoundReport:
    xc = x_stack - ssd_x_st0
    transient = initial_condition_bound(eg, xc)
    rem = remainder_norm(fa)
    rest = alpha * rem
    delta = initial_condition_bound(eg, x_stack) if np.any(x_stack) else 0.0
    return BoundReport(
        K=K,
        term_steady=norm_Fst,
        term_transient=transient,
        term_rest=rest,
        gamma=norm_Fst + transient + rest,
        alpha=alpha,
        norm_u=fa.norm_u,
        remainder=rem,
        delta_x0=delta,
        apriori=alpha * fa.norm_u + delta,
        actual_error=actual,
    )


def reduction_error(fom: StateSpaceModel, rom, u: SampledSignal, x0=None,
                    xhat0=None) -> SampledSignal:
    """Simulated ``y - y_hat`` through the error system."""
    es = build_error_system(fom, rom)
    out, _ = simulate(es.model, u, es.stack_state(x0, xhat0))
    return out


def _alpha_of(rom, alpha):
    if alpha is None:
        if not isinstance(rom, ReducedModel):
            raise ValueError("alpha is required when rom is a bare StateSpaceModel")
        return rom.alpha
    return float(alpha)


def aposteriori_bound(fom: StateSpaceModel, rom, u: SampledSignal, x0=None, xhat0=None,
                      K: int = DEFAULT_FOURIER_ORDER, alpha: float | None = None,
                      eg: ErrorGramian | None = None, measure: bool = False) -> BoundReport:
    """A posteriori bound on ``||y - y_hat||`` over ``[0, T]``, computed from scratch.

    Parameters
    ----------
    fom, rom
        Full and reduced model; ``rom`` may be a :class:`ReducedModel`, in
        which case its a priori constant is used unless ``alpha`` is given.
    u
        Sampled input on ``[0, T]``.
    x0, xhat0
        Initial states of FOM and ROM (default zero).
    K
        Fourier order.
    eg
        Precomputed error Gramian.
    measure
        Also simulate the error system and attach the measured L2 error.
    """
    a = _alpha_of(rom, alpha)
    es = build_error_system(fom, rom)
    if eg is None:
        eg = error_gramian(fom, rom)
    fa = fourier_approximation(u, K)
    ssd = steady_state_moments(es, fa)
    x_stack = es.stack_state(x0, xhat0)
    actual = None
    if measure:
        actual = output_l2_norm(es.model, u, x_stack)
    return _report(K, ssd.x_st0, ssd.norm_Fst, fa, eg, a, x_stack, actual)


@dataclass(eq=False)
class OfflineBound:
    """Input-independent data of the a posteriori bound for one FOM/ROM pair.

    Built by :func:`offline_precompute`.  :meth:`evaluate` only performs the
    Fourier quadrature, a sum over K scalar moments, one matrix-vector product
    with the Gramian factor and the remainder norm.
    """

    es: ErrorSystem
    eg: ErrorGramian
    alpha: float
    hsv_tail: np.ndarray
    K_max: int
    T: float
    moments: np.ndarray
    transfer: np.ndarray
    _quad: dict = field(default_factory=dict, repr=False)

    def quadrature(self, grid: TimeGrid) -> _Quadrature:
        if not np.isclose(grid.T, self.T, rtol=1e-14, atol=0.0):
            raise GridError(f"grid ends at {grid.T}, artifact was built for T = {self.T}")
        q = self._quad.get(grid)
        if q is None:
            q = self._quad[grid] = _Quadrature(grid, self.K_max)
        return q

    def evaluate(self, u: SampledSignal, x0=None, xhat0=None, K: int | None = None,
                 measure: bool = False) -> BoundReport:
        K = self.K_max if K is None else K
        if K > self.K_max:
            raise CacheMissError(f"order {K} exceeds precomputed order {self.K_max}")
        fa = self.quadrature(u.grid).approximate(u, K)
        x_st0, norm = _steady_state(self.moments, self.transfer, fa.lam, K, self.T)
        x_stack = self.es.stack_state(x0, xhat0)
        actual = None
        if measure:
            actual = output_l2_norm(self.es.model, u, x_stack)
        return _report(K, x_st0, norm, fa, self.eg, self.alpha, x_stack, actual)

    def steady_state(self, fa: FourierApproximation) -> SteadyStateData:
        if fa.K > self.K_max:
            raise CacheMissError(f"order {fa.K} exceeds precomputed order {self.K_max}")
        x_st0, norm = _steady_state(self.moments, self.transfer, fa.lam, fa.K, self.T)
        return SteadyStateData(self.moments[:fa.K + 1], self.transfer[:fa.K + 1], x_st0, norm)


def offline_precompute(fom: StateSpaceModel, rom, K_max: int, T: float, alpha=None,
                       Q_fom=None, eg: ErrorGramian | None = None,
                       fom_schur_t: SchurForm | None = None) -> OfflineBound:
    """Collect every input-independent ingredient of the bound up to order ``K_max``."""
    if K_max < 0 or int(K_max) != K_max:
        raise ValueError(f"K_max must be a nonnegative integer, got {K_max}")
    if T <= 0:
        raise ValueError(f"final time must be positive, got {T}")
    a = _alpha_of(rom, alpha)
    es = build_error_system(fom, rom)
    if not es.model.stable:
        raise UnstableSystemError("error system is not asymptotically stable")
    if eg is None:
        eg = error_gramian(fom, rom, Q_fom=Q_fom, fom_schur_t=fom_schur_t)
    eg.factor  # noqa: B018 - factorize offline
    Pi, transfer = _moments(es, int(K_max), float(T))
    if isinstance(rom, ReducedModel):
        tail = np.array(rom.hsv[rom.n:], dtype=float)
    else:
        tail = np.zeros(0)
    return OfflineBound(es, eg, a, tail, int(K_max), float(T), Pi, transfer)
