"""Reproducible random stable SISO models for testing and sweeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group

from .lti import StateSpaceModel

__all__ = ["SyntheticSpec", "synthesize_model"]


@dataclass(frozen=True)
class SyntheticSpec:
    N: int
    seed: int = 0
    band: tuple = (-3.0, -0.1)
    complex_fraction: float = 0.5
    imag_max: float = 6.0
    nonnormality: float = 1.0
    feedthrough: float = 0.0

    def __post_init__(self):
        lo, hi = map(float, self.band)
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if not (lo <= hi < 0.0):
            raise ValueError(f"spectral band must satisfy re_min <= re_max < 0, got {self.band}")
        if not 0.0 <= self.complex_fraction <= 1.0:
            raise ValueError("complex_fraction must lie in [0, 1]")


def synthesize_model(spec: SyntheticSpec) -> StateSpaceModel:
    """Random model whose eigenvalues have real parts inside ``spec.band``.

    A block-diagonal real matrix with the drawn spectrum is conjugated by a
    random similarity ``Q1 diag(s) Q2`` whose condition number is at most
    ``exp(2 * nonnormality)``.
    """
    rng = np.random.default_rng(spec.seed)
    N = spec.N
    lo, hi = map(float, spec.band)
    pairs = min(N // 2, int(round(spec.complex_fraction * N / 2)))
    D = np.zeros((N, N))
    re = rng.uniform(lo, hi, size=N - pairs)
    im = rng.uniform(0.1, spec.imag_max, size=pairs)
    for k in range(pairs):
        i = 2 * k
        D[i:i + 2, i:i + 2] = [[re[k], im[k]], [-im[k], re[k]]]
    for k, r in enumerate(re[pairs:]):
        D[2 * pairs + k, 2 * pairs + k] = r
    if N > 1:
        Q1 = ortho_group.rvs(N, random_state=rng)
        Q2 = ortho_group.rvs(N, random_state=rng)
        s = np.exp(spec.nonnormality * rng.uniform(-1.0, 1.0, size=N))
        V = (Q1 * s) @ Q2
        A = V @ D @ np.linalg.inv(V)
    else:
        A = D
    b = rng.standard_normal(N)
    c = rng.standard_normal(N)
    return StateSpaceModel(A, b, c, spec.feedthrough)
