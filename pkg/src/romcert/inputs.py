"""Input signals used by the benchmark scenarios."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridError, ModelFileError
from .lti import SampledSignal, TimeGrid

__all__ = ["InputSpec", "beam_input", "cdplayer_input"]


def beam_input(t):
    """``4 sin^3(2.7 t) + exp(0.2 t)``."""
    t = np.asarray(t, dtype=float)
    return 4.0 * np.sin(2.7 * t) ** 3 + np.exp(0.2 * t)


def cdplayer_input(t):
    """Ramp up to pi, then a jump and a ramp down, minus ``8 exp(-t/2)``."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= np.pi, t, np.pi - t) - 8.0 * np.exp(-t / 2.0)


def _read_samples(path):
    path = Path(path)
    if not path.is_file():
        raise ModelFileError(f"input sample file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in rec[:2]])
            except ValueError:
                if rows:
                    raise
                continue  # header
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ModelFileError(f"{path}: expected two columns t,u with at least two rows")
    return data[:, 0], data[:, 1]


@dataclass(frozen=True)
class InputSpec:
    """Named input family plus parameters.

    kinds
        ``beam``, ``cdplayer``, ``cos`` (params: omega, amplitude),
        ``fourier`` (params: coefficients in the order
        lambda_0, cos_1..cos_K, sin_1..sin_K), ``csv`` (params: path to a
        two-column t,u file, linearly interpolated onto the grid).
    """

    kind: str = "beam"
    params: tuple = field(default_factory=tuple)

    def sample(self, grid: TimeGrid) -> SampledSignal:
        t = grid.nodes
        kind = self.kind.lower()
        if kind == "beam":
            return SampledSignal(grid, beam_input(t))
        if kind == "cdplayer":
            return SampledSignal(grid, cdplayer_input(t))
        if kind == "cos":
            omega = float(self.params[0]) if self.params else 1.0
            amp = float(self.params[1]) if len(self.params) > 1 else 1.0
            return SampledSignal(grid, amp * np.cos(omega * t))
        if kind == "fourier":
            lam = np.asarray(self.params, dtype=float)
            if lam.size % 2 != 1:
                raise ValueError("fourier input needs 2K+1 coefficients")
            K = lam.size // 2
            arg = (2.0 * np.pi / grid.T) * np.outer(np.arange(1, K + 1), t)
            vals = lam[0] + lam[1:K + 1] @ np.cos(arg) + lam[K + 1:] @ np.sin(arg)
            return SampledSignal(grid, vals)
        if kind == "csv":
            if not self.params:
                raise ValueError("csv input needs a file path")
            ts, us = _read_samples(self.params[0])
            if ts[0] > 0.0 or ts[-1] < grid.T:
                raise GridError(f"samples cover [{ts[0]}, {ts[-1]}], grid needs [0, {grid.T}]")
            return SampledSignal(grid, np.interp(t, ts, us))
        raise ValueError(f"unknown input kind {self.kind!r}")
