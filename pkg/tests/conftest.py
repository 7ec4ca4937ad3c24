import os
from pathlib import Path

import numpy as np
import pytest

from romcert.synth import SyntheticSpec, synthesize_model

ACCEPTANCE_LINES = []


def record_acceptance(label, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"{label}: {status} {detail}".rstrip())


def record_skip(label, reason):
    ACCEPTANCE_LINES.append(f"{label}: SKIP {reason}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_model(seed, N, band=(-3.0, -0.3), complex_fraction=0.5, d=0.0):
    return synthesize_model(SyntheticSpec(N=N, seed=seed, band=band,
                                          complex_fraction=complex_fraction, feedthrough=d))


def slicot_dir():
    return Path(os.environ.get("ROMCERT_SLICOT_DIR",
                               Path(__file__).resolve().parents[1] / "data" / "slicot"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def usable_orders(bal, rtol=1e-6):
    """Orders n whose retained singular values are significant and separated from the rest."""
    s = bal.hsv
    return [n for n in range(1, s.size)
            if s[n - 1] > rtol * s[0] and s[n - 1] - s[n] > rtol * s[0]]


def pick_order(bal, rng):
    orders = usable_orders(bal)
    return int(orders[rng.integers(len(orders))])
