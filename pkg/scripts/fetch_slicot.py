"""Prepare the Beam and CD Player benchmark matrices for romcert.

The matrices are not bundled.  Both models are part of the SLICOT model
reduction benchmark collection, distributed as ``beam.mat`` and
``CDplayer.mat`` (variables A, B, C and optionally D).  Download them from
that collection yourself, then run::

    python scripts/fetch_slicot.py ~/Downloads/beam.mat ~/Downloads/CDplayer.mat

Each file is checked (square A, matching B and C, expected order) and written
as Matrix Market files ``<name>_A.mtx`` .. ``<name>_D.mtx`` into ``data/slicot``
(or ``--dest``).  The test suite looks there, or in ``$ROMCERT_SLICOT_DIR``.
"""
import argparse
import sys
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

EXPECTED_ORDER = {"beam": 349, "cdplayer": 120}


def _dense(M):
    return M.toarray() if scipy.sparse.issparse(M) else np.atleast_2d(np.asarray(M, dtype=float))


def convert(src: Path, dest: Path) -> list[Path]:
    data = {k.upper(): v for k, v in scipy.io.loadmat(src).items() if not k.startswith("__")}
    missing = [k for k in "ABC" if k not in data]
    if missing:
        raise SystemExit(f"{src}: missing variables {', '.join(missing)}")
    A, B, C = (_dense(data[k]) for k in "ABC")
    N = A.shape[0]
    if A.shape != (N, N) or B.shape[0] != N or C.shape[1] != N:
        raise SystemExit(f"{src}: inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
    D = _dense(data["D"]) if "D" in data else np.zeros((C.shape[0], B.shape[1]))
    name = src.stem.lower()
    expected = EXPECTED_ORDER.get(name)
    if expected is not None and N != expected:
        print(f"warning: {src.name} has order {N}, expected {expected}", file=sys.stderr)
    dest.mkdir(parents=True, exist_ok=True)
    out = []
    for key, M in zip("ABCD", (A, B, C, D)):
        p = dest / f"{name}_{key}.mtx"
        scipy.io.mmwrite(str(p), M, precision=17)
        out.append(p)
    print(f"{src.name}: N = {N}, inputs = {B.shape[1]}, outputs = {C.shape[0]}")
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("files", nargs="+", type=Path, help="downloaded .mat files")
    p.add_argument("--dest", type=Path,
                   default=Path(__file__).resolve().parents[1] / "data" / "slicot")
    args = p.parse_args(argv)
    for f in args.files:
        if not f.is_file():
            raise SystemExit(f"{f} not found; download it from the SLICOT benchmark collection first")
        for path in convert(f, args.dest):
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
