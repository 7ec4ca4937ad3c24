"""Reading and writing system matrices.

Supported formats: Matrix Market (``.mtx``, array or coordinate), MATLAB
``.mat`` files as distributed with the SLICOT benchmark collection, and
whitespace or comma separated dense text.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .errors import DimensionError, ModelFileError
from .lti import StateSpaceModel

__all__ = ["read_matrix", "write_matrix", "load_model", "save_model"]

_MISSING_HINT = ("benchmark data (e.g. the SLICOT Beam and CD Player models) is not bundled; "
                 "see scripts/fetch_slicot.py for how to obtain and convert it")


def _dense(M):
    if scipy.sparse.issparse(M):
        M = M.toarray()
    return np.atleast_2d(np.asarray(M, dtype=float))


def read_matrix(path, key: str | None = None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ModelFileError(f"matrix file not found: {path}; {_MISSING_HINT}")
    suffix = path.suffix.lower()
    try:
        if suffix == ".mtx":
            return _dense(scipy.io.mmread(str(path)))
        if suffix == ".mat":
            data = _load_mat(path)
            if key is None:
                raise ModelFileError(f"{path}: a variable name is needed for .mat files")
            return _dense(_mat_lookup(data, key, path))
        delimiter = "," if suffix == ".csv" else None
        return np.atleast_2d(np.loadtxt(path, delimiter=delimiter, dtype=float))
    except ModelFileError:
        raise
    except (ValueError, OSError) as exc:
        raise ModelFileError(f"could not parse {path}: {exc}") from exc


def _load_mat(path):
    try:
        return scipy.io.loadmat(str(path))
    except (ValueError, OSError, NotImplementedError) as exc:
        raise ModelFileError(f"could not read {path}: {exc}") from exc


def _mat_lookup(data, key, path, required=True):
    for k in data:
        if k.lower() == key.lower():
            return data[k]
    if required:
        raise ModelFileError(f"{path} has no variable {key!r}")
    return None


def write_matrix(path, M):
    scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(M, dtype=float)), precision=17)


def load_model(a, b=None, c=None, d=None, column: int | None = None,
               row: int | None = None) -> StateSpaceModel:
    """Assemble a SISO model from matrix files.

    Parameters
    ----------
    a, b, c, d
        Paths to the matrices.  When ``a`` is a ``.mat`` file and ``b`` is
        omitted, A, B, C (and D if present) are read from that one file.
    column, row
        1-based input column of B and output row of C selected to turn a
        MIMO model into a SISO one.
    """
    if a is None:
        raise ModelFileError(f"no model file given (set model.a); {_MISSING_HINT}")
    a = Path(a)
    if a.suffix.lower() == ".mat" and b is None:
        if not a.is_file():
            raise ModelFileError(f"model file not found: {a}; {_MISSING_HINT}")
        data = _load_mat(a)
        A = _dense(_mat_lookup(data, "A", a))
        B = _dense(_mat_lookup(data, "B", a))
        C = _dense(_mat_lookup(data, "C", a))
        Dm = _mat_lookup(data, "D", a, required=False)
        D = None if Dm is None else _dense(Dm)
    else:
        if b is None or c is None:
            raise ModelFileError("model needs files for A, B and C")
        A = read_matrix(a, "A")
        B = read_matrix(b, "B")
        C = read_matrix(c, "C")
        D = None if d is None else read_matrix(d, "D")

    N = A.shape[0]
    if A.shape != (N, N):
        raise DimensionError(f"A must be square, got {A.shape}")
    if B.shape[0] != N and B.shape[1] == N and B.shape[0] == 1:
        B = B.T
    if C.shape[1] != N and C.shape[0] == N and C.shape[1] == 1:
        C = C.T
    if B.shape[0] != N or C.shape[1] != N:
        raise DimensionError(f"B {B.shape} / C {C.shape} do not match A {A.shape}")
    col = _pick(column, B.shape[1], "input column")
    rw = _pick(row, C.shape[0], "output row")
    dval = 0.0
    if D is not None and D.size:
        if D.size == 1:
            dval = float(D.ravel()[0])
        else:
            dval = float(D[rw, col])
    return StateSpaceModel(A, B[:, col], C[rw, :], dval)


def _pick(index, count, what):
    if index is None:
        if count != 1:
            raise DimensionError(f"model has {count} choices for the {what}; select one")
        return 0
    if not 1 <= index <= count:
        raise DimensionError(f"{what} {index} outside 1..{count}")
    return index - 1


def save_model(model: StateSpaceModel, stem) -> list[Path]:
    """Write A, B, C, D as ``<stem>_A.mtx`` etc. and return the paths."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for name, M in (("A", model.A), ("B", model.b[:, None]), ("C", model.c[None, :]),
                    ("D", [[model.d]])):
        p = stem.with_name(f"{stem.name}_{name}.mtx")
        write_matrix(p, M)
        out.append(p)
    return out
