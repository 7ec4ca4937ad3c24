"""Locate user-supplied benchmark matrices (they are not bundled)."""
from romcert.matrix_io import load_model

from conftest import slicot_dir


def find_benchmark(name, column=None, row=None):
    """Load ``name`` from the benchmark directory, or return None if it is absent.

    Accepts ``<name>.mat`` holding A, B, C (and optionally D), or Matrix Market
    files ``<name>_A.mtx`` .. ``<name>_D.mtx``; names are matched case-insensitively.
    """
    root = slicot_dir()
    if not root.is_dir():
        return None
    files = {p.name.lower(): p for p in root.iterdir()}
    key = name.lower()
    if f"{key}.mat" in files:
        return load_model(files[f"{key}.mat"], column=column, row=row)
    parts = [files.get(f"{key}_{x}.mtx") for x in "abcd"]
    if all(p is not None for p in parts[:3]):
        return load_model(*parts, column=column, row=row)
    return None
