"""Scenario configuration, n- and K-sweeps, and report emission.

Config files are flat ``key = value`` text with ``#`` comments.  Keys:

=================  ==========================================================
model.kind         ``files`` (default) or ``synthetic``
model.a .. model.d matrix files (paths relative to the config file); a single
                   ``.mat`` file in ``model.a`` may hold A, B, C and D
model.column       1-based column of B used as the input (MIMO files)
model.row          1-based row of C used as the output (MIMO files)
synth.n            order of a synthetic model
synth.band         ``re_min, re_max`` of the synthetic spectrum
synth.complex_fraction
seed               RNG seed for synthetic models and random initial states
method             ``BT``, ``SPA`` or ``BT,SPA``
n, n_range         reduced order, or a range ``2:30`` / list ``2,4,8``
k, k_range         Fourier order, or a range ``0:15``
T                  final time, e.g. ``2*pi`` (default)
grid_m             grid points (default 2000)
input.kind         ``beam``, ``cdplayer``, ``cos``, ``fourier`` or ``csv``
input.params       comma-separated parameters of the input kind
x0.kind            ``zero``, ``const`` or ``random``
x0.value           constant entry (``const``) or scale (``random``)
xhat0.kind         ``zero`` (default) or ``project`` (``Wt @ x0``)
out_dir            output directory (relative to the config file)
name               file stem of the emitted tables
slack              absolute slack of the rigor audit (default 1e-6)
jobs               worker threads for the sweeps (default 1)
=================  ==========================================================
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import DEFAULT_FOURIER_ORDER, MIN_POINTS_PER_HARMONIC, offline_precompute
from .errors import HSVGapError, ReductionError, RigorAuditError
from .inputs import InputSpec
from .linalg import schur
from .lti import DEFAULT_GRID_POINTS, TimeGrid, output_l2_norm
from .matrix_io import load_model
from .reduction import balance, gramians, reduce
from .synth import SyntheticSpec, synthesize_model

__all__ = [
    "Scenario",
    "Table",
    "read_config",
    "scenario_from_config",
    "run_n_sweep",
    "run_k_sweep",
    "emit_report",
    "audit",
    "N_SWEEP_COLUMNS",
    "K_SWEEP_COLUMNS",
]

N_SWEEP_COLUMNS = (
    "method", "n", "status", "sigma_n", "sigma_next", "alpha", "norm_u", "apriori",
    "term_steady", "term_transient", "term_rest", "gamma", "error",
    "gamma_over_error", "apriori_over_error", "rigorous",
)
K_SWEEP_COLUMNS = (
    "method", "n", "K", "remainder_rel", "term_steady", "term_transient", "term_rest",
    "gamma", "delta_x0", "apriori", "error", "gamma_over_error", "apriori_over_error",
    "rigorous",
)


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file into a dict of strings."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _parse_float(text) -> float:
    s = str(text).strip().replace(" ", "")
    if s.endswith("pi"):
        coef = s[:-2].rstrip("*")
        return (float(coef) if coef else 1.0) * math.pi
    return float(s)


def _parse_ints(text) -> tuple:
    s = str(text).strip()
    if ":" in s:
        lo, hi = s.split(":", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in s.split(",") if x.strip())


def _nonempty(values, key):
    if not values:
        raise ValueError(f"{key} is empty")
    return values


def _parse_floats(text) -> tuple:
    return tuple(_parse_float(x) for x in str(text).split(",") if x.strip())


@dataclass(frozen=True)
class Scenario:
    model: dict = field(default_factory=dict)
    methods: tuple = ("BT",)
    n: int | None = None
    n_range: tuple = ()
    k: int = DEFAULT_FOURIER_ORDER
    k_range: tuple = ()
    T: float = 2.0 * math.pi
    m: int = DEFAULT_GRID_POINTS
    input: InputSpec = field(default_factory=InputSpec)
    x0_kind: str = "zero"
    x0_value: float = 0.0
    xhat0_kind: str = "zero"
    out_dir: Path = Path("out")
    name: str = "scenario"
    seed: int = 0
    slack: float = 1e-6
    jobs: int = 1

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        for meth in self.methods:
            if meth not in ("BT", "SPA"):
                raise ValueError(f"unknown method {meth!r}")
        if not self.methods:
            raise ValueError("no reduction method given")
        if any(k < 0 for k in self.k_values):
            raise ValueError("Fourier orders must be nonnegative")
        k_max = max(self.k_values)
        if self.m < MIN_POINTS_PER_HARMONIC * k_max:
            raise ValueError(f"grid_m = {self.m} is below {MIN_POINTS_PER_HARMONIC} * K_max")
        if self.x0_kind not in ("zero", "const", "random"):
            raise ValueError(f"unknown x0.kind {self.x0_kind!r}")
        if self.xhat0_kind not in ("zero", "project"):
            raise ValueError(f"unknown xhat0.kind {self.xhat0_kind!r}")

    @property
    def n_values(self) -> tuple:
        vals = tuple(self.n_range) if self.n_range else ((self.n,) if self.n is not None else ())
        if not vals:
            raise ValueError("no reduced order given (set n or n_range)")
        return vals

    @property
    def k_values(self) -> tuple:
        return tuple(self.k_range) if self.k_range else (self.k,)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.m)

    def synthetic_spec(self) -> SyntheticSpec:
        band = _parse_floats(self.model.get("synth.band", "-3,-0.1"))
        return SyntheticSpec(
            N=int(self.model.get("synth.n", 20)),
            seed=self.seed,
            band=band,
            complex_fraction=float(self.model.get("synth.complex_fraction", 0.5)),
        )

    def load_model(self):
        kind = self.model.get("kind", "files")
        if kind == "synthetic":
            return synthesize_model(self.synthetic_spec())
        if kind != "files":
            raise ValueError(f"unknown model.kind {kind!r}")
        col = self.model.get("column")
        row = self.model.get("row")
        return load_model(self.model.get("a"), self.model.get("b"), self.model.get("c"),
                          self.model.get("d"),
                          column=None if col is None else int(col),
                          row=None if row is None else int(row))

    def initial_state(self, N: int) -> np.ndarray:
        if self.x0_kind == "zero":
            return np.zeros(N)
        if self.x0_kind == "const":
            return np.full(N, float(self.x0_value))
        rng = np.random.default_rng(self.seed + 1)
        return float(self.x0_value or 1.0) * rng.standard_normal(N)

    def settings(self) -> dict:
        out = {f"model.{k}": v for k, v in sorted(self.model.items())}
        out.update(
            method=",".join(self.methods),
            n=",".join(map(str, self.n_range or ((self.n,) if self.n is not None else ()))),
            k=",".join(map(str, self.k_values)),
            T=repr(self.T), grid_m=str(self.m),
            input=f"{self.input.kind}({','.join(map(str, self.input.params))})",
            x0=f"{self.x0_kind}({self.x0_value!r})", xhat0=self.xhat0_kind,
            seed=str(self.seed), slack=repr(self.slack),
        )
        return out


def scenario_from_config(cfg: dict, base_dir=".", overrides: dict | None = None) -> Scenario:
    """Build a :class:`Scenario` from parsed config keys plus CLI overrides."""
    cfg = dict(cfg)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    base = Path(base_dir)

    def path(key):
        v = cfg.get(key)
        if v is None:
            return None
        p = Path(v)
        return str(p if p.is_absolute() else base / p)

    model = {"kind": cfg.get("model.kind", "files")}
    for key in ("a", "b", "c", "d"):
        p = path(f"model.{key}")
        if p is not None:
            model[key] = p
    for key in ("column", "row"):
        if f"model.{key}" in cfg:
            model[key] = cfg[f"model.{key}"]
    for key in ("synth.n", "synth.band", "synth.complex_fraction"):
        if key in cfg:
            model[key] = cfg[key]

    params = tuple(x.strip() for x in cfg.get("input.params", "").split(",") if x.strip())
    kind = cfg.get("input.kind", "beam")
    if kind == "csv" and params:
        p = Path(params[0])
        params = (str(p if p.is_absolute() else base / p),)
    methods = tuple(m.strip().upper() for m in cfg.get("method", "BT").split(",") if m.strip())
    out_dir = Path(cfg.get("out_dir", "out"))
    default_name = "synthetic" if model["kind"] == "synthetic" else (
        Path(model["a"]).stem.lower().removesuffix("_a") if "a" in model else "scenario")
    return Scenario(
        model=model,
        methods=methods,
        n=int(cfg["n"]) if "n" in cfg else None,
        n_range=_nonempty(_parse_ints(cfg["n_range"]), "n_range") if "n_range" in cfg else (),
        k=int(cfg.get("k", DEFAULT_FOURIER_ORDER)),
        k_range=_nonempty(_parse_ints(cfg["k_range"]), "k_range") if "k_range" in cfg else (),
        T=_parse_float(cfg.get("T", "2*pi")),
        m=int(cfg.get("grid_m", DEFAULT_GRID_POINTS)),
        input=InputSpec(kind, params),
        x0_kind=cfg.get("x0.kind", "zero"),
        x0_value=_parse_float(cfg.get("x0.value", "0")),
        xhat0_kind=cfg.get("xhat0.kind", "zero"),
        out_dir=out_dir if out_dir.is_absolute() else base / out_dir,
        name=cfg.get("name", default_name),
        seed=int(cfg.get("seed", 0)),
        slack=float(cfg.get("slack", 1e-6)),
        jobs=int(cfg.get("jobs", 1)),
    )


@dataclass
class Table:
    kind: str
    method: str
    columns: tuple
    rows: list

    def column(self, name) -> list:
        return [r[name] for r in self.rows]


def _ratio(a, b):
    return a / b if b > 0 else math.inf


def _reduced_initial_state(scenario, rom, x0):
    if scenario.xhat0_kind == "project":
        return rom.project_state(x0)
    return np.zeros(rom.n)


class _Prepared:
    """FOM-level data shared by every row of a sweep."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.fom = scenario.load_model()
        self.grid = scenario.grid
        self.u = scenario.input.sample(self.grid)
        self.x0 = scenario.initial_state(self.fom.order)
        self.gramians = gramians(self.fom)
        self.balanced = balance(self.fom, self.gramians)
        self.schur_t = schur(self.fom.A.T)

    def offline(self, rom, K_max):
        return offline_precompute(self.fom, rom, K_max, self.grid.T, Q_fom=self.gramians.Q,
                                  fom_schur_t=self.schur_t)


def _n_row(prep: _Prepared, method, n, K):
    hsv = prep.balanced.hsv
    row = dict.fromkeys(N_SWEEP_COLUMNS, math.nan)
    row.update(method=method, n=n, rigorous="")
    row["sigma_n"] = float(hsv[n - 1]) if 0 < n <= hsv.size else math.nan
    row["sigma_next"] = float(hsv[n]) if 0 <= n < hsv.size else math.nan
    try:
        rom = reduce(prep.balanced, n, method)
    except (HSVGapError, ReductionError, ValueError) as exc:
        row["status"] = "rejected: " + str(exc).replace("\n", " ")
        return row
    xhat0 = _reduced_initial_state(prep.scenario, rom, prep.x0)
    rep = prep.offline(rom, K).evaluate(prep.u, prep.x0, xhat0, K, measure=True)
    row.update(
        status="ok", alpha=rom.alpha, norm_u=rep.norm_u, apriori=rep.apriori,
        term_steady=rep.term_steady, term_transient=rep.term_transient,
        term_rest=rep.term_rest, gamma=rep.gamma, error=rep.actual_error,
        gamma_over_error=_ratio(rep.gamma, rep.actual_error),
        apriori_over_error=_ratio(rep.apriori, rep.actual_error),
        rigorous=rep.is_rigorous(prep.scenario.slack),
    )
    return row


def _map(jobs, func, items):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(it) for it in items]


def run_n_sweep(scenario: Scenario) -> list[Table]:
    """One table per method with a row per reduced order.

    The FOM Gramians, balancing and Schur form are computed once and shared
    by all rows.  Orders rejected by the reduction (HSV gap, singular
    residualization) produce rows with status ``rejected: ...``.
    """
    n_values = scenario.n_values
    K = scenario.k
    prep = _Prepared(scenario)
    tasks = [(meth, n) for meth in scenario.methods for n in n_values]
    rows = _map(scenario.jobs, lambda mn: _n_row(prep, mn[0], mn[1], K), tasks)
    tables = []
    for meth in scenario.methods:
        tables.append(Table("n", meth, N_SWEEP_COLUMNS, [r for r in rows if r["method"] == meth]))
    return tables


def run_k_sweep(scenario: Scenario) -> list[Table]:
    """One table per method with a row per Fourier order, sharing one offline artifact."""
    n_values = scenario.n_values
    if len(n_values) != 1:
        raise ValueError("a K-sweep needs a single reduced order n")
    n = n_values[0]
    k_values = scenario.k_values
    prep = _Prepared(scenario)
    tables = []
    for meth in scenario.methods:
        rom = reduce(prep.balanced, n, meth)
        xhat0 = _reduced_initial_state(scenario, rom, prep.x0)
        ob = prep.offline(rom, max(k_values))
        error = output_l2_norm(ob.es.model, prep.u, ob.es.stack_state(prep.x0, xhat0))

        def row_for(K, ob=ob, xhat0=xhat0, error=error, meth=meth):
            rep = ob.evaluate(prep.u, prep.x0, xhat0, K)
            rep = replace(rep, actual_error=error)
            return dict(
                method=meth, n=n, K=K, remainder_rel=rep.remainder_rel,
                term_steady=rep.term_steady, term_transient=rep.term_transient,
                term_rest=rep.term_rest, gamma=rep.gamma, delta_x0=rep.delta_x0,
                apriori=rep.apriori, error=error,
                gamma_over_error=_ratio(rep.gamma, error),
                apriori_over_error=_ratio(rep.apriori, error),
                rigorous=rep.is_rigorous(scenario.slack),
            )

        tables.append(Table("k", meth, K_SWEEP_COLUMNS, _map(scenario.jobs, row_for, k_values)))
    return tables


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def audit(tables, slack: float = 1e-6) -> list[dict]:
    """Rows whose measured error exceeds ``gamma + slack``."""
    bad = []
    for tab in tables:
        for r in tab.rows:
            if r.get("status", "ok") != "ok":
                continue
            if not r["error"] <= r["gamma"] + slack:
                bad.append(r)
    return bad


def table_filename(scenario: Scenario, table: Table) -> str:
    if table.kind == "n":
        return f"{scenario.name}_{table.method.lower()}.csv"
    return f"{scenario.name}_k_{table.method.lower()}.csv"


def emit_report(tables, scenario: Scenario, raise_on_violation: bool = True) -> list[Path]:
    """Write one CSV per table plus a plain-text summary.

    Raises
    ------
    RigorAuditError
        After writing, if any row violates ``error <= gamma + slack``.
    OSError
        If the output directory cannot be written.
    """
    out = Path(scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for tab in tables:
        p = out / table_filename(scenario, tab)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(tab.columns)
            for r in tab.rows:
                w.writerow([_fmt(r[c]) for c in tab.columns])
        paths.append(p)

    bad = audit(tables, scenario.slack)
    kind = tables[0].kind if tables else "n"
    lines = ["# settings"]
    lines += [f"{k} = {v}" for k, v in scenario.settings().items()]
    lines.append("# results")
    for tab in tables:
        ok = [r for r in tab.rows if r.get("status", "ok") == "ok"]
        ratios = [r["gamma_over_error"] for r in ok if math.isfinite(r["gamma_over_error"])]
        improv = [r["gamma"] / r["apriori"] for r in ok if r["apriori"] > 0]
        lines.append(f"[{tab.method}] rows = {len(tab.rows)}, evaluated = {len(ok)}")
        if ratios:
            lines.append(f"[{tab.method}] max gamma/error = {max(ratios):.17g}")
        if improv:
            gm = float(np.exp(np.mean(np.log(improv))))
            lines.append(f"[{tab.method}] geometric mean gamma/apriori = {gm:.17g}")
    lines.append(f"rigor = {'PASS' if not bad else 'FAIL'} ({len(bad)} violations)")
    for r in bad:
        key = f"n={r['n']}" if kind == "n" else f"K={r['K']}"
        lines.append(f"  violation {r['method']} {key}: error {r['error']:.17g} > "
                     f"gamma {r['gamma']:.17g}")
    summary = out / (f"{scenario.name}_summary.txt" if kind == "n"
                     else f"{scenario.name}_k_summary.txt")
    summary.write_text("\n".join(lines) + "\n")
    paths.append(summary)
    if bad and raise_on_violation:
        raise RigorAuditError(f"{len(bad)} rows violate the certified bound; see {summary}", bad)
    return paths
