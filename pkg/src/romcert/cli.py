"""Command-line entry point ``romcert``.

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a measured error
exceeds its certified bound.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import emit_report, read_config, run_k_sweep, run_n_sweep, scenario_from_config
from .bounds import offline_precompute
from .errors import RigorAuditError, RomcertError
from .matrix_io import save_model
from .reduction import balance, reduce
from .synth import synthesize_model

EXIT_OK, EXIT_USAGE, EXIT_RIGOR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="romcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "reduce": "reduce a model and write the ROM matrices",
        "bound": "evaluate the a posteriori bound for one reduced model",
        "sweep-n": "sweep the reduced order n",
        "sweep-k": "sweep the Fourier order K",
        "synth": "write a synthetic stable model",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="flat key = value scenario file")
        sp.add_argument("--n", help="reduced order, or range such as 2:30")
        sp.add_argument("--k", help="Fourier order, or range such as 0:15")
        sp.add_argument("--method", help="BT, SPA or BT,SPA")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    return p


def _scenario(args):
    cfg, base = {}, Path.cwd()
    if args.config is not None:
        cfg = read_config(args.config)
        base = args.config.resolve().parent
    over = {}
    for item in args.set:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    for flag, single, ranged in ((args.n, "n", "n_range"), (args.k, "k", "k_range")):
        if flag is None:
            continue
        # a flag replaces whatever the config said about this parameter
        cfg.pop(single, None)
        cfg.pop(ranged, None)
        over[ranged if (":" in flag or "," in flag) else single] = flag
    if args.method is not None:
        over["method"] = args.method
    if args.out is not None:
        over["out_dir"] = str(Path(args.out).resolve())
    return scenario_from_config(cfg, base, over)


def _cmd_reduce(sc):
    fom = sc.load_model()
    bal = balance(fom)
    out = Path(sc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hsv_path = out / f"{sc.name}_hsv.csv"
    hsv_path.write_text("j,sigma\n" + "".join(f"{j},{s:.17g}\n"
                                               for j, s in enumerate(bal.hsv, 1)))
    for meth in sc.methods:
        for n in sc.n_values:
            rom = reduce(bal, n, meth)
            save_model(rom.model, out / f"{sc.name}_{meth.lower()}_n{n}")
            print(f"{meth} n={n} N={fom.order} alpha={rom.alpha:.17g} "
                  f"sigma_n={bal.hsv[n - 1]:.17g} sigma_next={rom.sigma_next:.17g}")
    return EXIT_OK


def _cmd_bound(sc):
    fom = sc.load_model()
    bal = balance(fom)
    grid = sc.grid
    u = sc.input.sample(grid)
    x0 = sc.initial_state(fom.order)
    status = EXIT_OK
    for meth in sc.methods:
        for n in sc.n_values:
            rom = reduce(bal, n, meth)
            xhat0 = rom.project_state(x0) if sc.xhat0_kind == "project" else np.zeros(n)
            ob = offline_precompute(fom, rom, sc.k, grid.T, Q_fom=bal.gramians.Q)
            rep = ob.evaluate(u, x0, xhat0, sc.k, measure=True)
            verdict = rep.is_rigorous(sc.slack)
            print(f"method={meth} n={n} K={sc.k} term_steady={rep.term_steady:.17g} "
                  f"term_transient={rep.term_transient:.17g} term_rest={rep.term_rest:.17g} "
                  f"gamma={rep.gamma:.17g} apriori={rep.apriori:.17g} "
                  f"error={rep.actual_error:.17g} rigorous={str(verdict).lower()}")
            if not verdict:
                status = EXIT_RIGOR
    return status


def _cmd_sweep(sc, runner):
    tables = runner(sc)
    try:
        paths = emit_report(tables, sc)
    except RigorAuditError as exc:
        print(f"rigor audit failed: {exc}", file=sys.stderr)
        return EXIT_RIGOR
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_synth(sc):
    model = synthesize_model(sc.synthetic_spec())
    for p in save_model(model, Path(sc.out_dir) / sc.name):
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        sc = _scenario(args)
        if args.command == "reduce":
            return _cmd_reduce(sc)
        if args.command == "bound":
            return _cmd_bound(sc)
        if args.command == "sweep-n":
            return _cmd_sweep(sc, run_n_sweep)
        if args.command == "sweep-k":
            return _cmd_sweep(sc, run_k_sweep)
        if args.command == "synth":
            return _cmd_synth(sc)
    except (RomcertError, ValueError, OSError) as exc:
        print(f"romcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
