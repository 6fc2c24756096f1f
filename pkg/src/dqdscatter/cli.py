"""Command-line front end.

Verbs:
  bound-states       solve and export spectra plus the qubit overlap table
  sweep              scan incident energy for one input channel
  trace              repeated-injection traces at a fixed energy
  reproduce-figure   canned sweeps/traces matching the reference plots 2-5

Exit codes: 0 success, 1 bad configuration/arguments, 2 solver failure,
3 output I/O failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .bound_states import build_channel_basis
from .config import ConfigError, load_config
from .lineshape import find_resonance
from .qtbm import SolverError
from .sweep import (ResultBundle, SweepSpec, SweepError, attach_trace,
                    bundle_key, emit_outputs, run_sweep)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments by default; 2 is reserved for
    # solver failures here, so argument validation maps to 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(parser):
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--grid", type=int, default=None,
                        help="override grid points per axis")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: all cores)")
    parser.add_argument("--format", default="both",
                        choices=("csv", "json", "both"))


def build_parser():
    p = _Parser(prog="dqdscatter", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    b = sub.add_parser("bound-states", help="spectra and overlap table")
    _common(b)

    s = sub.add_parser("sweep", help="energy scan")
    _common(s)
    s.add_argument("--input", type=int, default=0,
                   help="input qubit channel slot (0..3)")
    s.add_argument("--from", dest="start", type=float, default=13.2)
    s.add_argument("--to", dest="stop", type=float, default=19.2)
    s.add_argument("--step", type=float, default=0.2)
    s.add_argument("--energies", default=None,
                   help="comma-separated explicit list, overrides range")

    t = sub.add_parser("trace", help="injection traces at one energy")
    _common(t)
    t.add_argument("--t0", type=float, required=True, help="injection energy, meV")
    t.add_argument("--n-max", type=int, default=60)

    f = sub.add_parser("reproduce-figure", help="canned figure data")
    _common(f)
    f.add_argument("figure", type=int, choices=(2, 3, 4, 5))

    return p


def _load(args):
    grid_override = args.grid
    return load_config(args.config, grid_override=grid_override)


def cmd_bound_states(args) -> int:
    config = _load(args)
    basis = build_channel_basis(config.device, config.grid,
                                count=4 + config.solver.evanescent_count)
    payload = {
        "config_hash": config.canonical_hash(),
        "grid_points": config.grid.points,
        "single_particle_mev": [float(v) for v in basis.levels.energies],
        "dot_levels_mev": [float(v) for v in basis.levels.dot_levels],
        "two_particle_mev": [float(v) for v in basis.energies],
        "labels": list(basis.labels),
        "qubit_indices": list(basis.qubit_indices),
        "overlap_raw": [[float(v) for v in row] for row in basis.overlap_raw],
        "overlap": [[float(v) for v in row] for row in basis.overlap],
    }
    try:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"bound_states_{payload['config_hash']}.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"dot levels (meV): {payload['dot_levels_mev'][:3]}")
    print(f"two-particle levels (meV): {payload['two_particle_mev'][:4]}")
    print(f"wrote {path}")
    return EXIT_OK


def _emit(bundle: ResultBundle, args) -> int:
    try:
        written = emit_outputs(bundle, args.format, args.out)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _progress(rec):
    if rec.get("error"):
        print(f"T0={rec['T0']:.3f}  {rec['error']}", flush=True)
    else:
        print(f"T0={rec['T0']:.3f}  p={['%.4f' % sum(t) for t in zip(rec['p_reflect'], rec['p_transmit'])]}"
              f"  C={rec['C']:.4f}", flush=True)


def cmd_sweep(args) -> int:
    config = _load(args)
    energies = ()
    if args.energies:
        energies = tuple(float(v) for v in args.energies.split(","))
    spec = SweepSpec(input_channel=args.input, start=args.start, stop=args.stop,
                     step=args.step, energies=energies)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    bundle = run_sweep(config, spec, jobs=jobs,
                       progress=_progress if jobs == 1 else None)
    return _emit(bundle, args)


def cmd_trace(args) -> int:
    config = _load(args)
    bundle = ResultBundle(meta={
        "config_hash": config.canonical_hash(),
        "grid_points": config.grid.points,
        "sweep": {"trace_at": args.t0},
        "exchange_images": True,
        "input_channel": None,
        "solver": {},
        "version": "trace",
    })
    attach_trace(bundle, config, T0=args.t0, n_max=args.n_max)
    tr = next(iter(bundle.traces.values()))
    print(f"p00={tr['p00']:.6f} p22={tr['p22']:.6f}")
    return _emit(bundle, args)


def cmd_figure(args) -> int:
    config = _load(args)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    show = _progress if jobs == 1 else None
    if args.figure in (2, 3):
        # probability spectra (fig 2) and C, xi (fig 3) share one scan
        spec = SweepSpec(input_channel=0, start=13.2, stop=19.2, step=0.2)
        bundle = run_sweep(config, spec, jobs=jobs, progress=show)
        spec2 = SweepSpec(input_channel=2, start=13.2, stop=19.2, step=0.2)
        bundle2 = run_sweep(config, spec2, jobs=jobs, progress=show)
        bundle.records += [dict(r, input_channel=2) for r in bundle2.records]
        return _emit(bundle, args)
    if args.figure == 4:
        # entangling traces at the located resonance and off-resonance
        spec = SweepSpec(input_channel=0, start=13.2, stop=19.2, step=0.2)
        bundle = run_sweep(config, spec, jobs=jobs, progress=show)
        fit = find_resonance([r["T0"] for r in bundle.records if not r.get("error")],
                             [r["p_reflect"][2] + r["p_transmit"][2]
                              for r in bundle.records if not r.get("error")])
        if not fit.found:
            print("no resonance located in the scan", file=sys.stderr)
            return EXIT_SOLVER
        width = fit.width if np.isfinite(fit.width) and fit.width > 0 else 0.2
        for T0 in (fit.center, fit.center + 0.5 * width,
                   fit.center + width, fit.center + 2 * width):
            attach_trace(bundle, config, T0=float(T0))
        return _emit(bundle, args)
    # figure 5: relaxation scan for the Bell input plus traces at its peak
    spec = SweepSpec(input_channel=2, start=1.2, stop=5.2, step=0.2)
    bundle = run_sweep(config, spec, jobs=jobs, progress=show)
    good = [r for r in bundle.records if not r.get("error")]
    fit = find_resonance([r["T0"] for r in good],
                         [r["p_reflect"][0] + r["p_transmit"][0] for r in good])
    center = fit.center if fit.found else 2.6
    attach_trace(bundle, config, T0=float(center))
    return _emit(bundle, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        handler = {
            "bound-states": cmd_bound_states,
            "sweep": cmd_sweep,
            "trace": cmd_trace,
            "reproduce-figure": cmd_figure,
        }[args.verb]
        return handler(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SweepError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
