"""Energy sweeps and injection traces with deterministic, portable output.

A sweep solves one scattering problem per energy and reduces each
solution to a flat record (probabilities, entanglement, diagnostics).
Failed points are recorded with their error instead of aborting.  The
bundle is reproducible byte for byte: records are keyed and sorted by
energy, every solve starts cold, floats are serialized via repr, and
the metadata carries a content hash of the full configuration instead
of wall-clock information.
"""

import csv
import hashlib
import io
import json
import multiprocessing as mp
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bound_states import build_channel_basis
from .config import RunConfig
from .current_map import extract_channel_map, iterate_injections, disentangle_trace
from .qtbm import solve_scattering, channel_probabilities
from .quantum_info import (normalize_amplitudes, reduced_density_matrix,
                           entanglement_report)


class SweepError(RuntimeError):
    """No sweep point produced a usable record."""


@dataclass(frozen=True)
class SweepSpec:
    """What to scan: input channel, energy grid, optional trace requests."""

    input_channel: int = 0
    start: float = 13.2
    stop: float = 19.2
    step: float = 0.2
    energies: tuple = ()            # explicit list overrides start/stop/step

    def energy_list(self):
        if self.energies:
            vals = [float(e) for e in self.energies]
            if any(e <= 0 for e in vals):
                raise ValueError("energies must be positive")
            if sorted(vals) != vals or len(set(vals)) != len(vals):
                raise ValueError("energies must be strictly increasing")
            return vals
        if self.step <= 0 or self.stop < self.start or self.start <= 0:
            raise ValueError("need positive start, step > 0 and stop >= start")
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]

    def as_dict(self):
        return {"input_channel": self.input_channel, "start": self.start,
                "stop": self.stop, "step": self.step,
                "energies": list(self.energies)}


@dataclass
class ResultBundle:
    meta: dict
    records: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    def as_dict(self):
        return {"meta": self.meta, "records": self.records, "traces": self.traces}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


# worker globals, installed once per process by the pool initializer
_W = {}


def _init_worker(config: RunConfig, exchange_images: bool):
    _W["config"] = config
    _W["basis"] = build_channel_basis(config.device, config.grid,
                                      count=4 + config.solver.evanescent_count)
    _W["images"] = exchange_images


def _record_from_solution(sol, basis):
    pR, pT = channel_probabilities(sol)
    qubit = list(basis.qubit_indices)
    rec = {
        "T0": float(sol.channels.kinetic[sol.channels.incident]),
        "p_reflect": [float(pR[n]) for n in qubit],
        "p_transmit": [float(pT[n]) for n in qubit],
        "flux_defect": float(sol.flux_defect),
        "antisymmetry": float(sol.antisymmetry),
        "residual": float(sol.residual),
        "iterations": int(sol.iterations),
        "method": sol.method,
        "amplitudes_reflect": [[float(z.real), float(z.imag)] for z in sol.b[qubit]],
        "amplitudes_transmit": [[float(z.real), float(z.imag)] for z in sol.c[qubit]],
        "error": None,
    }
    try:
        out = normalize_amplitudes(sol, basis)
        rho = reduced_density_matrix(out, basis)
        rep = entanglement_report(rho)
        rec["C"] = float(rep.concurrence)
        rec["xi"] = float(rep.entropy)
    except Exception as exc:
        rec["C"] = None
        rec["xi"] = None
        rec["error"] = f"quantum-info: {exc}"
    return rec


def _solve_point(args):
    j, T0 = args
    config, basis = _W["config"], _W["basis"]
    channel = basis.qubit_indices[j]
    try:
        sol = solve_scattering(config.device, config.grid, basis, j=channel,
                               T0=T0, solver=config.solver,
                               exchange_images=_W["images"])
    except Exception as exc:
        return {"T0": float(T0), "error": f"solver: {exc}", "C": None, "xi": None}
    return _record_from_solution(sol, basis)


def run_sweep(config: RunConfig, sweep: SweepSpec, jobs: int = 1,
              exchange_images: bool = True, progress=None) -> ResultBundle:
    """Solve every energy in the sweep; never abort on point failures."""
    energies = sweep.energy_list()
    points = [(sweep.input_channel, float(e)) for e in energies]
    if jobs is None or jobs < 1:
        jobs = os.cpu_count() or 1
    if jobs == 1:
        _init_worker(config, exchange_images)
        records = []
        for pt in points:
            records.append(_solve_point(pt))
            if progress is not None:
                progress(records[-1])
    else:
        ctx = mp.get_context("spawn")
        with ctx.Pool(processes=jobs, initializer=_init_worker,
                      initargs=(config, exchange_images)) as pool:
            records = pool.map(_solve_point, points, chunksize=1)
    records.sort(key=lambda r: r["T0"])
    if not any(r.get("error") is None or "quantum-info" in str(r.get("error"))
               for r in records):
        raise SweepError("every sweep point failed in the solver")
    meta = {
        "config_hash": config.canonical_hash(),
        "grid_points": config.grid.points,
        "solver": {"gmres_tol": config.solver.gmres_tol,
                   "gmres_restart": config.solver.gmres_restart,
                   "threshold_tolerance": config.solver.threshold_tolerance},
        "input_channel": sweep.input_channel,
        "sweep": sweep.as_dict(),
        "exchange_images": exchange_images,
        "version": __version__,
    }
    return ResultBundle(meta=meta, records=records)


def attach_trace(bundle: ResultBundle, config: RunConfig, T0: float,
                 n_max: int = 60, exchange_images: bool = True,
                 inputs=(0, 2)) -> None:
    """Solve the listed inputs at T0, extract the map, store both traces."""
    basis = build_channel_basis(config.device, config.grid,
                                count=4 + config.solver.evanescent_count)
    states = {}
    for j in inputs:
        channel = basis.qubit_indices[j]
        sol = solve_scattering(config.device, config.grid, basis, j=channel,
                               T0=T0, solver=config.solver,
                               exchange_images=exchange_images)
        states[j] = normalize_amplitudes(sol, basis)
    cmap = extract_channel_map(states, basis)
    entangle = iterate_injections(cmap, basis.overlap,
                                  np.array([1.0, 0, 0, 0]), n_max)
    relax = disentangle_trace(cmap, basis.overlap, n_max)
    bundle.traces[f"T0={T0!r}"] = {
        "T0": float(T0),
        "p00": float(cmap.p00),
        "p22": float(cmap.p22),
        "map": [[float(v) for v in row] for row in cmap.P],
        "entangle": _trace_dict(entangle),
        "relax": _trace_dict(relax),
    }


def _trace_dict(trace):
    return {
        "n": [int(v) for v in trace.n],
        "C": [float(v) for v in trace.concurrence],
        "xi": [float(v) for v in trace.entropy],
        "occupancies": [[float(v) for v in row] for row in trace.occupancies],
    }


def _spectra_csv(bundle: ResultBundle) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["# T0_mev", "pR_0", "pR_1", "pR_2", "pR_3",
                     "pT_0", "pT_1", "pT_2", "pT_3", "C", "xi",
                     "flux_defect", "error"])
    for rec in bundle.records:
        if rec.get("p_reflect") is None:
            writer.writerow([repr(rec["T0"])] + [""] * 11 + [rec.get("error") or ""])
            continue
        row = [repr(rec["T0"])]
        row += [repr(v) for v in rec["p_reflect"]]
        row += [repr(v) for v in rec["p_transmit"]]
        row.append(repr(rec["C"]) if rec.get("C") is not None else "")
        row.append(repr(rec["xi"]) if rec.get("xi") is not None else "")
        row.append(repr(rec["flux_defect"]))
        row.append(rec.get("error") or "")
        writer.writerow(row)
    return buf.getvalue()


def _trace_csv(trace_dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["# n", "C", "xi", "occ_0", "occ_1", "occ_2", "occ_3"])
    tr = trace_dict
    for i, n in enumerate(tr["n"]):
        writer.writerow([n, repr(tr["C"][i]), repr(tr["xi"][i])]
                        + [repr(v) for v in tr["occupancies"][i]])
    return buf.getvalue()


def bundle_key(bundle: ResultBundle) -> str:
    """Short content key: config plus sweep parameters."""
    blob = json.dumps({"config": bundle.meta["config_hash"],
                       "sweep": bundle.meta["sweep"],
                       "images": bundle.meta["exchange_images"]},
                      sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def emit_outputs(bundle: ResultBundle, fmt: str, outdir) -> list:
    """Write bundle files; returns the list of paths written."""
    if fmt not in ("json", "csv", "both"):
        raise ValueError(f"unknown format: {fmt}")
    os.makedirs(outdir, exist_ok=True)
    key = bundle_key(bundle)
    written = []
    if fmt in ("json", "both"):
        path = os.path.join(outdir, f"sweep_{key}.json")
        with open(path, "w") as fh:
            fh.write(bundle.to_json())
        written.append(path)
    if fmt in ("csv", "both"):
        path = os.path.join(outdir, f"sweep_{key}.csv")
        with open(path, "w") as fh:
            fh.write(_spectra_csv(bundle))
        written.append(path)
        for i, (name, tr) in enumerate(sorted(bundle.traces.items())):
            for kind in ("entangle", "relax"):
                path = os.path.join(outdir, f"trace_{kind}_{i}_{key}.csv")
                with open(path, "w") as fh:
                    fh.write(_trace_csv(tr[kind]))
                written.append(path)
    return written
