"""Acceptance gate: one test per headline claim, stated tolerances.

Every test prints a single PASS/FAIL line with the measured numbers so the
log reads as a checklist.  The resonance sweeps (a04, a05, a06) run at the
production grid and take tens of minutes each on one core; deselect them
with -m "not slow" during development.

The sweep runtime budgets assume the nominal four-way-parallel laptop; on
fewer cores the wall-clock budget is scaled by the missing parallelism.
"""

import os
import time

import numpy as np
import pytest

from dqdscatter.bound_states import (
    build_channel_basis, free_channel_basis, solve_single_particle,
)
from dqdscatter.config import RunConfig, SolverSpec
from dqdscatter.current_map import (
    closed_form_entangle, ideal_entangling_map, iterate_injections,
)
from dqdscatter.device import DeviceSpec, GridSpec
from dqdscatter.lineshape import find_resonance
from dqdscatter.quantum_info import (
    concurrence_wootters, concurrence_xstate, decoherence, xstate_entropy,
)
from dqdscatter.qtbm import channel_probabilities, solve_scattering
from dqdscatter.sweep import SweepSpec, run_sweep

S = 1.0 / np.sqrt(2.0)
U_IDEAL = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, S, S, 0.0],
    [0.0, S, -S, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])

# nominal laptop parallelism the sweep budgets are quoted against
BUDGET_CORES = 4


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def _totals(rec, j):
    return rec["p_reflect"][j] + rec["p_transmit"][j]


def _sweep_budget(jobs: int, minutes: float) -> float:
    return 60.0 * minutes * BUDGET_CORES / max(1, min(BUDGET_CORES, jobs))


@pytest.fixture(scope="module")
def device():
    return DeviceSpec()


@pytest.fixture(scope="module")
def prod_config():
    return RunConfig()          # production grid is the default


@pytest.fixture(scope="module")
def jobs():
    return os.cpu_count() or 1


# ---------------------------------------------------------------- a01

def test_a01_bound_levels(device):
    """Dot levels at the production grid: -105.6, -92.5, -71.5 (+-1, 1, 1.5)."""
    t0 = time.perf_counter()
    sp = solve_single_particle(device, GridSpec(), count=6)
    levels = sp.dot_levels
    dt = time.perf_counter() - t0
    target = np.array([-105.6, -92.5, -71.5])
    tol = np.array([1.0, 1.0, 1.5])
    dev = np.abs(levels - target)
    ok = bool(np.all(dev <= tol) and dt < 10.0)
    _verdict("a01 bound-levels", ok,
             f"E={np.round(levels, 3)} meV, |dE|={np.round(dev, 3)}, {dt:.2f}s")
    assert dt < 10.0
    assert np.all(dev <= tol), f"dot levels {levels} vs {target} +- {tol}"


# ---------------------------------------------------------------- a02

def test_a02_overlap_table(device):
    """Channel overlap magnitudes {0, 1, 1/sqrt2} to 1e-3; signs to a phase.

    The magnitude tolerance is not reachable here: the interaction mixes
    the |00> product into the doublet states at the few-percent level on
    every grid we tried (the deviation saturates near 4e-2 under grid
    refinement, so it is physical mixing rather than discretization).
    The sign structure and the snapped table are exact; the magnitude
    assert below is expected to fail and is kept honest rather than
    loosened.
    """
    grid = GridSpec(points=41)
    t0 = time.perf_counter()
    basis = build_channel_basis(device, grid)
    dt = time.perf_counter() - t0
    raw = basis.overlap_raw[:4, :4]
    ideal = basis.overlap[:4, :4]

    sign_ok = True
    for c in range(4):
        mask = np.abs(ideal[:, c]) > 1e-12
        s = np.sign(raw[np.argmax(np.abs(ideal[:, c])), c])
        if not np.all(np.sign(raw[mask, c]) * s == np.sign(ideal[mask, c])
                      * np.sign(ideal[np.argmax(np.abs(ideal[:, c])), c])):
            sign_ok = False
    mag_dev = float(np.max(np.abs(np.abs(raw) - np.abs(ideal))))
    ok = sign_ok and mag_dev <= 1e-3 and dt < 60.0
    _verdict("a02 overlap-table", ok,
             f"max||raw|-|ideal||={mag_dev:.3e}, signs {'ok' if sign_ok else 'BAD'}, "
             f"eigensolve {dt:.1f}s")
    assert dt < 60.0
    assert sign_ok
    assert mag_dev <= 1e-3, (
        f"overlap magnitudes deviate by {mag_dev:.3e} (> 1e-3): interaction-"
        f"induced mixing of the product ground state into the doublets; "
        f"saturates near 4e-2 under grid refinement, see README")


# ---------------------------------------------------------------- a03

def test_a03_conservation(device):
    """Flux sum to 1e-6 and interior antisymmetry below 1e-6, every solve."""
    grid = GridSpec(points=21)
    basis = build_channel_basis(device, grid)
    worst_flux = 0.0
    worst_anti = 0.0
    for j, T0 in ((0, 15.0), (0, 9.0), (2, 2.8), (2, 8.0)):
        sol = solve_scattering(device, grid, basis, j=j, T0=T0)
        worst_flux = max(worst_flux, sol.flux_defect)
        worst_anti = max(worst_anti, sol.antisymmetry)
    ok = worst_flux < 1e-6 and worst_anti < 1e-6
    _verdict("a03 conservation", ok,
             f"flux defect <= {worst_flux:.2e}, antisymmetry <= {worst_anti:.2e}")
    assert worst_flux < 1e-6
    assert worst_anti < 1e-6


# ---------------------------------------------------------------- a04 / a05

@pytest.fixture(scope="module")
def forward_scan(prod_config, jobs):
    """Ground-channel sweep over the resonance window at the production grid."""
    sweep = SweepSpec(input_channel=0, start=13.2, stop=19.2, step=0.2)
    t0 = time.perf_counter()
    bundle = run_sweep(prod_config, sweep, jobs=jobs)
    wall = time.perf_counter() - t0
    return bundle, wall


@pytest.fixture(scope="module")
def located_peak(prod_config, forward_scan, jobs):
    """Refine the channel-2 peak location below the coarse sweep step."""
    bundle, _ = forward_scan
    recs = [r for r in bundle.records if r["error"] is None]
    x = np.array([r["T0"] for r in recs])
    y = np.array([_totals(r, 2) for r in recs])
    fit = find_resonance(x, y)
    center = fit.center if fit.found else x[int(np.argmax(y))]
    offsets = np.array([-0.12, -0.08, -0.04, 0.0, 0.04, 0.08, 0.12])
    probe = SweepSpec(input_channel=0, energies=tuple(center + offsets))
    fine = run_sweep(prod_config, probe, jobs=jobs)
    pool = recs + [r for r in fine.records if r["error"] is None]
    best = max(pool, key=lambda r: _totals(r, 2))
    return fit, best


@pytest.mark.slow
def test_a04_resonance_scan(forward_scan, located_peak, jobs):
    """Channel-2 resonance at 15.8 +- 1.5; at the peak p0, p2, C, xi near
    the half-converted point (0.5, 0.5, 0.5, ln 2, each +- 0.1)."""
    bundle, wall = forward_scan
    fit, best = located_peak
    recs = [r for r in bundle.records if r["error"] is None]
    assert len(recs) >= 25, "too many failed sweep points"
    for r in recs:
        assert r["flux_defect"] < 1e-6
        assert r["antisymmetry"] < 1e-6

    center = fit.center if fit.found else best["T0"]
    p0 = _totals(best, 0)
    p2 = _totals(best, 2)
    C, xi = best["C"], best["xi"]
    budget = _sweep_budget(jobs, 30.0)
    ok = (abs(center - 15.8) <= 1.5 and abs(p0 - 0.5) <= 0.1
          and abs(p2 - 0.5) <= 0.1 and abs(C - 0.5) <= 0.1
          and abs(xi - np.log(2.0)) <= 0.1 and wall < budget)
    _verdict("a04 resonance-scan", ok,
             f"center={center:.3f} meV (fit {fit.kind}), peak T0={best['T0']:.3f}: "
             f"p0={p0:.3f} p2={p2:.3f} C={C:.3f} xi={xi:.3f}, "
             f"sweep {wall / 60:.1f} min (budget {budget / 60:.0f})")
    assert wall < budget
    assert abs(center - 15.8) <= 1.5, f"resonance at {center:.2f} meV"
    assert abs(p2 - 0.5) <= 0.1, f"peak channel-2 weight {p2:.3f}"
    assert abs(p0 - 0.5) <= 0.1, f"peak channel-0 weight {p0:.3f}"
    assert abs(C - 0.5) <= 0.1, f"peak concurrence {C:.3f}"
    assert abs(xi - np.log(2.0)) <= 0.1, f"peak entropy {xi:.3f}"


@pytest.mark.slow
def test_a05_decoherence_free(prod_config, located_peak, jobs):
    """Second carrier injected in channel 2 at the resonance energy passes
    elastically: p2 >= 0.99, C >= 0.99, xi <= 0.02."""
    _, best = located_peak
    probe = SweepSpec(input_channel=2, energies=(best["T0"],))
    bundle = run_sweep(prod_config, probe, jobs=jobs)
    rec = bundle.records[0]
    assert rec["error"] is None, rec["error"]
    p2 = _totals(rec, 2)
    C, xi = rec["C"], rec["xi"]
    ok = p2 >= 0.99 and C >= 0.99 and xi <= 0.02
    _verdict("a05 decoherence-free", ok,
             f"T0={rec['T0']:.3f}: p2={p2:.4f} C={C:.4f} xi={xi:.4f}")
    assert p2 >= 0.99
    assert C >= 0.99
    assert xi <= 0.02


# ---------------------------------------------------------------- a06

@pytest.mark.slow
def test_a06_disentangling(prod_config, jobs):
    """Channel-2 injection at low energy relaxes through channel 0 with a
    peak near 2.6 meV (+- 1.0)."""
    sweep = SweepSpec(input_channel=2, start=1.2, stop=4.4, step=0.2)
    t0 = time.perf_counter()
    bundle = run_sweep(prod_config, sweep, jobs=jobs)
    wall = time.perf_counter() - t0
    recs = [r for r in bundle.records if r["error"] is None]
    assert len(recs) >= 13, "too many failed sweep points"
    for r in recs:
        assert r["flux_defect"] < 1e-6
        assert r["antisymmetry"] < 1e-6
    x = np.array([r["T0"] for r in recs])
    y = np.array([_totals(r, 0) for r in recs])
    fit = find_resonance(x, y)
    center = fit.center if fit.found else x[int(np.argmax(y))]
    interior = bool(x[0] < center < x[-1])
    ok = interior and abs(center - 2.6) <= 1.0
    _verdict("a06 disentangling", ok,
             f"relaxation peak at {center:.3f} meV "
             f"(max p0={y.max():.3f}), sweep {wall / 60:.1f} min")
    assert interior, "no interior relaxation peak"
    assert abs(center - 2.6) <= 1.0, f"relaxation peak at {center:.2f} meV"


# ---------------------------------------------------------------- a07

def test_a07_current_map_closed_forms():
    """Repeated injections match the closed forms to 1e-12 and converge."""
    t0 = time.perf_counter()
    worst = 0.0
    ground = np.array([1.0, 0.0, 0.0, 0.0])
    for p00 in (0.0, 0.3, 0.5, 0.9, 1.0):
        cmap = ideal_entangling_map(p00)
        tr = iterate_injections(cmap, U_IDEAL, ground, n_max=64)
        for n in range(65):
            C_ref, xi_ref = closed_form_entangle(p00, n)
            worst = max(worst, abs(tr.concurrence[n] - C_ref),
                        abs(tr.entropy[n] - xi_ref),
                        abs(tr.concurrence[n] - (1.0 - p00**n if n else 0.0)))
    C_inf, xi_inf = closed_form_entangle(0.3, 400)
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and abs(C_inf - 1.0) < 1e-12 and xi_inf < 1e-12 and dt < 1.0
    _verdict("a07 current-map", ok,
             f"max |iterate - closed form|={worst:.2e}, "
             f"n->inf C={C_inf:.15f} xi={xi_inf:.2e}, {dt * 1e3:.0f}ms")
    assert worst < 1e-12
    assert abs(C_inf - 1.0) < 1e-12 and xi_inf < 1e-12
    assert dt < 1.0


# ---------------------------------------------------------------- a08

def test_a08_quantum_info_oracles():
    """X-state concurrence and entropy closed forms agree with the general
    routes on 1000 random X states to 1e-10."""
    rng = np.random.default_rng(815)
    t0 = time.perf_counter()
    worst_c = worst_s = 0.0
    for _ in range(1000):
        p = rng.dirichlet(np.ones(4))
        rho = np.diag(p).astype(complex)
        rho[0, 3] = np.sqrt(p[0] * p[3]) * rng.uniform(0, 1) \
            * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rho[3, 0] = np.conj(rho[0, 3])
        rho[1, 2] = np.sqrt(p[1] * p[2]) * rng.uniform(0, 1) \
            * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rho[2, 1] = np.conj(rho[1, 2])
        worst_c = max(worst_c, abs(concurrence_xstate(rho)
                                   - concurrence_wootters(rho)))
        worst_s = max(worst_s, abs(xstate_entropy(rho) - decoherence(rho)))
    dt = time.perf_counter() - t0
    ok = worst_c < 1e-10 and worst_s < 1e-10 and dt < 5.0
    _verdict("a08 quantum-info", ok,
             f"concurrence routes {worst_c:.2e}, entropy routes {worst_s:.2e}, "
             f"{dt:.2f}s")
    assert worst_c < 1e-10
    assert worst_s < 1e-10
    assert dt < 5.0


# ---------------------------------------------------------------- a09

def test_a09_free_propagation():
    """Flat device, interaction off: unit transmission across ten energies."""
    dev = DeviceSpec(well_depth=0.0, coulomb_on=False)
    grid = GridSpec(points=21)
    basis = free_channel_basis(dev, grid, count=10)
    worst = 0.0
    # box channels do not decay at the transverse faces, so the exchange
    # images (built for bound channels) do not apply; hard walls are exact
    for T0 in np.linspace(2.5, 11.5, 10):
        sol = solve_scattering(dev, grid, basis, j=0, T0=float(T0),
                               exchange_images=False)
        pR, pT = channel_probabilities(sol)
        worst = max(worst, abs(pT[0] - 1.0), float(np.sum(pR)))
    ok = worst <= 1e-6
    _verdict("a09 free-propagation", ok, f"max |p_T - 1| = {worst:.2e}")
    assert worst <= 1e-6


# ---------------------------------------------------------------- a10

def test_a10_determinism():
    """Identical config gives byte-identical bundles across reruns and
    across parallelism 1 and N, on both solver routes."""
    cfg = RunConfig(grid=GridSpec(points=17))
    sweep = SweepSpec(input_channel=0, start=14.0, stop=16.0, step=0.5)
    direct = [run_sweep(cfg, sweep, jobs=j).to_json() for j in (1, 1, 2)]

    icfg = RunConfig(grid=GridSpec(points=17),
                     solver=SolverSpec(direct_max_points=9))
    probe = SweepSpec(input_channel=0, energies=(15.8,))
    iterative = [run_sweep(icfg, probe, jobs=j).to_json() for j in (1, 1, 2)]

    ok = (direct[0] == direct[1] == direct[2]
          and iterative[0] == iterative[1] == iterative[2])
    _verdict("a10 determinism", ok,
             f"direct bundle {len(direct[0])}B x3 equal: "
             f"{direct[0] == direct[1] == direct[2]}; iterative bundle "
             f"{len(iterative[0])}B x3 equal: "
             f"{iterative[0] == iterative[1] == iterative[2]}")
    assert direct[0] == direct[1], "rerun changed the bundle"
    assert direct[0] == direct[2], "parallelism changed the bundle"
    assert iterative[0] == iterative[1], "rerun changed the bundle (gmres)"
    assert iterative[0] == iterative[2], "parallelism changed the bundle (gmres)"
