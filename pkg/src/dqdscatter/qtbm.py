"""Open-boundary solver for the three-particle scattering problem.

One carrier enters along x1 with kinetic energy T0 while two particles
occupy a bound state of the double dot.  The interior Schrödinger
equation on [0,L]^3 is closed with traveling/evanescent channel
expansions on the two x1 faces; the four transverse faces carry the
antisymmetrized images of those expansions, which is how exchange
symmetry enters (the interior is NOT restricted to a wedge, so
antisymmetry of the solution is a measurable check, not a constraint).

Unknowns: interior values Psi (n^3), reflection amplitudes b_n and
transmission amplitudes c_n referenced to their faces.  The channel
factors use the dispersion of the discrete Laplacian, which is what
makes flux conservation hold to solver precision on any grid:

    traveling:  T_n = 2t(1 - cos k_n h),  flux weight sin(k_n h)
    evanescent: |T_n| = 2t(cosh kappa_n h - 1)

The system is solved directly (interior LU + dense Schur complement
over the 2*nch amplitude columns) on small grids, and by unrestarted
GMRES on the full bordered system above `direct_max_points`.  The
preconditioner is the exact resolvent of a mean-field split: carrier
1D Hamiltonian dressed with the electrostatic potential of the pair
ground-state charge, tensor the fully interacting two-particle dot
Hamiltonian; applied per carrier eigenmode with real 2D LU factors.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import splu, gmres, LinearOperator

from .config import SolverSpec
from .device import DeviceSpec, GridSpec
from .units import KP


class SolverError(RuntimeError):
    """Linear solve failed to converge or produced an invalid state."""


@dataclass(frozen=True)
class ChannelTable:
    """Kinematics of every retained channel at fixed total energy."""

    incident: int
    kinetic: np.ndarray        # T_n = E - eps_n, meV
    wavevector: np.ndarray     # k_n (1/nm), zero for evanescent
    decay: np.ndarray          # kappa_n (1/nm), zero for traveling
    traveling: np.ndarray      # bool
    energy: float              # total E
    h: float

    @property
    def k0(self) -> float:
        return float(self.wavevector[self.incident])

    def flux_weights(self) -> np.ndarray:
        """Group-velocity ratio v_n/v_0 on the lattice."""
        v = np.where(self.traveling, np.sin(self.wavevector * self.h), 0.0)
        return v / np.sin(self.k0 * self.h)


@dataclass
class ScatteringSolution:
    b: np.ndarray              # reflection amplitudes, complex, per channel
    c: np.ndarray              # transmission amplitudes (face-referenced)
    psi: np.ndarray            # interior wavefunction (n, n, n)
    channels: ChannelTable
    residual: float
    flux_defect: float
    antisymmetry: float
    iterations: int
    method: str
    seconds: float


def enumerate_channels(energies, j: int, T0: float, h: float,
                       threshold_tolerance: float = 1e-4) -> ChannelTable:
    """Classify channels as traveling/evanescent at E = T0 + eps_j.

    Wavevectors solve the discrete dispersion on spacing h; channels
    within threshold_tolerance of zero kinetic energy count as closed
    (their lattice velocity vanishes and the matching row degenerates).
    """
    energies = np.asarray(energies, dtype=float)
    if not (0 <= j < energies.size):
        raise ValueError(f"input channel {j} outside basis")
    if T0 <= 0:
        raise ValueError("incident kinetic energy must be positive")
    t = KP / h**2
    E = T0 + energies[j]
    Tn = E - energies
    trav = Tn > threshold_tolerance
    if Tn[trav].max(initial=0.0) >= 4.0 * t:
        raise ValueError("kinetic energy beyond the lattice band edge; refine the grid")
    k = np.where(trav, np.arccos(np.clip(1.0 - Tn / (2 * t), -1.0, 1.0)) / h, 0.0)
    kap = np.where(~trav, np.arccosh(1.0 + np.abs(Tn) / (2 * t)) / h, 0.0)
    return ChannelTable(incident=j, kinetic=Tn, wavevector=k, decay=kap,
                        traveling=trav, energy=E, h=h)


@dataclass
class AssembledSystem:
    """Bordered linear system: real interior block, complex border."""

    A_II: sp.csr_matrix        # interior x interior, real
    A_IB: sp.csc_matrix        # interior x amplitudes
    A_BI: sp.csr_matrix        # matching rows
    A_BB: np.ndarray           # diagonal border block, complex
    rhs_I: np.ndarray          # real
    rhs_B: np.ndarray          # complex
    channels: ChannelTable
    n: int

    @property
    def n_interior(self) -> int:
        return self.n**3

    def matvec(self, u):
        nI = self.n_interior
        return np.concatenate([
            self.A_II @ u[:nI] + self.A_IB @ u[nI:],
            self.A_BI @ u[:nI] + self.A_BB.diagonal() * u[nI:],
        ])

    def full_rhs(self):
        return np.concatenate([self.rhs_I.astype(complex), self.rhs_B])


def _face_indices(n: int):
    B, C = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return dict(
        x1_0=(B * n + C).ravel(), x1_L=((n - 1) * n * n + B * n + C).ravel(),
        x2_0=(B * n * n + C).ravel(), x2_L=(B * n * n + (n - 1) * n + C).ravel(),
        x3_0=(B * n * n + C * n).ravel(), x3_L=(B * n * n + C * n + (n - 1)).ravel(),
    )


def assemble_system(device: DeviceSpec, grid: GridSpec, basis, j: int, T0: float,
                    solver: SolverSpec = SolverSpec(),
                    exchange_images: bool = True) -> AssembledSystem:
    """Build the bordered QTBM system for input channel j at energy T0.

    `basis` provides .energies, .states (n, n, nch) and .h (a
    ChannelBasis or any lighter stand-in).  With exchange_images the
    transverse faces carry -F(x1,x3) and +F(x1,x2) built from the same
    amplitudes, closing the exchange exit paths; without them those
    faces are hard walls (useful only for free-propagation checks).
    """
    x = grid.interior(device)
    h = grid.spacing(device)
    n = x.size
    nch = len(basis.energies)
    t = KP / h**2
    ch = enumerate_channels(basis.energies, j, T0, h, solver.threshold_tolerance)
    if ch.traveling[-1]:
        raise SolverError("highest retained channel is traveling; "
                          "increase the channel count")
    xi_fac = np.where(ch.traveling, np.exp(-1j * ch.wavevector * h),
                      np.exp(ch.decay * h))

    K1 = sp.diags([np.full(n, 2.0 * t), -t * np.ones(n - 1), -t * np.ones(n - 1)],
                  [0, 1, -1], format="csr")
    I = sp.identity(n, format="csr")
    A_II = sp.kron(sp.kron(K1, I), I) + sp.kron(sp.kron(I, K1), I) \
        + sp.kron(sp.kron(I, I), K1)
    v1 = device.potential(x)
    diagpot = (v1[:, None, None] + v1[None, :, None] + v1[None, None, :]) \
        * np.ones((n, n, n))
    if device.coulomb_on:
        W2 = device.coulomb_kernel(x[:, None] - x[None, :])
        diagpot = diagpot + (W2[:, :, None] + W2[:, None, :] + W2[None, :, :])
    A_II = (A_II + sp.diags(diagpot.ravel() - ch.energy)).tocsr()

    planes = _face_indices(n)
    Xi = basis.states
    rows, cols, vals = [], [], []
    for m in range(nch):
        xm = Xi[:, :, m].ravel()
        faces_b = [("x1_0", -t)]
        faces_c = [("x1_L", -t)]
        if exchange_images:
            faces_b += [("x2_0", +t), ("x3_0", -t)]
            faces_c += [("x2_L", +t), ("x3_L", -t)]
        for key, s in faces_b:
            rows.append(planes[key])
            cols.append(np.full(n * n, m))
            vals.append(s * xm)
        for key, s in faces_c:
            rows.append(planes[key])
            cols.append(np.full(n * n, nch + m))
            vals.append(s * xm)
    A_IB = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n**3, 2 * nch)).tocsc()

    rows, cols, vals = [], [], []
    for m in range(nch):
        xm = Xi[:, :, m].ravel()
        rows.append(np.full(n * n, m))
        cols.append(planes["x1_0"])
        vals.append(t * h * h * xm)
        rows.append(np.full(n * n, nch + m))
        cols.append(planes["x1_L"])
        vals.append(t * h * h * xm)
    A_BI = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * nch, n**3)).tocsr()
    A_BB = np.diag(np.concatenate([-t * xi_fac, -t * xi_fac]))

    rhs_I = np.zeros(n**3)
    xj = Xi[:, :, j].ravel()
    rhs_I[planes["x1_0"]] += t * xj
    if exchange_images:
        rhs_I[planes["x2_0"]] += -t * xj
        rhs_I[planes["x3_0"]] += +t * xj
    rhs_B = np.zeros(2 * nch, dtype=complex)
    rhs_B[j] = t * np.exp(1j * ch.k0 * h)

    return AssembledSystem(A_II=A_II, A_IB=A_IB, A_BI=A_BI, A_BB=A_BB,
                           rhs_I=rhs_I, rhs_B=rhs_B, channels=ch, n=n)


def _solve_direct(system: AssembledSystem):
    """Interior LU (real, symmetric pattern) + 16-column dense Schur."""
    lu = splu(system.A_II.tocsc(), permc_spec="MMD_AT_PLUS_A")
    Y = lu.solve(np.column_stack([system.A_IB.toarray(), system.rhs_I]))
    S = system.A_BB - system.A_BI @ Y[:, :-1]
    g = system.rhs_B - system.A_BI @ Y[:, -1]
    amp = np.linalg.solve(S, g)
    psi = Y[:, -1] - Y[:, :-1] @ amp
    return amp, psi, 1


class MeanFieldPairPreconditioner:
    """Exact resolvent of [carrier 1D + pair mean field] x [pair 2D].

    The carrier coordinate is diagonalized once (tridiagonal, with the
    Hartree potential of the pair ground-state charge added so the
    carrier modes see the dots as occupied); for each carrier mode the
    real shifted two-particle operator is LU-factored.  Applying the
    inverse is one dense change of basis plus n banded 2D solves.
    """

    def __init__(self, device: DeviceSpec, grid: GridSpec, basis, energy: float):
        x = grid.interior(device)
        h = grid.spacing(device)
        n = x.size
        t = KP / h**2
        V1 = device.potential(x)
        if device.coulomb_on:
            W2 = device.coulomb_kernel(x[:, None] - x[None, :])
            rho = (basis.states[:, :, 0]**2).sum(axis=1) * h * h
            u_mf = 2.0 * (W2 @ rho)
        else:
            W2 = np.zeros((n, n))
            u_mf = np.zeros(n)
        self.e1, Q1 = eigh_tridiagonal(2.0 * t + V1 + u_mf, -t * np.ones(n - 1))
        self.Q1 = np.ascontiguousarray(Q1)
        H1 = sp.diags([2.0 * t + V1, -t * np.ones(n - 1), -t * np.ones(n - 1)],
                      [0, 1, -1], format="csr")
        I = sp.identity(n, format="csr")
        H23 = (sp.kron(H1, I) + sp.kron(I, H1) + sp.diags(W2.ravel())).tocsc()
        eye2 = sp.identity(n * n, format="csc")
        self.lus = [splu(H23 + (self.e1[a] - energy) * eye2,
                         permc_spec="MMD_AT_PLUS_A") for a in range(n)]
        self.n = n

    def apply(self, r):
        n = self.n
        G = self.Q1.T @ r.reshape(n, n * n)
        out = np.empty_like(G)
        for a in range(n):
            out[a] = self.lus[a].solve(G[a].real) + 1j * self.lus[a].solve(G[a].imag)
        return (self.Q1 @ out).ravel()


# Krylov-basis memory budget; the restart window grows on small grids
# where restart cycling would otherwise stall convergence.
_KRYLOV_BYTES = 2.5e9


def _solve_iterative(system: AssembledSystem, device, grid, basis,
                     solver: SolverSpec, x0=None):
    nI = system.n_interior
    nB = system.A_BB.shape[0]
    prec = MeanFieldPairPreconditioner(device, grid, basis, system.channels.energy)
    dBB = system.A_BB.diagonal()

    def mprec(r):
        return np.concatenate([prec.apply(r[:nI]), r[nI:] / dBB])

    Aop = LinearOperator((nI + nB, nI + nB), matvec=system.matvec, dtype=complex)
    Mop = LinearOperator((nI + nB, nI + nB), matvec=mprec, dtype=complex)
    rhs = system.full_rhs()
    iters = [0]

    def cb(pr):
        iters[0] += 1

    fit = int(_KRYLOV_BYTES / (16 * (nI + nB)))
    restart = min(nI + nB, max(solver.gmres_restart, min(2000, fit)))
    u, info = gmres(Aop, rhs, rtol=solver.gmres_tol, atol=0.0,
                    restart=restart, maxiter=solver.gmres_max_restarts,
                    M=Mop, callback=cb, callback_type="pr_norm", x0=x0)
    if info > 0:
        res = np.linalg.norm(system.matvec(u) - rhs) / np.linalg.norm(rhs)
        if res > 1e-7:
            raise SolverError(f"GMRES stagnated: residual {res:.2e} "
                              f"after {iters[0]} iterations")
    return u[nI:], u[:nI], iters[0]


def check_antisymmetry(psi: np.ndarray) -> float:
    """Largest pairwise-exchange violation relative to max |psi|."""
    scale = np.abs(psi).max()
    if scale == 0.0:
        return 0.0
    v12 = np.abs(psi + psi.transpose(1, 0, 2)).max()
    v13 = np.abs(psi + psi.transpose(2, 1, 0)).max()
    v23 = np.abs(psi + psi.transpose(0, 2, 1)).max()
    return max(v12, v13, v23) / scale


def channel_probabilities(sol: ScatteringSolution):
    """Flux-weighted reflection/transmission probabilities per channel."""
    v = sol.channels.flux_weights()
    return v * np.abs(sol.b)**2, v * np.abs(sol.c)**2


def solve_scattering(device: DeviceSpec, grid: GridSpec, basis, j: int, T0: float,
                     solver: SolverSpec = SolverSpec(), exchange_images: bool = True,
                     method: str = "auto", x0=None) -> ScatteringSolution:
    """Assemble and solve one scattering problem; verify conservation.

    method: "auto" picks direct factorization up to
    solver.direct_max_points grid points per axis, iterative beyond.
    """
    tic = time.perf_counter()
    system = assemble_system(device, grid, basis, j, T0, solver, exchange_images)
    if method == "auto":
        method = "direct" if grid.points <= solver.direct_max_points else "iterative"
    if method == "direct":
        amp, psi_flat, iters = _solve_direct(system)
    elif method == "iterative":
        amp, psi_flat, iters = _solve_iterative(system, device, grid, basis,
                                                solver, x0=x0)
    else:
        raise ValueError(f"unknown method: {method}")

    u = np.concatenate([psi_flat, amp])
    rhs = system.full_rhs()
    residual = float(np.linalg.norm(system.matvec(u) - rhs) / np.linalg.norm(rhs))

    nch = len(basis.energies)
    ch = system.channels
    sol = ScatteringSolution(
        b=amp[:nch], c=amp[nch:], psi=psi_flat.reshape(system.n, system.n, system.n),
        channels=ch, residual=residual, flux_defect=0.0, antisymmetry=0.0,
        iterations=iters, method=method, seconds=0.0)
    pR, pT = channel_probabilities(sol)
    sol.flux_defect = float(abs(pR.sum() + pT.sum() - 1.0))
    sol.antisymmetry = check_antisymmetry(sol.psi) if exchange_images else float("nan")
    sol.seconds = time.perf_counter() - tic
    if sol.flux_defect > solver.flux_warn * 100:
        raise SolverError(f"flux conservation defect {sol.flux_defect:.2e}")
    return sol
