"""Bound states of the double dot: single-particle levels, localized dot
orbitals, and the antisymmetric two-particle spectrum with its change of
basis to qubit product states.

All wavefunctions live on the interior of the uniform grid and are
normalized with the grid measure (sum |psi|^2 * h = 1 in 1D, h^2 in 2D).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .device import DeviceSpec, GridSpec
from .units import KP

SQRT2 = np.sqrt(2.0)


class ShortfallError(RuntimeError):
    """Fewer bound states available than requested."""


@dataclass(frozen=True)
class Levels1D:
    """Single-particle eigenpairs of the double well, ascending energy."""

    energies: np.ndarray      # (count,)
    states: np.ndarray        # (n_interior, count)
    parities: np.ndarray      # (count,) mirror parity, +-1
    x: np.ndarray             # interior nodes
    h: float

    @property
    def dot_levels(self) -> np.ndarray:
        """Energy per dot level: average over each tunneling doublet."""
        npair = self.energies.size // 2
        return 0.5 * (self.energies[0:2 * npair:2] + self.energies[1:2 * npair:2])


@dataclass(frozen=True)
class DotOrbitals:
    """Localized left/right orbitals chi_l, translation gauge."""

    left: np.ndarray          # (n_interior, nlevels)
    right: np.ndarray
    dot_levels: np.ndarray    # (nlevels,)
    h: float


@dataclass(frozen=True)
class TwoParticleStates:
    """Lowest antisymmetric two-particle eigenpairs on the 2D grid."""

    energies: np.ndarray      # (count,)
    states: np.ndarray        # (n, n, count), Xi[:, :, l]
    parities: np.ndarray      # (count,) combined mirror parity
    h: float


@dataclass(frozen=True)
class ChannelBasis:
    """Two-particle channel set plus the qubit change of basis.

    `qubit_indices` locate the four product-dominated eigenstates
    (|00>, both Bell combinations, |11>) inside the energy-ordered
    channel list.  `overlap` holds the idealized 4x4 unitary with
    entries in {0, +-1, +-1/sqrt2}; `overlap_raw` the grid quadrature
    it was snapped from.
    """

    device: DeviceSpec
    grid: GridSpec
    levels: Levels1D
    orbitals: DotOrbitals
    energies: np.ndarray      # channel energies eps_n, ascending
    states: np.ndarray        # (n, n, nch)
    parities: np.ndarray
    labels: tuple
    qubit_indices: tuple
    overlap_raw: np.ndarray   # 4x4, rows = (00, 01, 10, 11), cols = eigenstates
    overlap: np.ndarray
    h: float

    @property
    def count(self) -> int:
        return self.energies.size


def hamiltonian_1d(device: DeviceSpec, grid: GridSpec):
    """Interior 1D Hamiltonian as (diagonal, off-diagonal) of a tridiagonal."""
    x = grid.interior(device)
    h = grid.spacing(device)
    t = KP / h**2
    diag = 2.0 * t + device.potential(x)
    off = -t * np.ones(x.size - 1)
    return diag, off


def solve_single_particle(device: DeviceSpec, grid: GridSpec, count: int = 10) -> Levels1D:
    """Lowest `count` eigenpairs of the double well with hard walls.

    Raises ShortfallError if fewer than `count` states are bound
    (energy below the lead continuum edge at 0).
    """
    x = grid.interior(device)
    h = grid.spacing(device)
    diag, off = hamiltonian_1d(device, grid)
    if count > x.size:
        raise ShortfallError(f"grid supports only {x.size} states")
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    n_bound = int(np.sum(w < 0.0))
    if n_bound < count:
        raise ShortfallError(f"only {n_bound} bound states below the continuum, "
                             f"{count} requested")
    v = v / np.sqrt(h)
    # deterministic sign: peak value positive
    for i in range(count):
        if v[np.argmax(np.abs(v[:, i])), i] < 0:
            v[:, i] = -v[:, i]
    par = np.array([np.sum(v[:, i] * v[::-1, i]) * h for i in range(count)])
    return Levels1D(energies=w, states=v, parities=np.round(par), x=x, h=h)


def localized_orbitals(levels: Levels1D, nlevels: int = 2) -> DotOrbitals:
    """Left/right dot orbitals from the symmetric/antisymmetric doublets.

    Gauge: chi_L has a positive peak; chi_R is the translate of chi_L
    by the well separation, realized exactly on the grid as parity
    times mirror: chi_R,l(x) = (-1)^l chi_L,l(L-x).
    """
    n = levels.x.size
    left = np.empty((n, nlevels))
    right = np.empty((n, nlevels))
    for l in range(nlevels):
        ps, pa = levels.states[:, 2 * l], levels.states[:, 2 * l + 1]
        a = (ps + pa) / SQRT2
        b = (ps - pa) / SQRT2
        half = n // 2
        chi = a if np.sum(a[:half]**2) > np.sum(a[half:]**2) else b
        if chi[np.argmax(np.abs(chi))] < 0:
            chi = -chi
        left[:, l] = chi
        right[:, l] = (-1.0)**l * chi[::-1]
    return DotOrbitals(left=left, right=right,
                       dot_levels=levels.dot_levels[:nlevels], h=levels.h)


def _pair_projector(n: int):
    """Sparse map from antisymmetric pair coordinates (i<j) to the full
    n*n grid, columns orthonormal."""
    iu, ju = np.triu_indices(n, k=1)
    npair = iu.size
    rows = np.concatenate([iu * n + ju, ju * n + iu])
    cols = np.concatenate([np.arange(npair), np.arange(npair)])
    vals = np.concatenate([np.full(npair, 1 / SQRT2), np.full(npair, -1 / SQRT2)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, npair))


def solve_two_particle(device: DeviceSpec, grid: GridSpec, count: int = 8) -> TwoParticleStates:
    """Lowest `count` antisymmetric two-particle eigenpairs.

    The Hamiltonian H0(x2) + H0(x3) + w(x2-x3) is restricted to the
    antisymmetric sector by the pair projector before the shift-invert
    eigensolve, halving the problem and excluding symmetric states
    exactly.  The degenerate-pair gauge is fixed by rediagonalizing the
    mirror reflection inside each near-degenerate cluster.
    """
    x = grid.interior(device)
    h = grid.spacing(device)
    n = x.size
    diag, off = hamiltonian_1d(device, grid)
    H1 = sp.diags([diag, off, off], [0, 1, -1], format="csr")
    I = sp.identity(n, format="csr")
    W = device.coulomb_kernel(x[:, None] - x[None, :])
    H2 = sp.kron(H1, I) + sp.kron(I, H1) + sp.diags(W.ravel())
    P = _pair_projector(n)
    Ha = (P.T @ H2 @ P).tocsc()

    sigma = 2.0 * float(np.min(diag - 2.0 * KP / h**2)) - 30.0
    v0 = np.ones(Ha.shape[0]) / np.sqrt(Ha.shape[0])   # fixed start: determinism
    w, v = eigsh(Ha, k=count, sigma=sigma, which="LM", v0=v0)
    order = np.argsort(w)
    w, v = w[order], v[:, order]

    # mirror reflection in pair coordinates, as a dense action per vector
    def reflect(vec):
        Xi = (P @ vec).reshape(n, n)
        return P.T @ Xi[::-1, ::-1].ravel()

    # resolve gauge inside near-degenerate clusters by parity
    groups = []
    start = 0
    for i in range(1, count + 1):
        if i == count or w[i] - w[i - 1] > 0.5:
            groups.append(slice(start, i))
            start = i
    parities = np.empty(count)
    for g in groups:
        block = v[:, g]
        Mblk = np.column_stack([reflect(block[:, i]) for i in range(block.shape[1])])
        S = block.T @ Mblk
        if block.shape[1] == 1:
            parities[g] = np.round(S[0, 0])
        else:
            pw, pv = np.linalg.eigh(0.5 * (S + S.T))
            # even member first inside each cluster
            order = np.argsort(-pw)
            v[:, g] = block @ pv[:, order]
            parities[g] = np.round(pw[order])
            wg = np.array([v[:, g][:, i] @ (Ha @ v[:, g][:, i])
                           for i in range(block.shape[1])])
            w[g] = wg

    Xi = np.empty((n, n, count))
    for l in range(count):
        vec = v[:, l]
        if vec[np.argmax(np.abs(vec))] < 0:
            vec = -vec
        Xi[:, :, l] = (P @ vec).reshape(n, n) / h
    return TwoParticleStates(energies=w, states=Xi, parities=parities, h=h)


def slater(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Antisymmetrized product of two orbitals on the 2D grid."""
    M = np.outer(a, b)
    return (M - M.T) / SQRT2


def _snap_unitary(raw: np.ndarray) -> np.ndarray:
    """Round overlap magnitudes to the nearest of {0, 1/sqrt2, 1},
    keeping computed signs; columns stay orthonormal by construction."""
    cls = np.round(2.0 * raw**2)
    if not np.all(np.isin(cls, (0.0, 1.0, 2.0))):
        raise RuntimeError("overlap table does not match the product pattern")
    return np.sign(raw) * np.sqrt(cls / 2.0)


def build_channel_basis(device: DeviceSpec, grid: GridSpec, count: int = 8) -> ChannelBasis:
    """Assemble the channel set: spectrum, tags, and the qubit unitary.

    Channels are the energy-ordered two-particle bound states.  The four
    qubit states are identified by their dominant overlap with the
    antisymmetrized products of dot orbitals; the remaining channels are
    tagged double-occupancy or excited.
    """
    levels = solve_single_particle(device, grid, count=10)
    orb = localized_orbitals(levels, nlevels=2)
    two = solve_two_particle(device, grid, count=count)
    n = levels.x.size
    h = levels.h

    dets = {
        "00": slater(orb.left[:, 0], orb.right[:, 0]),
        "01": slater(orb.left[:, 0], orb.right[:, 1]),
        "10": slater(orb.left[:, 1], orb.right[:, 0]),
        "11": slater(orb.left[:, 1], orb.right[:, 1]),
        "2L": slater(orb.left[:, 0], orb.left[:, 1]),
        "2R": slater(orb.right[:, 0], orb.right[:, 1]),
    }
    keys = list(dets)
    ovl = np.empty((len(keys), count))
    for r, k in enumerate(keys):
        for l in range(count):
            ovl[r, l] = np.sum(dets[k] * two.states[:, :, l]) * h * h

    labels = []
    for l in range(count):
        r = int(np.argmax(np.abs(ovl[:, l])))
        peak = abs(ovl[r, l])
        if peak < 0.5:
            labels.append("ex")
        elif keys[r] in ("2L", "2R"):
            labels.append("dbl")
        else:
            # Bell combinations spread over the 01/10 rows
            labels.append("bell" if keys[r] in ("01", "10") else "q" + keys[r])

    qubit_order = []
    for want in ("q00", "bell", "bell", "q11"):
        for l in range(count):
            if labels[l] == want and l not in qubit_order:
                qubit_order.append(l)
                break
    if len(qubit_order) != 4:
        raise RuntimeError(f"qubit states not identified among channels: {labels}")

    raw = np.empty((4, 4))
    for col, l in enumerate(qubit_order):
        for r, k in enumerate(("00", "01", "10", "11")):
            raw[r, col] = np.sum(dets[k] * two.states[:, :, l]) * h * h
    # per-eigenvector global phase: first significant entry positive
    for col in range(4):
        lead = np.argmax(np.abs(raw[:, col]) > 0.25)
        if raw[lead, col] < 0:
            raw[:, col] = -raw[:, col]
            two.states[:, :, qubit_order[col]] *= -1.0
    snapped = _snap_unitary(raw)

    return ChannelBasis(device=device, grid=grid, levels=levels, orbitals=orb,
                        energies=two.energies, states=two.states,
                        parities=two.parities, labels=tuple(labels),
                        qubit_indices=tuple(qubit_order),
                        overlap_raw=raw, overlap=snapped, h=h)


def free_channel_basis(device: DeviceSpec, grid: GridSpec, count: int = 4) -> ChannelBasis:
    """Channel set without any dot structure (flat or near-flat device).

    The transverse functions are whatever antisymmetric pair states the
    potential supports (box modes when V = 0), which is all the open
    boundary needs; the qubit bookkeeping is left empty.  Used by the
    decoupled-carrier checks where the full basis cannot be labeled.
    """
    two = solve_two_particle(device, grid, count=count)
    return ChannelBasis(device=device, grid=grid, levels=None, orbitals=None,
                        energies=two.energies, states=two.states,
                        parities=two.parities, labels=("box",) * count,
                        qubit_indices=(), overlap_raw=np.eye(4),
                        overlap=np.eye(4), h=two.h)


def overlap_table(basis: ChannelBasis) -> np.ndarray:
    """Raw 4x4 quadrature overlaps <E_n^L E_m^R | eps_l>."""
    return basis.overlap_raw.copy()
