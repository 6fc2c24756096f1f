"""From channel amplitudes to the two-qubit state of the dots.

The scattered carrier is traced out using the orthogonality of its
final states: reflected vs transmitted branches are always orthogonal,
and two final kinetic energies are distinguishable when they differ by
more than the Bell-pair splitting scale.  Channels whose carrier
energies coincide within DEGENERATE_TOL therefore combine coherently;
distinct groups add as a classical mixture.

The dot pair is then a two-qubit system in the product basis
B = {|00>, |01>, |10>, |11>} (left-dot level, right-dot level).  Every
density matrix produced this way has the X shape: nonzero entries on
the diagonal and antidiagonal only.
"""

from dataclasses import dataclass

import numpy as np

from .bound_states import ChannelBasis
from .qtbm import ScatteringSolution, channel_probabilities

DEGENERATE_TOL = 0.5    # meV; carrier energies closer than this are unresolved
PSD_TOL = 1e-10


class StructureError(ValueError):
    """Density matrix violates a structural precondition."""


@dataclass(frozen=True)
class OutputChannelState:
    """Flux-normalized amplitudes over the four qubit channels.

    Slot order follows the qubit states (ground, both Bell
    combinations, doubly excited); evanescent channels are dropped
    since they carry no current.
    """

    reflected: np.ndarray      # (4,) complex
    transmitted: np.ndarray    # (4,) complex
    kinetic: np.ndarray        # (4,) carrier kinetic energy per slot
    traveling: np.ndarray      # (4,) bool
    input_channel: int

    def norm_defect(self) -> float:
        total = np.sum(np.abs(self.reflected)**2 + np.abs(self.transmitted)**2)
        return abs(total - 1.0)


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    entropy: float
    eigenvalues: np.ndarray        # of rho_r
    spin_flip_eigenvalues: np.ndarray

    def as_dict(self):
        return {"C": self.concurrence, "xi": self.entropy}


def normalize_amplitudes(sol: ScatteringSolution, basis: ChannelBasis) -> OutputChannelState:
    """Rescale amplitudes so traveling-channel fluxes sum to one.

    Folds the lattice group-velocity ratio into the amplitudes, then
    restricts to the four qubit channels.  Raises if a traveling
    channel outside the qubit set carries flux (the dot pair would
    leave the qubit subspace) or if nothing propagates at all.
    """
    pR, pT = channel_probabilities(sol)
    qubit = list(basis.qubit_indices)
    leak = sum(pR[n] + pT[n] for n in range(len(basis.energies)) if n not in qubit)
    if leak > 1e-6:
        raise StructureError(f"traveling flux {leak:.2e} outside the qubit channels")
    total = pR.sum() + pT.sum()
    if total <= 0:
        raise StructureError("no traveling amplitude in any channel")
    v = sol.channels.flux_weights()
    scale = np.sqrt(v / total)
    return OutputChannelState(
        reflected=(sol.b * scale)[qubit],
        transmitted=(sol.c * scale)[qubit],
        kinetic=sol.channels.kinetic[qubit],
        traveling=sol.channels.traveling[qubit],
        input_channel=sol.channels.incident,
    )


def _energy_groups(kinetic, active, tol):
    """Cluster active slots by carrier energy; deterministic order."""
    idx = [i for i in range(len(kinetic)) if active[i]]
    idx.sort(key=lambda i: kinetic[i])
    groups = []
    for i in idx:
        if groups and abs(kinetic[i] - kinetic[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def reduced_density_matrix(state: OutputChannelState, basis: ChannelBasis,
                           degenerate_tol: float = DEGENERATE_TOL) -> np.ndarray:
    """Trace out the carrier: 4x4 dot density matrix in basis B.

    Within each (branch, energy-group) the channel amplitudes combine
    coherently through the qubit unitary; groups add incoherently.
    """
    U = basis.overlap             # columns: qubit eigenstates in basis B
    if np.max(np.abs(U.T @ U - np.eye(4))) > 1e-10:
        raise StructureError("qubit change of basis is not unitary")
    rho = np.zeros((4, 4), dtype=complex)
    for amps in (state.reflected, state.transmitted):
        active = state.traveling & (np.abs(amps) > 0)
        for group in _energy_groups(state.kinetic, active, degenerate_tol):
            w = np.zeros(4, dtype=complex)
            for slot in group:
                w += amps[slot] * U[:, slot]
            rho += np.outer(w, w.conj())
    tr = np.real(np.trace(rho))
    # the restriction upstream tolerates up to 1e-6 flux outside the qubit
    # channels, so the same budget bounds the trace before renormalizing
    if abs(tr - 1.0) > 1e-6:
        raise StructureError(f"trace defect {tr - 1.0:.2e} after carrier trace")
    return rho / tr


def validate_density(rho: np.ndarray, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Check trace/hermiticity/positivity; return clipped eigenvalues."""
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise StructureError("trace differs from one")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise StructureError("not Hermitian")
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -100 * psd_tol:
        raise StructureError(f"negative eigenvalue {lam.min():.2e}")
    return np.clip(lam, 0.0, None)


def is_xstate(rho: np.ndarray, tol: float = 1e-10) -> bool:
    """True when only diagonal and antidiagonal entries are populated."""
    mask = np.zeros((4, 4), dtype=bool)
    mask[np.arange(4), np.arange(4)] = True
    mask[np.arange(4), 3 - np.arange(4)] = True
    return float(np.max(np.abs(rho[~mask]))) <= tol


def decoherence(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats, via eigenvalues."""
    lam = validate_density(rho)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def xstate_entropy(rho: np.ndarray) -> float:
    """Closed-form entropy of an X state from its two 2x2 blocks.

    Outer block (entries 11,44 and corners), inner block (22,33 and
    the middle antidiagonal): each contributes eigenvalues
    eta_pm = s/2 pm sqrt((delta/2)^2 + |offdiag|^2).
    """
    if not is_xstate(rho, tol=1e-8):
        raise StructureError("matrix is not X-structured")
    lams = []
    for (i, j) in ((0, 3), (1, 2)):
        s = rho[i, i].real + rho[j, j].real
        d = rho[i, i].real - rho[j, j].real
        r = np.sqrt(0.25 * d * d + abs(rho[i, j])**2)
        lams += [0.5 * s + r, 0.5 * s - r]
    lam = np.clip(np.array(lams), 0.0, None)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


_SYSY = np.zeros((4, 4))
_SYSY[0, 3], _SYSY[3, 0] = -1.0, -1.0
_SYSY[1, 2], _SYSY[2, 1] = 1.0, 1.0   # sigma_y x sigma_y


def _flip_roots(rho: np.ndarray) -> np.ndarray:
    """sqrt-eigenvalues of rho rho~, descending.

    rho rho~ is similar to A A^dag with A = sqrt(rho) Y sqrt(rho)^*, so
    the roots are singular values of A; this stays accurate where the
    non-Hermitian eigenproblem loses half the digits (rank drops).
    """
    w, V = np.linalg.eigh(rho)
    sq = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    return np.linalg.svd(sq @ _SYSY @ sq.conj(), compute_uv=False)


def concurrence_wootters(rho: np.ndarray) -> float:
    """General two-qubit concurrence from the spin-flipped product."""
    validate_density(rho)
    root = _flip_roots(rho)
    return float(max(0.0, root[0] - root[1] - root[2] - root[3]))


def concurrence_xstate(rho: np.ndarray) -> float:
    """X-state concurrence: antidiagonal couplings vs diagonal anchors."""
    if not is_xstate(rho, tol=1e-8):
        raise StructureError("matrix is not X-structured")
    k1 = abs(rho[1, 2]) - np.sqrt(max(rho[0, 0].real, 0.0) * max(rho[3, 3].real, 0.0))
    k2 = abs(rho[0, 3]) - np.sqrt(max(rho[1, 1].real, 0.0) * max(rho[2, 2].real, 0.0))
    return float(2.0 * max(0.0, k1, k2))


def entanglement_report(rho: np.ndarray) -> EntanglementReport:
    lam = validate_density(rho)
    root = _flip_roots(rho)
    return EntanglementReport(
        concurrence=float(max(0.0, root[0] - root[1] - root[2] - root[3])),
        entropy=decoherence(rho),
        eigenvalues=lam[::-1],
        spin_flip_eigenvalues=root**2,
    )
