"""Transmon charge-basis diagonalization and displaced-Fock resonator operators.

Unit conventions used across the package: every frequency-like quantity is a
plain frequency nu = omega/(2 pi) in GHz, times are in ns, and dynamical
phases are 2*pi*nu*t. Energies divided by h are therefore stored directly as
GHz numbers.

The resonator phase operators cos(phi_r) and sin(phi_r) are assembled from
closed-form displaced-Fock matrix elements instead of exponentiating a
truncated phi_r matrix. The retained n_fock x n_fock block then carries the
exact matrix elements of the infinite-dimensional operators, which is what
makes large-photon branch analysis trustworthy away from the truncation edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln


class CutoffError(RuntimeError):
    """Charge-basis cutoff too small for the requested number of levels."""


class FockOverflowError(RuntimeError):
    """Displaced-Fock element evaluation would leave float64 range."""


@dataclass(frozen=True)
class TransmonSpec:
    """Flux-tunable transmon parameters.

    Parameters
    ----------
    e_c : float
        Charging energy in GHz.
    e_j : float
        Total Josephson energy of the junction pair in GHz.
    n_g : float
        Offset charge in Cooper pairs.
    d : float
        Junction asymmetry (e_j2 - e_j1) / (e_j1 + e_j2); enters only the
        joint transmon-resonator coupling, not the bare transmon.
    n_charge_cutoff : int
        Charge states kept are n in [-n_charge_cutoff, +n_charge_cutoff].
    k_levels : int
        Number of transmon eigenstates retained.
    """

    e_c: float
    e_j: float
    n_g: float = 0.0
    d: float = 0.0
    n_charge_cutoff: int = 30
    k_levels: int = 16

    def __post_init__(self) -> None:
        if not (self.e_c > 0):
            raise ValueError(f"TransmonSpec.e_c must be > 0, got {self.e_c}")
        if not (self.e_j > 0):
            raise ValueError(f"TransmonSpec.e_j must be > 0, got {self.e_j}")
        if not (0 <= abs(self.d) < 1):
            raise ValueError(f"TransmonSpec.d must satisfy |d| < 1, got {self.d}")
        if self.n_charge_cutoff < 2:
            raise ValueError("TransmonSpec.n_charge_cutoff must be >= 2")
        if not (1 <= self.k_levels <= 2 * self.n_charge_cutoff + 1):
            raise ValueError(
                "TransmonSpec.k_levels must be within the charge-basis dimension "
                f"2*n_charge_cutoff+1 = {2 * self.n_charge_cutoff + 1}"
            )

    @classmethod
    def from_ratio(cls, e_c: float, e_j_over_e_c: float, **kwargs) -> "TransmonSpec":
        return cls(e_c=e_c, e_j=e_c * e_j_over_e_c, **kwargs)


@dataclass(frozen=True)
class ResonatorSpec:
    """Readout-resonator parameters.

    omega_r and kappa are in GHz, phi_rzpf is the zero-point phase spread of
    the resonator mode across the transmon junctions, n_fock the Fock cutoff.
    """

    omega_r: float
    phi_rzpf: float
    n_fock: int
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if not (self.omega_r > 0):
            raise ValueError(f"ResonatorSpec.omega_r must be > 0, got {self.omega_r}")
        if self.phi_rzpf < 0:
            raise ValueError("ResonatorSpec.phi_rzpf must be >= 0")
        if self.kappa < 0:
            raise ValueError("ResonatorSpec.kappa must be >= 0")
        if self.n_fock < 2:
            raise ValueError("ResonatorSpec.n_fock must be >= 2")


@dataclass(frozen=True)
class TransmonBasis:
    """Retained transmon eigensystem with operators in the eigenbasis.

    energies are ground-referenced (energies[0] == 0). cos_phi and charge are
    real; sin_phi carries purely imaginary elements because the charge-basis
    eigenvectors are chosen real (largest-magnitude component positive).
    """

    spec: TransmonSpec
    energies: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray
    charge: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ResonatorOps:
    """Resonator operators on the retained Fock block (all real float64)."""

    spec: ResonatorSpec
    a: np.ndarray
    number: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray
    sin_sq_half: np.ndarray


def laguerre_column(order: int, x: float, count: int) -> np.ndarray:
    """Generalized Laguerre values L_m^(order)(x) for m = 0 .. count-1.

    Upward three-term recurrence in the degree m, which is stable for the
    dominant Laguerre solution at x >= 0.
    """
    if count < 1:
        return np.empty(0)
    out = np.empty(count)
    out[0] = 1.0
    if count == 1:
        return out
    out[1] = 1.0 + order - x
    for m in range(1, count - 1):
        out[m + 1] = ((2 * m + order + 1 - x) * out[m] - (m + order) * out[m - 1]) / (
            m + 1
        )
    return out


# Guard bounds for displacement_matrix: |L_m^k(x)| <= binom(m+k, m) * e^(x/2),
# so n_fock <= 800 and |alpha|^2 <= 200 keep every intermediate below ~1e300.
_MAX_FOCK = 800
_MAX_ALPHA_SQ = 200.0


def displacement_matrix(alpha: complex, n_fock: int) -> np.ndarray:
    """Matrix elements <n|D(alpha)|m> of the displacement operator.

    Uses the closed form
        <n|D(alpha)|m> = sqrt(m!/n!) alpha^(n-m) e^(-|alpha|^2/2)
                         L_m^(n-m)(|alpha|^2)      for n >= m,
    with the n < m block from D(alpha)^dag = D(-alpha). Factorial ratios are
    evaluated in log space and combined with |alpha|^k in the exponent, so
    the elements stay finite for any n_fock within the documented guard.
    """
    if n_fock > _MAX_FOCK:
        raise FockOverflowError(
            f"n_fock = {n_fock} exceeds the overflow-safe bound {_MAX_FOCK}"
        )
    absq = abs(alpha) ** 2
    if absq > _MAX_ALPHA_SQ:
        raise FockOverflowError(
            f"|alpha|^2 = {absq:.3g} exceeds the overflow-safe bound {_MAX_ALPHA_SQ}"
        )
    out = np.zeros((n_fock, n_fock), dtype=np.complex128)
    if abs(alpha) < 1e-150:
        # indistinguishable from the identity at float64 resolution, and small
        # enough that alpha/|alpha| would overflow for subnormal magnitudes
        np.fill_diagonal(out, 1.0)
        return out
    phase = alpha / abs(alpha)
    log_abs = np.log(abs(alpha))
    for k in range(n_fock):
        m = np.arange(n_fock - k)
        lag = laguerre_column(k, absq, n_fock - k)
        log_pref = 0.5 * (gammaln(m + 1) - gammaln(m + k + 1)) + k * log_abs - absq / 2
        vals = np.sign(lag) * np.exp(log_pref + np.log(np.abs(lag), where=lag != 0,
                                                       out=np.full(m.shape, -np.inf)))
        vals = vals * phase**k
        rows = m + k
        out[rows, m] = vals
        if k > 0:
            # <m|D(alpha)|m+k> = conj(<m+k|D(-alpha)|m>) = (-1)^k conj(vals)
            out[m, rows] = (-1) ** k * np.conj(vals)
    return out


def resonator_operators(spec: ResonatorSpec) -> ResonatorOps:
    """Ladder, number, and junction-phase operators of the resonator mode.

    The phase operators are functions of phi_r = phi_rzpf (a + adag); their
    matrix elements come from the displacement pair D(+i phi_rzpf),
    D(-i phi_rzpf) and are exactly real symmetric.
    """
    n = spec.n_fock
    a = np.diag(np.sqrt(np.arange(1.0, n)), k=1)
    number = np.diag(np.arange(float(n)))
    d = displacement_matrix(1j * spec.phi_rzpf, n)
    cos_c = (d + d.conj().T) / 2
    sin_c = (d - d.conj().T) / 2j
    assert np.max(np.abs(cos_c.imag)) < 1e-13
    assert np.max(np.abs(sin_c.imag)) < 1e-13
    cos_phi = np.ascontiguousarray(cos_c.real)
    sin_phi = np.ascontiguousarray(sin_c.real)
    sin_sq_half = (np.eye(n) - cos_phi) / 2
    return ResonatorOps(
        spec=spec, a=a, number=number, cos_phi=cos_phi, sin_phi=sin_phi,
        sin_sq_half=sin_sq_half,
    )


def _charge_hamiltonian(spec: TransmonSpec, cutoff: int) -> np.ndarray:
    n = np.arange(-cutoff, cutoff + 1)
    h = np.diag(4 * spec.e_c * (n - spec.n_g) ** 2)
    off = np.full(2 * cutoff, -spec.e_j / 2)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def _eigh_charge(spec: TransmonSpec, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigensystem in the charge basis, exploiting reflection parity at n_g = 0.

    At n_g = 0 the Hamiltonian commutes with the charge reflection n -> -n.
    High rotor-like doublets are split only exponentially finely, and a dense
    eigh would mix their parities at the backward-error level; diagonalizing
    the even and odd reflection sectors separately keeps every eigenvector
    exactly parity-pure. Sectors are merged by a stable sort on energy.
    """
    if spec.n_g != 0.0:
        return np.linalg.eigh(_charge_hamiltonian(spec, cutoff))
    e_c, e_j = spec.e_c, spec.e_j
    m = np.arange(cutoff + 1)
    # even sector basis: |0>, (|m> + |-m>)/sqrt(2); odd: (|m> - |-m>)/sqrt(2)
    h_even = np.diag(4 * e_c * m.astype(float) ** 2)
    off = np.full(cutoff, -e_j / 2)
    h_even += np.diag(off, 1) + np.diag(off, -1)
    h_even[0, 1] = h_even[1, 0] = -e_j / np.sqrt(2)
    h_odd = np.diag(4 * e_c * m[1:].astype(float) ** 2)
    off = np.full(cutoff - 1, -e_j / 2)
    h_odd += np.diag(off, 1) + np.diag(off, -1)
    ev_e, vec_e = np.linalg.eigh(h_even)
    ev_o, vec_o = np.linalg.eigh(h_odd)

    dim = 2 * cutoff + 1
    full_e = np.zeros((dim, cutoff + 1))
    full_e[cutoff, :] = vec_e[0, :]
    full_e[cutoff + 1 :, :] = vec_e[1:, :] / np.sqrt(2)
    full_e[cutoff - 1 :: -1, :] = vec_e[1:, :] / np.sqrt(2)
    full_o = np.zeros((dim, cutoff))
    full_o[cutoff + 1 :, :] = vec_o / np.sqrt(2)
    full_o[cutoff - 1 :: -1, :] = -vec_o / np.sqrt(2)

    evals = np.concatenate([ev_e, ev_o])
    vecs = np.concatenate([full_e, full_o], axis=1)
    order = np.argsort(evals, kind="stable")
    return evals[order], vecs[:, order]

_GUARD_EXTRA = 5
_GUARD_TOL = 1e-8


def transmon_eigensystem(spec: TransmonSpec) -> TransmonBasis:
    """Diagonalize the transmon in the charge basis and rotate operators.

    Raises CutoffError when enlarging the charge cutoff by 5 moves any
    retained eigenvalue by more than 1e-8 GHz. Eigenvector phases are fixed
    by making the largest-magnitude charge component real positive.
    """
    k = spec.k_levels
    evals, evecs = _eigh_charge(spec, spec.n_charge_cutoff)
    check, _ = _eigh_charge(spec, spec.n_charge_cutoff + _GUARD_EXTRA)
    drift = np.max(np.abs(evals[:k] - check[:k]))
    if drift > _GUARD_TOL:
        raise CutoffError(
            f"retained eigenvalues move by {drift:.2e} GHz when the charge cutoff "
            f"grows from {spec.n_charge_cutoff} to {spec.n_charge_cutoff + _GUARD_EXTRA}; "
            "increase n_charge_cutoff"
        )
    vecs = evecs[:, :k].copy()
    for j in range(k):
        lead = vecs[np.argmax(np.abs(vecs[:, j])), j]
        if lead < 0:
            vecs[:, j] *= -1

    dim = 2 * spec.n_charge_cutoff + 1
    shift = np.zeros((dim, dim))
    idx = np.arange(dim - 1)
    shift[idx + 1, idx] = 1.0  # e^{+i phi} raises the charge index
    cos_charge = (shift + shift.T) / 2
    n_op = np.diag(np.arange(-spec.n_charge_cutoff, spec.n_charge_cutoff + 1.0))

    cos_phi = vecs.T @ cos_charge @ vecs
    # sin phi = (shift - shift^T)/(2i): purely imaginary elements between the
    # real eigenvectors, kept complex so Hermiticity is explicit
    sin_phi = (vecs.T @ shift @ vecs - vecs.T @ shift.T @ vecs) / 2j
    charge = vecs.T @ n_op @ vecs

    energies = evals[:k] - evals[0]
    return TransmonBasis(
        spec=spec, energies=energies, cos_phi=cos_phi, sin_phi=sin_phi,
        charge=charge, eigenvectors=vecs,
    )


def parity_operators(k_levels: int, n_fock: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal parity operators (-1)^j on the transmon and (-1)^n on the mode.

    The transmon form is valid at n_g = 0, where eigenstate parity alternates
    with the level index.
    """
    p_t = np.diag((-1.0) ** np.arange(k_levels))
    p_r = np.diag((-1.0) ** np.arange(n_fock))
    return p_t, p_r
