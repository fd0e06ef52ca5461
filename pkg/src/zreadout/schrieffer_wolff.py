"""Exact dispersive structure by diagonal/off-diagonal splitting.

The joint Hamiltonian separates exactly into a diagonal model H_0 plus a
residual coupling V in the product basis:

    D_j(m) = m omega_r + omega_j + Lambda_j
             - E_J e^(-phi^2/2) L_m(phi^2) <j|cos phi_t|j>
    Lambda_j = E_J <j|cos phi_t|j>
    eta_{a,b,c,d} = E_J <a|cos phi_t|b> [delta_{cd} - <c|cos phi_r|d>],
                    with the (a,c) = (b,d) diagonal kept in H_0

where phi = phi_rzpf and L_m is a Laguerre polynomial. The photon-number
derivative of D gives the exact state-dependent dispersive pulls
chi_{z,j}(m); their computational-state combination chi_z(0) contains no
omega_r at all, which is the structural signature of longitudinal (rather
than detuning-mediated) coupling. The residual eta vanishes like phi^2, so
second-order corrections scale like phi^4 and the remaining error like
phi^6.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    ResonatorOps,
    ResonatorSpec,
    TransmonBasis,
    laguerre_column,
)


class NearResonanceError(RuntimeError):
    """A second-order denominator sits on a resonance with real coupling.

    offenders holds (j, m, k, l, denominator_GHz) tuples: the corrected state
    (j, m) is near-degenerate with (k, l) while coupled beyond the floor.
    Such a point is precisely an ionization resonance, where the perturbative
    split is meaningless.
    """

    def __init__(self, offenders: list[tuple[int, int, int, int, float]]):
        self.offenders = offenders
        head = ", ".join(
            f"(j={j},m={m})~(k={k},l={l}) den={den:.2e} GHz"
            for j, m, k, l, den in offenders[:4]
        )
        more = "" if len(offenders) <= 4 else f" (+{len(offenders) - 4} more)"
        super().__init__(f"near-resonant denominators: {head}{more}")


@dataclass(frozen=True)
class DiagonalModel:
    """Closed-form diagonal of the joint Hamiltonian and derived pulls.

    chi[j, m] = D_j(m) - D_j(m-1) - omega_r (NaN at m = 0); chi_z0 is the
    m -> 0 computational-state pull (chi_{z,1}(1) - chi_{z,0}(1)) / 2.
    """

    omega_r: float
    phi_rzpf: float
    e_j: float
    k_levels: int
    n_fock: int
    diag_energy: np.ndarray
    lamb: np.ndarray
    chi: np.ndarray
    chi_z0: float
    cos_diag: np.ndarray


def sw_diagonal(tb: TransmonBasis, rs: ResonatorSpec) -> DiagonalModel:
    """Exact diagonal model; equals the assembled diagonal to round-off."""
    x = rs.phi_rzpf**2
    n = rs.n_fock
    k = tb.spec.k_levels
    e_j = tb.spec.e_j
    lag = laguerre_column(0, x, n)
    cos_diag = np.real(np.diag(tb.cos_phi)).copy()
    lamb = e_j * cos_diag
    m = np.arange(n, dtype=float)
    diag = (
        m[None, :] * rs.omega_r
        + tb.energies[:, None]
        + lamb[:, None] * (1 - np.exp(-x / 2) * lag[None, :])
    )
    chi = np.full((k, n), np.nan)
    chi[:, 1:] = diag[:, 1:] - diag[:, :-1] - rs.omega_r
    chi_z0 = float((chi[1, 1] - chi[0, 1]) / 2)
    return DiagonalModel(
        omega_r=rs.omega_r,
        phi_rzpf=rs.phi_rzpf,
        e_j=e_j,
        k_levels=k,
        n_fock=n,
        diag_energy=diag,
        lamb=lamb,
        chi=chi,
        chi_z0=chi_z0,
        cos_diag=cos_diag,
    )


@dataclass(frozen=True)
class CouplingElements:
    """Residual coupling eta in factorized sparse form.

    eta_{a,b,c,d} = e_j * cos_t[a, b] * m_res[c, d] wherever (a,c) != (b,d),
    zero on the excluded diagonal. The factor matrices carry the exact parity
    zeros (odd c-d always; odd a+b at n_g = 0), so storing them is the
    compact representation of the nonzero 4-index table.
    """

    e_j: float
    cos_t: np.ndarray
    m_res: np.ndarray

    def value(self, a: int, b: int, c: int, d: int) -> float:
        if a == b and c == d:
            return 0.0
        return self.e_j * self.cos_t[a, b] * self.m_res[c, d]


def sw_eta(tb: TransmonBasis, ro: ResonatorOps) -> CouplingElements:
    """Residual coupling factors; eta -> 0 elementwise as phi_rzpf -> 0.

    Parity zeros are enforced exactly: cos phi_r connects only even
    mode-index differences, and at n_g = 0 cos phi_t connects only
    equal-parity transmon levels. The factor matrices carry round-off
    (~1e-17) at the forbidden entries from the basis-change gemms, which
    would otherwise leak into the sparse coupling table.
    """
    n = ro.spec.n_fock
    m_res = np.eye(n) - ro.cos_phi
    idx = np.arange(n)
    m_res[(idx[:, None] - idx[None, :]) % 2 == 1] = 0.0
    cos_t = np.real(tb.cos_phi).copy()
    if tb.spec.n_g == 0:
        jdx = np.arange(tb.spec.k_levels)
        cos_t[(jdx[:, None] + jdx[None, :]) % 2 == 1] = 0.0
    return CouplingElements(e_j=tb.spec.e_j, cos_t=cos_t, m_res=m_res)


@dataclass(frozen=True)
class SwCorrectedSpectrum:
    """Diagonal and second-order corrected energies on a (j, m) window."""

    j_max: int
    m_max: int
    energy0: np.ndarray
    correction: np.ndarray
    energy2: np.ndarray


def sw_second_order(
    dm: DiagonalModel,
    ce: CouplingElements,
    j_max: int = 2,
    m_max: int = 10,
    guard_denom: float = 1e-3,
    guard_coupling: float = 1e-5,
) -> SwCorrectedSpectrum:
    """Second-order corrected energies for transmon levels j < j_max,
    photon numbers m <= m_max.

    E2(j, m) = D_j(m) + sum_{(k,l) != (j,m)} eta_{j,k,m,l}^2 / (D_j(m) - D_k(l))

    with exact diagonal-energy denominators. Raises NearResonanceError when
    any |denominator| < guard_denom (GHz) carries a coupling |eta| >
    guard_coupling (GHz): benign far-branch crossings have couplings
    suppressed by many orders and pass under the floor, while genuine
    ionization resonances are flagged with their states and photon numbers.
    """
    if not (0 < j_max <= dm.k_levels):
        raise ValueError(f"j_max must be in 1..{dm.k_levels}")
    if not (0 <= m_max < dm.n_fock):
        raise ValueError(f"m_max must be in 0..{dm.n_fock - 1}")
    d = dm.diag_energy
    eta_t = dm.e_j * ce.cos_t[:j_max, :]  # (j_max, K)
    eta_r = ce.m_res[: m_max + 1, :]  # (m_max+1, N)

    num = (eta_t[:, None, :, None] ** 2) * (eta_r[None, :, None, :] ** 2)
    cell = d[:j_max, : m_max + 1]
    den = cell[:, :, None, None] - d[None, None, :, :]
    for j in range(j_max):
        for m in range(m_max + 1):
            num[j, m, j, m] = 0.0

    mask = num != 0.0
    window = mask & (np.abs(den) < guard_denom)
    near = window & (num > guard_coupling**2)
    if np.any(near):
        offenders = [
            (int(j), int(m), int(k), int(l), float(den[j, m, k, l]))
            for j, m, k, l in zip(*np.nonzero(near))
        ]
        raise NearResonanceError(offenders)
    # sub-floor couplings inside the window are unresolved crossings: drop
    # them rather than divide by a vanishing denominator
    mask &= ~window

    ratio = np.zeros_like(num)
    np.divide(num, den, out=ratio, where=mask)
    correction = ratio.sum(axis=(2, 3))
    energy0 = cell.copy()
    return SwCorrectedSpectrum(
        j_max=j_max,
        m_max=m_max,
        energy0=energy0,
        correction=correction,
        energy2=energy0 + correction,
    )
