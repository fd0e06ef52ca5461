"""Circuit-element reduction and joint transmon-resonator Hamiltonian.

The lumped circuit is a symmetric pair of shunt capacitors C around a
junction pair (e_j1, e_j2), with the readout mode formed by C_r and L_r
across the same junctions. Reduction gives the standard charging/Josephson
energies plus the mode frequency and the zero-point phase spread phi_rzpf of
the mode across the junctions:

    E_C  = (e^2/h) / (4 C)
    E_Cr = (e^2/h) / (4 C + 8 C_r)
    E_Lr = (Phi_0^2/h) / (pi^2 L_r)
    omega_r = sqrt(8 E_Cr E_Lr),  phi_rzpf = (2 E_Cr / E_Lr)^(1/4)

Everything is stored as nu = omega/2pi in GHz (capacitances in fF,
inductances in nH).

The joint Hamiltonian, in the transmon eigenbasis tensor Fock basis
(transmon-major ordering, index = j * n_fock + n), is

    H = diag(omega_j) ⊗ I + I ⊗ omega_r a†a
        + 2 E_J cos(phi_t) ⊗ sin^2(phi_r/2)
        - d E_J sin(phi_t) ⊗ sin(phi_r)

with no drive term; drives belong to the readout layer. With symmetric
junctions (d = 0) the matrix is real symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants

from .operators import (
    ResonatorOps,
    ResonatorSpec,
    TransmonBasis,
    TransmonSpec,
    resonator_operators,
    transmon_eigensystem,
)

# e^2/h in GHz*fF and Phi_0^2/h in GHz*nH (numerically equal to Hz*H)
E2_OVER_H = constants.e**2 / constants.h * 1e6
PHI0SQ_OVER_H = (constants.h / (2 * constants.e)) ** 2 / constants.h


@dataclass(frozen=True)
class CircuitElements:
    """Lumped elements: capacitances in fF, inductance in nH, junction
    energies in GHz."""

    c: float
    c_r: float
    l_r: float
    e_j1: float
    e_j2: float

    def __post_init__(self) -> None:
        for name in ("c", "c_r", "l_r", "e_j1", "e_j2"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"CircuitElements.{name} must be > 0")


def oscillator_energies(el: CircuitElements) -> tuple[float, float]:
    """Readout-mode charging and inductive energies (E_Cr, E_Lr) in GHz."""
    e_cr = E2_OVER_H / (4 * el.c + 8 * el.c_r)
    e_lr = PHI0SQ_OVER_H / (np.pi**2 * el.l_r)
    return e_cr, e_lr


def reduce_circuit(
    el: CircuitElements,
    *,
    n_g: float = 0.0,
    n_charge_cutoff: int = 30,
    k_levels: int = 16,
    kappa: float = 0.0,
    n_fock: int = 100,
) -> tuple[TransmonSpec, ResonatorSpec]:
    """Reduce circuit elements to transmon and resonator parameter sets.

    Truncation sizes, offset charge, and the mode linewidth are not circuit
    properties and are passed through from the caller.
    """
    e_c = E2_OVER_H / (4 * el.c)
    e_j = el.e_j1 + el.e_j2
    d = (el.e_j2 - el.e_j1) / e_j
    e_cr, e_lr = oscillator_energies(el)
    omega_r = float(np.sqrt(8 * e_cr * e_lr))
    phi_rzpf = float((2 * e_cr / e_lr) ** 0.25)
    t = TransmonSpec(e_c=e_c, e_j=e_j, n_g=n_g, d=d,
                     n_charge_cutoff=n_charge_cutoff, k_levels=k_levels)
    r = ResonatorSpec(omega_r=omega_r, phi_rzpf=phi_rzpf, n_fock=n_fock,
                      kappa=kappa)
    return t, r


@dataclass(frozen=True)
class JointHamiltonian:
    """Assembled joint Hamiltonian with the bases it was built from."""

    matrix: np.ndarray
    transmon: TransmonBasis
    resonator: ResonatorOps

    @property
    def k_levels(self) -> int:
        return self.transmon.spec.k_levels

    @property
    def n_fock(self) -> int:
        return self.resonator.spec.n_fock


def assemble_hamiltonian(tb: TransmonBasis, ro: ResonatorOps) -> JointHamiltonian:
    """Build the joint matrix in the transmon-major product basis.

    Real symmetric for d = 0 (the asymmetry term is the only complex-valued
    contribution in the chosen gauge).
    """
    k = tb.spec.k_levels
    n = ro.spec.n_fock
    e_j = tb.spec.e_j
    h = np.kron(np.diag(tb.energies), np.eye(n))
    h += np.kron(np.eye(k), ro.spec.omega_r * ro.number)
    h += 2 * e_j * np.kron(tb.cos_phi.real, ro.sin_sq_half)
    if tb.spec.d != 0.0:
        h = h.astype(np.complex128)
        h -= tb.spec.d * e_j * np.kron(tb.sin_phi, ro.sin_phi)
    return JointHamiltonian(matrix=h, transmon=tb, resonator=ro)


def build_joint(t: TransmonSpec, r: ResonatorSpec) -> JointHamiltonian:
    """Convenience: diagonalize the transmon, build mode operators, assemble."""
    return assemble_hamiltonian(transmon_eigensystem(t), resonator_operators(r))


@dataclass(frozen=True)
class DerivedQubitParams:
    """Bulk derived parameters of a transmon-resonator pairing.

    omega_p is the plasma frequency sqrt(8 E_C E_J), omega_q the exact 0->1
    transition, z = sqrt(8 E_C / E_J) the effective Planck constant of the
    classical limit, delta = omega_q - omega_r, and chi_z_pert the
    leading-order longitudinal pull -omega_p phi_rzpf^2 / 4 (GHz).
    """

    omega_p: float
    omega_q: float
    z: float
    delta: float
    chi_z_pert: float

    def g_z_of(self, alpha: float | complex) -> float | complex:
        """Longitudinal drive rate at displacement alpha (leading order)."""
        return self.chi_z_pert * alpha


def derived_params(tb: TransmonBasis, rs: ResonatorSpec) -> DerivedQubitParams:
    spec = tb.spec
    omega_p = float(np.sqrt(8 * spec.e_c * spec.e_j))
    omega_q = float(tb.energies[1] - tb.energies[0])
    return DerivedQubitParams(
        omega_p=omega_p,
        omega_q=omega_q,
        z=float(np.sqrt(8 * spec.e_c / spec.e_j)),
        delta=omega_q - rs.omega_r,
        chi_z_pert=-omega_p * rs.phi_rzpf**2 / 4,
    )


@dataclass(frozen=True)
class ReducedModel:
    """Two-level x mode longitudinal readout model.

    H = omega_r a†a + chi_z sigma_z a†a (+ qubit splitting, constant per
    sector). chi_z < 0 by package convention; the qubit-state-conditioned
    pointer frequency is omega_r + s*chi_z for sigma_z = s.
    """

    chi_z: float
    omega_r: float
    omega_q: float
    kappa: float

    def __post_init__(self) -> None:
        if not (self.chi_z < 0):
            raise ValueError(
                f"ReducedModel.chi_z must be negative (got {self.chi_z}); "
                "flip the sign convention upstream rather than here"
            )
        if self.kappa < 0:
            raise ValueError("ReducedModel.kappa must be >= 0")

    def g_z(self, alpha: float | complex) -> float | complex:
        """Longitudinal rate chi_z * alpha at mode displacement alpha."""
        return self.chi_z * alpha

    def sector_pull(self, sign: int) -> float:
        """Pointer-mode frequency in the sigma_z = sign sector (GHz)."""
        if sign not in (-1, +1):
            raise ValueError("sign must be -1 or +1")
        return self.omega_r + sign * self.chi_z


def build_reduced_model(
    chi_z: float, omega_r: float, omega_q: float, kappa: float
) -> ReducedModel:
    return ReducedModel(chi_z=chi_z, omega_r=omega_r, omega_q=omega_q,
                        kappa=kappa)
