"""Circuit reduction and joint-Hamiltonian assembly tests.

The element set below was inverted analytically from the target mode
parameters (omega_r = 8.8 GHz, phi_rzpf = 0.09, E_C = 0.215 GHz) using
E_C = (e^2/h)/(4C), E_Cr = (e^2/h)/(4C + 8C_r), E_Lr = (Phi_0^2/h)/(pi^2 L_r),
omega_r = sqrt(8 E_Cr E_Lr), phi_rzpf = (2 E_Cr / E_Lr)^(1/4); the frozen
numbers serve as the oracle for reduce_circuit. Assembly is checked against
an explicit elementwise loop, independent of the kron-based product code.
"""
from __future__ import annotations

import numpy as np
import pytest

from zreadout.circuit import (
    CircuitElements,
    assemble_hamiltonian,
    build_reduced_model,
    derived_params,
    oscillator_energies,
    reduce_circuit,
)
from zreadout.operators import (
    ResonatorSpec,
    TransmonSpec,
    parity_operators,
    resonator_operators,
    transmon_eigensystem,
)

ELEMENTS = CircuitElements(c=45.046, c_r=249.2, l_r=1.20368, e_j1=11.825, e_j2=11.825)


class TestReduceCircuit:
    def test_frozen_target_modes(self):
        t, r = reduce_circuit(ELEMENTS, n_fock=60)
        assert t.e_c == pytest.approx(0.215, rel=5e-3)
        assert t.e_j == pytest.approx(23.65, abs=1e-12)
        assert t.d == pytest.approx(0.0, abs=1e-15)
        assert r.omega_r == pytest.approx(8.8, rel=5e-3)
        assert r.phi_rzpf == pytest.approx(0.09, rel=5e-3)

    def test_mode_identities(self):
        e_cr, e_lr = oscillator_energies(ELEMENTS)
        _, r = reduce_circuit(ELEMENTS, n_fock=60)
        assert r.omega_r == pytest.approx(np.sqrt(8 * e_cr * e_lr), rel=1e-12)
        assert r.phi_rzpf == pytest.approx((2 * e_cr / e_lr) ** 0.25, rel=1e-12)

    def test_asymmetry(self):
        el = CircuitElements(c=45.0, c_r=249.0, l_r=1.2, e_j1=10.0, e_j2=12.0)
        t, _ = reduce_circuit(el, n_fock=20)
        assert t.e_j == pytest.approx(22.0)
        assert t.d == pytest.approx(2.0 / 22.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            CircuitElements(c=-1.0, c_r=249.0, l_r=1.2, e_j1=10.0, e_j2=12.0)


def small_system(d=0.0, n_g=0.0, k=3, n=4, phi=0.12):
    t = TransmonSpec(e_c=0.215, e_j=23.65, d=d, n_g=n_g,
                     n_charge_cutoff=25, k_levels=k)
    r = ResonatorSpec(omega_r=8.8, phi_rzpf=phi, n_fock=n)
    return transmon_eigensystem(t), resonator_operators(r)


class TestAssembleHamiltonian:
    def test_elementwise_oracle(self):
        # independent route: explicit loops over the product basis
        tb, ro = small_system(d=0.2)
        jh = assemble_hamiltonian(tb, ro)
        k, n = 3, 4
        e_j = tb.spec.e_j
        ref = np.zeros((k * n, k * n), dtype=complex)
        for j in range(k):
            for m in range(n):
                for jp in range(k):
                    for mp in range(n):
                        val = 0.0j
                        if j == jp and m == mp:
                            val += tb.energies[j] + ro.spec.omega_r * m
                        val += 2 * e_j * tb.cos_phi[j, jp] * ro.sin_sq_half[m, mp]
                        val -= tb.spec.d * e_j * tb.sin_phi[j, jp] * ro.sin_phi[m, mp]
                        ref[j * n + m, jp * n + mp] = val
        assert np.max(np.abs(jh.matrix - ref)) < 1e-13

    def test_hermitian(self):
        tb, ro = small_system(d=0.3, n_g=0.17, k=4, n=5)
        jh = assemble_hamiltonian(tb, ro)
        assert np.max(np.abs(jh.matrix - jh.matrix.conj().T)) < 1e-12

    def test_real_symmetric_when_symmetric_junctions(self):
        tb, ro = small_system(d=0.0)
        jh = assemble_hamiltonian(tb, ro)
        assert jh.matrix.dtype == np.float64

    def test_decoupled_limit_exact_spectrum(self):
        tb, ro = small_system(phi=0.0, k=4, n=5)
        jh = assemble_hamiltonian(tb, ro)
        evals = np.linalg.eigvalsh(jh.matrix)
        expected = np.sort(
            (tb.energies[:, None] + 8.8 * np.arange(5)[None, :]).ravel()
        )
        assert np.max(np.abs(evals - expected)) < 1e-12

    def test_parity_commutators(self):
        # d = 0: transmon and mode parity each conserved; d != 0: joint only
        tb, ro = small_system(d=0.0, k=4, n=6, phi=0.09)
        jh = assemble_hamiltonian(tb, ro)
        p_t, p_r = parity_operators(4, 6)
        pt_full = np.kron(p_t, np.eye(6))
        pr_full = np.kron(np.eye(4), p_r)
        assert np.max(np.abs(jh.matrix @ pt_full - pt_full @ jh.matrix)) < 1e-10
        assert np.max(np.abs(jh.matrix @ pr_full - pr_full @ jh.matrix)) < 1e-10

        tb, ro = small_system(d=0.4, k=4, n=6, phi=0.09)
        jha = assemble_hamiltonian(tb, ro)
        joint = pt_full @ pr_full
        assert np.max(np.abs(jha.matrix @ joint - joint @ jha.matrix)) < 1e-10
        defect = np.max(np.abs(jha.matrix @ pt_full - pt_full @ jha.matrix))
        assert defect > 1e-6  # separate parity genuinely broken

    def test_dispersive_ground_state_overlap(self):
        tb, ro = small_system(k=8, n=12, phi=0.09)
        jh = assemble_hamiltonian(tb, ro)
        _, vecs = np.linalg.eigh(jh.matrix)
        gs = vecs[:, 0]
        assert abs(gs[0]) ** 2 > 0.99  # |0_t, 0_r> dominates the ground state


class TestDerivedParams:
    def test_close_detuning_set(self):
        tb, _ = small_system(k=5)
        rs = ResonatorSpec(omega_r=8.8, phi_rzpf=0.0896, n_fock=60)
        dp = derived_params(tb, rs)
        assert dp.omega_p == pytest.approx(np.sqrt(8 * 0.215 * 23.65), rel=1e-12)
        assert dp.omega_q == pytest.approx(tb.energies[1], rel=1e-12)
        assert dp.delta == pytest.approx(-2.64, abs=0.03)
        assert dp.z == pytest.approx(np.sqrt(8 / 110), rel=1e-9)
        assert dp.chi_z_pert == pytest.approx(-0.0128, rel=0.02)
        assert dp.g_z_of(2.0) == pytest.approx(2.0 * dp.chi_z_pert, rel=1e-12)


class TestReducedModel:
    def test_fields_and_gz(self):
        m = build_reduced_model(chi_z=-8.66e-3, omega_r=9.3, omega_q=4.07,
                                kappa=0.017)
        assert m.g_z(4.0) == pytest.approx(-0.03464, rel=1e-3)

    def test_sign_convention_enforced(self):
        with pytest.raises(ValueError):
            build_reduced_model(chi_z=+8.66e-3, omega_r=9.3, omega_q=4.07,
                                kappa=0.017)

    def test_sector_detunings(self):
        m = build_reduced_model(chi_z=-8.66e-3, omega_r=9.3, omega_q=4.07,
                                kappa=0.017)
        assert m.sector_pull(+1) == pytest.approx(9.3 - 8.66e-3)
        assert m.sector_pull(-1) == pytest.approx(9.3 + 8.66e-3)
