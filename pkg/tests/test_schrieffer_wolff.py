"""Exact diagonal model, residual couplings, and second-order corrections.

Dual-route checks: the diagonal model must reproduce the assembled joint
Hamiltonian's diagonal exactly; second-order corrected energies must match
full diagonalization (route B) at the working phase spread and shrink as
phi^6 when the spread is halved.
"""
from __future__ import annotations

import numpy as np
import pytest

from zreadout.circuit import assemble_hamiltonian, build_joint
from zreadout.operators import (
    ResonatorSpec,
    TransmonSpec,
    resonator_operators,
    transmon_eigensystem,
)
from zreadout.schrieffer_wolff import (
    NearResonanceError,
    sw_diagonal,
    sw_eta,
    sw_second_order,
)
from zreadout.spectral import diagonalize, label_branches


def system(phi=0.0896, omega_r=8.8, k=6, n=30, e_c=0.215, ratio=110.0):
    t = TransmonSpec.from_ratio(e_c, ratio, n_charge_cutoff=30, k_levels=k)
    r = ResonatorSpec(omega_r=omega_r, phi_rzpf=phi, n_fock=n)
    return transmon_eigensystem(t), r


class TestSwDiagonal:
    def test_matches_assembled_diagonal(self):
        tb, rs = system(k=5, n=12)
        dm = sw_diagonal(tb, rs)
        jh = assemble_hamiltonian(tb, resonator_operators(rs))
        diag = np.diag(jh.matrix).reshape(5, 12)
        assert np.max(np.abs(dm.diag_energy - diag)) < 1e-10

    def test_matches_assembled_diagonal_with_asymmetry(self):
        # junction asymmetry contributes nothing on the diagonal
        t = TransmonSpec(e_c=0.215, e_j=23.65, d=0.3, n_charge_cutoff=30,
                         k_levels=5)
        tb = transmon_eigensystem(t)
        rs = ResonatorSpec(omega_r=8.8, phi_rzpf=0.0896, n_fock=12)
        dm = sw_diagonal(tb, rs)
        jh = assemble_hamiltonian(tb, resonator_operators(rs))
        diag = np.real(np.diag(jh.matrix)).reshape(5, 12)
        assert np.max(np.abs(dm.diag_energy - diag)) < 1e-10

    def test_lamb_shift_definition(self):
        tb, rs = system(k=4, n=8)
        dm = sw_diagonal(tb, rs)
        expected = 23.65 * np.real(np.diag(tb.cos_phi))
        np.testing.assert_allclose(dm.lamb, expected, rtol=1e-12)

    def test_chi_is_first_difference(self):
        tb, rs = system(k=4, n=10)
        dm = sw_diagonal(tb, rs)
        for j in range(4):
            for m in range(1, 10):
                ref = dm.diag_energy[j, m] - dm.diag_energy[j, m - 1] - rs.omega_r
                assert dm.chi[j, m] == pytest.approx(ref, abs=1e-12)
        assert np.all(np.isnan(dm.chi[:, 0]))

    def test_chi_z0_value_and_sign(self):
        _, rs = system()
        tb, _ = system()
        dm = sw_diagonal(tb, rs)
        assert dm.chi_z0 == pytest.approx(-0.0128, rel=0.05)
        assert dm.chi_z0 < 0

    def test_chi_z0_detuning_independent(self):
        tb, _ = system()
        chi_close = sw_diagonal(tb, ResonatorSpec(omega_r=8.8, phi_rzpf=0.0896,
                                                  n_fock=30)).chi_z0
        chi_far = sw_diagonal(tb, ResonatorSpec(omega_r=10.5, phi_rzpf=0.0896,
                                                n_fock=30)).chi_z0
        assert chi_close == chi_far  # formula contains no omega_r at all

    def test_perturbative_limit(self):
        tb, rs = system()
        dm = sw_diagonal(tb, rs)
        omega_p = np.sqrt(8 * 0.215 * 23.65)
        assert dm.chi_z0 == pytest.approx(-omega_p * 0.0896**2 / 4, rel=0.02)


class TestSwEta:
    def test_against_assembled_off_diagonal(self):
        tb, rs = system(k=5, n=10)
        ce = sw_eta(tb, resonator_operators(rs))
        jh = assemble_hamiltonian(tb, resonator_operators(rs))
        h = jh.matrix
        n = 10
        # eta_{0,0,2,0} and a generic inter-level element
        assert ce.value(0, 0, 2, 0) == pytest.approx(h[0 * n + 2, 0 * n + 0],
                                                     abs=1e-12)
        assert ce.value(0, 2, 3, 1) == pytest.approx(h[0 * n + 3, 2 * n + 1],
                                                     abs=1e-12)

    def test_parity_zeros(self):
        tb, rs = system(k=6, n=12)
        ce = sw_eta(tb, resonator_operators(rs))
        # odd mode-index difference vanishes
        assert ce.value(0, 0, 3, 0) == 0.0
        assert ce.value(1, 1, 2, 5) == 0.0
        # odd transmon pair vanishes at n_g = 0
        assert ce.value(0, 1, 2, 0) == 0.0
        assert ce.value(2, 5, 4, 2) == 0.0

    def test_excluded_diagonal(self):
        tb, rs = system(k=4, n=8)
        ce = sw_eta(tb, resonator_operators(rs))
        assert ce.value(1, 1, 3, 3) == 0.0

    def test_vanishes_at_zero_phase_spread(self):
        tb, rs = system(phi=1e-7, k=5, n=10)
        ce = sw_eta(tb, resonator_operators(rs))
        worst = 0.0
        for a in range(5):
            for b in range(5):
                for c in range(10):
                    for d in range(10):
                        worst = max(worst, abs(ce.value(a, b, c, d)))
        assert worst < 1e-9


class TestSwSecondOrder:
    def test_matches_exact_spectrum(self):
        # route A (diagonal + second order) vs route B (full diagonalization)
        tb, rs = system(phi=0.09, k=8, n=40)
        dm = sw_diagonal(tb, rs)
        ce = sw_eta(tb, resonator_operators(rs))
        sw = sw_second_order(dm, ce, j_max=2, m_max=10)
        es = diagonalize(assemble_hamiltonian(tb, resonator_operators(rs)))
        bt = label_branches(es)
        for j in (0, 1):
            exact = bt.branches[j].energies[:11]
            # per-photon steps (what the chi-vs-n comparison measures): the
            # accumulating third-order background cancels in differences
            step_err = np.abs(np.diff(sw.energy2[j]) - np.diff(exact))
            assert np.max(step_err) < 1e-4
            # cumulative residual is the genuine third-order term, verified
            # against a finite-difference quadratic-coefficient oracle:
            # 1.4e-4 (j=0) / 4.1e-4 (j=1) at this operating point
            assert np.max(np.abs(sw.energy2[j] - exact)) < 5e-4
            # second order genuinely improves on the bare diagonal
            bare = np.max(np.abs(sw.energy0[j] - exact))
            corrected = np.max(np.abs(sw.energy2[j] - exact))
            assert corrected < bare

    def test_second_order_coefficient_exact(self):
        # the quadratic coefficient in H0 + lam*V must equal the correction:
        # central second difference of branch energies at lam = +/-1e-2
        tb, rs = system(phi=0.09, k=6, n=24)
        ro = resonator_operators(rs)
        dm = sw_diagonal(tb, rs)
        sw = sw_second_order(dm, sw_eta(tb, ro), j_max=2, m_max=6)
        h = assemble_hamiltonian(tb, ro).matrix
        h0 = np.diag(np.diag(h))
        v = h - h0
        lam = 1e-2
        from zreadout.circuit import JointHamiltonian

        branch = {}
        for sgn in (1.0, -1.0):
            jh = JointHamiltonian(matrix=h0 + sgn * lam * v, transmon=tb,
                                  resonator=ro)
            bt = label_branches(diagonalize(jh))
            branch[sgn] = np.array(
                [bt.branches[j].energies[:7] for j in (0, 1)])
        d0 = dm.diag_energy[:2, :7]
        e2_fd = (branch[1.0] + branch[-1.0] - 2 * d0) / (2 * lam**2)
        assert np.max(np.abs(sw.correction - e2_fd)) < 1e-7

    def test_phi6_error_scaling(self):
        errors = {}
        for phi in (0.09, 0.045):
            tb, rs = system(phi=phi, k=8, n=30)
            dm = sw_diagonal(tb, rs)
            ce = sw_eta(tb, resonator_operators(rs))
            sw = sw_second_order(dm, ce, j_max=2, m_max=8)
            es = diagonalize(assemble_hamiltonian(tb, resonator_operators(rs)))
            bt = label_branches(es)
            err = max(
                np.max(np.abs(sw.energy2[j] - bt.branches[j].energies[:9]))
                for j in (0, 1)
            )
            errors[phi] = err
        exponent = np.log2(errors[0.09] / errors[0.045])
        assert 5.0 < exponent < 7.0

    def test_near_resonance_guard(self):
        # engineer a degeneracy D_0(2) ~ D_2(0) by tuning omega_r
        tb, rs0 = system(k=6, n=20, omega_r=3.0)
        dm0 = sw_diagonal(tb, rs0)
        mismatch = dm0.diag_energy[0, 2] - dm0.diag_energy[2, 0]
        rs = ResonatorSpec(omega_r=3.0 - mismatch / 2, phi_rzpf=0.0896,
                           n_fock=20)
        dm = sw_diagonal(tb, rs)
        ce = sw_eta(tb, resonator_operators(rs))
        with pytest.raises(NearResonanceError) as err:
            sw_second_order(dm, ce, j_max=2, m_max=5)
        offenders = err.value.offenders
        assert any(o[0] == 0 and o[2] == 2 for o in offenders)

    def test_guard_coupling_floor(self):
        # same configuration passes when the coupling floor excludes the term
        tb, rs0 = system(k=6, n=20, omega_r=3.0)
        dm0 = sw_diagonal(tb, rs0)
        mismatch = dm0.diag_energy[0, 2] - dm0.diag_energy[2, 0]
        rs = ResonatorSpec(omega_r=3.0 - mismatch / 2, phi_rzpf=0.0896,
                           n_fock=20)
        dm = sw_diagonal(tb, rs)
        ce = sw_eta(tb, resonator_operators(rs))
        sw = sw_second_order(dm, ce, j_max=2, m_max=5, guard_coupling=1e6)
        assert np.all(np.isfinite(sw.energy2))
