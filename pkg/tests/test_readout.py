"""Tests for pulse shaping, heterodyne trajectories, and assignment error.

Oracles: the pulse closed form is checked against direct integration of the
cavity mean-field equation; reference (noise-free) evolutions are checked
against an independently integrated mean-field ODE; the assignment error is
checked against the Gaussian half-erfc prediction from the measured SNR.
"""
import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import erfc

from zreadout.circuit import build_joint
from zreadout.operators import ResonatorSpec, TransmonSpec
from zreadout.readout import (
    DegenerateThresholdWarning,
    FullReadoutModel,
    NormDivergenceError,
    PulseSpec,
    ReducedReadoutModel,
    assignment_error,
    branch_populations,
    cavity_response,
    matched_filter,
    mean_field_reference,
    pulse_amplitude,
    sse_trajectory,
    wilson_interval,
)

# main readout operating point: chi_z/2pi = -8.66 MHz, kappa/2pi = 17 MHz
CHI_Z = -0.00866
KAPPA = 0.017


def pulse(alpha_f=2.0, tau=5.0, omega_d=9.3, kappa=KAPPA):
    return PulseSpec(alpha_f=alpha_f, tau=tau, omega_d=omega_d, kappa=kappa)


def reduced(chi_z=CHI_Z, n_fock=30):
    return ReducedReadoutModel(chi_z=chi_z, n_fock=n_fock)


class TestPulse:
    def test_zero_at_start(self):
        assert pulse_amplitude(pulse(), 0.0) == 0.0

    def test_steady_state_holding_term(self):
        p = pulse()
        kappa_ang = 2 * np.pi * p.kappa
        assert pulse_amplitude(p, 50 * p.tau) == pytest.approx(
            kappa_ang * p.alpha_f, rel=1e-12)

    def test_reproduces_designed_cavity_response(self):
        # integrating d(alpha_p)/dt = -(kappa_ang/2) alpha_p + eps(t)/2
        # recovers alpha_f (1 - exp(-(t/tau)^2)) to 1e-8
        p = pulse()
        kappa_ang = 2 * np.pi * p.kappa

        def rhs(t, y):
            return -0.5 * kappa_ang * y + 0.5 * pulse_amplitude(p, t)

        t_eval = np.linspace(0.0, 40.0, 81)
        sol = solve_ivp(rhs, (0.0, 40.0), [0.0], t_eval=t_eval,
                        rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(sol.y[0], cavity_response(p, t_eval),
                                   atol=1e-8)

    def test_cavity_response_values(self):
        p = pulse()
        assert cavity_response(p, 0.0) == 0.0
        assert cavity_response(p, p.tau) == pytest.approx(
            p.alpha_f * (1 - np.exp(-1.0)), rel=1e-12)
        # residual at 3 tau is exactly alpha_f exp(-9)
        assert cavity_response(p, 3 * p.tau) == pytest.approx(
            p.alpha_f * (1 - np.exp(-9.0)), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            PulseSpec(alpha_f=2.0, tau=0.0, omega_d=9.3, kappa=KAPPA)
        with pytest.raises(ValueError):
            PulseSpec(alpha_f=-1.0, tau=5.0, omega_d=9.3, kappa=KAPPA)


class TestTrajectoryKernel:
    def test_no_drive_no_decay_state_constant(self):
        # vacuum is stationary: records are pure white noise with zero mean
        p = pulse(alpha_f=0.0, kappa=0.0)
        rec = sse_trajectory(reduced(), p, dt=0.02, seed=42, qubit_init=0,
                             t_final=40.0)
        assert rec.model_tag == "reduced"
        n = rec.times.size
        # mean of white noise dW/dt over duration T is N(0, 1/T)
        assert abs(np.mean(rec.x_record)) < 4.0 / np.sqrt(40.0)
        assert abs(np.mean(rec.p_record)) < 4.0 / np.sqrt(40.0)
        assert n == round(40.0 / 0.02)

    def test_seed_determinism(self):
        p = pulse()
        a = sse_trajectory(reduced(), p, dt=0.02, seed=7, qubit_init=1,
                           t_final=10.0)
        b = sse_trajectory(reduced(), p, dt=0.02, seed=7, qubit_init=1,
                           t_final=10.0)
        c = sse_trajectory(reduced(), p, dt=0.02, seed=8, qubit_init=1,
                           t_final=10.0)
        np.testing.assert_array_equal(a.x_record, b.x_record)
        np.testing.assert_array_equal(a.p_record, b.p_record)
        assert not np.array_equal(a.x_record, c.x_record)

    def test_norm_divergence_raises(self):
        # absurdly large step makes the per-step norm correction exceed 10%
        p = pulse(alpha_f=4.0, tau=2.0)
        with pytest.raises(NormDivergenceError):
            sse_trajectory(reduced(), p, dt=5.0, seed=1, qubit_init=0,
                           t_final=50.0)

    def test_records_finite(self):
        p = pulse()
        rec = sse_trajectory(reduced(), p, dt=0.02, seed=3, qubit_init=0,
                             t_final=30.0)
        assert np.all(np.isfinite(rec.x_record))
        assert np.all(np.isfinite(rec.p_record))


class TestMeanFieldReference:
    def ode_alpha(self, p, qubit_init, t_eval, chi_z=CHI_Z):
        kappa_ang = 2 * np.pi * p.kappa
        sign = 1.0 if qubit_init == 1 else -1.0
        chi_ang = 2 * np.pi * chi_z * sign

        def rhs(t, y):
            a = y[0] + 1j * y[1]
            da = (-1j * chi_ang - 0.5 * kappa_ang) * a \
                + 0.5 * pulse_amplitude(p, t)
            return [da.real, da.imag]

        sol = solve_ivp(rhs, (0.0, t_eval[-1]), [0.0, 0.0], t_eval=t_eval,
                        rtol=1e-11, atol=1e-13)
        return sol.y[0] + 1j * sol.y[1]

    def test_matches_mean_field_ode(self):
        # the deterministic limit is a first-order scheme: the error
        # against the exact ODE must halve with dt and be small in
        # absolute terms at the working step
        p = pulse()
        errs = {}
        for dt in (0.005, 0.0025):
            times, alpha = mean_field_reference(reduced(), p, dt=dt,
                                                qubit_init=1, t_final=30.0)
            errs[dt] = np.max(np.abs(alpha - self.ode_alpha(p, 1, times)))
        assert errs[0.005] < 2.5e-3
        assert 1.8 < errs[0.005] / errs[0.0025] < 2.2

    def test_pointer_states_separate_at_180_degrees(self):
        # driving at the bare resonator frequency, the g/e pointer states
        # displace in exactly opposite directions from their midpoint
        p = pulse()
        _, a_e = mean_field_reference(reduced(), p, dt=0.01, qubit_init=1,
                                      t_final=30.0)
        _, a_g = mean_field_reference(reduced(), p, dt=0.01, qubit_init=0,
                                      t_final=30.0)
        mid = 0.5 * (a_e + a_g)
        d_e, d_g = a_e - mid, a_g - mid
        sel = np.abs(a_e - a_g) > 0.1
        cosang = np.real(d_e[sel] * np.conj(d_g[sel])) \
            / (np.abs(d_e[sel]) * np.abs(d_g[sel]))
        angles = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        assert np.all(np.abs(angles - 180.0) < 5.0)


class TestMatchedFilter:
    def test_zero_shift_zero_weights(self):
        p = pulse()
        w = matched_filter(reduced(chi_z=0.0), p, dt=0.02, t_final=20.0)
        assert np.all(w.w_x == 0.0)
        assert np.all(w.w_p == 0.0)

    def test_weights_vanish_at_start_and_grow_during_ramp(self):
        p = pulse()
        w = matched_filter(reduced(), p, dt=0.01, t_final=30.0)
        mag = np.hypot(w.w_x, w.w_p)
        assert mag[0] == 0.0
        ramp = w.times <= p.tau
        assert np.all(np.diff(mag[ramp]) >= 0.0)

    def test_filter_phase_constant(self):
        # pointer separation direction is fixed in time for this model
        p = pulse()
        w = matched_filter(reduced(), p, dt=0.01, t_final=40.0)
        mag = np.hypot(w.w_x, w.w_p)
        sel = mag > 1e-3 * mag.max()
        phase = np.degrees(np.angle(w.w_x[sel] + 1j * w.w_p[sel]))
        spread = np.max(phase) - np.min(phase)
        assert spread < 5.0


class TestEnsembleStatistics:
    def test_mean_record_matches_deterministic_reference(self):
        # ensemble mean of the demodulated record converges to
        # sqrt(2*kappa_ang)*<a> of the deterministic evolution
        p = pulse()
        model = reduced()
        dt, t_final, n_traj = 0.02, 30.0, 500
        kappa_ang = 2 * np.pi * p.kappa
        xs, ps = [], []
        for i in range(n_traj):
            rec = sse_trajectory(model, p, dt=dt, seed=(900, i),
                                 qubit_init=1, t_final=t_final)
            xs.append(rec.x_record)
            ps.append(rec.p_record)
        xs, ps = np.array(xs), np.array(ps)
        times, alpha = mean_field_reference(model, p, dt=dt, qubit_init=1,
                                            t_final=t_final)
        # compare in 10 coarse time bins to suppress pointwise flukes
        bins = np.array_split(np.arange(times.size), 10)
        for idx in bins:
            for rec_arr, ref in ((xs, np.sqrt(2 * kappa_ang) * alpha.real),
                                 (ps, np.sqrt(2 * kappa_ang) * alpha.imag)):
                seg = rec_arr[:, idx].mean(axis=1)
                se = np.std(seg, ddof=1) / np.sqrt(n_traj)
                assert abs(seg.mean() - ref[idx].mean()) < 3 * se


class TestWilsonInterval:
    def test_known_values(self):
        # frozen oracle: p_hat = 0.05, n = 100, z = 1.96
        low, high = wilson_interval(5, 100)
        assert low == pytest.approx(0.02154, abs=2e-4)
        assert high == pytest.approx(0.11175, abs=2e-4)

    def test_zero_counts(self):
        low, high = wilson_interval(0, 200)
        assert low == 0.0
        assert 0.0 < high < 0.03

    def test_contains_point_estimate(self):
        low, high = wilson_interval(30, 400)
        assert low < 30 / 400 < high


class TestAssignmentError:
    def test_no_information_error_half(self):
        p = pulse()
        with pytest.warns(DegenerateThresholdWarning):
            curve = assignment_error(reduced(chi_z=0.0), p,
                                     tau_grid=[10.0, 20.0], n_traj=50,
                                     seed=21, dt=0.05)
        np.testing.assert_allclose(curve.error, 0.5)

    def test_error_small_and_nonincreasing(self):
        # desk-scale run at the main operating point
        p = pulse()
        curve = assignment_error(reduced(), p,
                                 tau_grid=[10.0, 20.0, 30.0, 40.0, 50.0],
                                 n_traj=400, seed=77, dt=0.02)
        assert curve.error[-1] <= 0.05
        # non-increasing up to statistical noise (binomial fluctuation)
        slack = 2.0 / (2 * 400)
        assert np.all(np.diff(curve.error) <= slack)
        assert np.all(curve.ci_low <= curve.error)
        assert np.all(curve.error <= curve.ci_high)

    def test_snr_monotonicity(self):
        p = pulse()
        curve = assignment_error(reduced(), p,
                                 tau_grid=[10.0, 25.0, 50.0], n_traj=200,
                                 seed=31, dt=0.02)
        assert np.all(np.diff(curve.snr) > 0.0)
        stronger = assignment_error(reduced(), pulse(alpha_f=3.0),
                                    tau_grid=[10.0, 25.0, 50.0], n_traj=200,
                                    seed=31, dt=0.02)
        assert np.all(stronger.snr > curve.snr)

    def test_gaussian_prediction_consistent(self):
        p = pulse()
        curve = assignment_error(reduced(), p, tau_grid=[30.0], n_traj=400,
                                 seed=55, dt=0.02)
        predicted = 0.5 * erfc(curve.snr[0] / 2)
        measured = max(curve.error[0], 1.0 / (2 * 400))
        assert measured < 3 * max(predicted, 1.0 / (2 * 400))
        assert measured > max(predicted, 1e-6) / 3


@pytest.fixture(scope="module")
def full_setup():
    tb = TransmonSpec.from_ratio(0.215, 110.0, k_levels=6,
                                 n_charge_cutoff=30)
    ro = ResonatorSpec(omega_r=8.8, phi_rzpf=0.0896, n_fock=30)
    return FullReadoutModel.from_joint(build_joint(tb, ro))


class TestFullModel:

    def test_no_ionization_far_below_ncrit(self, full_setup):
        # alpha_f = 1 is far below the critical photon number: after the
        # pulse the qubit branch populations stay within 1% of initial
        model = full_setup
        p = pulse(alpha_f=1.0, tau=5.0, omega_d=8.8)
        dt = 1.0 / (40 * p.omega_d)
        for j in (0, 1):
            rec = sse_trajectory(model, p, dt=dt, seed=(5, j), qubit_init=j,
                                 t_final=20.0)
            pops = branch_populations(model, rec.final_state)
            assert pops[j] > 0.99
        assert rec.model_tag == "full"

    def test_demodulated_pointer_matches_reduced_frame(self, full_setup):
        # the demodulated noise-free full-model pointer trajectory agrees
        # with the reduced rotating-frame picture at small amplitude: the
        # e/g separation grows and its phase is near constant
        model = full_setup
        p = pulse(alpha_f=1.0, tau=5.0, omega_d=8.8)
        dt = 1.0 / (40 * p.omega_d)
        _, a_e = mean_field_reference(model, p, dt=dt, qubit_init=1,
                                      t_final=15.0)
        times, a_g = mean_field_reference(model, p, dt=dt, qubit_init=0,
                                          t_final=15.0)
        sep = np.abs(a_e - a_g)
        assert sep[-1] > 0.5 * sep.max()
        assert sep.max() > 0.01
