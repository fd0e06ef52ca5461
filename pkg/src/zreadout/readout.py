"""Single-shot heterodyne readout simulation.

The measurement chain is: a drive pulse shaped to rapidly fill the cavity
(pulse_amplitude / cavity_response), stochastic Schrodinger trajectories
with heterodyne detection of the resonator output (sse_trajectory), a
matched filter built from noise-free g/e reference evolutions
(matched_filter), and thresholded assignment with Wilson confidence
intervals (assignment_error).

Two models are supported. The reduced model keeps a qubit-conditioned
resonator, H = (delta_r +/- chi_z) n, simulated in the frame rotating at
the drive with the co-rotating drive term -i eps(t)/2 (a - a+). The full
model evolves the joint transmon-resonator Hamiltonian in the lab frame
with drive -i eps(t) cos(omega_d t) (a - a+) and demodulates the records
with exp(+i omega_d t); it is intended for validation at small amplitude
(dt <= 1/(40 omega_d)).

Conventions: module parameters (omega_d, kappa, chi_z, delta_r) are
ordinary frequencies in GHz like the rest of the package; pulse_amplitude
returns the angular drive amplitude in rad/ns, the quantity that
multiplies cos(omega_d t) in the angular-units Hamiltonian. Time
propagation is split-step: the static part advances by exact phase
rotation in its eigenbasis, drive, damping, and measurement noise by an
explicit order-1/2 stochastic Euler increment at the step midpoint, with
renormalization each step (the deterministic limit converges at first
order in dt). Heterodyne records are r_x = sqrt(2 kappa_ang)
Re<a> + dW/dt and the P analogue, so ensemble means converge to the
deterministic quadrature expectations.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc
from threadpoolctl import threadpool_limits

from .circuit import JointHamiltonian
from .spectral import diagonalize, label_branches


class NormDivergenceError(RuntimeError):
    """Per-step norm correction exceeded 10%: step size too large."""


class DegenerateThresholdWarning(UserWarning):
    """Class means of the integrated signal coincide; no information."""


@dataclass(frozen=True)
class PulseSpec:
    """Cavity-filling drive pulse.

    Parameters
    ----------
    alpha_f : float
        Target coherent-state amplitude (dimensionless, >= 0; the drive
        phase is fixed).
    tau : float
        Ramp time in ns; the cavity response is alpha_f(1 - e^(-(t/tau)^2)).
    omega_d : float
        Drive frequency in GHz.
    kappa : float
        Resonator decay rate in GHz.
    """

    alpha_f: float
    tau: float
    omega_d: float
    kappa: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.alpha_f < 0:
            raise ValueError("alpha_f must be nonnegative")
        if self.omega_d <= 0:
            raise ValueError("omega_d must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def kappa_ang(self) -> float:
        """Angular decay rate in rad/ns."""
        return 2 * np.pi * self.kappa


def pulse_amplitude(p: PulseSpec, t):
    """Angular drive amplitude eps(t) in rad/ns.

    eps(t) = (4 t alpha_f / tau^2) e^(-(t/tau)^2)
             + kappa_ang alpha_f (1 - e^(-(t/tau)^2)),

    the pulse whose mean-field response d(alpha_p)/dt =
    -(kappa_ang/2) alpha_p + eps/2 is exactly cavity_response: a fast fill
    followed by a holding term balancing dissipation.
    """
    t = np.asarray(t, dtype=float)
    gauss = np.exp(-((t / p.tau) ** 2))
    eps = (4.0 * t * p.alpha_f / p.tau**2) * gauss \
        + p.kappa_ang * p.alpha_f * (1.0 - gauss)
    return eps if eps.ndim else float(eps)


def cavity_response(p: PulseSpec, t):
    """Designed coherent amplitude alpha_p(t) = alpha_f(1 - e^(-(t/tau)^2))."""
    t = np.asarray(t, dtype=float)
    alpha = p.alpha_f * (1.0 - np.exp(-((t / p.tau) ** 2)))
    return alpha if alpha.ndim else float(alpha)


class ReducedReadoutModel:
    """Qubit-conditioned resonator in the drive rotating frame.

    The qubit enters only through the sign of chi_z: branch Hamiltonians
    are (delta_r +/- chi_z) n with delta_r = omega_r - omega_d. All
    frequencies in GHz.
    """

    tag = "reduced"

    def __init__(self, chi_z: float, n_fock: int = 30,
                 delta_r: float = 0.0):
        if n_fock < 2:
            raise ValueError("n_fock must be at least 2")
        self.chi_z = chi_z
        self.n_fock = n_fock
        self.delta_r = delta_r
        self._sq = np.sqrt(np.arange(1.0, n_fock))
        self._n = np.arange(n_fock, dtype=float)

    def energies(self, qubit_init: int) -> np.ndarray:
        sign = 1.0 if qubit_init == 1 else -1.0
        return (self.delta_r + sign * self.chi_z) * self._n

    def initial_state(self, qubit_init: int) -> np.ndarray:
        psi = np.zeros(self.n_fock, dtype=complex)
        psi[0] = 1.0
        return psi

    def apply_a(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[..., :-1] = self._sq * psi[..., 1:]
        return out

    def apply_adag(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[..., 1:] = self._sq * psi[..., :-1]
        return out

    def apply_n(self, psi: np.ndarray) -> np.ndarray:
        return self._n * psi

    def drive_coefficient(self, p: PulseSpec, t: float) -> float:
        # co-rotating term only: eps(t)/2
        return 0.5 * pulse_amplitude(p, t)

    def demodulation(self, p: PulseSpec, times: np.ndarray) -> np.ndarray:
        return np.ones_like(times)


class FullReadoutModel:
    """Joint transmon-resonator model evolved in the lab frame.

    Propagation happens in the eigenbasis of the undriven joint
    Hamiltonian, where the static phases are exact; the drive
    -i eps(t) cos(omega_d t)(a - a+), the kappa damping, and the
    measurement noise are applied as midpoint increments. Records are
    demodulated with exp(+i omega_d t).
    """

    tag = "full"

    def __init__(self, energies, states, a_eig, branch_indices, k_levels,
                 n_fock):
        self.eigenenergies = energies
        self.states = states
        self._a = a_eig
        self._a_t = np.ascontiguousarray(a_eig.T)
        self._n_t = np.ascontiguousarray((a_eig.conj().T @ a_eig).T)
        self.branch_indices = branch_indices
        self.k_levels = k_levels
        self.n_fock = n_fock

    @classmethod
    def from_joint(cls, jh: JointHamiltonian) -> "FullReadoutModel":
        es = diagonalize(jh)
        bt = label_branches(es)
        k, n = jh.k_levels, jh.n_fock
        # resonator annihilation on the product space, transmon-major
        a_prod = np.kron(np.eye(k), np.diag(np.sqrt(np.arange(1.0, n)), 1))
        v = es.states
        a_eig = v.conj().T @ a_prod @ v
        if np.max(np.abs(a_eig.imag)) < 1e-14:
            a_eig = np.ascontiguousarray(a_eig.real)
        branch_indices = tuple(br.eigen_indices.copy() for br in bt.branches)
        return cls(energies=es.energies, states=v, a_eig=a_eig,
                   branch_indices=branch_indices, k_levels=k, n_fock=n)

    def energies(self, qubit_init: int) -> np.ndarray:
        return self.eigenenergies

    def initial_state(self, qubit_init: int) -> np.ndarray:
        # transmon level j, resonator vacuum, expressed in the eigenbasis
        idx = qubit_init * self.n_fock
        return self.states[idx, :].conj().astype(complex)

    def _matmul(self, psi: np.ndarray, op_t: np.ndarray) -> np.ndarray:
        if op_t.dtype == np.float64:
            return psi.real @ op_t + 1j * (psi.imag @ op_t)
        return psi @ op_t

    def apply_a(self, psi: np.ndarray) -> np.ndarray:
        return self._matmul(psi, self._a_t)

    def apply_adag(self, psi: np.ndarray) -> np.ndarray:
        return self._matmul(psi, self._a.conj())

    def apply_n(self, psi: np.ndarray) -> np.ndarray:
        return self._matmul(psi, self._n_t)

    def drive_coefficient(self, p: PulseSpec, t: float) -> float:
        omega_ang = 2 * np.pi * p.omega_d
        return pulse_amplitude(p, t) * math.cos(omega_ang * t)

    def demodulation(self, p: PulseSpec, times: np.ndarray) -> np.ndarray:
        return np.exp(1j * 2 * np.pi * p.omega_d * times)


def branch_populations(model: FullReadoutModel, psi: np.ndarray) -> np.ndarray:
    """Population in each transmon photon-ladder branch of an eigenbasis state."""
    weights = np.abs(psi) ** 2
    return np.array([weights[idx].sum() for idx in model.branch_indices])


@dataclass(frozen=True)
class TrajectoryRecord:
    """One measurement trajectory.

    times are step midpoints (ns); x_record / p_record are the demodulated
    heterodyne streams; final_state is in the model's propagation basis.
    """

    times: np.ndarray
    x_record: np.ndarray
    p_record: np.ndarray
    qubit_init: int
    seed: object
    model_tag: str
    final_state: np.ndarray


@dataclass(frozen=True)
class FilterWeights:
    """Matched-filter weights <a_e(t)> - <a_g(t)> on the record grid."""

    times: np.ndarray
    w_x: np.ndarray
    w_p: np.ndarray


def _evolve(model, p: PulseSpec, dt: float, t_final: float, qubit_init: int,
            dws, collect_alpha: bool = False):
    """Shared propagation kernel over one batch.

    dws is (n_batch, n_steps, 2) Wiener increments, or None for the
    deterministic (noise-free) limit with a batch of one. Returns
    (times, rx, rp, alpha, psi) with rx/rp raw (not demodulated) records of
    shape (n_batch, n_steps), alpha the per-step <a> (only when
    collect_alpha), and psi the final states (n_batch, dim).
    """
    n_steps = int(round(t_final / dt))
    n_batch = 1 if dws is None else dws.shape[0]
    energies = model.energies(qubit_init)
    half_phase = np.exp(-1j * 2 * np.pi * energies * (dt / 2))
    kappa_ang = p.kappa_ang
    sqrt_k2 = math.sqrt(kappa_ang / 2)
    sqrt_2k = math.sqrt(2 * kappa_ang)

    psi = np.tile(model.initial_state(qubit_init), (n_batch, 1))
    rx = np.empty((n_batch, n_steps))
    rp = np.empty((n_batch, n_steps))
    alpha = np.empty((n_batch, n_steps), dtype=complex) if collect_alpha \
        else None
    times = (np.arange(n_steps) + 0.5) * dt

    for j in range(n_steps):
        t_mid = times[j]
        psi *= half_phase
        a_psi = model.apply_a(psi)
        exp_a = np.sum(psi.conj() * a_psi, axis=1)
        if collect_alpha:
            alpha[:, j] = exp_a
        x_mean = sqrt_2k * exp_a.real
        p_mean = sqrt_2k * exp_a.imag
        if dws is None:
            dw1 = dw2 = np.zeros(n_batch)
        else:
            dw1, dw2 = dws[:, j, 0], dws[:, j, 1]
        rx[:, j] = x_mean + dw1 / dt
        rp[:, j] = p_mean + dw2 / dt

        coeff = model.drive_coefficient(p, t_mid)
        q_psi = -1j * (a_psi - model.apply_adag(psi))
        dpsi = -1j * dt * coeff * q_psi
        phase = None
        if kappa_ang > 0.0:
            # normalized heterodyne SSE: damping drift plus innovation,
            # both referenced to the current expectation <a>. The
            # <a>-proportional part of the innovation is a pure global
            # phase i*theta*psi; applying it as exp(i theta) keeps the
            # second-order kappa*dt*|<a>|^2 term out of the norm, so the
            # divergence guard tracks genuine step-size failure only.
            n_psi = model.apply_n(psi)
            dpsi += -0.5 * kappa_ang * dt * (
                n_psi - exp_a.conj()[:, None] * a_psi
                + 0.5 * (np.abs(exp_a) ** 2)[:, None] * psi)
            centered = a_psi - exp_a[:, None] * psi
            dpsi += sqrt_k2 * (dw1 - 1j * dw2)[:, None] * centered
            theta = sqrt_k2 * (exp_a.imag * dw1 - exp_a.real * dw2)
            phase = np.exp(1j * theta)
        psi = psi + dpsi
        if phase is not None:
            psi *= phase[:, None]
        norms = np.sqrt(np.sum(np.abs(psi) ** 2, axis=1))
        if np.any(np.abs(norms - 1.0) > 0.1):
            raise NormDivergenceError(
                f"norm correction {np.max(np.abs(norms - 1.0)):.3f} > 10% "
                f"at step {j}; reduce dt")
        psi /= norms[:, None]
        psi *= half_phase

    return times, rx, rp, alpha, psi


def _demodulate(model, p: PulseSpec, times, rx, rp):
    phase = model.demodulation(p, times)
    if np.isrealobj(phase):
        return rx, rp
    s = (rx + 1j * rp) * phase
    return s.real, s.imag


def sse_trajectory(model, p: PulseSpec, dt: float, seed, qubit_init: int,
                   t_final: float) -> TrajectoryRecord:
    """One heterodyne trajectory; bit-reproducible from (seed, parameters).

    seed may be an int or a tuple of ints (hierarchical ensemble seeding).
    """
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    n_steps = int(round(t_final / dt))
    dws = rng.standard_normal((1, n_steps, 2)) * math.sqrt(dt)
    times, rx, rp, _, psi = _evolve(model, p, dt, t_final, qubit_init, dws)
    x_rec, p_rec = _demodulate(model, p, times, rx, rp)
    return TrajectoryRecord(times=times, x_record=x_rec[0], p_record=p_rec[0],
                            qubit_init=qubit_init, seed=seed,
                            model_tag=model.tag, final_state=psi[0])


def mean_field_reference(model, p: PulseSpec, dt: float, qubit_init: int,
                         t_final: float):
    """Noise-free reference evolution; returns (times, demodulated <a>(t))."""
    times, _, _, alpha, _ = _evolve(model, p, dt, t_final, qubit_init,
                                    dws=None, collect_alpha=True)
    phase = model.demodulation(p, times)
    return times, alpha[0] * phase


def matched_filter(model, p: PulseSpec, dt: float,
                   t_final: float) -> FilterWeights:
    """Weights from the noise-free pointer separation <a_e(t)> - <a_g(t)>.

    The real part weighs the X record, the imaginary part the P record.
    """
    times, a_e = mean_field_reference(model, p, dt, 1, t_final)
    _, a_g = mean_field_reference(model, p, dt, 0, t_final)
    sep = a_e - a_g
    return FilterWeights(times=times, w_x=sep.real, w_p=sep.imag)


def wilson_interval(k: int, n: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion, clamped to [0, 1]."""
    if n <= 0:
        raise ValueError("n must be positive")
    p_hat = k / n
    denom = 1.0 + z**2 / n
    center = p_hat + z**2 / (2 * n)
    radius = z * math.sqrt(p_hat * (1 - p_hat) / n + z**2 / (4 * n**2))
    low = max(0.0, (center - radius) / denom)
    high = min(1.0, (center + radius) / denom)
    return low, high


@dataclass(frozen=True)
class ErrorCurve:
    """Assignment error against integration time.

    error is the total misclassification fraction over both preparations
    (n_traj each); snr is |mu_e - mu_g| / sqrt(sigma_e^2 + sigma_g^2) of
    the integrated filtered signal, and gaussian_error = erfc(snr/2)/2 is
    the matched Gaussian prediction.
    """

    tau: np.ndarray
    error: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    snr: np.ndarray
    gaussian_error: np.ndarray
    n_traj: int


def _integrated_signals(args):
    """Integrated filtered statistics for one batch of trajectories.

    One work item of the ensemble: trajectories [start, stop) of one
    preparation. Noise streams depend only on (seed, preparation, index)
    and linear algebra is pinned to one thread, so the result is identical
    under any batching, scheduling, or worker count.
    """
    model, p, dt, t_final, qubit_init, seed, start, stop, weights, \
        tau_steps = args
    n_steps = int(round(t_final / dt))
    dws = np.empty((stop - start, n_steps, 2))
    for row, i in enumerate(range(start, stop)):
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, qubit_init, i]))
        dws[row] = rng.standard_normal((n_steps, 2)) * math.sqrt(dt)
    with threadpool_limits(limits=1):
        times, rx, rp, _, _ = _evolve(model, p, dt, t_final, qubit_init, dws)
    x_rec, p_rec = _demodulate(model, p, times, rx, rp)
    integrand = weights.w_x * x_rec + weights.w_p * p_rec
    cum = np.cumsum(integrand, axis=1) * dt
    return qubit_init, start, cum[:, tau_steps - 1]


def assignment_error(model, p: PulseSpec, tau_grid, n_traj: int, seed: int,
                     dt: float, batch_size: int = 256,
                     workers: int = 1) -> ErrorCurve:
    """Assignment error vs integration time from per-state ensembles.

    Each preparation (g, e) gets n_traj trajectories with per-trajectory
    noise streams seeded by (seed, preparation, index), so results are
    independent of batching or scheduling; workers > 1 distributes batches
    over processes without changing any output bit. The discriminator is
    the midpoint of the class means of the matched-filter statistic.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau grid must be positive")
    t_final = float(tau.max())
    tau_steps = np.round(tau / dt).astype(int)
    weights = matched_filter(model, p, dt, t_final)

    items = [(model, p, dt, t_final, state, seed, start,
              min(start + batch_size, n_traj), weights, tau_steps)
             for state in (0, 1) for start in range(0, n_traj, batch_size)]
    signals = {state: np.empty((n_traj, tau.size)) for state in (0, 1)}
    if workers <= 1:
        results = map(_integrated_signals, items)
        for state, start, block in results:
            signals[state][start:start + block.shape[0]] = block
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for state, start, block in pool.map(_integrated_signals, items):
                signals[state][start:start + block.shape[0]] = block

    n_tau = tau.size
    error = np.empty(n_tau)
    ci_low = np.empty(n_tau)
    ci_high = np.empty(n_tau)
    snr = np.empty(n_tau)
    for k in range(n_tau):
        s_g, s_e = signals[0][:, k], signals[1][:, k]
        mu_g, mu_e = s_g.mean(), s_e.mean()
        var = s_g.var(ddof=1) + s_e.var(ddof=1)
        if mu_e == mu_g:
            warnings.warn(
                f"class means coincide at tau={tau[k]:g} ns; "
                "assignment carries no information",
                DegenerateThresholdWarning, stacklevel=2)
            error[k], snr[k] = 0.5, 0.0
        else:
            theta = 0.5 * (mu_e + mu_g)
            sign = 1.0 if mu_e > mu_g else -1.0
            mistakes = int(np.sum(sign * s_e <= sign * theta)
                           + np.sum(sign * s_g > sign * theta))
            error[k] = mistakes / (2 * n_traj)
            snr[k] = abs(mu_e - mu_g) / math.sqrt(var) if var > 0 \
                else math.inf
        ci_low[k], ci_high[k] = wilson_interval(
            int(round(error[k] * 2 * n_traj)), 2 * n_traj)

    gaussian = 0.5 * erfc(snr / 2)
    return ErrorCurve(tau=tau, error=error, ci_low=ci_low, ci_high=ci_high,
                      snr=snr, gaussian_error=gaussian, n_traj=n_traj)
