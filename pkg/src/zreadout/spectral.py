"""Joint-spectrum branch analysis and photon-resolved ionization thresholds.

Eigenstates of the joint transmon-resonator Hamiltonian are organized into
branches by photon-ladder continuation: each branch starts from the
eigenstate that best matches a bare |j_t, 0_r> seed and climbs rung by rung
to the still-unassigned eigenstate with the largest |<lambda|a^dag|previous>|
overlap. Transmon and mode populations along each branch expose
population-exchange swaps; the threshold classifier turns them into a
critical photon number per parameter point.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .circuit import JointHamiltonian, assemble_hamiltonian
from .operators import (
    ResonatorSpec,
    TransmonSpec,
    resonator_operators,
    transmon_eigensystem,
)

logger = logging.getLogger(__name__)


class DiagonalizationError(RuntimeError):
    """Eigenvector orthonormality defect beyond tolerance."""


@dataclass
class JointEigensystem:
    """Sorted joint eigensystem; states holds eigenvectors as columns."""

    energies: np.ndarray
    states: np.ndarray
    k_levels: int
    n_fock: int
    omega_r: float


def diagonalize(jh: JointHamiltonian) -> JointEigensystem:
    """Dense diagonalization with an orthonormality-defect check.

    The elementwise Gram defect of a backward-stable eigensolve grows
    roughly linearly with matrix dimension, so the tolerance is sized as
    1024*dim*eps (about 1e-9 at dim=4000) rather than a fixed constant.
    """
    energies, states = scipy.linalg.eigh(jh.matrix)
    gram = states.conj().T @ states
    dim = gram.shape[0]
    tol = 1024 * dim * np.finfo(float).eps
    defect = np.max(np.abs(gram - np.eye(dim)))
    if defect > tol:
        raise DiagonalizationError(
            f"eigenvector orthonormality defect {defect:.2e} exceeds "
            f"{tol:.2e} at dim {dim}"
        )
    return JointEigensystem(
        energies=energies,
        states=states,
        k_levels=jh.k_levels,
        n_fock=jh.n_fock,
        omega_r=jh.resonator.spec.omega_r,
    )


@dataclass
class Branch:
    """One photon ladder: arrays indexed by rung (resonator excitation).

    t_marginal[r, k] is the transmon-level population of the rung-r
    eigenstate, so rows sum to one and n_t is its first moment.
    """

    j: int
    eigen_indices: np.ndarray
    energies: np.ndarray
    n_t: np.ndarray
    n_r: np.ndarray
    t_marginal: np.ndarray


@dataclass
class BranchTable:
    """Branch decomposition of a joint eigensystem.

    branch_of / rung_of invert the assignment (value -1 when an eigenstate
    was left unassigned). Rungs are trusted only up to rung_cap =
    n_fock - ceil(4 sqrt(k_levels)); higher rungs feel the Fock truncation.
    """

    branches: list[Branch]
    branch_of: np.ndarray
    rung_of: np.ndarray
    k_levels: int
    n_fock: int
    rung_cap: int
    omega_r: float


_DEGENERACY_TOL = 1e-6


def _pick_unassigned(ov_sq: np.ndarray, assigned: np.ndarray, context: str) -> int:
    masked = np.where(assigned, -1.0, ov_sq)
    lam = int(np.argmax(masked))
    if masked.size - int(assigned.sum()) >= 2:
        second = np.partition(masked, -2)[-2]
        if second >= 0 and masked[lam] - second < _DEGENERACY_TOL:
            logger.warning(
                "degenerate branch-overlap competition at %s: top overlaps "
                "%.3e and %.3e", context, masked[lam], second,
            )
    return lam


def label_branches(es: JointEigensystem, rung_cap: int | None = None) -> BranchTable:
    """Assign eigenstates to photon-ladder branches.

    Branches advance breadth-first (all branches gain rung r before any gains
    rung r+1, branch index ascending within a rung) over still-unassigned
    eigenstates; ties resolve to the lowest eigenvalue index. A warning is
    logged when the top two overlap candidates are degenerate within 1e-6.
    """
    k, n = es.k_levels, es.n_fock
    dim = k * n
    v = es.states
    cap = rung_cap if rung_cap is not None else max(1, n - ceil(4 * sqrt(k)))

    assigned = np.zeros(dim, dtype=bool)
    ladder = np.empty((k, cap), dtype=np.int64)

    for j in range(k):
        ov_sq = np.abs(v[j * n + 0, :]) ** 2
        lam = _pick_unassigned(ov_sq, assigned, f"seed j={j}")
        ladder[j, 0] = lam
        assigned[lam] = True

    sqrt_m = np.sqrt(np.arange(1.0, n))
    for r in range(1, cap):
        prev = v[:, ladder[:, r - 1]].reshape(k, n, k)
        raised = np.zeros_like(prev)
        raised[:, 1:, :] = prev[:, :-1, :] * sqrt_m[None, :, None]
        overlaps = v.conj().T @ raised.reshape(dim, k)
        ov_sq = np.abs(overlaps) ** 2
        for j in range(k):
            lam = _pick_unassigned(ov_sq[:, j], assigned, f"branch {j} rung {r}")
            ladder[j, r] = lam
            assigned[lam] = True

    branch_of = np.full(dim, -1, dtype=np.int64)
    rung_of = np.full(dim, -1, dtype=np.int64)
    level_idx = np.arange(k, dtype=np.float64)
    fock_idx = np.arange(n, dtype=np.float64)
    branches = []
    for j in range(k):
        idx = ladder[j]
        branch_of[idx] = j
        rung_of[idx] = np.arange(cap)
        pops = np.abs(v[:, idx]) ** 2  # (dim, cap)
        pops3 = pops.reshape(k, n, cap)
        n_t = np.einsum("j,jmc->c", level_idx, pops3)
        n_r = np.einsum("m,jmc->c", fock_idx, pops3)
        branches.append(
            Branch(
                j=j,
                eigen_indices=idx.copy(),
                energies=es.energies[idx].copy(),
                n_t=n_t,
                n_r=n_r,
                t_marginal=pops3.sum(axis=1).T,
            )
        )
    return BranchTable(
        branches=branches,
        branch_of=branch_of,
        rung_of=rung_of,
        k_levels=k,
        n_fock=n,
        rung_cap=cap,
        omega_r=es.omega_r,
    )


@dataclass
class ModularSpectrum:
    """Branch energies folded into [0, omega_r); one row per (branch, rung)."""

    branch: np.ndarray
    rung: np.ndarray
    n_r: np.ndarray
    e_mod: np.ndarray
    omega_r: float


def modular_spectrum(bt: BranchTable) -> ModularSpectrum:
    """Fold the first min(15, k_levels) branches modulo the mode frequency."""
    count = min(15, bt.k_levels)
    branch_col, rung_col, nr_col, emod_col = [], [], [], []
    for br in bt.branches[:count]:
        cap = len(br.energies)
        branch_col.append(np.full(cap, br.j))
        rung_col.append(np.arange(cap))
        nr_col.append(br.n_r)
        emod_col.append(np.mod(br.energies, bt.omega_r))
    return ModularSpectrum(
        branch=np.concatenate(branch_col),
        rung=np.concatenate(rung_col),
        n_r=np.concatenate(nr_col),
        e_mod=np.concatenate(emod_col),
        omega_r=bt.omega_r,
    )


@dataclass(frozen=True)
class CritResult:
    """Critical photon numbers from the sustained-threshold classifier."""

    n_crit: int
    censored: bool
    n_crit_ground: int
    censored_ground: bool
    trigger_population_ground: float
    n_crit_excited: int
    censored_excited: bool
    trigger_population_excited: float
    cap: int


def _scan_sustained(n_t: np.ndarray, threshold: float, cap: int,
                    sustain: int) -> tuple[int, bool, float]:
    ok = n_t[:cap] > threshold
    if cap >= sustain:
        runs = ok[: cap - sustain + 1].copy()
        for s in range(1, sustain):
            runs &= ok[s : cap - sustain + 1 + s]
        hits = np.flatnonzero(runs)
        if hits.size:
            i = int(hits[0])
            return i, False, float(n_t[i])
    return cap, True, float("nan")


def find_ncrit(
    bt: BranchTable,
    *,
    cap: int | None = None,
    ground_threshold: float = 2.0,
    excited_threshold: float = 3.0,
    sustain: int = 3,
) -> CritResult:
    """Critical photon number of the computational branches.

    The ground (excited) branch ionizes at the first rung where its transmon
    population exceeds 2 (3) for `sustain` consecutive rungs; the combined
    n_crit is the smaller of the two. Entries that never trigger within the
    search cap are censored and carry the cap value. The default cap is
    min(rung_cap, n_fock - 10).
    """
    if len(bt.branches) < 2:
        raise ValueError("need at least the two computational branches")
    search_cap = min(bt.rung_cap, bt.n_fock - 10)
    if cap is not None:
        search_cap = min(cap, bt.rung_cap)
    ng, cg, pg = _scan_sustained(bt.branches[0].n_t, ground_threshold,
                                 search_cap, sustain)
    ne, ce, pe = _scan_sustained(bt.branches[1].n_t, excited_threshold,
                                 search_cap, sustain)
    return CritResult(
        n_crit=min(ng, ne),
        censored=cg and ce,
        n_crit_ground=ng,
        censored_ground=cg,
        trigger_population_ground=pg,
        n_crit_excited=ne,
        censored_excited=ce,
        trigger_population_excited=pe,
        cap=search_cap,
    )


@dataclass(frozen=True)
class SwapEvent:
    """Population-exchange event between adjacent rungs of a branch."""

    branch: int
    rung: int
    delta_n_t: float
    partner: int
    partner_weight: float


def detect_swaps(
    bt: BranchTable,
    branches: list[int] | None = None,
    jump_threshold: float = 1.0,
    upto: int | None = None,
) -> list[SwapEvent]:
    """Rungs where a branch's transmon population jumps by more than 1.

    The partner is the transmon level carrying the largest foreign
    admixture in the post-jump eigenstate — i.e. whom the branch actually
    exchanged character with, read off the state itself rather than
    inferred from coincident population jumps. At zero asymmetry and
    offset charge eigenstates are transmon-parity-pure, so partners share
    the branch-index parity exactly.
    """
    stop = upto if upto is not None else bt.rung_cap
    deltas = np.stack([br.n_t[:stop][1:] - br.n_t[:stop][:-1]
                       for br in bt.branches])
    events = []
    for j in branches if branches is not None else range(bt.k_levels):
        for r in np.flatnonzero(np.abs(deltas[j]) > jump_threshold):
            marg = bt.branches[j].t_marginal[r + 1].copy()
            marg[j] = -np.inf
            partner = int(np.argmax(marg))
            events.append(
                SwapEvent(
                    branch=j,
                    rung=int(r),
                    delta_n_t=float(deltas[j, r]),
                    partner=partner,
                    partner_weight=float(marg[partner]),
                )
            )
    return events


_AXIS_NAMES = ("e_j_over_e_c", "delta", "d", "n_g")


@dataclass(frozen=True)
class SweepAxis:
    """Swept parameter: e_j_over_e_c, delta (omega_q - omega_r), d, or n_g."""

    name: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.name not in _AXIS_NAMES:
            raise ValueError(f"SweepAxis.name must be one of {_AXIS_NAMES}")
        if len(self.values) == 0:
            raise ValueError("SweepAxis.values must be non-empty")
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))


@dataclass(frozen=True)
class SweepSpec:
    """Grid specification for critical-photon-number maps.

    Un-swept parameters take the base values below. The resonator frequency
    at each point is omega_r = omega_q(point) - delta with the exact
    transmon transition, so `delta` sweeps detuning at fixed qubit physics.
    """

    axis1: SweepAxis
    axis2: SweepAxis
    e_c: float = 0.215
    phi_rzpf: float = 0.09
    e_j_over_e_c: float = 110.0
    delta: float = -2.64
    d: float = 0.0
    n_g: float = 0.0
    kappa: float = 0.0
    k_levels: int = 16
    n_fock: int = 100
    n_charge_cutoff: int = 30
    ncrit_cap: int | None = None

    def __post_init__(self) -> None:
        if self.axis1.name == self.axis2.name:
            raise ValueError("sweep axes must differ")


@dataclass
class CritMap:
    """Gridded critical photon numbers with per-point provenance.

    error[i, j] holds a failure message for points that raised; their numeric
    entries are NaN. Censored points carry the search cap as their value.
    """

    spec: SweepSpec
    n_crit: np.ndarray
    censored: np.ndarray
    n_crit_ground: np.ndarray
    censored_ground: np.ndarray
    trigger_population_ground: np.ndarray
    n_crit_excited: np.ndarray
    censored_excited: np.ndarray
    trigger_population_excited: np.ndarray
    omega_r: np.ndarray
    omega_q: np.ndarray
    error: np.ndarray


def _point_params(spec: SweepSpec, i: int, j: int) -> dict[str, float]:
    params = {
        "e_j_over_e_c": spec.e_j_over_e_c,
        "delta": spec.delta,
        "d": spec.d,
        "n_g": spec.n_g,
    }
    params[spec.axis1.name] = spec.axis1.values[i]
    params[spec.axis2.name] = spec.axis2.values[j]
    return params


def _sweep_point(args: tuple[SweepSpec, int, int]) -> tuple[int, int, dict]:
    spec, i, j = args
    params = _point_params(spec, i, j)
    try:
        with threadpool_limits(limits=1):
            t = TransmonSpec(
                e_c=spec.e_c,
                e_j=spec.e_c * params["e_j_over_e_c"],
                n_g=params["n_g"],
                d=params["d"],
                n_charge_cutoff=spec.n_charge_cutoff,
                k_levels=spec.k_levels,
            )
            tb = transmon_eigensystem(t)
            omega_q = float(tb.energies[1])
            omega_r = omega_q - params["delta"]
            r = ResonatorSpec(omega_r=omega_r, phi_rzpf=spec.phi_rzpf,
                              n_fock=spec.n_fock, kappa=spec.kappa)
            es = diagonalize(assemble_hamiltonian(tb, resonator_operators(r)))
            res = find_ncrit(label_branches(es), cap=spec.ncrit_cap)
        payload = {
            "n_crit": float(res.n_crit),
            "censored": res.censored,
            "n_crit_ground": float(res.n_crit_ground),
            "censored_ground": res.censored_ground,
            "trigger_population_ground": res.trigger_population_ground,
            "n_crit_excited": float(res.n_crit_excited),
            "censored_excited": res.censored_excited,
            "trigger_population_excited": res.trigger_population_excited,
            "omega_r": omega_r,
            "omega_q": omega_q,
            "error": None,
        }
    except Exception as exc:  # recorded per point, never aborts the sweep
        payload = {"error": f"{type(exc).__name__}: {exc}"}
    return i, j, payload


def sweep_ncrit(spec: SweepSpec, workers: int = 1) -> CritMap:
    """Critical-photon-number map over a 2D parameter grid.

    Points are independent work items; with workers > 1 they run in separate
    processes. Every point pins its linear-algebra thread count to 1, so the
    result is bitwise independent of the worker count.
    """
    n1, n2 = len(spec.axis1.values), len(spec.axis2.values)
    shape = (n1, n2)
    out = CritMap(
        spec=spec,
        n_crit=np.full(shape, np.nan),
        censored=np.zeros(shape, dtype=bool),
        n_crit_ground=np.full(shape, np.nan),
        censored_ground=np.zeros(shape, dtype=bool),
        trigger_population_ground=np.full(shape, np.nan),
        n_crit_excited=np.full(shape, np.nan),
        censored_excited=np.zeros(shape, dtype=bool),
        trigger_population_excited=np.full(shape, np.nan),
        omega_r=np.full(shape, np.nan),
        omega_q=np.full(shape, np.nan),
        error=np.full(shape, None, dtype=object),
    )
    tasks = [(spec, i, j) for i in range(n1) for j in range(n2)]
    if workers <= 1:
        results = map(_sweep_point, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_sweep_point, tasks)
    for i, j, payload in results:
        if payload["error"] is not None:
            out.error[i, j] = payload["error"]
            continue
        for name in (
            "n_crit", "n_crit_ground", "n_crit_excited",
            "trigger_population_ground", "trigger_population_excited",
            "omega_r", "omega_q",
        ):
            getattr(out, name)[i, j] = payload[name]
        for name in ("censored", "censored_ground", "censored_excited"):
            getattr(out, name)[i, j] = payload[name]
    if workers > 1:
        pool.shutdown()
    return out
