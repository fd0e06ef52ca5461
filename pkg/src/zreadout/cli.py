"""Command-line driver for the readout-robustness pipelines.

Subcommands map one-to-one onto the library layers:

  spectrum   joint eigensystem -> branch table, modular spectrum, swaps
  ncrit-map  critical-photon-number sweep over a 2D parameter grid
  readout    heterodyne assignment-error curves
  classical  driven-pendulum sections, quantized orbits, deviation scan
  sw-report  closed-form diagonal and second-order dispersive corrections

Every run reads a TOML config, resolves overrides (CLI flags beat config
keys; the ZREADOUT_WORKERS environment variable beats both for the worker
count), writes CSV data plus optional SVG plots into the output
directory, and drops a run_config.json sidecar carrying the fully
resolved configuration and the package version. All randomness flows from
the single master seed and parallel work is partitioned deterministically,
so reruns with the same config and seed produce byte-identical CSVs at
any worker count. Exit status is 0 only when every requested artifact was
written; config problems exit 2 with the offending field path.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .circuit import build_joint, derived_params
from .classical import (
    PendulumParams,
    amplitude_for_photons,
    bohr_sommerfeld_orbit,
    deviation_curve,
    poincare_section,
    sample_initial_conditions,
    separatrix_curve,
    well_state_count,
)
from .operators import (
    ResonatorSpec,
    TransmonSpec,
    resonator_operators,
    transmon_eigensystem,
)
from .readout import (
    FullReadoutModel,
    PulseSpec,
    ReducedReadoutModel,
    assignment_error,
)
from .schrieffer_wolff import sw_diagonal, sw_eta, sw_second_order
from .spectral import (
    SweepAxis,
    SweepSpec,
    detect_swaps,
    diagonalize,
    find_ncrit,
    label_branches,
    modular_spectrum,
    sweep_ncrit,
)

SIDECAR_SCHEMA = 1
_MISSING = object()


class ConfigError(ValueError):
    """Configuration problem; the message starts with the field path."""


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _walk(cfg: dict, path: str, default):
    node = cfg
    seen = []
    for key in path.split("."):
        seen.append(key)
        if not isinstance(node, dict):
            raise ConfigError(f"{'.'.join(seen[:-1])}: expected a table")
        if key not in node:
            if default is _MISSING:
                raise ConfigError(f"{'.'.join(seen)}: missing required key")
            return default, False
        node = node[key]
    return node, True


def cfg_get(cfg: dict, path: str, kind, default=_MISSING):
    """Fetch a dotted key with type checking; field-path error messages."""
    node, found = _walk(cfg, path, default)
    return _coerce(path, node, kind) if found else node


def _coerce(path: str, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected an array, got {value!r}")
        return value
    raise AssertionError(f"unsupported config kind {kind}")


def _number_list(cfg: dict, path: str, default=_MISSING) -> list[float]:
    """A numeric array key; a bare number is accepted as a length-1 list."""
    raw, found = _walk(cfg, path, default)
    if not found:
        return list(raw)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a number or array")
    return [_coerce(f"{path}[{i}]", v, float) for i, v in enumerate(raw)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    """CSV with shortest round-trip float formatting and LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_sidecar(out: Path, command: str, cfg: dict, seed: int,
                  workers: int, plot: bool, artifacts: list[Path]) -> Path:
    resolved = json.loads(json.dumps(cfg))  # deep copy of plain TOML data
    run = dict(resolved.get("run", {}))
    run.update(out=str(out), seed=seed, workers=workers, plot=plot)
    resolved["run"] = run
    payload = {
        "schema": SIDECAR_SCHEMA,
        "version": __version__,
        "command": command,
        "config": resolved,
        "artifacts": sorted(p.name for p in artifacts),
    }
    path = out / "run_config.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "zreadout"
    return plt


def _transmon_from(cfg: dict) -> TransmonSpec:
    e_c = cfg_get(cfg, "transmon.e_c", float)
    e_j = cfg_get(cfg, "transmon.e_j", float, None)
    ratio = cfg_get(cfg, "transmon.e_j_over_e_c", float, None)
    if (e_j is None) == (ratio is None):
        raise ConfigError(
            "transmon.e_j: give exactly one of e_j, e_j_over_e_c")
    try:
        return TransmonSpec(
            e_c=e_c,
            e_j=e_j if e_j is not None else e_c * ratio,
            n_g=cfg_get(cfg, "transmon.n_g", float, 0.0),
            d=cfg_get(cfg, "transmon.d", float, 0.0),
            n_charge_cutoff=cfg_get(cfg, "transmon.n_charge_cutoff", int, 30),
            k_levels=cfg_get(cfg, "transmon.k_levels", int, 16),
        )
    except ValueError as exc:
        raise ConfigError(f"transmon: {exc}") from None


def _resonator_from(cfg: dict) -> ResonatorSpec:
    try:
        return ResonatorSpec(
            omega_r=cfg_get(cfg, "resonator.omega_r", float),
            phi_rzpf=cfg_get(cfg, "resonator.phi_rzpf", float),
            n_fock=cfg_get(cfg, "resonator.n_fock", int, 100),
            kappa=cfg_get(cfg, "resonator.kappa", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"resonator: {exc}") from None


def cmd_spectrum(cfg, out, seed, workers, plot):
    t = _transmon_from(cfg)
    r = _resonator_from(cfg)
    jh = build_joint(t, r)
    bt = label_branches(diagonalize(jh))
    ms = modular_spectrum(bt)
    swaps = detect_swaps(
        bt, jump_threshold=cfg_get(cfg, "spectrum.swap_threshold", float,
                                   1.0))
    crit = find_ncrit(bt, cap=cfg_get(cfg, "spectrum.ncrit_cap", int, None))
    dp = derived_params(jh.transmon, r)

    artifacts = [
        write_csv(
            out / "branches.csv",
            ("branch", "rung", "n_r", "eigen_index", "energy", "n_t"),
            ((br.j, k, br.n_r[k], br.eigen_indices[k], br.energies[k],
              br.n_t[k])
             for br in bt.branches for k in range(len(br.energies))),
        ),
        write_csv(
            out / "modular_spectrum.csv",
            ("branch", "rung", "n_r", "e_mod"),
            zip(ms.branch, ms.rung, ms.n_r, ms.e_mod),
        ),
        write_csv(
            out / "swaps.csv",
            ("branch", "rung", "delta_n_t", "partner", "partner_weight"),
            ((s.branch, s.rung, s.delta_n_t, s.partner, s.partner_weight)
             for s in swaps),
        ),
        write_csv(
            out / "ncrit.csv",
            ("n_crit", "censored", "n_crit_ground", "censored_ground",
             "trigger_population_ground", "n_crit_excited",
             "censored_excited", "trigger_population_excited", "cap",
             "omega_q", "omega_r", "delta", "z"),
            [(crit.n_crit, crit.censored, crit.n_crit_ground,
              crit.censored_ground, crit.trigger_population_ground,
              crit.n_crit_excited, crit.censored_excited,
              crit.trigger_population_excited, crit.cap, dp.omega_q,
              r.omega_r, dp.delta, dp.z)],
        ),
    ]
    if plot:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        sc = ax.scatter(ms.n_r, ms.e_mod, c=ms.branch, s=7, cmap="viridis")
        ax.set_xlabel(r"resonator excitation $n_r$")
        ax.set_ylabel(r"$E \,\mathrm{mod}\, \nu_r$ (GHz)")
        fig.colorbar(sc, ax=ax, label="branch")
        fig.tight_layout()
        f1 = out / "modular_spectrum.svg"
        fig.savefig(f1)
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for br in bt.branches[: min(6, bt.k_levels)]:
            ax.plot(np.arange(len(br.n_t)), br.n_t, label=f"branch {br.j}")
        ax.set_xlabel("rung (photons)")
        ax.set_ylabel(r"transmon population $\langle n_t \rangle$")
        ax.legend(fontsize=8)
        fig.tight_layout()
        f2 = out / "branch_populations.svg"
        fig.savefig(f2)
        plt.close(fig)
        artifacts += [f1, f2]
    return artifacts


def _axis_from(cfg: dict, key: str) -> SweepAxis:
    name = cfg_get(cfg, f"{key}.name", str)
    values = cfg_get(cfg, f"{key}.values", list, None)
    if values is None:
        start = cfg_get(cfg, f"{key}.start", float)
        stop = cfg_get(cfg, f"{key}.stop", float)
        count = cfg_get(cfg, f"{key}.count", int)
        values = np.linspace(start, stop, count).tolist()
    try:
        return SweepAxis(name=name, values=tuple(
            _coerce(f"{key}.values[{i}]", v, float)
            for i, v in enumerate(values)))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def cmd_ncrit_map(cfg, out, seed, workers, plot):
    axis1 = _axis_from(cfg, "sweep.axis1")
    axis2 = _axis_from(cfg, "sweep.axis2")
    if axis1.name == axis2.name:
        raise ConfigError("sweep.axis2.name: duplicates sweep.axis1.name")
    spec = SweepSpec(
        axis1=axis1,
        axis2=axis2,
        e_c=cfg_get(cfg, "sweep.e_c", float, 0.215),
        phi_rzpf=cfg_get(cfg, "sweep.phi_rzpf", float, 0.09),
        e_j_over_e_c=cfg_get(cfg, "sweep.e_j_over_e_c", float, 110.0),
        delta=cfg_get(cfg, "sweep.delta", float, -2.64),
        d=cfg_get(cfg, "sweep.d", float, 0.0),
        n_g=cfg_get(cfg, "sweep.n_g", float, 0.0),
        k_levels=cfg_get(cfg, "sweep.k_levels", int, 16),
        n_fock=cfg_get(cfg, "sweep.n_fock", int, 100),
        n_charge_cutoff=cfg_get(cfg, "sweep.n_charge_cutoff", int, 30),
        ncrit_cap=cfg_get(cfg, "sweep.ncrit_cap", int, None),
    )
    cm = sweep_ncrit(spec, workers=workers)
    a1, a2 = spec.axis1, spec.axis2
    rows = []
    for i, v1 in enumerate(a1.values):
        for j, v2 in enumerate(a2.values):
            rows.append((
                v1, v2, cm.n_crit[i, j], cm.censored[i, j],
                cm.n_crit_ground[i, j], cm.censored_ground[i, j],
                cm.n_crit_excited[i, j], cm.censored_excited[i, j],
                cm.omega_r[i, j], cm.omega_q[i, j], cm.error[i, j],
            ))
    artifacts = [write_csv(
        out / "ncrit_map.csv",
        (a1.name, a2.name, "n_crit", "censored", "n_crit_ground",
         "censored_ground", "n_crit_excited", "censored_excited",
         "omega_r", "omega_q", "error"),
        rows,
    )]
    if plot:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        img = ax.imshow(cm.n_crit, origin="lower", aspect="auto",
                        cmap="magma")
        # censored points carry the cap, not a measurement: mark them
        ci, cj = np.nonzero(cm.censored)
        ax.plot(cj, ci, "wx", markersize=7, markeredgewidth=1.6)
        ax.set_xticks(np.arange(len(a2.values)),
                      [f"{v:g}" for v in a2.values], rotation=45,
                      fontsize=7)
        ax.set_yticks(np.arange(len(a1.values)),
                      [f"{v:g}" for v in a1.values], fontsize=7)
        ax.set_xlabel(a2.name)
        ax.set_ylabel(a1.name)
        fig.colorbar(img, ax=ax, label=r"$n_{\rm crit}$ (photons)")
        fig.tight_layout()
        f = out / "ncrit_map.svg"
        fig.savefig(f)
        plt.close(fig)
        artifacts.append(f)
    return artifacts


def cmd_readout(cfg, out, seed, workers, plot):
    kind = cfg_get(cfg, "readout.model", str, "reduced")
    if kind == "reduced":
        model = ReducedReadoutModel(
            chi_z=cfg_get(cfg, "readout.chi_z", float),
            n_fock=cfg_get(cfg, "readout.n_fock", int, 30),
            delta_r=cfg_get(cfg, "readout.delta_r", float, 0.0),
        )
    elif kind == "full":
        model = FullReadoutModel.from_joint(
            build_joint(_transmon_from(cfg), _resonator_from(cfg)))
    else:
        raise ConfigError(
            f"readout.model: expected 'reduced' or 'full', got {kind!r}")

    alphas = _number_list(cfg, "pulse.alpha_f")
    tau = cfg_get(cfg, "pulse.tau", float)
    omega_d = cfg_get(cfg, "pulse.omega_d", float)
    kappa = cfg_get(cfg, "pulse.kappa", float)
    dt = cfg_get(cfg, "readout.dt", float)
    n_traj = cfg_get(cfg, "readout.n_traj", int)
    tau_grid = _number_list(cfg, "readout.tau_grid")

    rows = []
    curves = {}
    for alpha_f in alphas:
        try:
            p = PulseSpec(alpha_f=alpha_f, tau=tau, omega_d=omega_d,
                          kappa=kappa)
        except ValueError as exc:
            raise ConfigError(f"pulse: {exc}") from None
        # common master seed across amplitudes: shared noise streams make
        # the curves directly comparable
        curve = assignment_error(model, p, tau_grid, n_traj, seed=seed,
                                 dt=dt, workers=workers)
        curves[alpha_f] = curve
        for k in range(curve.tau.size):
            rows.append((alpha_f, curve.tau[k], curve.error[k],
                         curve.ci_low[k], curve.ci_high[k], curve.snr[k],
                         curve.gaussian_error[k], curve.n_traj))
    artifacts = [write_csv(
        out / "error_curve.csv",
        ("alpha_f", "tau", "error", "ci_low", "ci_high", "snr",
         "gaussian_error", "n_traj"),
        rows,
    )]
    if plot:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        floor = 1.0 / (2 * n_traj)
        for alpha_f, curve in curves.items():
            shown = np.maximum(curve.error, floor)
            line, = ax.semilogy(curve.tau, shown, "o-",
                                label=rf"$\alpha_f = {alpha_f:g}$")
            ax.fill_between(curve.tau, np.maximum(curve.ci_low, floor),
                            np.maximum(curve.ci_high, floor),
                            alpha=0.2, color=line.get_color())
            ax.semilogy(curve.tau, np.maximum(curve.gaussian_error, floor),
                        "--", color=line.get_color(), linewidth=0.9)
        ax.axhline(floor, color="grey", linewidth=0.7, linestyle=":")
        ax.set_xlabel(r"integration time $\tau$ (ns)")
        ax.set_ylabel("assignment error")
        ax.legend()
        fig.tight_layout()
        f = out / "error_curve.svg"
        fig.savefig(f)
        plt.close(fig)
        artifacts.append(f)
    return artifacts


def cmd_classical(cfg, out, seed, workers, plot):
    z = cfg_get(cfg, "classical.z", float)
    omega_d_tilde = cfg_get(cfg, "classical.omega_d_tilde", float, 1.38)
    drives = [
        _coerce(f"classical.drives[{i}]", v, str)
        for i, v in enumerate(
            cfg_get(cfg, "classical.drives", list,
                    ["parametric", "charge"]))
    ]
    photons = _number_list(cfg, "classical.photons", [49.0])
    n_samples = cfg_get(cfg, "classical.n_samples", int, 24)
    n_periods = cfg_get(cfg, "classical.n_periods", int, 200)
    steps = cfg_get(cfg, "classical.steps_per_period", int, 500)

    sep = separatrix_curve()
    artifacts = [write_csv(out / "separatrix.csv", ("phi", "n"),
                           ((pt.phi, pt.n) for pt in sep))]

    orbits = [bohr_sommerfeld_orbit(j, z)
              for j in range(well_state_count(z))]
    artifacts.append(write_csv(
        out / "orbits.csv", ("j", "energy", "area"),
        ((o.j, o.energy, o.area) for o in orbits)))
    artifacts.append(write_csv(
        out / "orbit_contours.csv", ("j", "phi", "n"),
        ((o.j, f, v) for o in orbits for f, v in zip(o.phi, o.n))))

    phi0, n0 = sample_initial_conditions(z, n_samples, seed)
    ics = list(zip(phi0, n0))
    sections = {}

    def section_rows(data):
        for i in range(data.phi.shape[0]):
            for k in range(data.phi.shape[1]):
                yield i, k + 1, data.phi[i, k], data.n[i, k]

    base = PendulumParams(z=z, drive=drives[0] if drives else "parametric",
                          amplitude=0.0, omega_d_tilde=omega_d_tilde)
    undriven = poincare_section(base, ics, n_periods, steps)
    sections["undriven"] = undriven
    artifacts.append(write_csv(
        out / "section_undriven.csv", ("sample", "period", "phi", "n"),
        section_rows(undriven)))

    for drive in drives:
        for n_ph in photons:
            try:
                params = PendulumParams(
                    z=z, drive=drive,
                    amplitude=amplitude_for_photons(n_ph, drive),
                    omega_d_tilde=omega_d_tilde)
            except ValueError as exc:
                raise ConfigError(f"classical: {exc}") from None
            data = poincare_section(params, ics, n_periods, steps)
            tag = f"{drive}_{n_ph:g}"
            sections[tag] = data
            artifacts.append(write_csv(
                out / f"section_{tag}.csv",
                ("sample", "period", "phi", "n"), section_rows(data)))

    dev_cfg = cfg.get("classical", {}).get("deviation", {})
    dev_rows = []
    dev_curves = {}
    if dev_cfg:
        dev_periods = cfg_get(cfg, "classical.deviation.n_periods", int, 120)
        for drive in drives:
            grid = _number_list(cfg, f"classical.deviation.{drive}")
            params = PendulumParams(z=z, drive=drive, amplitude=0.0,
                                    omega_d_tilde=omega_d_tilde)
            amps = [amplitude_for_photons(n_ph, drive) for n_ph in grid]
            curve = deviation_curve(params, amps, n_samples, seed,
                                    n_periods=dev_periods,
                                    steps_per_period=steps)
            dev_curves[drive] = (grid, curve)
            for n_ph, amp, dev in zip(grid, curve.amplitudes,
                                      curve.mean_deviation):
                dev_rows.append((drive, n_ph, amp, dev, curve.n_periods))
        artifacts.append(write_csv(
            out / "deviation.csv",
            ("drive", "photons", "amplitude", "mean_deviation",
             "n_periods"), dev_rows))

    if plot:
        plt = _plt()
        names = list(sections)
        fig, axes = plt.subplots(1, len(names),
                                 figsize=(3.4 * len(names), 3.2),
                                 squeeze=False)
        sep_phi = np.array([pt.phi for pt in sep])
        sep_n = np.array([pt.n for pt in sep])
        for ax, name in zip(axes[0], names):
            data = sections[name]
            ax.plot(sep_phi, sep_n, "k-", linewidth=0.7)
            ax.plot(data.phi, data.n, ".", markersize=0.8, alpha=0.6)
            ax.set_title(name, fontsize=9)
            ax.set_xlim(-np.pi, np.pi)
            ax.set_xlabel(r"$\tilde\varphi$")
        axes[0, 0].set_ylabel(r"$\tilde n$")
        fig.tight_layout()
        f = out / "sections.svg"
        fig.savefig(f)
        plt.close(fig)
        artifacts.append(f)

        if dev_curves:
            fig, ax = plt.subplots(figsize=(5.2, 4.0))
            for drive, (grid, curve) in dev_curves.items():
                ax.loglog(grid, curve.mean_deviation / curve.n_periods,
                          "o-", label=drive)
            ax.axhline(np.pi, color="grey", linestyle=":", linewidth=0.8)
            ax.set_xlabel("drive strength (photon equivalents)")
            ax.set_ylabel("deviation per period")
            ax.legend()
            fig.tight_layout()
            f = out / "deviation.svg"
            fig.savefig(f)
            plt.close(fig)
            artifacts.append(f)
    return artifacts


def cmd_sw_report(cfg, out, seed, workers, plot):
    t = _transmon_from(cfg)
    r = _resonator_from(cfg)
    tb = transmon_eigensystem(t)
    ro = resonator_operators(r)
    dm = sw_diagonal(tb, r)
    sc = sw_second_order(
        dm, sw_eta(tb, ro),
        j_max=cfg_get(cfg, "sw.j_max", int, 2),
        m_max=cfg_get(cfg, "sw.m_max", int, 10),
    )
    artifacts = [
        write_csv(
            out / "sw_spectrum.csv",
            ("j", "m", "energy0", "correction", "energy2"),
            ((j, m, sc.energy0[j, m], sc.correction[j, m],
              sc.energy2[j, m])
             for j in range(sc.j_max) for m in range(sc.m_max + 1)),
        ),
        write_csv(
            out / "sw_pulls.csv",
            ("j", "m", "chi"),
            ((j, m, dm.chi[j, m])
             for j in range(min(4, dm.k_levels))
             for m in range(1, min(dm.n_fock, sc.m_max + 1))),
        ),
        write_csv(
            out / "sw_summary.csv",
            ("omega_r", "phi_rzpf", "e_j", "chi_z0"),
            [(dm.omega_r, dm.phi_rzpf, dm.e_j, dm.chi_z0)],
        ),
    ]
    if plot:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(5.6, 4.0))
        m = np.arange(1, min(dm.n_fock, sc.m_max + 1))
        for j in range(min(4, dm.k_levels)):
            ax.plot(m, 1e3 * dm.chi[j, 1: m[-1] + 1], "o-",
                    label=f"level {j}")
        ax.set_xlabel("photon number $m$")
        ax.set_ylabel(r"per-photon pull $\chi_j(m)$ (MHz)")
        ax.legend()
        fig.tight_layout()
        f = out / "sw_pulls.svg"
        fig.savefig(f)
        plt.close(fig)
        artifacts.append(f)
    return artifacts


_COMMANDS = (
    ("spectrum", cmd_spectrum,
     "branch table, modular spectrum, swap events, n_crit"),
    ("ncrit-map", cmd_ncrit_map,
     "critical photon number over a 2D parameter grid"),
    ("readout", cmd_readout, "heterodyne assignment-error curves"),
    ("classical", cmd_classical,
     "driven-pendulum sections, orbits, deviation scan"),
    ("sw-report", cmd_sw_report,
     "diagonal model and second-order dispersive corrections"),
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zreadout",
        description="longitudinal-readout robustness pipelines")
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, handler, help_text in _COMMANDS:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, type=Path,
                        help="TOML run configuration")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (overrides run.out)")
        sp.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides run.seed)")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (overrides run.workers; "
                             "ZREADOUT_WORKERS overrides both)")
        sp.add_argument("--plot", choices=("on", "off"), default=None,
                        help="emit SVG plots (overrides run.plot)")
        sp.set_defaults(handler=handler)
    return ap


def resolve_workers(flag: int | None, cfg: dict) -> int:
    env = os.environ.get("ZREADOUT_WORKERS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(
                f"ZREADOUT_WORKERS: expected an integer, got {env!r}"
            ) from None
    if flag is not None:
        return flag
    return cfg_get(cfg, "run.workers", int, 1)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out if args.out is not None \
            else cfg_get(cfg, "run.out", str, None)
        if out is None:
            raise ConfigError("run.out: missing required key (or pass --out)")
        out = Path(out)
        seed = args.seed if args.seed is not None \
            else cfg_get(cfg, "run.seed", int, 0)
        workers = resolve_workers(args.workers, cfg)
        plot = {"on": True, "off": False}[args.plot] \
            if args.plot is not None else cfg_get(cfg, "run.plot", bool, True)
        out.mkdir(parents=True, exist_ok=True)
        artifacts = args.handler(cfg, out, seed, workers, plot)
        write_sidecar(out, args.command, cfg, seed, workers, plot, artifacts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: wrote {len(artifacts)} artifacts"
          f" + run_config.json to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
