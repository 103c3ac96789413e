"""Command-line surface: wannier diagnostics, single solves, sweeps.

Commands: ``wannier``, ``ground-state``, ``sweep``, ``baseline-aa``.  All
scientific parameters live in a single JSON config (see config.DEFAULTS);
flags only pick the config file, the output directory and the worker count.
Exit codes: 0 success, 2 invalid configuration, 3 sweep with more than 1%
failed grid points.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import kernels
from ._version import __version__
from .config import ConfigError, axis_values, effective_config, load_config
from .lattice import (LatticeSpec, band_tightbinding_residual, build_wannier,
                      correction_constants, solve_lowest_band,
                      tunneling_from_band, tunneling_from_integral)
from .model import (EffectivePotential, HubbardProblem, ground_state,
                    onsite_aa, onsite_cavity)
from .observables import (FitOptions, PumpField, critical_v_cav, ipr,
                          lyapunov_fit, photon_number)
from .sweep import (Axis, PumpConfig, SweepSpec, default_filename, export_csv,
                    run_sweep)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _lattice_spec(cfg: dict) -> LatticeSpec:
    lat = cfg["lattice"]
    return LatticeSpec(
        depth_W0=lat["depth_W0"],
        planewave_cutoff_M=int(lat["planewave_cutoff_M"]),
        quasimomentum_samples_Nq=int(lat["quasimomentum_samples_Nq"]),
        beta=lat["beta"],
        window_sites=int(lat["window_sites"]),
        points_per_site=int(lat["points_per_site"]),
    )


def _fit_options(cfg: dict) -> FitOptions:
    fit = cfg["fit"]
    return FitOptions(background_factor=fit["background_factor"],
                      min_window_sites=int(fit["min_window_sites"]),
                      min_r2=fit["min_r2"],
                      asymmetry_tol=fit["asymmetry_tol"])


def _pump_config(cfg: dict) -> PumpConfig | None:
    pump = cfg["pump"]
    if not pump["enabled"]:
        return None
    return PumpConfig(pump_mode=pump["pump_mode"], eta=pump["eta"],
                      Omega=pump["Omega"], Delta_a=pump["Delta_a"],
                      g=pump["g"], kappa_over_recoil=pump["kappa_over_recoil"])


def _build_wannier(cfg: dict):
    spec = _lattice_spec(cfg)
    band = solve_lowest_band(spec)
    return spec, band, build_wannier(band, spec)


def cmd_wannier(cfg: dict, out_dir: str) -> int:
    """Report the lattice constants and convergence diagnostics."""
    spec, band, wb = _build_wannier(cfg)
    if spec.depth_W0 == 0.0:
        print("warning: depth_W0 = 0, no lattice: the tight-binding reduction "
              "and the hopping estimates are out of regime", file=sys.stderr)
    t_band = tunneling_from_band(band)
    t_int = tunneling_from_integral(wb, spec)
    a_const, b_const, alpha = correction_constants(wb)
    dens = wb.density_weights
    norm_dev = abs(float(np.sum(dens)) - 1.0)
    p = spec.points_per_site
    overlap = float(np.dot(wb.w0_samples[p:] * wb.quad_weights[p:],
                           wb.w0_samples[:-p]))
    even_dev = float(np.max(np.abs(wb.w0_samples - wb.w0_samples[::-1])))
    print(f"depth_W0={spec.depth_W0:.6g} Er  beta={spec.beta:.12g}")
    print(f"t_integral={t_int:.12e} Er")
    print(f"t_band={t_band:.12e} Er  (rel diff {abs(t_band - t_int) / max(t_int, 1e-300):.3e})")
    print(f"A={a_const:.12e}")
    print(f"B={b_const:.12e}")
    print(f"alpha={alpha:.12e}")
    print(f"norm_deviation={norm_dev:.3e}")
    print(f"neighbor_overlap={overlap:.3e}")
    print(f"evenness_deviation={even_dev:.3e}")
    print(f"tightbinding_residual={band_tightbinding_residual(band):.3e}")
    print(f"backend={kernels.active_backend()}")
    if cfg["output"]["wannier_csv"]:
        path = os.path.join(out_dir, "wannier.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "w0"])
            for x, w in zip(wb.grid, wb.w0_samples):
                writer.writerow(["%.17g" % x, "%.17g" % w])
        print(f"wrote {path}")
    return EXIT_OK


def _single_problem(cfg: dict):
    spec, band, wb = _build_wannier(cfg)
    mdl = cfg["model"]
    L = int(mdl["L"])
    if mdl["mode"] == "aa":
        pot = EffectivePotential.aubry_andre(mdl["v0"], beta=spec.beta)
        profile = onsite_aa(mdl["v0"], spec.beta, L)
    else:
        pot = EffectivePotential.cavity(mdl["v0"], mdl["C"],
                                        mdl["delta_c_prime"], beta=spec.beta)
        profile = onsite_cavity(wb, pot, L)
    problem = HubbardProblem(L=L, t=wb.t, onsite=profile)
    return spec, wb, pot, problem


def cmd_ground_state(cfg: dict, out_dir: str) -> int:
    """Solve one chain and write the wavefunction CSV plus a metrics JSON."""
    spec, wb, pot, problem = _single_problem(cfg)
    gs = ground_state(problem)
    metrics = lyapunov_fit(gs, _fit_options(cfg))
    out = {
        "E0": gs.energy,
        "ipr": metrics.ipr,
        "gamma": metrics.lyapunov_gamma,
        "gamma_stderr": metrics.gamma_stderr,
        "fit_r2": metrics.fit_r2,
        "peak_site": metrics.peak_site,
        "window_sites": metrics.window_sites,
        "background_level": metrics.background_level,
        "solver_method": gs.method,
        "residual": gs.residual,
        "t": wb.t,
        "alpha": wb.alpha,
        "mode": pot.mode,
        "config": cfg,
    }
    if pot.mode != "aa" and pot.C != 0.0:
        out["v_c_analytic"] = critical_v_cav(wb.t, wb.alpha,
                                             pot.delta_c_prime, pot.C)
    pump = _pump_config(cfg)
    if pump is not None and pot.mode != "aa":
        if pump.pump_mode == "cavity_pumped":
            zeta = PumpField("cavity_pumped", pump.eta)
        else:
            zeta = PumpField("atom_pumped", pump.Omega * pump.g / pump.Delta_a)
        out["nbar"] = photon_number(gs, wb, zeta, delta_c=pot.delta_c_prime,
                                    U0=pot.C).mean_photon_number
    if cfg["output"]["wavefunction_csv"]:
        path = os.path.join(out_dir, "ground_state.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "psi_n", "psi_n_sq"])
            for n, amp in enumerate(gs.amplitudes, start=1):
                writer.writerow([n, "%.17g" % amp, "%.17g" % (amp * amp)])
        print(f"wrote {path}")
    metrics_path = os.path.join(out_dir, "ground_state_metrics.json")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {metrics_path}")
    return EXIT_OK


def _sweep_spec(cfg: dict, mode_override: str | None = None) -> SweepSpec:
    spec = _lattice_spec(cfg)
    sweep_cfg = cfg["sweep"]
    needs_t = any(ax is not None and ax["unit"] == "t"
                  for ax in (sweep_cfg["axis1"], sweep_cfg["axis2"]))
    hopping = 0.0
    if needs_t:
        hopping = build_wannier(solve_lowest_band(spec), spec).t
    axis1 = Axis(sweep_cfg["axis1"]["name"],
                 axis_values(sweep_cfg["axis1"], hopping))
    axis2 = None
    if sweep_cfg["axis2"] is not None:
        axis2 = Axis(sweep_cfg["axis2"]["name"],
                     axis_values(sweep_cfg["axis2"], hopping))
    mode = mode_override or cfg["model"]["mode"]
    return SweepSpec(
        axis1=axis1, axis2=axis2, lattice=spec, L=int(cfg["model"]["L"]),
        mode=mode, fixed=dict(sweep_cfg["fixed"]),
        observables=tuple(sweep_cfg["observables"]),
        pump=_pump_config(cfg), fit=_fit_options(cfg),
        name=sweep_cfg["name"],
    )


def _run_and_export(cfg: dict, sweep_spec: SweepSpec, out_dir: str,
                    workers: int) -> int:
    total = sweep_spec.n_points

    def progress(done, n):
        print(f"sweep {sweep_spec.name}: {done}/{n}", file=sys.stderr)

    result = run_sweep(sweep_spec, workers=workers, progress=progress)
    path = os.path.join(out_dir, default_filename(sweep_spec))
    export_csv(result, path, config=cfg)
    print(f"wrote {path}")
    failed = result.n_failed
    if failed:
        print(f"warning: {failed}/{total} grid points failed", file=sys.stderr)
    if failed > 0.01 * total:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_sweep(cfg: dict, out_dir: str, workers: int) -> int:
    """Run the configured sweep and write CSV + metadata sidecar."""
    return _run_and_export(cfg, _sweep_spec(cfg), out_dir, workers)


def cmd_baseline_aa(cfg: dict, out_dir: str, workers: int) -> int:
    """Bichromatic baseline shortcut: force aa mode for the configured sweep."""
    spec = _sweep_spec(cfg, mode_override="aa")
    if spec.axis1.name != "v0":
        raise ConfigError("sweep.axis1.name: baseline-aa scans v0")
    return _run_and_export(cfg, spec, out_dir, workers)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityaa",
        description="Localization of a lattice atom in an incommensurate "
                    "cavity-induced potential",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_workers in (("wannier", False), ("ground-state", False),
                                ("sweep", True), ("baseline-aa", True)):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None,
                         help="JSON config file (defaults apply when omitted)")
        cmd.add_argument("--out", default=".", help="output directory")
        if needs_workers:
            cmd.add_argument("--workers", type=int, default=1,
                             help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config is None:
            cfg = effective_config({})
        else:
            cfg = load_config(args.config)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "wannier":
            return cmd_wannier(cfg, out_dir)
        if args.command == "ground-state":
            return cmd_ground_state(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, args.workers)
        if args.command == "baseline-aa":
            return cmd_baseline_aa(cfg, out_dir, args.workers)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
