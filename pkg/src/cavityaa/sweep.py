"""Parameter-grid sweeps producing phase-diagram datasets.

A sweep walks a one- or two-axis grid; per grid point it maps physical pump
parameters to model parameters when needed, builds the onsite profile from
scratch, solves the chain ground state and evaluates the requested
observables.  Grid points are independent work items, so sweeps parallelize
over a process pool with deterministic, worker-count-independent results:
records are keyed by flat grid index and reassembled in row-major order
(axis1 outer, axis2 inner).

Axes may be model parameters (v0, C, delta_c_prime, W0) or physical pump
parameters (eta, U0, delta_c) in units of the cavity linewidth kappa; the
latter require a PumpConfig carrying the kappa / E_r scale.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._version import __version__
from .lattice import LatticeSpec, WannierBasis, build_wannier, solve_lowest_band
from .model import (EffectivePotential, HubbardProblem, ground_state,
                    onsite_aa, onsite_cavity)
from .observables import (TRANSITION_METHOD, FitOptions, PumpField,
                          detect_transition, ipr, lyapunov_fit, photon_number)

MODEL_AXES = ("v0", "C", "delta_c_prime", "W0")
PHYSICAL_AXES = ("eta", "U0", "delta_c")
AXIS_NAMES = MODEL_AXES[:3] + PHYSICAL_AXES + ("W0",)
OBSERVABLE_NAMES = ("ipr", "gamma", "nbar", "vc")

#: Floating-point CSV cells use this format; 17 significant digits round-trip.
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class PumpConfig:
    """Drive configuration and the frequency scale of the cavity problem.

    All frequencies (eta, Omega, Delta_a, g, U0, delta_c) are expressed in
    units of kappa; kappa_over_recoil fixes hbar kappa / E_r and converts the
    pump-induced potential strength into recoil units.
    """

    pump_mode: str = "cavity_pumped"
    eta: float = 0.0
    Omega: float = 0.0
    Delta_a: float = 0.0
    g: float = 0.0
    kappa_over_recoil: float = 1.0

    def __post_init__(self):
        if self.pump_mode not in ("cavity_pumped", "atom_pumped"):
            raise ValueError("pump_mode must be cavity_pumped or atom_pumped")
        if self.pump_mode == "cavity_pumped" and self.eta < 0.0:
            raise ValueError("cavity_pumped requires eta >= 0")
        if self.pump_mode == "atom_pumped" and self.Delta_a == 0.0:
            raise ValueError("atom_pumped requires Delta_a != 0")
        if self.kappa_over_recoil <= 0.0:
            raise ValueError("kappa_over_recoil must be positive")


def map_physical_params(pump: PumpConfig, U0: float, delta_c: float,
                        eta: float | None = None) -> tuple[float, float, float]:
    """Map (pump, U0, delta_c) in kappa units to model (v0, C, delta_c_prime).

    delta' = delta_c / kappa and C = U0 / kappa are direct; the potential
    strength is v0 = hbar eta^2 / kappa for a driven cavity and
    v0 = hbar Omega^2 delta' / Delta_a for a driven atom, both converted to
    recoil units through kappa_over_recoil.
    """
    dcp = float(delta_c)
    coop = float(U0)
    if pump.pump_mode == "cavity_pumped":
        drive = pump.eta if eta is None else float(eta)
        if drive < 0.0:
            raise ValueError("eta must be non-negative")
        v0 = drive * drive * pump.kappa_over_recoil
    else:
        omega = pump.Omega if eta is None else float(eta)
        v0 = (omega * omega / pump.Delta_a) * dcp * pump.kappa_over_recoil
        if v0 < 0.0:
            raise ValueError(
                "atom-pumped drive yields v0 < 0 for this (delta_c, Delta_a); "
                "flip the sign of Delta_a (the potential strength is defined "
                "non-negative, its sign lives in the potential shape)"
            )
    return float(v0), coop, dcp


@dataclass(frozen=True)
class Axis:
    """Named sweep axis with an explicit grid."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"axis name must be one of {AXIS_NAMES}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] < 1:
            raise ValueError("axis grid must be a non-empty 1-D array")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)

    @classmethod
    def linear(cls, name: str, start: float, stop: float, num: int) -> "Axis":
        return cls(name, np.linspace(start, stop, num))

    @classmethod
    def log(cls, name: str, start: float, stop: float, num: int) -> "Axis":
        return cls(name, np.geomspace(start, stop, num))


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep."""

    axis1: Axis
    axis2: Axis | None
    lattice: LatticeSpec
    L: int = 233
    mode: str = "cavity"  # "cavity" or "aa"
    fixed: dict = field(default_factory=dict)
    observables: tuple = ("ipr",)
    pump: PumpConfig | None = None
    fit: FitOptions = field(default_factory=FitOptions)
    name: str = "sweep"

    def __post_init__(self):
        if self.mode not in ("cavity", "aa"):
            raise ValueError("mode must be 'cavity' or 'aa'")
        names = [self.axis1.name] + ([self.axis2.name] if self.axis2 else [])
        if len(set(names)) != len(names):
            raise ValueError("sweep axes must be distinct")
        for obs in self.observables:
            if obs not in OBSERVABLE_NAMES:
                raise ValueError(f"unknown observable {obs!r}")
        for key in self.fixed:
            if key not in AXIS_NAMES:
                raise ValueError(f"unknown fixed parameter {key!r}")
        physical = [n for n in names + list(self.fixed) if n in PHYSICAL_AXES]
        if physical and self.pump is None:
            raise ValueError(f"physical parameters {physical} require a pump config")
        if "nbar" in self.observables and self.pump is None:
            raise ValueError("nbar requires a pump config")
        if self.L < 3:
            raise ValueError("L must be >= 3")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.axis1.values.shape[0],
                self.axis2.values.shape[0] if self.axis2 else 1)

    @property
    def n_points(self) -> int:
        s = self.shape
        return s[0] * s[1]


@dataclass(frozen=True)
class SweepRecord:
    """One grid point: resolved parameters, energy, observables, flags."""

    axis1: float
    axis2: float | None
    v0: float
    C: float
    delta_c_prime: float
    E0: float
    ipr: float
    gamma: float | None
    nbar: float | None
    flags: str


@dataclass(frozen=True)
class SweepResult:
    records: list
    metadata: dict

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if "solve_failed" in r.flags)


# --- per-point evaluation ---------------------------------------------------

class _Runtime:
    """Per-process state shared by all grid points of one sweep."""

    def __init__(self, spec: SweepSpec, wannier: WannierBasis | None):
        self.spec = spec
        self.wannier = wannier
        self._wannier_cache: dict[float, WannierBasis] = {}
        if wannier is not None:
            self._wannier_cache[wannier.depth_W0] = wannier

    def wannier_for(self, depth: float) -> WannierBasis:
        wb = self._wannier_cache.get(depth)
        if wb is None:
            spec = replace(self.spec.lattice, depth_W0=depth)
            wb = build_wannier(solve_lowest_band(spec), spec)
            self._wannier_cache[depth] = wb
        return wb


def _point_params(spec: SweepSpec, i1: int, i2: int) -> dict:
    params = dict(spec.fixed)
    params[spec.axis1.name] = float(spec.axis1.values[i1])
    if spec.axis2 is not None:
        params[spec.axis2.name] = float(spec.axis2.values[i2])
    return params


def _resolve_model_params(spec: SweepSpec, params: dict) -> tuple[float, float, float]:
    if spec.pump is not None and any(k in params for k in PHYSICAL_AXES):
        return map_physical_params(
            spec.pump,
            U0=params.get("U0", 0.0),
            delta_c=params.get("delta_c", 0.0),
            eta=params.get("eta"),
        )
    return (params.get("v0", 0.0), params.get("C", 0.0),
            params.get("delta_c_prime", 0.0))


def _evaluate_point(runtime: _Runtime, flat_index: int) -> SweepRecord:
    spec = runtime.spec
    n2 = spec.shape[1]
    i1, i2 = divmod(flat_index, n2)
    params = _point_params(spec, i1, i2)
    ax2 = float(spec.axis2.values[i2]) if spec.axis2 is not None else None
    flags = []
    v0 = coop = dcp = float("nan")
    e0 = p_x = gamma = nbar = None
    try:
        v0, coop, dcp = _resolve_model_params(spec, params)
        depth = params.get("W0", spec.lattice.depth_W0)
        wb = runtime.wannier_for(depth)
        if spec.mode == "aa":
            profile = onsite_aa(v0, spec.lattice.beta, spec.L)
            coop, dcp = 0.0, 0.0
        else:
            pot = EffectivePotential.cavity(v0, coop, dcp, beta=spec.lattice.beta)
            profile = onsite_cavity(wb, pot, spec.L)
        problem = HubbardProblem(L=spec.L, t=wb.t, onsite=profile)
        gs = ground_state(problem)
        e0 = gs.energy
        p_x = ipr(gs)
        if "gamma" in spec.observables:
            metrics = lyapunov_fit(gs, spec.fit)
            gamma = metrics.lyapunov_gamma
            if gamma is None:
                flags.append("gamma_absent")
        if "nbar" in spec.observables:
            zeta = _pump_field(spec.pump, params)
            nbar = photon_number(
                gs, wb, zeta,
                delta_c=params.get("delta_c", dcp),
                U0=params.get("U0", coop),
            ).mean_photon_number
    except Exception as exc:  # per-point failures never abort the sweep
        flags.append(f"solve_failed:{type(exc).__name__}")
    return SweepRecord(
        axis1=float(spec.axis1.values[i1]), axis2=ax2,
        v0=v0, C=coop, delta_c_prime=dcp,
        E0=_nan(e0), ipr=_nan(p_x), gamma=gamma, nbar=nbar,
        flags=";".join(flags),
    )


def _nan(value) -> float:
    return float("nan") if value is None else float(value)


def _pump_field(pump: PumpConfig, params: dict) -> PumpField:
    if pump.pump_mode == "cavity_pumped":
        return PumpField("cavity_pumped", params.get("eta", pump.eta))
    return PumpField("atom_pumped", pump.Omega * pump.g / pump.Delta_a)


# --- execution ---------------------------------------------------------------

_WORKER_RUNTIME: _Runtime | None = None


def _init_worker(spec: SweepSpec, wannier: WannierBasis | None):
    global _WORKER_RUNTIME
    _WORKER_RUNTIME = _Runtime(spec, wannier)


def _run_chunk(indices: list) -> list:
    return [(i, _evaluate_point(_WORKER_RUNTIME, i)) for i in indices]


def _chunk_indices(n: int, workers: int) -> list:
    n_chunks = min(n, max(workers * 8, 1))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [list(range(bounds[k], bounds[k + 1]))
            for k in range(n_chunks) if bounds[k + 1] > bounds[k]]


def run_sweep(spec: SweepSpec, wannier: WannierBasis | None = None,
              workers: int = 1, progress=None) -> SweepResult:
    """Execute the sweep and collect one record per grid point.

    The Wannier basis is computed once (or taken from the caller) and shared
    read-only; with workers > 1 the grid is chunked over a process pool.
    Results are identical to a serial run.  progress, when given, is called
    as progress(done, total) after each completed chunk.
    """
    if wannier is None and spec.axis1.name != "W0" and \
            (spec.axis2 is None or spec.axis2.name != "W0"):
        wannier = build_wannier(solve_lowest_band(spec.lattice), spec.lattice)
    n = spec.n_points
    records: list = [None] * n
    if workers <= 1:
        runtime = _Runtime(spec, wannier)
        for i in range(n):
            records[i] = _evaluate_point(runtime, i)
            if progress is not None and (i + 1) % 50 == 0:
                progress(i + 1, n)
    else:
        done = 0
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(spec, wannier)) as pool:
            futures = [pool.submit(_run_chunk, chunk)
                       for chunk in _chunk_indices(n, workers)]
            for fut in concurrent.futures.as_completed(futures):
                for i, rec in fut.result():
                    records[i] = rec
                    done += 1
                if progress is not None:
                    progress(done, n)
    if progress is not None:
        progress(n, n)

    metadata = _build_metadata(spec, wannier)
    result = SweepResult(records=records, metadata=metadata)
    if "vc" in spec.observables:
        metadata["transition_estimates"] = _transition_estimates(spec, result, wannier)
    return result


def _build_metadata(spec: SweepSpec, wannier: WannierBasis | None) -> dict:
    axes = {"axis1": {"name": spec.axis1.name,
                      "values": spec.axis1.values.tolist()}}
    if spec.axis2 is not None:
        axes["axis2"] = {"name": spec.axis2.name,
                         "values": spec.axis2.values.tolist()}
    meta = {
        "sweep_name": spec.name,
        "mode": spec.mode,
        "L": spec.L,
        "axes": axes,
        "fixed": dict(spec.fixed),
        "observables": list(spec.observables),
        "lattice": {
            "depth_W0": spec.lattice.depth_W0,
            "planewave_cutoff_M": spec.lattice.planewave_cutoff_M,
            "quasimomentum_samples_Nq": spec.lattice.quasimomentum_samples_Nq,
            "beta": spec.lattice.beta,
            "window_sites": spec.lattice.window_sites,
            "points_per_site": spec.lattice.points_per_site,
        },
        "methods": {"transition_detector": TRANSITION_METHOD},
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    if wannier is not None:
        meta["constants"] = {"t": wannier.t, "t_band": wannier.t_band,
                             "A": wannier.A, "B": wannier.B,
                             "alpha": wannier.alpha}
    if spec.pump is not None:
        meta["pump"] = {
            "pump_mode": spec.pump.pump_mode, "eta": spec.pump.eta,
            "Omega": spec.pump.Omega, "Delta_a": spec.pump.Delta_a,
            "g": spec.pump.g, "kappa_over_recoil": spec.pump.kappa_over_recoil,
        }
    return meta


def _transition_estimates(spec: SweepSpec, result: SweepResult,
                          wannier: WannierBasis | None) -> list:
    """Per-column critical points when v0 (or eta) is one of the axes."""
    scan_axes = {"v0", "eta"}
    if spec.axis1.name in scan_axes:
        scan, other = "axis1", "axis2"
    elif spec.axis2 is not None and spec.axis2.name in scan_axes:
        scan, other = "axis2", "axis1"
    else:
        return []
    n1, n2 = spec.shape
    grid = np.empty(n1 * n2)
    iprs = np.empty(n1 * n2)
    for k, rec in enumerate(result.records):
        grid[k] = rec.v0
        iprs[k] = rec.ipr
    grid = grid.reshape(n1, n2)
    iprs = iprs.reshape(n1, n2)
    if scan == "axis2":
        columns = [(float(spec.axis1.values[i]), grid[i], iprs[i])
                   for i in range(n1)]
        other_name = spec.axis1.name
    else:
        columns = [(float(spec.axis2.values[j]) if spec.axis2 else None,
                    grid[:, j], iprs[:, j])
                   for j in range(n2)]
        other_name = spec.axis2.name if spec.axis2 else None
    out = []
    for other_value, v0s, curve in columns:
        entry = {"t": None if wannier is None else wannier.t}
        if other_name is not None:
            entry[other_name] = other_value
        if other_name in ("U0", "C"):
            coop = other_value
        else:
            coop = spec.fixed.get("C", spec.fixed.get("U0"))
        if other_name in ("delta_c_prime", "delta_c"):
            dcp = other_value
        else:
            dcp = spec.fixed.get("delta_c_prime", spec.fixed.get("delta_c", 0.0))
        try:
            kwargs = {}
            if spec.mode == "cavity" and wannier is not None and coop:
                kwargs = dict(hopping=wannier.t, alpha=wannier.alpha,
                              C=coop, delta_c_prime=dcp)
            est = detect_transition(v0s, curve, **kwargs)
            entry.update(v_c_numerical=est.v_c_numerical,
                         v_c_analytic=est.v_c_analytic,
                         unresolved=est.unresolved, method=est.method)
        except ValueError as exc:
            entry.update(v_c_numerical=None, v_c_analytic=None,
                         unresolved=True, error=str(exc))
        out.append(entry)
    return out


# --- serialization -----------------------------------------------------------

def _columns(result: SweepResult) -> list:
    meta = result.metadata
    cols = [meta["axes"]["axis1"]["name"]]
    if "axis2" in meta["axes"]:
        cols.append(meta["axes"]["axis2"]["name"])
    for name in ("v0", "C", "delta_c_prime"):
        if name not in cols:
            cols.append(name)
    cols += ["E0", "ipr"]
    if "gamma" in meta["observables"]:
        cols.append("gamma")
    if "nbar" in meta["observables"]:
        cols.append("nbar")
    cols.append("flags")
    return cols


def _record_cells(rec: SweepRecord, cols: list) -> list:
    values = {
        "v0": rec.v0, "C": rec.C, "delta_c_prime": rec.delta_c_prime,
        "E0": rec.E0, "ipr": rec.ipr, "gamma": rec.gamma, "nbar": rec.nbar,
    }
    cells = [FLOAT_FORMAT % rec.axis1]
    rest = cols[1:]
    if rec.axis2 is not None:
        cells.append(FLOAT_FORMAT % rec.axis2)
        rest = cols[2:]
    for name in rest:
        if name == "flags":
            cells.append(rec.flags)
        else:
            v = values[name]
            cells.append("" if v is None else FLOAT_FORMAT % v)
    return cells


def csv_body(result: SweepResult) -> str:
    """CSV text (header + rows); stable across runs and worker counts."""
    cols = _columns(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in result.records:
        writer.writerow(_record_cells(rec, cols))
    return buf.getvalue()


def export_csv(result: SweepResult, path, sidecar_path=None, config=None) -> None:
    """Write the records CSV and its JSON metadata sidecar.

    When the effective run configuration is given it is echoed into the
    sidecar, which then doubles as a config file for reproducing the run.
    """
    path = str(path)
    doc = {"metadata": result.metadata}
    if config is not None:
        doc["config"] = config
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_body(result))
        sidecar = str(sidecar_path) if sidecar_path else _sidecar_path(path)
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed to write sweep output at {path}: {exc}") from exc


def _sidecar_path(csv_path: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + ".meta.json"


def default_filename(spec: SweepSpec) -> str:
    ax2 = spec.axis2.name if spec.axis2 is not None else "none"
    return f"{spec.name}_{spec.axis1.name}x{ax2}.csv"


def read_csv(path) -> tuple[list, list]:
    """Parse an exported CSV back into (column names, row dicts)."""
    with open(str(path), encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        cols = next(reader)
        rows = []
        for raw in reader:
            row = {}
            for name, cell in zip(cols, raw):
                if name == "flags":
                    row[name] = cell
                else:
                    row[name] = None if cell == "" else float(cell)
            rows.append(row)
    return cols, rows
