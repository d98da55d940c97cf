"""``floqstab`` command line: one subcommand per experiment.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 scan finished
with failed points (``--keep-going`` accepts those and exits 0).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .drives import Cavity, DriveProtocol, SystemModel
from .experiments.fitting import FitError
from .floquet import DegenerateSpectrumError
from .lindblad import IntegrationError, IntegratorConfig
from .steadystate import SteadyStateError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4


class NumericalFailure(RuntimeError):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


class Run:
    """Output directory, timings and list of written files for one command."""

    def __init__(self, out, args):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.timings = {}
        self.files = []
        self._t = time.perf_counter()

    def path(self, name) -> Path:
        self.files.append(name)
        return self.out / name

    def stage(self, name):
        now = time.perf_counter()
        self.timings[name] = round(now - self._t, 3)
        self._t = now

    @property
    def threads(self) -> int:
        return self.args.threads or os.cpu_count() or 1


# -- model construction --------------------------------------------------------

def _model(spec: dict, n_override=None) -> SystemModel:
    d = spec["drive"]
    drive = DriveProtocol(d["kind"], d["omega"], B0=d["B0"], bx=d["bx"], bz=d["bz"])
    cavs = tuple(Cavity(c["delta"], c["g"], c["kappa"], n_override or c["n_max"], c["name"])
                 for c in spec["cavities"])
    return SystemModel(drive, cavs, spec["gamma"], spec["gamma_phi"], spec["qubit_frame"])


def _cfg(section: dict, args) -> IntegratorConfig:
    steps = args.steps_per_period or section.get("integrator", {}).get("steps_per_period", 2000)
    return IntegratorConfig(steps)


# -- subcommands -------------------------------------------------------------------

def cmd_quasienergy(conf, run):
    from .floquet import (circular_quasienergies, coupling_matrix_element, monodromy, periodic_states,
                          quasienergies, resonance_map, upper_state, write_resonances_csv, write_states_csv)

    s = conf.data
    model = _model(s["model"], run.args.truncation_override)
    model.validate()
    cfg = _cfg(s, run.args)
    q = model.qubit_only().closed()
    spec = quasienergies(monodromy(q, cfg), q.period, reference=upper_state(q))
    spec = periodic_states(q, spec, s["n_t"], cfg)
    run.stage("spectrum")
    rows = [("plus", spec.eps_plus), ("minus", spec.eps_minus)]
    exact = circular_quasienergies(q.drive.B0, q.drive.omega) if q.drive.kind == "circular" else None
    with open(run.path("quasienergies.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["branch", "eps", "eps_exact"])
        for k, (b, e) in enumerate(rows):
            w.writerow([b, f"{e:.12g}", f"{exact[k]:.12g}" if exact else ""])
    write_states_csv(run.path("periodic_states.csv"), spec)
    # matrix elements per unit coupling when the model has no cavity
    full = model if model.cavities else model.replace(cavities=(Cavity(0.0, 1.0, 0.0, max(2, s["photon_sector"] + 1)),))
    m0, m1 = s["m_range"]
    n = s["photon_sector"]
    with open(run.path("matrix_elements.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "abs", "re", "im"])
        for m in range(m0, m1 + 1):
            h = coupling_matrix_element(full, spec, m, n)
            w.writerow([m, f"{abs(h):.12g}", f"{h.real:.12g}", f"{h.imag:.12g}"])
    summary = {"eps_plus": spec.eps_plus, "eps_minus": spec.eps_minus, "delta_eps": spec.delta_eps,
               "omega": spec.omega, "gauge": spec.gauge}
    if model.cavities:
        k0, k1 = s["n_ph_range"]
        res = resonance_map(model.cavities[0].delta, spec.omega, spec.delta_eps, range(m0, m1 + 1), range(k0, k1 + 1))
        write_resonances_csv(run.path("resonances.csv"), res)
        summary["closest_resonance"] = {"m": res[0].m, "n_ph": res[0].n_ph, "offset": res[0].offset}
    write_json(run.path("summary.json"), summary)
    run.stage("write")
    return 0


def cmd_steady_state(conf, run):
    from .floquet import qubit_spectrum
    from .steadystate import build_superoperator, steady_state, write_spectrum_csv

    s = conf.data
    model = _model(s["model"], run.args.truncation_override)
    model.validate()
    cfg = _cfg(s, run.args)
    target = qubit_spectrum(model, cfg, s["n_t"])
    run.stage("spectrum")
    sop = build_superoperator(model, cfg)
    run.stage("superoperator")
    res = steady_state(sop, model, cfg, target=target)
    run.stage("steady_state")
    write_spectrum_csv(run.path("superoperator_spectrum.csv"), res.eigenvalues, res.period)
    with open(run.path("steady_state_t.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        d = model.layout.total_dim
        w.writerow(["t"] + [f"p{i}" for i in range(d)])
        for t, r in zip(res.times, res.samples):
            w.writerow([f"{t:.10g}"] + [f"{v:.10g}" for v in np.real(np.diag(r))])
    write_json(run.path("summary.json"), {
        "fidelity": res.fidelity, "stabilization_time": res.stabilization_time,
        "observable_time": res.observable_time, "n_unit": res.n_unit, "defects": res.defects,
        "trace_defect": sop.trace_defect(), "choi_min_eigenvalue": sop.choi_min_eigenvalue()})
    return 0


def cmd_scan(conf, run):
    from .experiments.plotting import heatmap_svg
    from .experiments.scan import Axis, ScanGrid, resonance_lines, scan_fidelity, truncation_check

    s = conf.data
    scale = 2 * math.pi if conf.units == "mhz" else 1.0     # every scan parameter is a frequency

    def axis(a):
        return Axis(a["name"], a["min"] * scale, a["max"] * scale, a["count"], a["spacing"])

    grid = ScanGrid(axis(s["x"]), axis(s["y"]), {k: v for k, v in s["fixed"].items() if v is not None},
                    run.args.truncation_override or s["n_max"], s["kind"],
                    steps_per_period=run.args.steps_per_period or s["steps_per_period"],
                    resolution=s["resolution"], n_t=s["n_t"])
    table = scan_fidelity(grid, run.threads, checkpoint=str(run.out / "checkpoint.jsonl"))
    run.files.append("checkpoint.jsonl")
    run.stage("scan")
    table.write_csv(run.path("scan.csv"))
    summary = {"grid": grid.digest(), "failures": [{"i": r["i"], "j": r["j"], "x": r["x"], "y": r["y"],
                                                    "error": r["error"]} for r in table.failures]}
    overlays = []
    if (grid.x.name, grid.y.name) == ("omega", "delta"):
        m0, m1 = s["m_range"]
        k0, k1 = s["n_ph_range"]
        lines = resonance_lines(table, range(m0, m1 + 1), range(k0, k1 + 1))
        summary["resonance_lines"] = {f"m{m}_nph{k}": v for (m, k), v in lines.items()}
        for (m, k), v in lines.items():
            overlays.append((grid.x.values(), v, "white", "6 4" if k == 1 else "2 3"))
    xlog = grid.x.spacing == "log"
    F = table.array("F")
    run.path("fidelity.svg").write_text(heatmap_svg(grid.x.values(), grid.y.values(), F, grid.x.name, grid.y.name,
                                                    "steady-state fidelity", "F", xlog, 0.0, 1.0, overlays))
    kappa = s["fixed"].get("kappa") or 1.0
    tt = np.log10(table.array("t_obs") * kappa)
    run.path("stabilization_time.svg").write_text(heatmap_svg(
        grid.x.values(), grid.y.values(), tt, grid.x.name, grid.y.name, "stabilization time",
        "log10(t kappa)", xlog, overlays=overlays))
    if s["truncation_points"]:
        summary["truncation_check"] = truncation_check(table, s["truncation_points"])
    run.stage("analysis")
    write_json(run.path("summary.json"), summary)
    if table.failures and not run.args.keep_going:
        return EXIT_PARTIAL
    return 0


def cmd_linecut(conf, run):
    from .experiments.plotting import line_svg
    from .experiments.scan import PointSpec, detuning_linecut

    s = conf.data
    deltas = np.linspace(s["delta"]["min"], s["delta"]["max"], s["delta"]["count"])
    spec = PointSpec(run.args.truncation_override or s["n_max"], steps_per_period=run.args.steps_per_period or s["steps_per_period"],
                     resolution=s["resolution"], n_t=s["n_t"])
    fixed = {k: v for k, v in s["fixed"].items() if v is not None}
    lc = detuning_linecut(s["omega"], deltas, fixed, spec, run.threads, s["fit"], s["min_prominence"])
    run.stage("linecut")
    lc.write_csv(run.path("linecut.csv"))
    vl = [(v, "gray", "4 3") for v in lc.resonances.values() if deltas.min() <= v <= deltas.max()]
    run.path("linecut.svg").write_text(line_svg([(deltas, lc.F, "F")], "delta", "F", "fidelity line cut", vlines=vl))
    write_json(run.path("summary.json"), lc.summary())
    return 0


def cmd_adiabatic(conf, run):
    from .experiments.adiabatic import DeviceParams, adiabatic_experiment
    from .experiments.plotting import line_svg

    s = conf.data
    dev = DeviceParams(**{**s["device"], **({"n_max": run.args.truncation_override} if run.args.truncation_override else {})})
    dets = np.linspace(s["detuning"]["min"], s["detuning"]["max"], s["detuning"]["count"])
    res = adiabatic_experiment(dets, dev, s["duration"], s["samples_per_period"], run.threads)
    run.stage("simulate")
    res.write_csv(str(run.out / "adiabatic"))
    run.files += ["adiabatic_summary.csv", "adiabatic_curves.csv"]
    vl = [(0.0, "gray", "4 3"), (-dev.B0 / 2, "gray", "2 3")]
    run.path("stabilization_time.svg").write_text(line_svg([(dets, res.t_stab, "fit"), (dets, res.t_spectral, "spectral")],
                                                           "Delta - B0 (MHz)", "T_stab (us)", vlines=vl))
    run.path("steady_population.svg").write_text(line_svg([(dets, res.p_steady_fit, "fit"), (dets, res.p_steady, "exact")],
                                                           "Delta - B0 (MHz)", "P(phi_-)", vlines=vl))
    write_json(run.path("summary.json"), {"detunings": dets, "t_stab": res.t_stab, "p_steady_fit": res.p_steady_fit,
                                          "p_steady": res.p_steady, "t_spectral": res.t_spectral,
                                          "fits": [{b: (f[b].to_dict() if hasattr(f[b], "to_dict") else f[b]) for b in f}
                                                   for f in res.fits]})
    return 0


def cmd_elliptical(conf, run):
    from .experiments.adiabatic import DeviceParams
    from .experiments.elliptical import elliptical_run
    from .experiments.plotting import line_svg

    s = conf.data
    dev = DeviceParams(**{**s["device"], **({"n_max": run.args.truncation_override} if run.args.truncation_override else {})})
    res = elliptical_run(s["bx"], s["bz"], s["delta"], s["omega"], None, dev, s["samples_per_period"], s["lifetimes"])
    run.stage("simulate")
    res.write_csv(run.path("elliptical.csv"))
    run.path("elliptical.svg").write_text(line_svg(
        [(res.times, res.p_minus["plus"], "from phi+"), (res.times, res.p_minus["minus"], "from phi-")],
        "t (us)", "P(phi_-)", f"Bx={s['bx']:g} Bz={s['bz']:g} Delta={s['delta']:g} MHz", ylim=(0, 1)))
    write_json(run.path("summary.json"), {"converged_at_us": res.converged_at(s["tolerance"]),
                                          "final_distance": res.distance[-1], "split_range_mhz": res.split_range})
    return 0


def cmd_boost(conf, run):
    from .drives import boost_model
    from .experiments.boost import boost_run
    from .experiments.plotting import two_heatmaps_svg

    s = conf.data
    n_b = run.args.truncation_override or s["n_b"]
    cfg = IntegratorConfig(run.args.steps_per_period or s["steps_per_period"])
    kw = {k: s[k] for k in ("B0", "omega", "delta_b", "delta_s", "g_b", "kappa_s", "n_s", "qubit_frame")}
    runs = {}
    for label, gs in (("stabilized", s["g_s"]), ("unstabilized", 0.0)):
        runs[label] = boost_run(boost_model(n_b=n_b, g_s=gs, **kw), s["periods"], s["n_b0"], cfg,
                                s["samples_per_period"], label=label)
        run.stage(label)
        runs[label].write_csv(run.path(f"boost_{label}.csv"))
    M = min(s["report_period"], s["periods"])
    panels = []
    for label, r in runs.items():
        panels.append({"x": r.times / r.period, "y": np.arange(r.P.shape[1]), "z": r.P,
                       "xlabel": "t / T", "ylabel": "n_b", "title": label, "zlabel": "P(n_b)"})
    run.path("boost.svg").write_text(two_heatmaps_svg(*panels))
    summary = {}
    for label, r in runs.items():
        summary[label] = {"at_report": r.at_period(M), "pump_rate": r.pump_rate(M),
                          "pump_rate_full": r.pump_rate(), "trace_drift": r.correction,
                          "boundary_population": r.boundary}
    summary["rephasing"] = runs["stabilized"].rephasing_times()
    write_json(run.path("summary.json"), summary)
    return 0


def cmd_fit(conf, run):
    from .experiments.fitting import fit_exponential

    s = conf.data
    src = Path(s["input"])
    if not src.is_absolute():
        src = Path(conf.path).parent / src
    try:
        with open(src, newline="") as fh:
            rows = list(csv.DictReader(fh))
        t = np.array([float(r[s["t_column"]]) for r in rows])
        y = np.array([float(r[s["y_column"]]) for r in rows])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read fit input {src}: {exc}", conf.path) from None
    res = fit_exponential(t, y, s["model"])
    write_json(run.path("fit.json"), res.to_dict())
    return 0


COMMANDS = {"quasienergy": cmd_quasienergy, "steady-state": cmd_steady_state, "scan": cmd_scan,
            "linecut": cmd_linecut, "adiabatic": cmd_adiabatic, "elliptical": cmd_elliptical,
            "boost": cmd_boost, "fit": cmd_fit}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floqstab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"floqstab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--out", default=None, help="output directory (default: out/<command>)")
        sp.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
        sp.add_argument("--keep-going", action="store_true", help="exit 0 even if some scan points failed")
        sp.add_argument("--truncation-override", type=int, default=None, metavar="N",
                        help="replace every cavity truncation n_max with N")
        sp.add_argument("--steps-per-period", type=int, default=None, metavar="N",
                        help="RK4 steps per drive period")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        conf = load_config(args.config)
        if conf.experiment != args.command:
            raise ConfigError(f"config is for experiment {conf.experiment!r}, not {args.command!r}", conf.path,
                              conf.lines.get(("experiment",)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args.out or os.path.join("out", args.command), args)
    error = None
    try:
        code = COMMANDS[args.command](conf, run)
    except ConfigError as exc:
        code, error = EXIT_CONFIG, f"config error: {exc}"
    except (IntegrationError, SteadyStateError, DegenerateSpectrumError, FitError, NumericalFailure,
            RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        code, error = EXIT_NUMERIC, f"numerical failure: {type(exc).__name__}: {exc}"
    if error:
        print(error, file=sys.stderr)
    manifest = {"experiment": args.command, "config_path": str(Path(args.config).resolve()),
                "output_dir": str(run.out.resolve()), "version": __version__, "config_hash": conf.digest,
                "files": sorted(set(run.files)), "wall_clock_s": round(time.perf_counter() - t0, 3),
                "timings_s": run.timings, "exit_code": code, "error": error}
    write_json(run.out / "manifest.json", manifest)
    return code

if __name__ == "__main__":
    sys.exit(main())
