"""Fidelity and stabilization-time scans over drive and cavity parameters."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import find_peaks

from ..drives import SystemModel, qubit_cavity_model
from ..floquet import QuasienergySpectrum, ResonanceCondition, continuous_splitting, qubit_spectrum
from ..lindblad import IntegratorConfig, auto_steps
from ..steadystate import build_superoperator, steady_state

PARAMS = ("omega", "delta", "B0", "g", "kappa", "gamma", "gamma_phi")
DEFAULT_FIXED = {"B0": 1.0, "g": 0.05, "kappa": 0.05, "gamma": 0.0025, "gamma_phi": 0.0}


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.name not in PARAMS:
            raise ValueError(f"axis {self.name!r} is not a model parameter; choose from {PARAMS}")
        if self.count < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing must be 'linear' or 'log'")
        if self.spacing == "log" and not (self.lo > 0 and self.hi > 0):
            raise ValueError("log axes need positive bounds")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


def _default_x():
    return Axis("omega", 0.25, 5.0, 40, "log")


def _default_y():
    return Axis("delta", 0.1, 3.6, 40)


@dataclass(frozen=True)
class PointSpec:
    """How a single parameter point is turned into a model and an integrator.

    ``steps_per_period=None`` picks
    ``max(100, ceil(T * max(B0, Delta, omega) / resolution))`` steps.
    """

    n_max: int = 4
    kind: str = "circular"
    qubit_frame: str = "excited_up"
    steps_per_period: int | None = None
    resolution: float = 0.2
    n_t: int = 256

    def model(self, p: dict, n_max: int | None = None) -> SystemModel:
        return qubit_cavity_model(p["B0"], p["omega"], p["delta"], p["g"], p["kappa"], p["gamma"],
                                  n_max=n_max or self.n_max, gamma_phi=p.get("gamma_phi", 0.0),
                                  kind=self.kind, qubit_frame=self.qubit_frame)

    def integrator(self, p: dict) -> IntegratorConfig:
        if self.steps_per_period:
            return IntegratorConfig(self.steps_per_period)
        return IntegratorConfig(auto_steps(self.model(p), self.resolution))

    def spectrum(self, p: dict) -> QuasienergySpectrum:
        cfg = IntegratorConfig(max(self.integrator(p).steps_per_period, 2000))
        return qubit_spectrum(self.model(p), cfg, self.n_t)


@dataclass(frozen=True)
class ScanGrid:
    """Two-axis grid; defaults reproduce the ridge map in units of ``B0``."""

    x: Axis = field(default_factory=_default_x)
    y: Axis = field(default_factory=_default_y)
    fixed: dict = field(default_factory=lambda: dict(DEFAULT_FIXED))
    n_max: int = 4
    kind: str = "circular"
    qubit_frame: str = "excited_up"
    steps_per_period: int | None = None
    resolution: float = 0.2
    n_t: int = 256

    def __post_init__(self):
        if self.x.name == self.y.name:
            raise ValueError("the two axes must address different parameters")
        unknown = set(self.fixed) - set(PARAMS)
        if unknown:
            raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
        missing = set(PARAMS) - set(self.fixed) - {self.x.name, self.y.name} - {"gamma_phi"}
        if missing:
            raise ValueError(f"missing fixed parameters {sorted(missing)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.count, self.y.count

    def params(self, i: int, j: int) -> dict:
        p = {"gamma_phi": 0.0, **self.fixed}
        p[self.x.name] = float(self.x.values()[i])
        p[self.y.name] = float(self.y.values()[j])
        return p

    @property
    def point(self) -> PointSpec:
        return PointSpec(self.n_max, self.kind, self.qubit_frame, self.steps_per_period,
                         self.resolution, self.n_t)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def evaluate_point(spec: PointSpec, p: dict, spectrum: QuasienergySpectrum | None = None,
                   n_max: int | None = None) -> dict:
    """Fidelity, spectral and observable stabilization times at one point."""
    model = spec.model(p, n_max)
    cfg = spec.integrator(p)
    if spectrum is None:
        spectrum = spec.spectrum(p)
    res = steady_state(build_superoperator(model, cfg), model, cfg, target=spectrum)
    return {"F": res.fidelity, "t_stab": res.stabilization_time, "t_obs": res.observable_time,
            "eps_plus": spectrum.eps_plus, "eps_minus": spectrum.eps_minus,
            "delta_eps": spectrum.delta_eps, "n_unit": res.n_unit, "steps": cfg.steps_per_period}


def _spectrum_key(p):
    return (p["B0"], p["omega"])


def _row(grid: ScanGrid, i: int) -> list[dict]:
    """All points with x index ``i``; spectra are shared where the drive agrees."""
    cache: dict = {}
    out = []
    spec = grid.point
    for j in range(grid.y.count):
        p = grid.params(i, j)
        rec = {"i": i, "j": j, "x": p[grid.x.name], "y": p[grid.y.name]}
        try:
            key = _spectrum_key(p)
            if key not in cache:
                cache[key] = spec.spectrum(p)
            rec.update(evaluate_point(spec, p, cache[key]))
            rec["error"] = ""
        except Exception as exc:          # recorded per point; the scan continues
            rec.update({"F": math.nan, "t_stab": math.nan, "t_obs": math.nan, "error": f"{type(exc).__name__}: {exc}"})
        out.append(rec)
    return out


@dataclass
class ScanTable:
    grid: ScanGrid
    records: list

    def array(self, key: str) -> np.ndarray:
        a = np.full(self.grid.shape, np.nan)
        for r in self.records:
            v = r.get(key, math.nan)
            a[r["i"], r["j"]] = math.nan if v is None else v
        return a

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.records if r.get("error")]

    def write_csv(self, path):
        cols = ["i", "j", "x", "y", "F", "t_stab", "t_obs", "delta_eps", "steps", "error"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols[:2] + [self.grid.x.name, self.grid.y.name] + cols[4:])
            for r in self.records:
                w.writerow([_fmt(r.get(c, "")) for c in cols])


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def _load_checkpoint(path, digest) -> dict:
    done = {}
    if path and os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    break                     # torn last line after an interruption
                if entry.get("grid") == digest:
                    done[entry["i"]] = entry["rows"]
    return done


def scan_fidelity(grid: ScanGrid, workers: int = 1, checkpoint: str | None = None,
                  progress=None) -> ScanTable:
    """Evaluate every grid point; rows are checkpointed and merged by index."""
    digest = grid.digest()
    done = _load_checkpoint(checkpoint, digest)
    pending = [i for i in range(grid.x.count) if i not in done]

    def record(i, rows):
        done[i] = rows
        if checkpoint:
            with open(checkpoint, "a") as fh:
                fh.write(json.dumps({"grid": digest, "i": i, "rows": rows}) + "\n")
        if progress:
            progress(len(done), grid.x.count)

    if workers <= 1:
        for i in pending:
            record(i, _row(grid, i))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_row, grid, i): i for i in pending}
            for fut in as_completed(futs):
                record(futs[fut], fut.result())
    records = [r for i in sorted(done) for r in done[i]]
    return ScanTable(grid, records)


def resonance_lines(table: ScanTable, m_range=range(0, 4), n_ph_range=(1, 2), continuous: bool = True) -> dict:
    """``{(m, n_ph): Delta(omega)}`` from the scanned quasienergy splittings.

    Only meaningful when the x axis is omega and the y axis is delta.  With
    ``continuous`` the splitting follows one branch across the omega axis
    (see :func:`continuous_splitting`); otherwise the zeroth-zone value is
    used at every omega and the labels jump where the folding does.
    """
    if (table.grid.x.name, table.grid.y.name) != ("omega", "delta"):
        raise ValueError("resonance lines need an (omega, delta) grid")
    omegas = table.grid.x.values()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)      # all-NaN columns
        deps = np.nanmedian(table.array("delta_eps"), axis=1)
    if continuous:
        deps = continuous_splitting(omegas, deps)
    return {(m, k): np.array([ResonanceCondition.delta_for(m, k, w, de) for w, de in zip(omegas, deps)])
            for m in m_range for k in n_ph_range}


def find_resonance_peaks(x, y, min_prominence: float = 0.02) -> list[dict]:
    """Local maxima of ``y(x)`` with their topographic prominence."""
    x = np.asarray(x)
    y = np.asarray(y)
    idx, props = find_peaks(y, prominence=min_prominence)
    return [{"x": float(x[k]), "value": float(y[k]), "prominence": float(pr)}
            for k, pr in zip(idx, props["prominences"])]


def prominence_near(x, y, x0: float, window: float) -> float:
    """Largest prominence of any local maximum within ``window`` of ``x0`` (0 if none)."""
    x = np.asarray(x)
    idx, props = find_peaks(np.asarray(y), prominence=0)
    best = 0.0
    for k, pr in zip(idx, props["prominences"]):
        if abs(x[k] - x0) <= window:
            best = max(best, float(pr))
    return best


@dataclass
class LinecutResult:
    omega: float
    deltas: np.ndarray
    F: np.ndarray
    t_stab: np.ndarray
    t_obs: np.ndarray
    delta_eps: float
    peaks: list
    resonances: dict            # m -> Delta on the one-photon line
    fits: list = field(default_factory=list)   # FitResult or error string per point

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "F", "t_stab", "t_obs", "t_fit"])
            for k, d in enumerate(self.deltas):
                tf = self.fits[k].T if self.fits and hasattr(self.fits[k], "T") else math.nan
                w.writerow([f"{v:.10g}" for v in (d, self.F[k], self.t_stab[k], self.t_obs[k], tf)])

    def summary(self) -> dict:
        return {"omega": self.omega, "delta_eps": self.delta_eps, "peaks": self.peaks,
                "resonances": {str(m): v for m, v in self.resonances.items()},
                "fits": [f.to_dict() if hasattr(f, "to_dict") else {"error": str(f)} for f in self.fits]}


def _linecut_point(args):
    spec, p, spectrum, fit = args
    out = evaluate_point(spec, p, spectrum)
    if fit:
        out["fit"] = _fit_relaxation(spec, p, spectrum)
    return out


def _fit_relaxation(spec, p, spectrum, lifetimes: float = 6.0):
    """Fit ``P(phi_minus)`` at stroboscopic times starting from ``phi_plus x vacuum``."""
    from .fitting import FitError, fit_exponential

    model = spec.model(p)
    cfg = spec.integrator(p)
    s = build_superoperator(model, cfg).matrix
    phi = spectrum.states[0]
    vac = np.zeros(model.layout.total_dim // 2)
    vac[0] = 1
    psi = np.kron(phi[:, 0], vac)
    proj = np.kron(np.outer(phi[:, 1], phi[:, 1].conj()), np.eye(len(vac)))
    rho = np.outer(psi, psi.conj()).reshape(-1, order="F")
    slow = min(p["kappa"], p["gamma"] or p["kappa"]) or 1.0
    n_per = max(20, int(math.ceil(lifetimes / slow / model.period)))
    n_per = min(n_per, 4000)
    ts, ys = [], []
    for k in range(n_per + 1):
        ts.append(k * model.period)
        ys.append(float(np.real(np.trace(proj @ rho.reshape(proj.shape, order="F")))))
        rho = s @ rho
    try:
        return fit_exponential(np.array(ts), np.array(ys))
    except (FitError, ValueError) as exc:
        return f"fit failed: {exc}"


def detuning_linecut(omega: float, deltas, fixed: dict | None = None, spec: PointSpec = PointSpec(),
                     workers: int = 1, fit: bool = False, min_prominence: float = 0.02,
                     m_range=range(0, 4)) -> LinecutResult:
    """F and stabilization times versus cavity frequency at fixed omega."""
    deltas = np.asarray(deltas, dtype=float)
    base = {**DEFAULT_FIXED, **(fixed or {}), "omega": float(omega)}
    base.pop("delta", None)
    spectrum = spec.spectrum({**base, "delta": float(np.max(np.abs(deltas)))})
    jobs = [(spec, {**base, "delta": float(d)}, spectrum, fit) for d in deltas]
    if workers <= 1:
        results = [_linecut_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_linecut_point, jobs))
    F = np.array([r["F"] for r in results])
    res = {m: ResonanceCondition.delta_for(m, 1, omega, spectrum.delta_eps) for m in m_range}
    return LinecutResult(float(omega), deltas, F, np.array([r["t_stab"] for r in results]),
                         np.array([r["t_obs"] for r in results]), spectrum.delta_eps,
                         find_resonance_peaks(deltas, F, min_prominence), res,
                         [r["fit"] for r in results] if fit else [])


def truncation_check(table: ScanTable, n_points: int = 5, seed: int = 0, increase: int = 2,
                     tol: float = 1e-3) -> list[dict]:
    """Re-evaluate random points with ``n_max + increase`` and report ``|dF|``."""
    grid = table.grid
    ok = [r for r in table.records if not r.get("error")]
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(ok), size=min(n_points, len(ok)), replace=False)
    out = []
    for k in sorted(picks):
        r = ok[k]
        p = grid.params(r["i"], r["j"])
        hi = evaluate_point(grid.point, p, n_max=grid.n_max + increase)
        dF = abs(hi["F"] - r["F"])
        out.append({"i": r["i"], "j": r["j"], "F": r["F"], "F_larger": hi["F"], "dF": dF, "ok": dF < tol})
    return out
