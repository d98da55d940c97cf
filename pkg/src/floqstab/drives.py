"""Periodic drive protocols and Hamiltonian assembly.

All frequencies are angular frequencies (hbar = 1).  A drive supplies the
effective field ``B(t) = (B_x, B_y, B_z)`` that enters ``H = sigma . B / 2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import Boson, Operator, Qubit, SpaceLayout, boson_ops, embed, qubit_ops

DRIVE_KINDS = ("circular", "semicircle", "elliptical", "static")
QUBIT_FRAMES = ("excited_up", "ground_up")


class HierarchyWarning(UserWarning):
    """Raised (as a warning) when Gamma < kappa <~ g << Delta does not hold."""


@dataclass(frozen=True)
class DriveProtocol:
    """Effective field of period ``T_mod = 2 pi / omega``.

    circular:   B = B0 (sin wt, 0, cos wt)
    semicircle: B = B0 (max(0, sin wt), 0, -cos wt)
    elliptical: B = (bx sin wt, 0, bz cos wt)
    static:     B = (bx, 0, bz), constant; ``omega`` only fixes the period
    """

    kind: str
    omega: float
    B0: float = 0.0
    bx: float = 0.0
    bz: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise ValueError(f"unknown drive kind {self.kind!r}; expected one of {DRIVE_KINDS}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    def phase(self, t):
        return np.mod(self.omega * np.asarray(t, dtype=float), 2 * np.pi)

    def field(self, t) -> np.ndarray:
        """Field components, shape ``(..., 3)``."""
        ph = self.phase(t)
        s, c = np.sin(ph), np.cos(ph)
        zero = np.zeros_like(ph)
        if self.kind == "circular":
            comps = (self.B0 * s, zero, self.B0 * c)
        elif self.kind == "semicircle":
            comps = (self.B0 * np.maximum(0.0, s), zero, -self.B0 * c)
        elif self.kind == "elliptical":
            comps = (self.bx * s, zero, self.bz * c)
        else:
            comps = (zero + self.bx, zero, zero + self.bz)
        return np.stack(comps, axis=-1)

    def field_range(self, n: int = 4096) -> tuple[float, float]:
        """Min and max of ``|B(t)|`` over one period (sampled)."""
        mag = np.linalg.norm(self.field(np.linspace(0, self.period, n, endpoint=False)), axis=-1)
        return float(mag.min()), float(mag.max())


@dataclass(frozen=True)
class Cavity:
    delta: float
    g: float
    kappa: float = 0.0
    n_max: int = 4
    name: str = "a"


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Driven qubit coupled to zero or more lossy cavities.

    ``qubit_frame`` fixes which qubit state the field's z axis points to.
    ``"excited_up"`` couples the field through ``sigma_z`` as defined in
    :mod:`floqstab.algebra` (``+z`` is ``|e>``).  ``"ground_up"`` applies the
    field in the frame rotated by pi about x, so ``B_z`` and ``B_y`` enter
    with the opposite sign and ``+z`` is ``|g>``.  The photon-pump reference
    numbers are reproduced in the ``ground_up`` frame (see README).
    """

    drive: DriveProtocol
    cavities: tuple = ()
    gamma: float = 0.0          # qubit relaxation, jump sqrt(gamma) sigma_minus
    gamma_phi: float = 0.0      # pure dephasing, jump sqrt(gamma_phi / 2) sigma_z
    qubit_frame: str = "excited_up"
    layout: SpaceLayout = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        if self.qubit_frame not in QUBIT_FRAMES:
            raise ValueError(f"qubit_frame must be one of {QUBIT_FRAMES}")
        names = [c.name for c in self.cavities]
        if len(set(names)) != len(names):
            raise ValueError("cavity names must be unique")
        for c in self.cavities:
            if c.kappa < 0:
                raise ValueError(f"negative photon loss rate on cavity {c.name!r}")
        if self.gamma < 0 or self.gamma_phi < 0:
            raise ValueError("rates must be non-negative")
        lay = SpaceLayout((Qubit(),) + tuple(Boson(c.n_max, c.name) for c in self.cavities))
        object.__setattr__(self, "layout", lay)

    @property
    def period(self) -> float:
        return self.drive.period

    @property
    def is_closed(self) -> bool:
        return not self.dissipators()

    def replace(self, **changes) -> "SystemModel":
        kw = dict(drive=self.drive, cavities=self.cavities, gamma=self.gamma,
                  gamma_phi=self.gamma_phi, qubit_frame=self.qubit_frame)
        kw.update(changes)
        return SystemModel(**kw)

    def closed(self) -> "SystemModel":
        """Same Hamiltonian with every dissipator switched off."""
        return self.replace(cavities=tuple(_with(c, kappa=0.0) for c in self.cavities),
                            gamma=0.0, gamma_phi=0.0)

    def qubit_only(self) -> "SystemModel":
        return SystemModel(self.drive, (), self.gamma, self.gamma_phi, self.qubit_frame)

    # -- operator pieces -------------------------------------------------

    def qubit_op(self, name: str) -> Operator:
        return embed(qubit_ops()[name], 0, self.layout)

    def cavity_op(self, index: int, name: str = "a") -> Operator:
        return embed(boson_ops(self.cavities[index].n_max)[name], index + 1, self.layout)

    def field_operators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Matrices multiplying ``B_x``, ``B_y``, ``B_z`` in the Hamiltonian."""
        sign = 1.0 if self.qubit_frame == "excited_up" else -1.0
        return (0.5 * self.qubit_op("sx").matrix,
                0.5 * sign * self.qubit_op("sy").matrix,
                0.5 * sign * self.qubit_op("sz").matrix)

    def cavity_diagonal(self) -> np.ndarray:
        """Diagonal of ``sum_c Delta_c n_c`` (real)."""
        h = np.zeros(self.layout.total_dim)
        for i, c in enumerate(self.cavities):
            h += c.delta * np.real(np.diag(self.cavity_op(i, "n").matrix))
        return h

    def coupling(self) -> np.ndarray:
        """Static Jaynes-Cummings coupling ``sum_c g_c (a_c^dag s- + a_c s+)``."""
        d = self.layout.total_dim
        v = np.zeros((d, d), dtype=complex)
        sm = self.qubit_op("sm").matrix
        for i, c in enumerate(self.cavities):
            if c.g == 0:
                continue
            a = self.cavity_op(i, "a").matrix
            term = c.g * a.conj().T @ sm
            v += term + term.conj().T
        return v

    def dissipators(self) -> list[tuple[Operator, float]]:
        """Unscaled jump operators with their rates; zero rates are dropped."""
        out = []
        for i, c in enumerate(self.cavities):
            if c.kappa > 0:
                out.append((self.cavity_op(i, "a"), c.kappa))
        if self.gamma > 0:
            out.append((self.qubit_op("sm"), self.gamma))
        if self.gamma_phi > 0:
            out.append((self.qubit_op("sz"), self.gamma_phi / 2))
        return out

    def validate(self, stacklevel: int = 2) -> list[str]:
        """Check the scale hierarchy; violations are warned about and returned."""
        msgs = []
        bmin, bmax = self.drive.field_range()
        for c in self.cavities:
            if c.g == 0:
                continue
            if self.gamma and c.kappa and not self.gamma < c.kappa:
                msgs.append(f"cavity {c.name}: qubit loss {self.gamma:g} is not below kappa {c.kappa:g}")
            if c.kappa > 2 * c.g:
                msgs.append(f"cavity {c.name}: kappa {c.kappa:g} exceeds g {c.g:g} (bad-cavity regime)")
            if not c.g < abs(c.delta):
                msgs.append(f"cavity {c.name}: g {c.g:g} is not small compared to Delta {c.delta:g}")
        for m in msgs:
            warnings.warn(m, HierarchyWarning, stacklevel=stacklevel + 1)
        return msgs


def _with(c: Cavity, **kw) -> Cavity:
    d = dict(delta=c.delta, g=c.g, kappa=c.kappa, n_max=c.n_max, name=c.name)
    d.update(kw)
    return Cavity(**d)


def hamiltonian(model: SystemModel, t: float) -> Operator:
    """``H(t) = sigma . B(t) / 2 + sum_c [Delta_c n_c + g_c (a_c^dag s- + a_c s+)]``."""
    b = model.drive.field(t)
    fx, fy, fz = model.field_operators()
    m = b[0] * fx + b[1] * fy + b[2] * fz + np.diag(model.cavity_diagonal()) + model.coupling()
    return Operator(model.layout, m)


def jump_operators(model: SystemModel) -> list[Operator]:
    """Jump operators already scaled by the square root of their rates."""
    return [np.sqrt(rate) * op for op, rate in model.dissipators()]


def qubit_cavity_model(B0, omega, delta, g, kappa, gamma, n_max=4, gamma_phi=0.0,
                       kind="circular", qubit_frame="excited_up", **drive_kw) -> SystemModel:
    """Single-cavity model; elliptical drives take ``bx``/``bz`` keywords."""
    drive = DriveProtocol(kind, omega, B0=B0, **drive_kw)
    return SystemModel(drive, (Cavity(delta, g, kappa, n_max),), gamma, gamma_phi, qubit_frame)


def boost_model(B0=20.0, omega=1.5, delta_b=None, delta_s=None, g_b=1.0, g_s=1.0, kappa_s=1.0,
                n_b=45, n_s=3, qubit_frame="ground_up") -> SystemModel:
    """Two-cavity pump model; defaults are the pump parameters in units of ``g_b``."""
    if delta_b is None:
        delta_b = omega * (1 + np.sqrt(5)) / 2
    if delta_s is None:
        delta_s = B0
    drive = DriveProtocol("semicircle", omega, B0=B0)
    cavs = (Cavity(delta_b, g_b, 0.0, n_b, "b"), Cavity(delta_s, g_s, kappa_s, n_s, "s"))
    return SystemModel(drive, cavs, 0.0, 0.0, qubit_frame)
