"""Dense operator algebra on a qubit tensored with truncated bosonic modes.

Basis ordering is factor-major with the last factor running fastest, i.e. the
standard ``np.kron`` ordering.  The qubit basis is ``(|e>, |g>)`` so that
``sigma_z |e> = +|e>`` and ``sigma_minus |e> = |g>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np


@dataclass(frozen=True)
class Qubit:
    name: str = "q"

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Boson:
    n_max: int
    name: str = "a"

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"boson truncation n_max must be a positive integer, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class SpaceLayout:
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a layout needs at least one factor")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, name: str) -> int:
        for i, f in enumerate(self.factors):
            if f.name == name:
                return i
        raise KeyError(f"no factor named {name!r} in layout")

    def basis_index(self, *labels: int) -> int:
        """Flat index of a product basis state given one label per factor."""
        return int(np.ravel_multi_index(labels, self.dims))

    def basis_state(self, *labels: int) -> np.ndarray:
        psi = np.zeros(self.total_dim, dtype=complex)
        psi[self.basis_index(*labels)] = 1.0
        return psi


# qubit labels in the computational basis
E, G = 0, 1


@dataclass(frozen=True, eq=False)
class Operator:
    layout: SpaceLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match layout dimension {n}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def _check(self, other: "Operator"):
        if other.layout != self.layout:
            raise ValueError("operators live on different layouts")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.layout, -self.matrix)

    def __mul__(self, c):
        if np.isscalar(c):
            return Operator(self.layout, c * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix @ other.matrix)
        return self.matrix @ other

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return hermiticity_defect(self.matrix) <= tol


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative Frobenius norm of the anti-Hermitian part."""
    norm = np.linalg.norm(m)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(m - m.conj().T) / norm)


def qubit_ops() -> dict[str, Operator]:
    """Pauli matrices and ladder operators on a lone qubit."""
    lay = SpaceLayout((Qubit(),))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return {
        "sx": Operator(lay, sx),
        "sy": Operator(lay, sy),
        "sz": Operator(lay, sz),
        "sp": Operator(lay, (sx + 1j * sy) / 2),
        "sm": Operator(lay, (sx - 1j * sy) / 2),
    }


def boson_ops(n_max: int) -> dict[str, Operator]:
    """Truncated annihilation, creation and number operators.

    ``[a, a^dag]`` equals the identity except for the ``(n_max, n_max)`` entry,
    which is ``-n_max`` because the ladder is cut off.
    """
    lay = SpaceLayout((Boson(n_max),))
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)
    return {
        "a": Operator(lay, a),
        "adag": Operator(lay, a.conj().T),
        "n": Operator(lay, np.diag(np.arange(n_max + 1)).astype(complex)),
    }


def embed(op_on_factor: Operator | np.ndarray, factor_index: int, layout: SpaceLayout) -> Operator:
    """Place a single-factor operator at ``factor_index`` with identities elsewhere."""
    mat = op_on_factor.matrix if isinstance(op_on_factor, Operator) else np.asarray(op_on_factor, dtype=complex)
    if not 0 <= factor_index < len(layout.factors):
        raise IndexError(f"factor index {factor_index} out of range for {len(layout.factors)} factors")
    dim = layout.factors[factor_index].dim
    if mat.shape != (dim, dim):
        raise ValueError(f"operator of shape {mat.shape} does not fit factor {factor_index} of dimension {dim}")
    mats = [np.eye(f.dim, dtype=complex) for f in layout.factors]
    mats[factor_index] = mat
    return Operator(layout, reduce(np.kron, mats))


def identity(layout: SpaceLayout) -> Operator:
    return Operator(layout, np.eye(layout.total_dim, dtype=complex))


def qubit_cavity_layout(*n_max: int) -> SpaceLayout:
    """Layout ``[Qubit, Boson(n_max[0]), Boson(n_max[1]), ...]``."""
    names = ["a"] if len(n_max) == 1 else [f"a{i}" for i in range(len(n_max))]
    return SpaceLayout((Qubit(),) + tuple(Boson(n, name) for n, name in zip(n_max, names)))


def partial_diagonal(rho: np.ndarray, layout: SpaceLayout, factor_index: int) -> np.ndarray:
    """Populations of one factor's basis states after tracing out the others."""
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    diag = diag.reshape(diag.shape[:-1] + layout.dims)
    axes = tuple(diag.ndim - len(layout.dims) + i for i in range(len(layout.dims)) if i != factor_index)
    return diag.sum(axis=axes)


def reduced_density(rho: np.ndarray, layout: SpaceLayout, factor_index: int) -> np.ndarray:
    """Reduced density matrix of a single factor."""
    dims = layout.dims
    k = len(dims)
    r = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = list(letters[k:2 * k])
    for i in range(k):
        if i != factor_index:
            col[i] = row[i]
    spec = "".join(row) + "".join(col) + "->" + row[factor_index] + col[factor_index]
    return np.einsum(spec, r)
