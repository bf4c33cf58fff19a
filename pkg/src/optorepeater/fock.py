"""Composite Hilbert-space bookkeeping and sparse operator algebra.

The space is four truncated bosonic modes (optical a1, a2; mechanical
b1, b2) tensored with a register of three-level atoms. Basis ordering is
the tensor-product (row-major) ordering over

    (n_a1, n_a2, n_b1, n_b2, atom_0, ..., atom_{N-1})

so that every single-site operator is a Kronecker product of small local
matrices and the sparse structure is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import reduce
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .expm import expm

__all__ = [
    "MODES",
    "AtomLevel",
    "BasisKet",
    "BasisRegistry",
    "StateVector",
    "OperatorMatrix",
    "RegistryMismatchError",
    "build_basis",
    "annihilation_op",
    "creation_op",
    "number_op",
    "atomic_transition_op",
    "identity_op",
    "zero_op",
    "compose",
    "adjoint",
    "commutator",
    "matrix_exponential",
    "apply",
]

MODES = ("a1", "a2", "b1", "b2")

DEFAULT_MAX_DIMENSION = 2_000_000
# Dense exponentials beyond this size are refused.
DENSE_EXPM_LIMIT = 4096


class AtomLevel(IntEnum):
    """Levels of a V-type atom; L3 is the common lower level."""

    L1 = 1
    L2 = 2
    L3 = 3

    @property
    def local_index(self) -> int:
        return int(self) - 1


class RegistryMismatchError(ValueError):
    """Operands were built on different registries."""


@dataclass(frozen=True)
class BasisKet:
    """|n_a1, n_a2; n_b1, n_b2; atom levels...>"""

    n_a1: int
    n_a2: int
    n_b1: int
    n_b2: int
    atoms: tuple[AtomLevel, ...]

    def __post_init__(self):
        for name in ("n_a1", "n_a2", "n_b1", "n_b2"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        object.__setattr__(self, "atoms", tuple(AtomLevel(a) for a in self.atoms))

    @classmethod
    def from_label(cls, label: str) -> "BasisKet":
        """Parse labels such as ``"1,0;1,0;1,3;3,3"``.

        The first two groups are the optical (a1, a2) and mechanical
        (b1, b2) occupations; the remaining groups list atom levels.
        """
        groups = [g.strip() for g in label.split(";")]
        if len(groups) < 3:
            raise ValueError(f"malformed ket label {label!r}")
        n_a1, n_a2 = (int(v) for v in groups[0].split(","))
        n_b1, n_b2 = (int(v) for v in groups[1].split(","))
        atoms = [int(v) for g in groups[2:] for v in g.split(",")]
        return cls(n_a1, n_a2, n_b1, n_b2, tuple(atoms))

    @property
    def occupations(self) -> dict[str, int]:
        return {"a1": self.n_a1, "a2": self.n_a2, "b1": self.n_b1, "b2": self.n_b2}

    @property
    def excitations(self) -> int:
        return self.n_a1 + self.n_a2 + self.n_b1 + self.n_b2

    def label(self) -> str:
        atoms = ",".join(str(int(a)) for a in self.atoms)
        return f"{self.n_a1},{self.n_a2};{self.n_b1},{self.n_b2};{atoms}"


@dataclass(frozen=True)
class BasisRegistry:
    n_max: int
    atom_count: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_max + 1,) * 4 + (3,) * self.atom_count

    @property
    def dimension(self) -> int:
        return (self.n_max + 1) ** 4 * 3**self.atom_count

    def index(self, ket: BasisKet) -> int:
        if len(ket.atoms) != self.atom_count:
            raise ValueError(
                f"ket has {len(ket.atoms)} atoms, registry has {self.atom_count}"
            )
        occ = (ket.n_a1, ket.n_a2, ket.n_b1, ket.n_b2)
        if max(occ) > self.n_max:
            raise ValueError(f"ket {ket.label()} exceeds truncation n_max={self.n_max}")
        digits = occ + tuple(a.local_index for a in ket.atoms)
        return int(np.ravel_multi_index(digits, self.shape))

    def ket(self, index: int) -> BasisKet:
        if not 0 <= index < self.dimension:
            raise IndexError(f"basis index {index} out of range")
        digits = np.unravel_index(index, self.shape)
        atoms = tuple(AtomLevel(int(d) + 1) for d in digits[4:])
        return BasisKet(*(int(d) for d in digits[:4]), atoms)

    def __iter__(self) -> Iterator[BasisKet]:
        for i in range(self.dimension):
            yield self.ket(i)

    def __len__(self) -> int:
        return self.dimension

    def mode_occupation(self, mode: str) -> np.ndarray:
        """Occupation of ``mode`` for every basis index, as an int array."""
        axis = MODES.index(mode)
        grids = np.indices(self.shape).reshape(len(self.shape), -1)
        return grids[axis]

    def total_excitation(self) -> np.ndarray:
        grids = np.indices(self.shape).reshape(len(self.shape), -1)
        return grids[:4].sum(axis=0)


def build_basis(
    n_max: int, atom_count: int, max_dimension: int = DEFAULT_MAX_DIMENSION
) -> BasisRegistry:
    """Enumerate the truncated Fock x atomic basis.

    >>> build_basis(2, 4).dimension
    6561
    """
    if int(n_max) != n_max or n_max < 0:
        raise ValueError("n_max must be a non-negative integer")
    if int(atom_count) != atom_count or atom_count < 1:
        raise ValueError("atom_count must be a positive integer")
    registry = BasisRegistry(int(n_max), int(atom_count))
    if registry.dimension > max_dimension:
        raise ValueError(
            f"dimension {registry.dimension} exceeds cap {max_dimension}"
        )
    return registry


@dataclass(frozen=True, eq=False)
class StateVector:
    registry: BasisRegistry
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.registry.dimension:
            raise ValueError("amplitude length does not match registry dimension")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(self.norm() - 1.0) > 1e-10:
            raise ValueError(
                f"state flagged normalized has norm {self.norm():.3e}; "
                "pass normalized=False for residual states"
            )

    @classmethod
    def basis_state(cls, registry: BasisRegistry, ket: BasisKet) -> "StateVector":
        amps = np.zeros(registry.dimension, dtype=complex)
        amps[registry.index(ket)] = 1.0
        return cls(registry, amps)

    @classmethod
    def from_kets(
        cls,
        registry: BasisRegistry,
        kets: Sequence[BasisKet],
        coefficients: Sequence[complex],
        normalized: bool = True,
    ) -> "StateVector":
        amps = np.zeros(registry.dimension, dtype=complex)
        for ket, c in zip(kets, coefficients, strict=True):
            amps[registry.index(ket)] += c
        return cls(registry, amps, normalized=normalized)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, ket: BasisKet) -> complex:
        return complex(self.amplitudes[self.registry.index(ket)])


def _as_csr(matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, dtype=complex)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Sparse complex operator on a registry.

    ``hermitian=True`` is a claim that gets checked on construction.
    """

    registry: BasisRegistry
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        m = _as_csr(self.matrix)
        dim = self.registry.dimension
        if m.shape != (dim, dim):
            raise ValueError(f"operator shape {m.shape} does not match dimension {dim}")
        object.__setattr__(self, "matrix", m)
        if self.hermitian:
            resid = hermiticity_residual(m)
            if resid > 1e-12:
                raise ValueError(f"operator claimed Hermitian but residual is {resid:.3e}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def element(self, bra: BasisKet, ket: BasisKet) -> complex:
        return complex(self.matrix[self.registry.index(bra), self.registry.index(ket)])

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def hermiticity_residual(self) -> float:
        return hermiticity_residual(self.matrix)

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def _check(self, other: "OperatorMatrix"):
        if other.registry != self.registry:
            raise RegistryMismatchError("operators live on different registries")

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.registry, self.matrix + other.matrix)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.registry, self.matrix - other.matrix)

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.registry, -self.matrix)

    def __mul__(self, scalar) -> "OperatorMatrix":
        if isinstance(scalar, OperatorMatrix):
            return NotImplemented
        return OperatorMatrix(self.registry, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return compose(self, other)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    @property
    def dag(self) -> "OperatorMatrix":
        return adjoint(self)


def hermiticity_residual(matrix) -> float:
    diff = matrix - matrix.conj().T
    if sp.issparse(diff):
        return float(abs(diff).max()) if diff.nnz else 0.0
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def _embed(registry: BasisRegistry, site: int, local) -> OperatorMatrix:
    """Kronecker-embed ``local`` on tensor factor ``site``."""
    factors = [sp.identity(d, dtype=complex, format="csr") for d in registry.shape]
    factors[site] = sp.csr_matrix(local, dtype=complex)
    return OperatorMatrix(registry, reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))


def _local_annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def annihilation_op(mode: str, registry: BasisRegistry) -> OperatorMatrix:
    """Truncated ladder operator; a|n> = sqrt(n)|n-1>."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return _embed(registry, MODES.index(mode), _local_annihilation(registry.n_max))


def creation_op(mode: str, registry: BasisRegistry) -> OperatorMatrix:
    return adjoint(annihilation_op(mode, registry))


def number_op(mode: str, registry: BasisRegistry) -> OperatorMatrix:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    local = np.diag(np.arange(registry.n_max + 1, dtype=float))
    return _embed(registry, MODES.index(mode), local)


def atomic_transition_op(
    atom_index: int, l: AtomLevel, m: AtomLevel, registry: BasisRegistry
) -> OperatorMatrix:
    """sigma_lm = |l><m| on atom ``atom_index`` (0-based)."""
    if not 0 <= atom_index < registry.atom_count:
        raise IndexError(
            f"atom index {atom_index} out of range for {registry.atom_count} atoms"
        )
    local = np.zeros((3, 3))
    local[AtomLevel(l).local_index, AtomLevel(m).local_index] = 1.0
    return _embed(registry, 4 + atom_index, local)


def identity_op(registry: BasisRegistry) -> OperatorMatrix:
    return OperatorMatrix(registry, sp.identity(registry.dimension, dtype=complex, format="csr"))


def zero_op(registry: BasisRegistry) -> OperatorMatrix:
    dim = registry.dimension
    return OperatorMatrix(registry, sp.csr_matrix((dim, dim), dtype=complex))


def compose(op1: OperatorMatrix, op2: OperatorMatrix) -> OperatorMatrix:
    if op1.registry != op2.registry:
        raise RegistryMismatchError("cannot compose operators on different registries")
    return OperatorMatrix(op1.registry, op1.matrix @ op2.matrix)


def adjoint(op: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(op.registry, op.matrix.conj().T)


def commutator(op1: OperatorMatrix, op2: OperatorMatrix) -> OperatorMatrix:
    if op1.registry != op2.registry:
        raise RegistryMismatchError("cannot commute operators on different registries")
    return OperatorMatrix(op1.registry, op1.matrix @ op2.matrix - op2.matrix @ op1.matrix)


def matrix_exponential(generator: OperatorMatrix, t: float = 1.0) -> OperatorMatrix:
    """exp(generator * t).

    Diagonal generators are exponentiated entrywise; anything else goes
    through the dense Pade scaling-and-squaring routine.
    """
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    m = generator.matrix
    if m.nnz and not np.all(np.isfinite(m.data)):
        raise ValueError("generator has non-finite entries")
    if generator.is_diagonal():
        diag = np.exp(m.diagonal() * t)
        return OperatorMatrix(generator.registry, sp.diags(diag, format="csr"))
    if generator.registry.dimension > DENSE_EXPM_LIMIT:
        raise ValueError(
            f"dense exponential refused for dimension {generator.registry.dimension}"
        )
    return OperatorMatrix(generator.registry, expm(m.toarray() * t))


def apply(op: OperatorMatrix, state: StateVector) -> StateVector:
    if op.registry != state.registry:
        raise RegistryMismatchError("operator and state live on different registries")
    return StateVector(op.registry, op.matrix @ state.amplitudes, normalized=False)


def restrict(op: OperatorMatrix, kets: Iterable[BasisKet]) -> np.ndarray:
    """Dense matrix of <k_m|op|k_n> over the given kets, in order."""
    idx = [op.registry.index(k) for k in kets]
    return op.matrix[idx][:, idx].toarray()
