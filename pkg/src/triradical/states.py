"""
Density matrices, initial-state families, entropies and the basis-independent
coherence measures.

All entropies are in bits. States are not renormalized on construction: a
state evolved under recombination keeps its decayed trace, and callers decide
when to normalize.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, NumericalConsistencyError, RejectedInputError
from .pauli import site_index

EPS_EIG = 1e-12
"""Eigenvalues at or below this contribute nothing to an entropy"""
NEGATIVE_EIG_LIMIT = -1e-8
HERMITIAN_TOL = 1e-10

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    A Hermitian positive-semidefinite matrix on ``log2(dim)`` qubits with
    ``0 < trace <= 1``.
    """
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        d = m.shape[0] if m.ndim == 2 else 0
        if m.ndim != 2 or m.shape != (d, d) or d < 2 or d & (d - 1):
            raise RejectedInputError(f'A density matrix must be square with a 2^n dimension, got shape {m.shape}')
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def checked(cls, matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> DensityMatrix:
        """Construct and verify Hermiticity, positivity and the trace bound"""
        rho = cls(matrix)
        m = rho.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise RejectedInputError('Density matrix is not Hermitian')
        if rho.min_eigenvalue() < -tol:
            raise RejectedInputError(f'Density matrix has eigenvalue {rho.min_eigenvalue()!r} < 0')
        if not 0 < rho.trace <= 1 + tol:
            raise RejectedInputError(f'Density matrix trace {rho.trace!r} is outside (0, 1]')
        return rho

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim.bit_length() - 1

    @functools.cached_property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(h)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def normalized(self) -> DensityMatrix:
        tr = self.trace
        if tr <= 0:
            raise RejectedInputError(f'Cannot normalize a state with trace {tr!r}')
        return DensityMatrix(self.matrix / tr)

    def scaled(self, factor: float) -> DensityMatrix:
        return DensityMatrix(self.matrix * factor)

    def expectation(self, op: np.ndarray) -> float:
        """``tr[op rho]`` for a Hermitian ``op``"""
        return float(np.einsum('ij,ji->', op, self.matrix).real)

    def __matmul__(self, other: DensityMatrix) -> DensityMatrix:
        return tensor(self, other)


@dataclass(frozen=True)
class BlochVector:
    """A qubit Bloch vector; ``|r| <= 1`` for a physical state"""
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def of(cls, r: Sequence[float]) -> BlochVector:
        x, y, z = (float(v) for v in r)
        return cls(x, y, z)

    @property
    def r(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r))

    @property
    def is_diagonal(self) -> bool:
        """Whether the qubit state is diagonal in the sigma_z basis"""
        return abs(self.x) < 1e-12 and abs(self.y) < 1e-12


class Family(enum.Enum):
    BALL_UNIFORM = 'ball'
    Z_AXIS = 'zaxis'

    @classmethod
    def parse(cls, value: 'str | Family') -> Family:
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise RejectedInputError(
                f'Unknown state family {value!r} (expected one of '
                f'{", ".join(f.value for f in cls)})') from None


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def tensor(*states: DensityMatrix | np.ndarray) -> DensityMatrix:
    """Kronecker product in site order"""
    mats = [s.matrix if isinstance(s, DensityMatrix) else np.asarray(s) for s in states]
    return DensityMatrix(functools.reduce(np.kron, mats))


def qubit_from_bloch(r: BlochVector | Sequence[float]) -> DensityMatrix:
    """``(1 + r.sigma) / 2``"""
    if not isinstance(r, BlochVector):
        r = BlochVector.of(r)
    if r.norm > 1 + 1e-12:
        raise RejectedInputError(f'Bloch vector {r.r.tolist()!r} lies outside the unit ball')
    m = 0.5 * np.eye(2, dtype=complex)
    for comp, s in zip(r.r, SIGMA):
        m = m + 0.5 * comp * s
    return DensityMatrix(m)


def bloch_of(rho: DensityMatrix) -> BlochVector:
    """Bloch vector of a (normalized) qubit state"""
    if rho.dim != 2:
        raise RejectedInputError(f'Bloch vectors exist for qubits only, got dimension {rho.dim}')
    m = rho.normalized().matrix
    return BlochVector.of([float(np.trace(s @ m).real) for s in SIGMA])


def initial_system_state(r: BlochVector | Sequence[float]) -> DensityMatrix:
    """``rho0 (x) rho0 (x) 1/2`` on the radicals A, B, C"""
    rho0 = qubit_from_bloch(r)
    return tensor(rho0, rho0, maximally_mixed(2))


def environment_state(r: BlochVector | Sequence[float]) -> DensityMatrix:
    """Three identical environment qubits ``rho0^(x)3``"""
    rho0 = qubit_from_bloch(r)
    return tensor(rho0, rho0, rho0)


def sample_bloch(rng: np.random.Generator, family: 'Family | str') -> BlochVector:
    """
    Draw a Bloch vector: uniform in the unit ball (direction x radius u^(1/3)),
    or on the z axis with z uniform in [-1, 1].
    """
    family = Family.parse(family)
    if family is Family.Z_AXIS:
        return BlochVector(0.0, 0.0, float(rng.uniform(-1.0, 1.0)))
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    radius = rng.uniform() ** (1.0 / 3.0)
    return BlochVector.of(v * radius)


def sample_initial_family(rng: np.random.Generator, family: 'Family | str') -> DensityMatrix:
    """An initial radical state ``rho0 (x) rho0 (x) 1/2`` with ``rho0`` drawn from ``family``"""
    return initial_system_state(sample_bloch(rng, family))


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> DensityMatrix:
    """Unit-trace random state from a complex Ginibre matrix"""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_pure_state(rng: np.random.Generator, dim: int) -> DensityMatrix:
    return random_density_matrix(rng, dim, rank=1)


def _entropy_of_eigenvalues(lam: np.ndarray) -> float:
    if lam.size and lam[0] < NEGATIVE_EIG_LIMIT:
        raise NumericalConsistencyError(f'Negative eigenvalue {lam[0]!r} in a density matrix')
    pos = lam[lam > EPS_EIG]
    return float(-np.sum(pos * np.log2(pos)))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray, raw: bool = False) -> float:
    """
    ``-sum l log2 l``. By default the state is trace-normalized first; with
    ``raw=True`` the entropy is taken of the matrix as given.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    lam = rho.eigenvalues()
    if not raw:
        tr = rho.trace
        if tr <= 0:
            raise RejectedInputError(f'Cannot take the entropy of a state with trace {tr!r}')
        lam = lam / tr
    return max(0.0, _entropy_of_eigenvalues(lam))


def coherence_c1(rho: DensityMatrix) -> float:
    """Basis-independent coherence ``log2 d - S(rho)`` of a unit-trace state"""
    if abs(rho.trace - 1.0) > 1e-8:
        raise ContractError(
            f'coherence_c1 needs a unit-trace state (trace={rho.trace!r}); '
            'use coherence_c1_star for decayed states')
    return math.log2(rho.dim) - von_neumann_entropy(rho, raw=True)


def coherence_c1_star(rho: DensityMatrix) -> float:
    """
    Coherence of a trace-decreasing state: relative entropy to ``tr(rho) 1/d``,
    ``(log2 d - log2 tr) tr - S_raw(rho)``.
    """
    tr = rho.trace
    if tr <= 0:
        raise RejectedInputError(f'coherence_c1_star needs a positive trace, got {tr!r}')
    return (math.log2(rho.dim) - math.log2(tr)) * tr - von_neumann_entropy(rho, raw=True)


def coherence_c1_star_stack(mats: np.ndarray) -> np.ndarray:
    """`coherence_c1_star` of every matrix in an ``(n, d, d)`` stack"""
    mats = np.asarray(mats, dtype=complex)
    d = mats.shape[-1]
    lam = np.linalg.eigvalsh(0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2))))
    if lam.size and lam[:, 0].min() < NEGATIVE_EIG_LIMIT:
        raise NumericalConsistencyError(f'Negative eigenvalue {lam[:, 0].min()!r} in a density matrix')
    tr = lam.sum(axis=1)
    if tr.size and tr.min() <= 0:
        raise RejectedInputError(f'coherence_c1_star needs a positive trace, got {tr.min()!r}')
    pos = np.where(lam > EPS_EIG, lam, 1.0)
    s_raw = np.maximum(0.0, -np.sum(pos * np.log2(pos), axis=1))
    return (math.log2(d) - np.log2(tr)) * tr - s_raw


def _sites_of(keep: Iterable[int | str]) -> list[int]:
    return sorted({site_index(s) for s in keep})


def partial_trace(rho: DensityMatrix | np.ndarray, keep: Iterable[int | str]) -> DensityMatrix:
    """
    Reduce onto the sites in ``keep`` (positions or names in the global site
    order), tracing out every other qubit of the state.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = m.shape[0].bit_length() - 1
    kept = _sites_of(keep)
    if not kept:
        raise RejectedInputError('partial_trace needs at least one site to keep')
    if kept[-1] >= n:
        raise RejectedInputError(f'Site {kept[-1]} is not present in a {n}-qubit state')
    traced = [q for q in range(n) if q not in kept]
    t = m.reshape((2,) * (2 * n))
    # Contract each traced qubit's row axis with its column axis, highest first
    for q in reversed(traced):
        remaining = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + remaining)
    d = 2**len(kept)
    return DensityMatrix(t.reshape(d, d))


def reduce_pair(m: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace of a bipartite ``(d_x, d_y)`` matrix onto factor ``keep`` (0 or 1)"""
    dx, dy = dims
    t = m.reshape(dx, dy, dx, dy)
    if keep == 0:
        return np.einsum('ijkj->ik', t)
    return np.einsum('ijik->jk', t)
