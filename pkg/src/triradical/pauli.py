"""
Exact algebra of six-site Pauli operators.

Every operator acts on the sites ``(A, B, C, E_A, E_B, E_C)`` in that order. A
Pauli string is stored as a six character label such as ``"ZIIXII"`` with its
phase folded into a complex coefficient. Products, commutators and conversions
to and from dense 64x64 matrices are exact up to the pruning tolerance.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from .errors import RejectedInputError

SITES = ('A', 'B', 'C', 'E_A', 'E_B', 'E_C')
"""Global site ordering shared by every module (lexicographic basis order)"""
N_SITES = len(SITES)
DIM = 2**N_SITES
SYSTEM_SITES = (0, 1, 2)
ENVIRONMENT_SITES = (3, 4, 5)
EPS_PRUNE = 1e-14

LABELS = 'IXYZ'

_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-site products: (phase, label) of a.b
_PRODUCTS = {
    'I': {'I': (1, 'I'), 'X': (1, 'X'), 'Y': (1, 'Y'), 'Z': (1, 'Z')},
    'X': {'I': (1, 'X'), 'X': (1, 'I'), 'Y': (1j, 'Z'), 'Z': (-1j, 'Y')},
    'Y': {'I': (1, 'Y'), 'X': (-1j, 'Z'), 'Y': (1, 'I'), 'Z': (1j, 'X')},
    'Z': {'I': (1, 'Z'), 'X': (1j, 'Y'), 'Y': (-1j, 'X'), 'Z': (1, 'I')},
}

# (4, 2, 2) stack of the single-site Pauli matrices, in LABELS order
_PAULI_STACK = np.stack([_MATRICES[c] for c in LABELS])


def site_index(site: int | str) -> int:
    """Resolve a site given either by position or by name (``"E_B"``)"""
    if isinstance(site, str):
        try:
            return SITES.index(site)
        except ValueError:
            raise RejectedInputError(f'Unknown site name {site!r}') from None
    if not 0 <= site < N_SITES:
        raise RejectedInputError(f'Site index {site!r} is out of range')
    return site


def _check_label(labels: str) -> str:
    if len(labels) != N_SITES or any(c not in LABELS for c in labels):
        raise RejectedInputError(
            f'Pauli label {labels!r} must have {N_SITES} characters from {LABELS!r}')
    return labels


@dataclass(frozen=True)
class PauliString:
    """
    A single tensor product of Pauli matrices with a complex coefficient.
    """
    labels: str
    coefficient: complex = 1.0

    def __post_init__(self) -> None:
        labels = self.labels
        if isinstance(labels, (tuple, list)):
            labels = ''.join(labels)
        if len(labels) < N_SITES:
            # Shorter logical operators live on the leading sites
            labels = labels + 'I' * (N_SITES - len(labels))
        object.__setattr__(self, 'labels', _check_label(labels))
        object.__setattr__(self, 'coefficient', complex(self.coefficient))

    def __matmul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def to_sum(self) -> PauliSum:
        return PauliSum.from_terms([(self.labels, self.coefficient)])


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """
    Matrix product ``a.b`` as a single Pauli string, accumulating the site phases.
    """
    phase: complex = a.coefficient * b.coefficient
    out = []
    for la, lb in zip(a.labels, b.labels):
        ph, lab = _PRODUCTS[la][lb]
        phase *= ph
        out.append(lab)
    return PauliString(''.join(out), phase)


def _merge(terms: Iterable[Tuple[str, complex]]) -> dict[str, complex]:
    acc: dict[str, complex] = {}
    for labels, coeff in terms:
        acc[labels] = acc.get(labels, 0j) + coeff
    return {k: v for k, v in acc.items() if abs(v) >= EPS_PRUNE}


@dataclass(frozen=True)
class PauliSum:
    """
    A weighted sum of Pauli strings. Immutable; arithmetic returns new sums.

    ``terms`` maps each six-character label to its (non-negligible) coefficient.
    """
    terms: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'terms', MappingProxyType(dict(self.terms)))

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[str, complex]]) -> PauliSum:
        """Build a sum, merging like terms and pruning below ``EPS_PRUNE``"""
        checked = ((_check_label(PauliString(lab).labels), complex(c)) for lab, c in terms)
        return cls(_merge(checked))

    @classmethod
    def zero(cls) -> PauliSum:
        return cls({})

    @classmethod
    def identity(cls, coefficient: complex = 1.0) -> PauliSum:
        return cls.from_terms([('I' * N_SITES, coefficient)])

    def strings(self) -> list[PauliString]:
        return [PauliString(k, v) for k, v in sorted(self.terms.items())]

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        return PauliSum(_merge([*self.terms.items(), *other.terms.items()]))

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-1.0) * other

    def __neg__(self) -> PauliSum:
        return (-1.0) * self

    def __mul__(self, scalar: complex) -> PauliSum:
        return PauliSum(_merge((k, v * scalar) for k, v in self.terms.items()))

    __rmul__ = __mul__

    def __matmul__(self, other: PauliSum) -> PauliSum:
        return product(self, other)

    def coefficient(self, labels: str) -> complex:
        return self.terms.get(PauliString(labels).labels, 0j)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Pauli strings are Hermitian, so the sum is iff every coefficient is real"""
        return all(abs(c.imag) <= tol for c in self.terms.values())

    @property
    def hermitian(self) -> bool:
        return self.is_hermitian()

    def frobenius_norm(self) -> float:
        """Exact Frobenius norm of the dense operator: sqrt(64 * sum |c|^2)"""
        return float(np.sqrt(DIM * sum(abs(c)**2 for c in self.terms.values())))

    def support(self) -> frozenset[int]:
        """Sites on which at least one term acts nontrivially"""
        return frozenset(i for k in self.terms for i, c in enumerate(k) if c != 'I')

    @functools.cached_property
    def dense(self) -> np.ndarray:
        """Cached dense matrix, see `to_dense`"""
        m = to_dense(self)
        m.setflags(write=False)
        return m

    def dumps(self) -> str:
        """Debug serialization: one ``<re> <im> <labels>`` line per term"""
        lines = []
        for labels, c in sorted(self.terms.items()):
            # '+ 0.0' folds negative zero
            lines.append(f'{c.real + 0.0!r} {c.imag + 0.0!r} {labels}')
        return '\n'.join(lines) + ('\n' if lines else '')

    @classmethod
    def loads(cls, text: str) -> PauliSum:
        terms = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise RejectedInputError(
                    f'Line {lineno}: expected "<re> <im> <labels>", got {line!r}')
            re_s, im_s, labels = parts
            terms.append((labels, complex(float(re_s), float(im_s))))
        return cls.from_terms(terms)


def site_operator(label: str, site: int | str, coefficient: complex = 1.0) -> PauliSum:
    """A single-site Pauli operator padded with identities"""
    labels = ['I'] * N_SITES
    labels[site_index(site)] = label
    return PauliSum.from_terms([(''.join(labels), coefficient)])


def embed(ops: Mapping[int | str, str], coefficient: complex = 1.0) -> PauliSum:
    """A product of single-site Paulis, e.g. ``embed({'A': 'X', 'E_A': 'X'})``"""
    labels = ['I'] * N_SITES
    for site, lab in ops.items():
        labels[site_index(site)] = lab
    return PauliSum.from_terms([(''.join(labels), coefficient)])


def product(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product of two sums"""
    out: list[Tuple[str, complex]] = []
    for la, ca in a.terms.items():
        for lb, cb in b.terms.items():
            s = multiply(PauliString(la, ca), PauliString(lb, cb))
            out.append((s.labels, s.coefficient))
    return PauliSum(_merge(out))


def _anticommute(la: str, lb: str) -> bool:
    n = 0
    for x, y in zip(la, lb):
        if x != 'I' and y != 'I' and x != y:
            n += 1
    return n % 2 == 1


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """
    ``ab - ba``. Commuting string pairs contribute nothing; anticommuting pairs
    contribute twice their product.
    """
    out: list[Tuple[str, complex]] = []
    for la, ca in a.terms.items():
        for lb, cb in b.terms.items():
            if not _anticommute(la, lb):
                continue
            s = multiply(PauliString(la, ca), PauliString(lb, cb))
            out.append((s.labels, 2 * s.coefficient))
    return PauliSum(_merge(out))


@functools.lru_cache(maxsize=None)
def _string_matrix(labels: str) -> np.ndarray:
    return functools.reduce(np.kron, (_MATRICES[c] for c in labels))


def to_dense(op: PauliSum) -> np.ndarray:
    """Kronecker expansion into a 64x64 matrix in lexicographic basis order"""
    m = np.zeros((DIM, DIM), dtype=complex)
    for labels, c in op.terms.items():
        m += c * _string_matrix(labels)
    return m


def to_dense_sites(op: PauliSum, n_sites: int) -> np.ndarray:
    """
    Dense ``2^n x 2^n`` matrix of an operator supported on the leading
    ``n_sites`` sites, restricted to those sites.
    """
    if not 1 <= n_sites <= N_SITES:
        raise RejectedInputError(f'n_sites must lie in [1, {N_SITES}], got {n_sites!r}')
    rest = 'I' * (N_SITES - n_sites)
    d = 2**n_sites
    m = np.zeros((d, d), dtype=complex)
    for labels, c in op.terms.items():
        if labels[n_sites:] != rest:
            raise RejectedInputError(f'Term {labels} acts beyond the first {n_sites} sites')
        m += c * functools.reduce(np.kron, (_MATRICES[ch] for ch in labels[:n_sites]))
    return m


def pauli_coefficients(m: np.ndarray) -> np.ndarray:
    """
    Hilbert-Schmidt coefficients ``tr[P m] / d`` for every Pauli string on
    ``n = log2(d)`` qubits, returned as an array of shape ``(4,) * n``.
    """
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    n = d.bit_length() - 1
    if m.shape != (d, d) or 2**n != d:
        raise RejectedInputError(f'Expected a square 2^n matrix, got shape {m.shape}')
    # Axes at step q: [i_q..i_n-1, j_q..j_n-1, p_0..p_q-1]
    t = m.reshape((2,) * (2 * n))
    for q in range(n):
        r = n - q
        # sum_ij P[p, j, i] t[i, .., j, ..]; the Pauli axis is appended last
        t = np.tensordot(t, _PAULI_STACK, axes=([0, r], [2, 1]))
    return t / d


def from_dense(m: np.ndarray) -> PauliSum:
    """Hilbert-Schmidt expansion of a 64x64 matrix into a Pauli sum"""
    m = np.asarray(m)
    if m.shape != (DIM, DIM):
        raise RejectedInputError(f'from_dense needs a {DIM}x{DIM} matrix, got shape {m.shape}')
    coeffs = pauli_coefficients(m)
    terms = []
    for idx in zip(*np.nonzero(np.abs(coeffs) >= EPS_PRUNE)):
        terms.append((''.join(LABELS[i] for i in idx), complex(coeffs[idx])))
    return PauliSum(_merge(terms))


def from_system_dense(m: np.ndarray) -> PauliSum:
    """Expansion of an operator on the leading ``log2(d)`` sites, identity elsewhere"""
    m = np.asarray(m)
    d = m.shape[0]
    pad = DIM // d
    return from_dense(np.kron(m, np.eye(pad)))


def total_terms(ops: Sequence[PauliSum]) -> PauliSum:
    """Sum of a sequence of Pauli sums"""
    return PauliSum(_merge(kv for op in ops for kv in op.terms.items()))
