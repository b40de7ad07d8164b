"""
Numerical certification of the structural results behind the sensor model.

Every check is evaluated twice, once in exact Pauli algebra and once with dense
matrices, and the two must agree on which commutators vanish. Statements of
the form "for all field angles" are tested on a fixed direction set: the six
coordinate axes followed by Fibonacci-sphere points.

Forward directions of the if-and-only-if statements are sampled, never proved;
a passing check is "certified on N samples".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import collision_map, Propagator
from .errors import RejectedInputError
from .model import (AXES, FieldAngles, SensorParams, h_exchange, local_interaction, random_interaction,
                    random_system_hamiltonian, singlet_projector, total_spin, v_interaction)
from .pauli import PauliSum, commutator, embed, from_dense, site_operator, to_dense_sites, total_terms
from .states import (SIGMA, DensityMatrix, initial_system_state, maximally_mixed, random_density_matrix, sample_bloch,
                     tensor)

_LOG = logging.getLogger(__name__)

ZERO_TOL = 1e-10
"""Commutator norms at or below this classify as vanishing"""
COMMUTANT_TOL = 1e-12
GENERIC_TOL = 1e-6
PSD_FLOOR = -1e-10
DEFAULT_N_ANGLES = 100

_EPSILON = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


def verification_angles(n_angles: int = DEFAULT_N_ANGLES) -> list[FieldAngles]:
    """The axes +-x, +-y, +-z, then ``n_angles - 6`` Fibonacci-sphere directions"""
    if n_angles < 6:
        raise RejectedInputError(f'The angle set needs at least the 6 axis directions, got {n_angles!r}')
    half = math.pi / 2
    angles = [
        FieldAngles(0.0, half),
        FieldAngles(math.pi, half),
        FieldAngles(half, half),
        FieldAngles(3 * half, half),
        FieldAngles(0.0, 0.0),
        FieldAngles(0.0, math.pi),
    ]
    m = n_angles - len(angles)
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for i in range(m):
        z = 1.0 - 2.0 * (i + 0.5) / m
        angles.append(FieldAngles((i * golden) % (2 * math.pi), math.acos(z)))
    return angles


def _directions(angles: Sequence[FieldAngles]) -> np.ndarray:
    return np.array([a.direction for a in angles])


@dataclass(frozen=True)
class TrivialStateParams:
    """Coefficients of the radical states that no field direction can distinguish"""
    p_ab: float = 0.0
    p_ac: float = 0.0
    p_bc: float = 0.0
    p_abc: float = 0.0


def _dot(a: str, b: str, coeff: float) -> list[PauliSum]:
    return [embed({a: ax, b: ax}, coeff) for ax in AXES]


def trivial_operator(tp: TrivialStateParams) -> PauliSum:
    """
    ``1/8 + p_ab sA.sB + p_ac sA.sC + p_bc sB.sC + p_abc sum_ijk eps_ijk s_i^A s_j^B s_k^C``
    as a Pauli sum on the radical sites.
    """
    parts = [PauliSum.identity(1 / 8)]
    parts += _dot('A', 'B', tp.p_ab) + _dot('A', 'C', tp.p_ac) + _dot('B', 'C', tp.p_bc)
    for (i, j, k), sign in _EPSILON.items():
        parts.append(embed({'A': AXES[i], 'B': AXES[j], 'C': AXES[k]}, sign * tp.p_abc))
    return total_terms(parts)


def trivial_state(tp: TrivialStateParams) -> DensityMatrix:
    """The unit-trace radical state of the commutant family; rejects non-PSD parameters"""
    try:
        return DensityMatrix.checked(to_dense_sites(trivial_operator(tp), 3), tol=-PSD_FLOOR)
    except RejectedInputError as err:
        raise RejectedInputError(f'{tp!r} does not give a positive state: {err}') from None


def sample_trivial_params(rng: np.random.Generator, max_tries: int = 10000) -> TrivialStateParams:
    """Rejection sampler over the box ``p_pair in [-1/8, 1/24]``, ``p_abc in [-1/24, 1/24]``"""
    for _ in range(max_tries):
        pairs = rng.uniform(-1 / 8, 1 / 24, size=3)
        tp = TrivialStateParams(*(float(p) for p in pairs), p_abc=float(rng.uniform(-1 / 24, 1 / 24)))
        m = to_dense_sites(trivial_operator(tp), 3)
        if np.linalg.eigvalsh(m)[0] >= PSD_FLOOR:
            return tp
    raise RejectedInputError(f'No admissible trivial-state parameters in {max_tries} draws')


def _family_basis() -> list[np.ndarray]:
    tp_basis = [
        TrivialStateParams(p_ab=1.0),
        TrivialStateParams(p_ac=1.0),
        TrivialStateParams(p_bc=1.0),
        TrivialStateParams(p_abc=1.0),
    ]
    ops = [np.eye(8, dtype=complex)]
    for tp in tp_basis:
        ops.append(to_dense_sites(trivial_operator(tp) - PauliSum.identity(1 / 8), 3))
    return ops


def trivial_family_residual(rho: DensityMatrix) -> float:
    """Frobenius distance of ``rho`` from its Hilbert-Schmidt projection onto the family's span"""
    m = rho.matrix
    proj = np.zeros_like(m)
    # The basis operators are mutually orthogonal
    for b in _family_basis():
        proj += np.vdot(b, m) / np.vdot(b, b) * b
    return float(np.linalg.norm(m - proj))


def _spin_dense(axis: str) -> np.ndarray:
    s = SIGMA[AXES.index(axis)]
    eye = np.eye(2)
    return np.kron(np.kron(s, eye), eye) + np.kron(np.kron(eye, s), eye) + np.kron(np.kron(eye, eye), s)


def check_zeeman_commutant(rho: DensityMatrix,
                           n_angles: int = DEFAULT_N_ANGLES,
                           params: Optional[SensorParams] = None) -> float:
    """
    ``max_angles ||[rho (x) 1_E, H_B]||_F`` over the verification angle set.
    Radical states only; the environment identity scales the norm by ``sqrt(8)``.
    """
    if rho.dim != 8:
        raise RejectedInputError(f'check_zeeman_commutant needs a radical state (dimension 8), got {rho.dim}')
    p = params or SensorParams()
    m = rho.matrix
    comms = np.stack([m @ s - s @ m for s in (_spin_dense(ax) for ax in AXES)])
    dirs = _directions(verification_angles(n_angles))
    combined = np.einsum('ni,iab->nab', dirs, comms) * (0.5 * p.gamma_b0)
    norms = np.linalg.norm(combined, axis=(1, 2)) * math.sqrt(8)
    return float(norms.max())


def _pauli_norms(base: PauliSum, directional: Sequence[PauliSum], dirs: np.ndarray, scale: float) -> np.ndarray:
    """Frobenius norms of ``base + scale sum_i n_i directional_i`` for every row ``n`` of ``dirs``"""
    labels = sorted(set(base.terms).union(*(d.terms for d in directional)))
    if not labels:
        return np.zeros(len(dirs))
    b = np.array([base.terms.get(lab, 0j) for lab in labels])
    d = np.array([[op.terms.get(lab, 0j) for op in directional] for lab in labels])
    v = b[None, :] + scale * dirs @ d.T
    return np.sqrt(64 * np.sum(np.abs(v)**2, axis=1))


def _dense_norms(base: np.ndarray, directional: Sequence[np.ndarray], dirs: np.ndarray, scale: float) -> np.ndarray:
    out = np.empty(len(dirs))
    for i, n in enumerate(dirs):
        m = base + scale * sum(c * op for c, op in zip(n, directional))
        out[i] = np.linalg.norm(m)
    return out


def _dense_comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


class CommutatorNorms(NamedTuple):
    pauli: np.ndarray
    dense: np.ndarray

    @property
    def vanishes(self) -> bool:
        return bool(self.pauli.max() <= ZERO_TOL)

    @property
    def consistent(self) -> bool:
        """Pauli and dense evaluations agree on which angles give a zero commutator"""
        return bool(np.array_equal(self.pauli <= ZERO_TOL, self.dense <= ZERO_TOL))

    @property
    def max(self) -> float:
        return float(self.pauli.max())


def commutator_norms(a: PauliSum,
                     b: PauliSum,
                     params: SensorParams,
                     angles: Optional[Sequence[FieldAngles]] = None) -> CommutatorNorms:
    """
    Norms of ``[a, b + H_B(angle)]`` at each angle, or of ``[a, b]`` alone when
    ``angles`` is None.
    """
    scale = 0.5 * params.gamma_b0
    dirs = np.zeros((1, 3)) if angles is None else _directions(angles)
    spins = [total_spin(ax) for ax in AXES] if angles is not None else []
    base_p = commutator(a, b)
    dir_p = [commutator(a, s) for s in spins] or [PauliSum.zero()] * 3
    ad = a.dense
    base_d = _dense_comm(ad, b.dense)
    dir_d = [_dense_comm(ad, s.dense) for s in spins] or [np.zeros_like(ad)] * 3
    return CommutatorNorms(_pauli_norms(base_p, dir_p, dirs, scale), _dense_norms(base_d, dir_d, dirs, scale))


class Lemma3Flags(NamedTuple):
    """Whether each necessary commutator is nonzero at some sampled angle"""
    state: bool
    projector: bool
    field: bool
    consistent: bool = True
    weakest: float = 0.0
    """Smallest of the three largest-over-angles norms"""


def verify_lemma3(params: SensorParams,
                  rho_se: DensityMatrix,
                  n_angles: int = DEFAULT_N_ANGLES,
                  *,
                  h0: Optional[PauliSum] = None,
                  interaction: Optional[PauliSum] = None) -> Lemma3Flags:
    """
    Evaluate the three necessary conditions for a field-dependent yield:
    ``[rho_SE, H0 + V + H_B] != 0``, ``[P, H0 + V] != 0`` and ``[H_B, H0 + V] != 0``.
    ``h0`` defaults to the exchange Hamiltonian, ``interaction`` to the model's.
    """
    if rho_se.dim != 64:
        raise RejectedInputError(f'verify_lemma3 needs a joint state (dimension 64), got {rho_se.dim}')
    h0 = h_exchange(params) if h0 is None else h0
    v = v_interaction(params) if interaction is None else interaction
    gen = h0 + v
    angles = verification_angles(n_angles)
    rho_p = from_dense(rho_se.matrix)

    state = commutator_norms(rho_p, gen, params, angles)
    proj = commutator_norms(singlet_projector(), gen, params)
    # [H_B, gen] is linear in the direction: -[gen, H_B]
    field = commutator_norms(gen, PauliSum.zero(), params, angles)
    return Lemma3Flags(not state.vanishes, not proj.vanishes, not field.vanishes,
                       state.consistent and proj.consistent and field.consistent,
                       min(state.max, proj.max, field.max))


@dataclass(frozen=True)
class CheckResult:
    """One row of the verification summary"""
    name: str
    samples: int
    residual: float
    """Largest norm for vanishing checks, smallest certified norm for the others"""
    passed: bool
    expect: str = 'zero'
    """``zero`` when the commutators must vanish, ``nonzero`` when they must not"""

    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'


def _vanishing(name: str, norms: Iterable[CommutatorNorms], tol: float = ZERO_TOL) -> CheckResult:
    norms = list(norms)
    worst = max((n.max for n in norms), default=0.0)
    ok = all(n.consistent for n in norms) and worst <= tol
    return CheckResult(name, len(norms), worst, ok, 'zero')


def _nonvanishing(name: str, norms: Iterable[CommutatorNorms], tol: float = ZERO_TOL) -> CheckResult:
    norms = list(norms)
    weakest = min((n.max for n in norms), default=0.0)
    ok = bool(norms) and all(n.consistent for n in norms) and weakest > tol
    return CheckResult(name, len(norms), weakest, ok, 'nonzero')


def faulty_exchange(params: SensorParams) -> PauliSum:
    """The exchange Hamiltonian with the sign of its A-B ``XX`` term flipped"""
    h = h_exchange(params)
    xx = embed({'A': 'X', 'B': 'X'}, h.coefficient('XXIIII'))
    return h - 2 * xx


def check_exchange_symmetry(params: SensorParams, h_ex: Optional[PauliSum] = None) -> CheckResult:
    """``[H_ex, sum_a sigma_i^a] = 0`` for each axis"""
    h = h_exchange(params) if h_ex is None else h_ex
    return _vanishing('exchange_total_spin', [commutator_norms(h, total_spin(ax), params) for ax in AXES])


def check_singlet_field_symmetry(params: SensorParams, n_angles: int) -> CheckResult:
    """``[P, H_B] = 0`` at every sampled direction"""
    return _vanishing('singlet_zeeman',
                      [commutator_norms(singlet_projector(), PauliSum.zero(), params, verification_angles(n_angles))])


def verify_trivial_family(params: SensorParams, rng: np.random.Generator, samples: int, n_angles: int) -> CheckResult:
    """Sampled commutant states commute with every field direction"""
    angles = verification_angles(n_angles)
    norms = []
    worst_dense = 0.0
    for _ in range(samples):
        tp = sample_trivial_params(rng)
        norms.append(commutator_norms(trivial_operator(tp), PauliSum.zero(), params, angles))
        worst_dense = max(worst_dense, check_zeeman_commutant(trivial_state(tp), n_angles, params))
    res = _vanishing('lemma1_trivial_family', norms, COMMUTANT_TOL)
    if worst_dense > COMMUTANT_TOL:
        return CheckResult(res.name, res.samples, max(res.residual, worst_dense), False, res.expect)
    return res


def verify_generic_states(params: SensorParams, rng: np.random.Generator, samples: int, n_angles: int) -> CheckResult:
    """Random radical states fail to commute with the field at some direction"""
    weakest = math.inf
    for _ in range(samples):
        weakest = min(weakest, check_zeeman_commutant(random_density_matrix(rng, 8), n_angles, params))
    return CheckResult('lemma1_generic_states', samples, weakest, weakest > GENERIC_TOL, 'nonzero')


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def verify_unitality(params: SensorParams, rng: np.random.Generator, samples: int = 20) -> CheckResult:
    """One collision iteration maps ``1/64`` to ``exp(-k T) 1/64`` for random segment generators"""
    mixed = maximally_mixed(64)
    env = maximally_mixed(8)
    target = math.exp(-params.k * params.period) * mixed.matrix
    worst = 0.0
    for _ in range(samples):
        seg_a = Propagator.from_hamiltonian(_random_hermitian(rng, 64))
        seg_b = Propagator.from_hamiltonian(_random_hermitian(rng, 64))
        out = collision_map(mixed, params, seg_a, seg_b, env)
        worst = max(worst, float(np.max(np.abs(out.matrix - target))))
    return CheckResult('lemma2_unitality', samples, worst, worst <= 1e-12, 'zero')


def verify_prop5(n_samples: int,
                 rng: np.random.Generator,
                 params: Optional[SensorParams] = None,
                 n_angles: int = DEFAULT_N_ANGLES,
                 h0: Optional[PauliSum] = None) -> list[CheckResult]:
    """
    For the CNOT model with isotropic exchange, ``rho_S (x) 1/8`` commutes with
    the total generator at every direction iff ``rho_S = 1/8``.
    """
    p = params or SensorParams()
    gen = (h_exchange(p) if h0 is None else h0) + v_interaction(p)
    angles = verification_angles(n_angles)
    forward = []
    for i in range(n_samples):
        # Alternate the initial-state family with unstructured random states
        if i % 2:
            rho_s = random_density_matrix(rng, 8)
        else:
            rho_s = initial_system_state(sample_bloch(rng, 'ball'))
        if np.max(np.abs(rho_s.matrix - np.eye(8) / 8)) < 1e-9:
            continue
        forward.append(commutator_norms(from_dense(tensor(rho_s, maximally_mixed(8)).matrix), gen, p, angles))
    reverse = commutator_norms(from_dense(maximally_mixed(64).matrix), gen, p, angles)
    return [
        _nonvanishing('prop5_forward', forward),
        _vanishing('prop5_reverse', [reverse], COMMUTANT_TOL),
    ]


def verify_lemma3_suite(params: SensorParams,
                        rng: np.random.Generator,
                        samples: int,
                        n_angles: int,
                        h0: Optional[PauliSum] = None) -> list[CheckResult]:
    """Necessary conditions on sampled initial states, plus the maximally mixed case"""
    hits = 0
    consistent = True
    weakest = math.inf
    for _ in range(samples):
        r = sample_bloch(rng, 'ball')
        rho_se = tensor(initial_system_state(r), maximally_mixed(8))
        flags = verify_lemma3(params, rho_se, n_angles, h0=h0)
        consistent &= flags.consistent
        hits += flags.state and flags.projector and flags.field
        weakest = min(weakest, flags.weakest)
    mixed = verify_lemma3(params, maximally_mixed(64), n_angles, h0=h0)
    return [
        CheckResult('lemma3_necessity', samples, weakest, consistent and hits == samples, 'nonzero'),
        CheckResult('lemma3_maximally_mixed', 1, mixed.weakest,
                    mixed.consistent and not mixed.state and mixed.projector and mixed.field, 'zero'),
    ]


def verify_interaction_lemmas(n_random_v: int,
                              rng: np.random.Generator,
                              params: Optional[SensorParams] = None,
                              n_angles: int = DEFAULT_N_ANGLES) -> list[CheckResult]:
    """
    Random system-environment interactions with a genuine two-body term never
    commute with the singlet projector, nor can a system Hamiltonian cancel
    that, nor do they commute with the field. Purely local interactions do
    commute with the projector.
    """
    p = params or SensorParams()
    proj = singlet_projector()
    angles = verification_angles(n_angles)
    interactions = [v_interaction(p), v_interaction(p.with_kind('swap'))]
    interactions += [random_interaction(rng) for _ in range(n_random_v)]
    lemma6, lemma7, lemma8 = [], [], []
    for v in interactions:
        h0 = random_system_hamiltonian(rng)
        lemma6.append(commutator_norms(proj, v, p))
        lemma7.append(commutator_norms(proj, h0 + v, p))
        lemma8.append(commutator_norms(h0 + v, PauliSum.zero(), p, angles))
    local = [commutator_norms(proj, site_operator('X', 'E_A'), p)]
    local += [commutator_norms(proj, local_interaction(rng), p) for _ in range(n_random_v)]
    return [
        _nonvanishing('lemma6_projector_interaction', lemma6),
        _nonvanishing('lemma7_no_cancellation', lemma7),
        _nonvanishing('lemma8_field_generator', lemma8),
        _vanishing('local_interaction_converse', local),
    ]


def run_verification(params: Optional[SensorParams] = None,
                     samples: int = 100,
                     n_angles: int = DEFAULT_N_ANGLES,
                     seed: int = 0,
                     inject_fault: bool = False) -> list[CheckResult]:
    """
    The full certification suite. ``inject_fault`` replaces the exchange
    Hamiltonian by `faulty_exchange` everywhere it enters.
    """
    p = params or SensorParams()
    rng = np.random.default_rng(seed)
    h_ex = faulty_exchange(p) if inject_fault else None
    if inject_fault:
        _LOG.info('Verifying with a sign-flipped exchange term')
    results = [
        check_exchange_symmetry(p, h_ex),
        check_singlet_field_symmetry(p, n_angles),
        verify_trivial_family(p, rng, samples, n_angles),
        verify_generic_states(p, rng, samples, n_angles),
        verify_unitality(p, rng),
    ]
    results += verify_lemma3_suite(p, rng, samples, n_angles, h0=h_ex)
    results += verify_prop5(samples, rng, p, n_angles, h0=h_ex)
    results += verify_interaction_lemmas(samples, rng, p, n_angles)
    for r in results:
        _LOG.debug('%s: %s on %d samples (residual %.3g)', r.name, r.verdict, r.samples, r.residual)
    return results


__all__ = [
    'TrivialStateParams', 'trivial_operator', 'trivial_state', 'sample_trivial_params', 'trivial_family_residual',
    'check_zeeman_commutant', 'verification_angles', 'commutator_norms', 'CommutatorNorms', 'Lemma3Flags',
    'verify_lemma3', 'verify_prop5', 'verify_interaction_lemmas', 'verify_unitality', 'check_exchange_symmetry',
    'faulty_exchange', 'CheckResult', 'run_verification',
]
