"""
Piecewise-analytic propagation of the six-qubit state through the collision
schedule.

Each iteration lasts ``T = tau_se + tau_ee``: the radicals first collide with a
fresh environment triple under ``H_ex + H_B + V_SE``, then evolve freely under
``H_ex + H_B``; at the end of the iteration the used environment is discarded
and replaced. Recombination multiplies the whole state by ``exp(-k t)``.

Within a segment the generator is time independent, so every evolution is a
diagonal multiplication in the eigenbasis of a cached `Propagator`.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

from .errors import NumericalConsistencyError, RejectedInputError
from .model import FieldAngles, SensorParams, singlet_projector, total_hamiltonian
from .pauli import DIM, PauliSum
from .states import DensityMatrix, coherence_c1_star

_LOG = logging.getLogger(__name__)

SYSTEM_DIM = 8
TRACE_TOL = 1e-9
DEFAULT_EPS_TAIL = 1e-8


def _dense(h: PauliSum | np.ndarray) -> np.ndarray:
    return h.dense if isinstance(h, PauliSum) else np.asarray(h, dtype=complex)


def _matrix(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


@dataclass(frozen=True, eq=False)
class Propagator:
    """
    Eigendecomposition ``H = V diag(w) V^dagger`` of a segment Hamiltonian.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_hamiltonian(cls, h: PauliSum | np.ndarray) -> Propagator:
        m = _dense(h)
        # Symmetrize away round-off from the Pauli assembly
        m = 0.5 * (m + m.conj().T)
        w, v = np.linalg.eigh(m)
        w.setflags(write=False)
        v.setflags(write=False)
        return cls(w, v)

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    @functools.cached_property
    def _gaps(self) -> np.ndarray:
        w = self.eigenvalues
        return w[:, None] - w[None, :]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def unitary(self, tau: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * tau)) @ v.conj().T

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ m @ v

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ m @ v.conj().T

    def exponents(self, k: float) -> np.ndarray:
        """``a_ij = -i (w_i - w_j) - k``"""
        return -1j * self._gaps - k

    def decay_factors(self, tau: float, k: float) -> np.ndarray:
        """Element-wise evolution ``exp(a_ij tau)`` of an eigenbasis matrix"""
        return np.exp(self.exponents(k) * tau)

    def integral_factors(self, tau: float, k: float) -> np.ndarray:
        """``int_0^tau exp(a_ij t) dt = (exp(a_ij tau) - 1) / a_ij``; needs ``k > 0``"""
        a = self.exponents(k)
        return np.expm1(a * tau) / a

    def decay_factor_stack(self, ts: np.ndarray, k: float) -> np.ndarray:
        """`decay_factors` at every time in ``ts``, shape ``(len(ts), d, d)``"""
        ts = np.asarray(ts, dtype=float)
        phase = np.exp(-1j * np.outer(ts, self.eigenvalues))
        return phase[:, :, None] * phase.conj()[:, None, :] * np.exp(-k * ts)[:, None, None]

    def system_from_eigenbasis(self, r: np.ndarray, dims: tuple[int, int] = (SYSTEM_DIM, SYSTEM_DIM)) -> np.ndarray:
        """
        ``tr_E[V r V^dagger]`` for one eigenbasis matrix or a stack of them,
        without forming the full matrices.
        """
        dx, dy = dims
        v = self.eigenvectors
        x = np.matmul(v, r)
        x = x.reshape(x.shape[:-2] + (dx, dy * v.shape[1]))
        return x @ v.conj().reshape(dx, dy * v.shape[1]).T


def evolve_segment(rho: DensityMatrix | np.ndarray, prop: Propagator, tau: float, k: float) -> DensityMatrix:
    """
    ``exp(-k tau) U rho U^dagger`` with ``U = exp(-i H tau)``, applied element-wise
    in the eigenbasis of ``prop``.
    """
    if tau < 0:
        raise RejectedInputError(f'Segment duration must be non-negative, got {tau!r}')
    if tau == 0:
        return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    r = prop.to_eigenbasis(_matrix(rho)) * prop.decay_factors(tau, k)
    return DensityMatrix(prop.from_eigenbasis(r))


@functools.lru_cache(maxsize=512)
def build_propagators(params: SensorParams, angles: FieldAngles) -> tuple[Propagator, Propagator]:
    """
    Propagators of the collision segment (``H_ex + H_B + V_SE``) and of the free
    segment (``H_ex + H_B``). Cached per (params, angles).
    """
    _LOG.debug('Building propagators for %r at %r', params, angles)
    seg_a = Propagator.from_hamiltonian(total_hamiltonian(params, angles, with_interaction=True))
    seg_b = Propagator.from_hamiltonian(total_hamiltonian(params, angles, with_interaction=False))
    return seg_a, seg_b


def refresh_environment(joint: np.ndarray, fresh_env: np.ndarray) -> np.ndarray:
    """``tr_E[joint] (x) fresh_env``: discard the used environment triple"""
    t = joint.reshape(SYSTEM_DIM, SYSTEM_DIM, SYSTEM_DIM, SYSTEM_DIM)
    rho_s = np.einsum('iaja->ij', t)
    return np.kron(rho_s, fresh_env)


def system_state(joint: DensityMatrix | np.ndarray) -> DensityMatrix:
    """Reduced state of the radicals A, B, C"""
    t = _matrix(joint).reshape(SYSTEM_DIM, SYSTEM_DIM, SYSTEM_DIM, SYSTEM_DIM)
    return DensityMatrix(np.einsum('iaja->ij', t))


@dataclass(frozen=True, eq=False)
class CollisionEngine:
    """
    State of one trajectory: the joint radical+environment state after ``n``
    complete iterations, at time ``t = n T``.
    """
    params: SensorParams
    angles: FieldAngles
    seg_a: Propagator
    seg_b: Propagator
    joint: DensityMatrix
    fresh_env: DensityMatrix
    t: float = 0.0
    n: int = 0
    initial_trace: float = 1.0

    @classmethod
    def create(cls,
               params: SensorParams,
               angles: FieldAngles,
               rho_s0: DensityMatrix,
               rho_e0: DensityMatrix) -> CollisionEngine:
        if rho_s0.dim != SYSTEM_DIM or rho_e0.dim != SYSTEM_DIM:
            raise RejectedInputError(
                f'System and environment states must be {SYSTEM_DIM}-dimensional, '
                f'got {rho_s0.dim} and {rho_e0.dim}')
        seg_a, seg_b = build_propagators(params, angles)
        joint = DensityMatrix(np.kron(rho_s0.matrix, rho_e0.matrix))
        return cls(params, angles, seg_a, seg_b, joint, rho_e0, initial_trace=joint.trace)

    def at(self, angles: FieldAngles) -> CollisionEngine:
        """The same initial state under another field direction"""
        seg_a, seg_b = build_propagators(self.params, angles)
        return replace(self, angles=angles, seg_a=seg_a, seg_b=seg_b)

    def step(self) -> CollisionEngine:
        return step(self)

    def expected_trace(self) -> float:
        return self.initial_trace * math.exp(-self.params.k * self.t)

    def check_trace(self) -> None:
        """Raise if the trace has drifted from ``exp(-k t)`` times its initial value"""
        expected = self.expected_trace()
        if abs(self.joint.trace - expected) > TRACE_TOL:
            raise NumericalConsistencyError(
                f'Trace law violated at t={self.t!r}: trace {self.joint.trace!r}, expected {expected!r}')


def step(engine: CollisionEngine) -> CollisionEngine:
    """One full iteration: collision segment, free segment, environment refresh"""
    p = engine.params
    rho = evolve_segment(engine.joint, engine.seg_a, p.tau_se, p.k)
    rho = evolve_segment(rho, engine.seg_b, p.tau_ee, p.k)
    joint = DensityMatrix(refresh_environment(rho.matrix, engine.fresh_env.matrix))
    return replace(engine, joint=joint, t=engine.t + p.period, n=engine.n + 1)


def collision_map(rho: DensityMatrix, params: SensorParams, seg_a: Propagator, seg_b: Propagator,
                  fresh_env: DensityMatrix) -> DensityMatrix:
    """One iteration applied to an arbitrary joint state"""
    r = evolve_segment(rho, seg_a, params.tau_se, params.k)
    r = evolve_segment(r, seg_b, params.tau_ee, params.k)
    return DensityMatrix(refresh_environment(r.matrix, fresh_env.matrix))


def ode_reference(rho: DensityMatrix | np.ndarray, h: PauliSum | np.ndarray, k: float, tau: float,
                  dt: float) -> DensityMatrix:
    """
    Fixed-step classic Runge-Kutta integration of ``d rho/dt = -i[H, rho] - k rho``.
    A test oracle for `evolve_segment`.
    """
    if dt <= 0 or dt > tau / 100 + 1e-15:
        raise RejectedInputError(f'ode_reference needs 0 < dt <= tau/100, got dt={dt!r}, tau={tau!r}')
    hm = _dense(h)
    r = _matrix(rho).copy()
    n_steps = int(round(tau / dt))
    h_step = tau / n_steps

    def deriv(x: np.ndarray) -> np.ndarray:
        return -1j * (hm @ x - x @ hm) - k * x

    for _ in range(n_steps):
        k1 = deriv(r)
        k2 = deriv(r + 0.5 * h_step * k1)
        k3 = deriv(r + 0.5 * h_step * k2)
        k4 = deriv(r + h_step * k3)
        r = r + (h_step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return DensityMatrix(r)


def horizon_periods(params: SensorParams, eps_tail: float = DEFAULT_EPS_TAIL) -> int:
    """Whole iterations needed for the recombination tail to fall below ``eps_tail``"""
    if not 0 < eps_tail < 1:
        raise RejectedInputError(f'eps_tail must lie in (0, 1), got {eps_tail!r}')
    t_max = math.log(1.0 / eps_tail) / params.k
    # Guard against ceil(2.0000000000000004) = 3
    return max(1, math.ceil(t_max / params.period - 1e-12))


def horizon(params: SensorParams, eps_tail: float = DEFAULT_EPS_TAIL) -> float:
    """``ln(1/eps_tail) / k`` rounded up to a whole number of iterations"""
    return horizon_periods(params, eps_tail) * params.period


class TrajectoryRow(NamedTuple):
    t: float
    trace: float
    singlet_population: float
    c1_star: float


def trajectory(engine: CollisionEngine, n_periods: int) -> Iterator[TrajectoryRow]:
    """
    Observables at every segment boundary: after each collision segment and at
    the end of each iteration (before the environment refresh).
    """
    p = engine.params
    proj = singlet_projector().dense

    def row(t: float, rho: DensityMatrix) -> TrajectoryRow:
        return TrajectoryRow(t, rho.trace, rho.expectation(proj), coherence_c1_star(system_state(rho)))

    yield row(engine.t, engine.joint)
    for _ in range(n_periods):
        mid = evolve_segment(engine.joint, engine.seg_a, p.tau_se, p.k)
        yield row(engine.t + p.tau_se, mid)
        end = evolve_segment(mid, engine.seg_b, p.tau_ee, p.k)
        yield row(engine.t + p.period, end)
        engine = replace(engine,
                         joint=DensityMatrix(refresh_environment(end.matrix, engine.fresh_env.matrix)),
                         t=engine.t + p.period,
                         n=engine.n + 1)


__all__ = [
    'DIM', 'Propagator', 'CollisionEngine', 'evolve_segment', 'step', 'ode_reference', 'horizon',
    'horizon_periods', 'build_propagators', 'refresh_environment', 'system_state', 'collision_map',
    'trajectory', 'TrajectoryRow',
]
