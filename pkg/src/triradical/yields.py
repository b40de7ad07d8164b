"""
Recombination yields, observable-weighted yields, field-angle scans and the
anisotropy statistics derived from them.

The singlet yield is ``k int_0^inf tr[P rho(t)] dt`` where ``rho(t)`` already
carries the recombination decay. Inside one segment each eigenbasis element
evolves as ``exp(a_ij t)``, so its contribution integrates in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np
from tqdm import tqdm

from . import correlations
from .correlations import DiscordOptions, MeasuredSide
from .dynamics import (DEFAULT_EPS_TAIL, CollisionEngine, Propagator, horizon_periods, refresh_environment,
                       system_state)
from .errors import DegenerateNormalizationError, NumericalConsistencyError, RejectedInputError
from .model import FieldAngles, SensorParams, singlet_projector
from .pauli import PauliSum
from .states import DensityMatrix, coherence_c1_star, coherence_c1_star_stack, von_neumann_entropy

_LOG = logging.getLogger(__name__)

OBSERVABLE_NAMES = ('c1_star', 'mutual', 'discord', 'holevo')
DEFAULT_N_SUB = 8
DEGENERATE_YIELD = 1e-12
YIELD_TOL = 1e-9


def _dense(op: PauliSum | np.ndarray) -> np.ndarray:
    return op.dense if isinstance(op, PauliSum) else np.asarray(op, dtype=complex)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise NumericalConsistencyError(f'{what} has a non-negligible imaginary part: {value!r}')
    return float(value.real)


def segment_yield(rho_start: DensityMatrix | np.ndarray, prop: Propagator, proj: PauliSum | np.ndarray, k: float,
                  tau: float) -> float:
    """
    ``k int_0^tau tr[P rho(t)] dt`` for ``rho(t) = exp(-k t) U_t rho U_t^dagger``,
    ``sum_ij P~_ji rho~_ij (exp(a_ij tau) - 1) / a_ij`` in the eigenbasis.
    """
    if not k > 0:
        raise RejectedInputError(f'segment_yield needs a positive recombination rate, got {k!r}')
    if not tau > 0:
        raise RejectedInputError(f'segment_yield needs a positive duration, got {tau!r}')
    m = rho_start.matrix if isinstance(rho_start, DensityMatrix) else np.asarray(rho_start, dtype=complex)
    p_t = prop.to_eigenbasis(_dense(proj))
    r_t = prop.to_eigenbasis(m)
    value = k * np.sum(p_t.T * r_t * prop.integral_factors(tau, k))
    return _real(complex(value), 'Segment yield')


@dataclass(frozen=True, eq=False)
class _SegmentKernel:
    """Per-segment constants reused across every iteration"""
    prop: Propagator
    tau: float
    p_t: np.ndarray
    decay: np.ndarray
    integral: np.ndarray

    @classmethod
    def create(cls, prop: Propagator, tau: float, k: float, proj: np.ndarray) -> _SegmentKernel:
        return cls(prop, tau, prop.to_eigenbasis(proj).T, prop.decay_factors(tau, k), prop.integral_factors(tau, k))


def _kernels(engine: CollisionEngine) -> tuple[_SegmentKernel, _SegmentKernel]:
    p = engine.params
    proj = singlet_projector().dense
    return (_SegmentKernel.create(engine.seg_a, p.tau_se, p.k, proj),
            _SegmentKernel.create(engine.seg_b, p.tau_ee, p.k, proj))


def engine_yield(engine: CollisionEngine, n_periods: int) -> float:
    """Singlet yield accumulated over ``n_periods`` iterations starting from ``engine``"""
    k = engine.params.k
    kernels = _kernels(engine)
    rho = engine.joint.matrix
    fresh = engine.fresh_env.matrix
    total = 0j
    for _ in range(n_periods):
        for kern in kernels:
            r_t = kern.prop.to_eigenbasis(rho)
            total += k * np.sum(kern.p_t * r_t * kern.integral)
            rho = kern.prop.from_eigenbasis(r_t * kern.decay)
        rho = refresh_environment(rho, fresh)
    expected = engine.initial_trace * np.exp(-k * (engine.t + n_periods * engine.params.period))
    if abs(np.trace(rho).real - expected) > 1e-9:
        raise NumericalConsistencyError(
            f'Trace law violated after {n_periods} iterations: {np.trace(rho).real!r}, expected {expected!r}')
    return _real(complex(total), 'Singlet yield')


def singlet_yield(params: SensorParams,
                  rho_s0: DensityMatrix,
                  rho_e0: DensityMatrix,
                  angles: FieldAngles,
                  eps_tail: float = DEFAULT_EPS_TAIL,
                  n_periods: Optional[int] = None) -> float:
    """
    Singlet recombination yield of the radicals A, B over the truncated horizon.
    ``n_periods`` overrides the number of iterations given by ``eps_tail``.
    """
    engine = CollisionEngine.create(params, angles, rho_s0, rho_e0)
    if n_periods is None:
        n_periods = horizon_periods(params, eps_tail)
    return engine_yield(engine, n_periods)


@dataclass(frozen=True)
class ObservableSet:
    """
    State functionals evaluated on the joint six-qubit state at every quadrature
    node. Correlation measures share one optimized measurement per node.
    """
    names: tuple[str, ...] = ('c1_star', )
    discord: DiscordOptions = field(default_factory=DiscordOptions)
    measured_side: MeasuredSide = MeasuredSide.SYSTEM
    normalize_state: bool = True
    normalize_by_entropy: bool = False
    """Divide the information measures by the entropy of the radicals"""

    def __post_init__(self) -> None:
        names = tuple(self.names)
        unknown = [n for n in names if n not in OBSERVABLE_NAMES]
        if unknown:
            raise RejectedInputError(f'Unknown observables {unknown!r} (expected any of {", ".join(OBSERVABLE_NAMES)})')
        if len(set(names)) != len(names):
            raise RejectedInputError(f'Duplicate observables in {names!r}')
        object.__setattr__(self, 'names', names)
        object.__setattr__(self, 'measured_side', MeasuredSide.parse(self.measured_side))

    def __len__(self) -> int:
        return len(self.names)

    @property
    def needs_measurement(self) -> bool:
        return bool(set(self.names) & {'discord', 'holevo'})

    @property
    def needs_joint(self) -> bool:
        """Whether any functional depends on more than the radicals' reduced state"""
        return bool(set(self.names) - {'c1_star'})

    def tracker(self) -> correlations.MeasurementTracker:
        return correlations.MeasurementTracker(self.discord, self.measured_side, self.normalize_state)

    def values(self,
               rho: DensityMatrix | np.ndarray,
               tracker: Optional[correlations.MeasurementTracker] = None) -> np.ndarray:
        """Every functional at one state; ``tracker`` warm-starts the measurement search"""
        if not isinstance(rho, DensityMatrix):
            rho = DensityMatrix(rho)
        out = np.zeros(len(self.names))
        info: dict[str, float] = {}
        if self.needs_measurement:
            tracker = tracker or self.tracker()
            rep = tracker.report(rho)
            info = {'mutual': rep.mutual, 'discord': rep.discord, 'holevo': rep.holevo}
        elif 'mutual' in self.names:
            info = {'mutual': correlations.mutual_information(rho, self.normalize_state)}
        scale = 1.0
        if info and self.normalize_by_entropy:
            s = von_neumann_entropy(system_state(rho))
            scale = 0.0 if s < DEGENERATE_YIELD else 1.0 / s
        for i, name in enumerate(self.names):
            if name == 'c1_star':
                out[i] = coherence_c1_star(system_state(rho))
            else:
                out[i] = info[name] * scale
        return out

    def __call__(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        return self.values(rho)

    def evaluator(self) -> NodeEvaluator:
        return _TrajectoryObservables(self)


def make_observables(names: Iterable[str], **opts) -> ObservableSet:
    """An `ObservableSet` from names and any of its keyword options"""
    return ObservableSet(tuple(names), **opts)


Observable = Callable[[DensityMatrix], 'float | np.ndarray']
NodeEvaluator = Callable[[Propagator, np.ndarray], np.ndarray]
"""Observable values ``(n_nodes, n_obs)`` from a stack of eigenbasis states of one segment"""


class _TrajectoryObservables:
    """
    Evaluates an `ObservableSet` along one trajectory. Coherence alone is read
    from the reduced states straight out of the eigenbasis; correlation measures
    need the joint state and keep one measurement tracker for the trajectory.
    """

    def __init__(self, observables: ObservableSet) -> None:
        self.observables = observables
        self.tracker = observables.tracker() if observables.needs_measurement else None

    def __call__(self, prop: Propagator, r_nodes: np.ndarray) -> np.ndarray:
        obs = self.observables
        if not obs.needs_joint:
            if not len(obs):
                return np.zeros((len(r_nodes), 0))
            return coherence_c1_star_stack(prop.system_from_eigenbasis(r_nodes))[:, None]
        return np.array([obs.values(prop.from_eigenbasis(r), self.tracker) for r in r_nodes])


def _node_evaluator(observable: Observable | ObservableSet) -> NodeEvaluator:
    if isinstance(observable, ObservableSet):
        return observable.evaluator()

    def evaluate(prop: Propagator, r_nodes: np.ndarray) -> np.ndarray:
        return np.array([
            np.atleast_1d(np.asarray(observable(DensityMatrix(prop.from_eigenbasis(r))), dtype=float))
            for r in r_nodes
        ])

    return evaluate


class WeightedYield(NamedTuple):
    values: np.ndarray
    """``(k / phi) int f(rho) tr[P rho] dt`` per observable"""
    singlet: float
    """Singlet yield from the closed-form segment integrals"""
    singlet_quadrature: float
    """Singlet yield from the same trapezoid rule as ``values``"""


def _trapezoid_weights(tau: float, n_sub: int) -> np.ndarray:
    w = np.full(n_sub + 1, tau / n_sub)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def weighted_yield(params: SensorParams,
                   rho_s0: DensityMatrix,
                   rho_e0: DensityMatrix,
                   angles: FieldAngles,
                   observable: Observable | ObservableSet,
                   n_sub: int = DEFAULT_N_SUB,
                   eps_tail: float = DEFAULT_EPS_TAIL,
                   n_periods: Optional[int] = None) -> WeightedYield:
    """
    Yield of a state functional weighted by the singlet population. Each segment
    is sampled at ``n_sub + 1`` equally spaced nodes (trapezoid rule); the
    normalizing singlet yield uses the same nodes, so ``f = 1`` gives exactly 1.
    """
    if n_sub < 1:
        raise RejectedInputError(f'n_sub must be at least 1, got {n_sub!r}')
    engine = CollisionEngine.create(params, angles, rho_s0, rho_e0)
    if n_periods is None:
        n_periods = horizon_periods(params, eps_tail)
    k = params.k
    kernels = _kernels(engine)
    evaluate = _node_evaluator(observable)
    weights = [_trapezoid_weights(kern.tau, n_sub) for kern in kernels]
    node_factors = [kern.prop.decay_factor_stack(kern.tau * np.arange(n_sub + 1) / n_sub, k) for kern in kernels]
    rho = engine.joint.matrix
    fresh = engine.fresh_env.matrix
    num: Optional[np.ndarray] = None
    den = 0.0
    exact = 0j
    for _ in range(n_periods):
        carry: Optional[tuple[float, np.ndarray]] = None
        for kern, w, factors in zip(kernels, weights, node_factors):
            r_t = kern.prop.to_eigenbasis(rho)
            exact += k * np.sum(kern.p_t * r_t * kern.integral)
            # The free segment starts where the collision segment ended
            first = 0 if carry is None else 1
            r_nodes = r_t[None] * factors[first:]
            pops = np.einsum('ij,bij->b', kern.p_t, r_nodes).real
            f = np.asarray(evaluate(kern.prop, r_nodes), dtype=float).reshape(len(r_nodes), -1)
            if carry is not None:
                pops = np.concatenate(([carry[0]], pops))
                f = np.concatenate((carry[1][None], f))
            if num is None:
                num = np.zeros(f.shape[1])
            num += (w * pops) @ f
            den += float(np.dot(w, pops))
            carry = (float(pops[-1]), f[-1])
            rho = kern.prop.from_eigenbasis(r_t * kern.decay)
        rho = refresh_environment(rho, fresh)
    singlet = _real(complex(exact), 'Singlet yield')
    if singlet < DEGENERATE_YIELD or den < DEGENERATE_YIELD / k:
        raise DegenerateNormalizationError(f'Singlet yield {singlet!r} is too small to normalize an observable yield')
    assert num is not None
    return WeightedYield(num / den, singlet, k * den)


@dataclass(frozen=True)
class _PointTask:
    params: SensorParams
    rho_s0: DensityMatrix
    rho_e0: DensityMatrix
    angles: FieldAngles
    observables: Optional[ObservableSet]
    n_sub: int
    eps_tail: float


def _evaluate_point(task: _PointTask) -> tuple[float, np.ndarray]:
    if task.observables is None or not len(task.observables):
        y = singlet_yield(task.params, task.rho_s0, task.rho_e0, task.angles, task.eps_tail)
        return y, np.zeros(0)
    wy = weighted_yield(task.params, task.rho_s0, task.rho_e0, task.angles, task.observables, task.n_sub,
                        task.eps_tail)
    return wy.singlet, wy.values


def grid_angles(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """``theta_j = 2 pi j / n_theta`` and ``phi_i = pi i / (n_phi - 1)``"""
    if n_theta < 4 or n_phi < 3:
        raise RejectedInputError(f'Angle grid needs n_theta >= 4 and n_phi >= 3, got {n_theta} x {n_phi}')
    thetas = 2 * np.pi * np.arange(n_theta) / n_theta
    phis = np.pi * np.arange(n_phi) / (n_phi - 1)
    return thetas, phis


class ScanPoint(NamedTuple):
    i_phi: int
    i_theta: int
    angles: FieldAngles
    singlet_yield: float
    observables: dict[str, float]


@dataclass(frozen=True, eq=False)
class ScanResult:
    """
    Yields tabulated on the field-angle grid. Arrays are indexed
    ``[i_phi, i_theta]``.
    """
    thetas: np.ndarray
    phis: np.ndarray
    yields: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def grid_spec(self) -> tuple[int, int]:
        return len(self.thetas), len(self.phis)

    def points(self) -> Iterator[ScanPoint]:
        """Grid points in ``(i_phi, i_theta)`` order"""
        for i, phi in enumerate(self.phis):
            for j, theta in enumerate(self.thetas):
                yield ScanPoint(i, j, FieldAngles(float(theta), float(phi)), float(self.yields[i, j]),
                                {name: float(v[i, j]) for name, v in self.observables.items()})


def angle_scan(params: SensorParams,
               rho_s0: DensityMatrix,
               rho_e0: DensityMatrix,
               n_theta: int,
               n_phi: int,
               observables: Optional[ObservableSet] = None,
               *,
               n_sub: int = DEFAULT_N_SUB,
               eps_tail: float = DEFAULT_EPS_TAIL,
               map_fn: Callable = map,
               progress: bool = False) -> ScanResult:
    """
    Evaluate the singlet yield (and any observable yields) on every grid point.

    ``map_fn`` must preserve input order, as ``Executor.map`` does; points are
    independent and results are placed by grid index.
    """
    thetas, phis = grid_angles(n_theta, n_phi)
    tasks = [
        _PointTask(params, rho_s0, rho_e0, FieldAngles(float(t), float(p)), observables, n_sub, eps_tail)
        for p in phis for t in thetas
    ]
    _LOG.debug('Scanning %d x %d field directions', n_theta, n_phi)
    results = map_fn(_evaluate_point, tasks)
    if progress:
        results = tqdm(results, total=len(tasks), desc='scan', unit='pt', leave=False)
    names = observables.names if observables is not None else ()
    yields = np.zeros((n_phi, n_theta))
    obs = {name: np.zeros((n_phi, n_theta)) for name in names}
    for idx, (y, values) in enumerate(results):
        i, j = divmod(idx, n_theta)
        if not -YIELD_TOL <= y <= 1 + YIELD_TOL:
            raise NumericalConsistencyError(f'Singlet yield {y!r} at {tasks[idx].angles!r} is outside [0, 1]')
        yields[i, j] = y
        for name, v in zip(names, values):
            obs[name][i, j] = v
    return ScanResult(thetas, phis, yields, obs)


def orientation_weights(phis: Sequence[float], n_theta: int) -> np.ndarray:
    """
    Quadrature weights on the grid: trapezoid in ``phi`` with the ``sin(phi)``
    Jacobian, periodic rectangle rule in ``theta``.
    """
    phis = np.asarray(phis, dtype=float)
    dphi = np.diff(phis)
    w_phi = np.zeros(len(phis))
    w_phi[:-1] += 0.5 * dphi
    w_phi[1:] += 0.5 * dphi
    w_phi *= np.sin(phis)
    return np.repeat(w_phi[:, None], n_theta, axis=1) * (2 * np.pi / n_theta)


def orientation_mean(values: np.ndarray, phis: Sequence[float]) -> float:
    """Spherical average of ``values[i_phi, i_theta]``, normalized by the weight sum"""
    values = np.asarray(values, dtype=float)
    w = orientation_weights(phis, values.shape[1])
    total = w.sum()
    if total <= 0:
        # Degenerate grids (only the poles) fall back to equal weights
        return float(values.mean())
    return float(np.sum(w * values) / total)


class Anisotropy(NamedTuple):
    delta: float
    ra: float
    mean: float
    objective: float
    """``delta`` times the orientation-averaged yield"""


def anisotropy(scan: ScanResult) -> Anisotropy:
    y = scan.yields
    if y.size == 0:
        raise RejectedInputError('Cannot take the anisotropy of an empty scan')
    delta = float(y.max() - y.min())
    mean = orientation_mean(y, scan.phis)
    if mean < DEGENERATE_YIELD:
        raise DegenerateNormalizationError(f'Orientation-averaged yield {mean!r} is too small for a relative '
                                           'anisotropy')
    return Anisotropy(delta, delta / mean, mean, delta * mean)


def observable_anisotropy(scan: ScanResult, name: str) -> tuple[float, float]:
    """``(delta, mean)`` of one observable yield over the grid"""
    try:
        v = scan.observables[name]
    except KeyError:
        raise RejectedInputError(f'Scan has no observable {name!r}') from None
    return float(v.max() - v.min()), orientation_mean(v, scan.phis)


def delta_flags(scan: ScanResult) -> np.ndarray:
    """+1 at the first grid maximum, -1 at the first grid minimum, 0 elsewhere"""
    y = scan.yields
    flags = np.zeros(y.shape, dtype=int)
    if y.max() - y.min() <= 0:
        return flags
    flags[np.unravel_index(np.argmax(y), y.shape)] = 1
    flags[np.unravel_index(np.argmin(y), y.shape)] = -1
    return flags


__all__ = [
    'OBSERVABLE_NAMES', 'segment_yield', 'engine_yield', 'singlet_yield', 'ObservableSet',
    'make_observables', 'WeightedYield', 'weighted_yield', 'grid_angles', 'ScanPoint', 'ScanResult', 'angle_scan',
    'orientation_weights', 'orientation_mean', 'Anisotropy', 'anisotropy', 'observable_anisotropy', 'delta_flags',
]
