"""
System-environment correlations: quantum mutual information, quantum discord
optimized over von Neumann measurements, Holevo information and the
objectivity gap.

Every measure is defined on a bipartite matrix with factor dimensions
``(d_x, d_y)``. The six-qubit entry points split the state into the radicals
``{A, B, C}`` and the current environment ``{E_A, E_B, E_C}``.

Discord is minimized heuristically, so the returned value is an upper bound of
the true discord. The measured factor's basis is ``U |i>`` with
``U = expm(i H(x))`` for a Hermitian generator ``H(x)`` with zero diagonal,
built from ``d (d - 1)`` real parameters; each restart refines ``x`` with
Powell's method.

Along a trajectory the optimal measurement moves slowly, so a
`MeasurementTracker` refines each node from the previous node's best unitary
with a short BFGS search and runs the full restart search only occasionally.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import RejectedInputError
from .states import EPS_EIG, DensityMatrix, reduce_pair, von_neumann_entropy

_LOG = logging.getLogger(__name__)

SPLIT = (8, 8)
"""Factor dimensions of the radicals / environment split of a six-qubit state"""
UNITARY_TOL = 1e-10
UNCORRELATED_MI = 1e-12
"""Below this mutual information the discord and Holevo quantity are zero"""
_P_MIN = 1e-14
_WARM_GTOL = 1e-6


class MeasuredSide(enum.Enum):
    SYSTEM = 'system'
    ENVIRONMENT = 'environment'

    @classmethod
    def parse(cls, value: 'str | MeasuredSide') -> MeasuredSide:
        if isinstance(value, MeasuredSide):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise RejectedInputError(f'Unknown measured side {value!r} (expected system or environment)') from None

    @property
    def factor(self) -> int:
        return 0 if self is MeasuredSide.SYSTEM else 1


@dataclass(frozen=True)
class DiscordOptions:
    restarts: int = 16
    """Independent optimizations; the first always starts from the computational basis"""
    max_iters: int = 2000
    tol: float = 1e-7
    seed: int = 0
    """Seed of the restart generator stream"""
    refresh_every: int = 0
    """
    Warm-started nodes between full restart searches along a trajectory; 0 runs
    the full search only at the first correlated node
    """
    warm_max_iters: int = 50
    """BFGS iterations of a warm-started refinement"""

    def check(self) -> None:
        if self.restarts < 1:
            raise RejectedInputError(f'Discord needs at least one optimization restart, got {self.restarts!r}')
        if self.refresh_every < 0 or self.warm_max_iters < 1:
            raise RejectedInputError('refresh_every must be >= 0 and warm_max_iters >= 1')


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """
    A rank-one projective measurement ``Pi_i = U |i><i| U^dagger`` on the
    measured factor.
    """
    unitary: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.unitary, dtype=complex)
        d = u.shape[0]
        if u.shape != (d, d):
            raise RejectedInputError(f'Measurement unitary must be square, got shape {u.shape}')
        if np.max(np.abs(u.conj().T @ u - np.eye(d))) > UNITARY_TOL:
            raise RejectedInputError('Measurement matrix is not unitary')
        u.setflags(write=False)
        object.__setattr__(self, 'unitary', u)

    @classmethod
    def computational(cls, dim: int) -> MeasurementBasis:
        return cls(np.eye(dim, dtype=complex))

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def projectors(self) -> np.ndarray:
        """``(d, d, d)`` stack of the projectors, ordered by outcome"""
        u = self.unitary
        return np.einsum('ai,bi->iab', u, u.conj())


@dataclass(frozen=True)
class CorrelationReport:
    """All quantities are in bits"""
    mutual: float
    discord: float
    holevo: float
    system_entropy: float
    objective_gap: float
    """``|holevo - system_entropy| + discord``; zero iff the state is objective"""


def _matrix(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _check_dims(m: np.ndarray, dims: tuple[int, int]) -> None:
    dx, dy = dims
    if m.shape != (dx * dy, dx * dy):
        raise RejectedInputError(f'State of shape {m.shape} does not split into factors {dims}')


def _prepare(rho: DensityMatrix | np.ndarray, dims: tuple[int, int], normalize: bool) -> np.ndarray:
    m = _matrix(rho)
    _check_dims(m, dims)
    if normalize:
        tr = np.trace(m).real
        if tr <= 0:
            raise RejectedInputError(f'Cannot normalize a state with trace {tr!r}')
        m = m / tr
    return m


def _entropy(m: np.ndarray, normalize: bool) -> float:
    return von_neumann_entropy(m, raw=not normalize)


def bipartite_mutual_information(rho: DensityMatrix | np.ndarray,
                                 dims: tuple[int, int],
                                 normalize: bool = True) -> float:
    """``I = S(x) + S(y) - S(xy)``"""
    m = _prepare(rho, dims, normalize)
    return (_entropy(reduce_pair(m, dims, 0), normalize) + _entropy(reduce_pair(m, dims, 1), normalize) -
            _entropy(m, normalize))


def mutual_information(rho: DensityMatrix | np.ndarray, normalize: bool = True) -> float:
    """Mutual information between the radicals and the current environment triple"""
    return bipartite_mutual_information(rho, SPLIT, normalize)


def conditional_states(rho: DensityMatrix | np.ndarray,
                       dims: tuple[int, int],
                       unitary: np.ndarray,
                       measured: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Outcome probabilities ``p_i`` and the unnormalized conditional states of the
    unmeasured factor, ``p_i rho_{other|i}``, for the measurement ``U |i>``.
    """
    dx, dy = dims
    t = _matrix(rho).reshape(dx, dy, dx, dy)
    if measured == 0:
        y = np.tensordot(unitary.conj(), t, axes=(0, 0))
        c = np.einsum('ietf,ti->ief', y, unitary)
    else:
        y = np.tensordot(t, unitary, axes=(3, 0))
        c = np.einsum('seti,ei->ist', y, unitary.conj())
    p = np.einsum('ijj->i', c).real
    return p, c


def _conditional_entropy(m: np.ndarray, dims: tuple[int, int], unitary: np.ndarray, measured: int) -> float:
    """``sum_i p_i S(rho_{other|i})`` over outcomes with non-negligible probability"""
    p, c = conditional_states(m, dims, unitary, measured)
    keep = p > _P_MIN
    if not np.any(keep):
        return 0.0
    c = c[keep] / p[keep][:, None, None]
    c = 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))
    lam = np.linalg.eigvalsh(c)
    lam = np.where(lam > EPS_EIG, lam, 1.0)
    return float(np.sum(p[keep] * -np.sum(lam * np.log2(lam), axis=1)))


def n_generator_params(d: int) -> int:
    return d * (d - 1)


def _generator(x: np.ndarray, d: int) -> np.ndarray:
    # Real then imaginary parts above the diagonal; diagonal entries only rephase the columns of U
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    if x.shape != (2 * n_off, ):
        raise RejectedInputError(f'A {d}x{d} measurement generator takes {2 * n_off} parameters, got {x.shape}')
    off = x[:n_off] + 1j * x[n_off:]
    h = np.zeros((d, d), dtype=complex)
    h[iu] = off
    h[(iu[1], iu[0])] = off.conj()
    return h


def measurement_unitary(x: np.ndarray, d: int) -> np.ndarray:
    """``expm(i H(x))`` for the ``d (d - 1)`` real off-diagonal generator parameters ``x``"""
    return scipy.linalg.expm(1j * _generator(np.asarray(x, dtype=float), d))


def _objective(m: np.ndarray, dims: tuple[int, int], measured: int,
               base: Optional[np.ndarray]) -> Callable[[np.ndarray], float]:
    d = dims[measured]

    def objective(x: np.ndarray) -> float:
        u = measurement_unitary(x, d)
        return _conditional_entropy(m, dims, u if base is None else base @ u, measured)

    return objective


def _refine(m: np.ndarray, dims: tuple[int, int], measured: int, opts: DiscordOptions,
            base: np.ndarray) -> tuple[float, np.ndarray]:
    """Local BFGS search in the neighbourhood ``base expm(i H(x))`` of a known measurement"""
    d = dims[measured]
    if base.shape != (d, d):
        raise RejectedInputError(f'Warm-start unitary of shape {base.shape} does not act on a {d}-dimensional factor')
    objective = _objective(m, dims, measured, base)
    x0 = np.zeros(n_generator_params(d))
    start = objective(x0)
    res = scipy.optimize.minimize(objective,
                                  x0,
                                  method='BFGS',
                                  options={
                                      'maxiter': opts.warm_max_iters,
                                      'gtol': _WARM_GTOL
                                  })
    if float(res.fun) < start:
        return float(res.fun), base @ measurement_unitary(res.x, d)
    return start, base


def _optimize_measurement(m: np.ndarray,
                          dims: tuple[int, int],
                          measured: int,
                          opts: DiscordOptions,
                          warm: Optional[np.ndarray] = None,
                          full: bool = True) -> tuple[float, np.ndarray]:
    """
    Best conditional entropy and its measurement unitary. ``full`` runs the
    seeded restart search; ``warm`` adds a local refinement of that unitary.
    """
    opts.check()
    d = dims[measured]
    best_value, best_unitary = np.inf, np.eye(d, dtype=complex)
    if warm is not None:
        best_value, best_unitary = _refine(m, dims, measured, opts, warm)
    if not full and warm is not None:
        return best_value, best_unitary
    rng = np.random.default_rng(opts.seed)
    n = n_generator_params(d)
    objective = _objective(m, dims, measured, None)
    identity_value = objective(np.zeros(n))
    if identity_value < best_value:
        best_value, best_unitary = identity_value, np.eye(d, dtype=complex)
    for restart in range(opts.restarts):
        x0 = np.zeros(n) if restart == 0 else rng.uniform(-np.pi, np.pi, size=n)
        res = scipy.optimize.minimize(objective,
                                      x0,
                                      method='Powell',
                                      options={
                                          'maxiter': opts.max_iters,
                                          'xtol': opts.tol,
                                          'ftol': opts.tol,
                                      })
        value = float(res.fun)
        _LOG.debug('Discord restart %d: conditional entropy %.12g (%d evaluations)', restart, value, res.nfev)
        if value < best_value:
            best_value = value
            best_unitary = measurement_unitary(res.x, d)
    return best_value, best_unitary


def _report(m: np.ndarray,
            dims: tuple[int, int],
            measured: int,
            opts: DiscordOptions,
            normalize: bool,
            warm: Optional[np.ndarray] = None,
            full: bool = True) -> tuple[CorrelationReport, Optional[np.ndarray]]:
    """The report and the optimal unitary, ``None`` when no search was needed"""
    opts.check()
    s_x = _entropy(reduce_pair(m, dims, 0), normalize)
    s_y = _entropy(reduce_pair(m, dims, 1), normalize)
    s_xy = _entropy(m, normalize)
    mutual = max(0.0, s_x + s_y - s_xy)
    if mutual < UNCORRELATED_MI:
        # D <= I, so an uncorrelated state needs no measurement search
        return CorrelationReport(mutual, 0.0, mutual, s_x, abs(mutual - s_x)), None
    cond, unitary = _optimize_measurement(m, dims, measured, opts, warm, full)
    s_measured = s_x if measured == 0 else s_y
    d_value = min(max(0.0, cond + s_measured - s_xy), mutual)
    chi = mutual - d_value
    report = CorrelationReport(mutual=mutual,
                               discord=d_value,
                               holevo=chi,
                               system_entropy=s_x,
                               objective_gap=abs(chi - s_x) + d_value)
    return report, unitary


def _basis(unitary: Optional[np.ndarray], d: int) -> MeasurementBasis:
    return MeasurementBasis(np.eye(d, dtype=complex) if unitary is None else unitary)


def bipartite_discord(rho: DensityMatrix | np.ndarray,
                      dims: tuple[int, int],
                      measured: int = 0,
                      opts: DiscordOptions = DiscordOptions(),
                      normalize: bool = True) -> tuple[float, MeasurementBasis]:
    """
    ``D = S(measured) - S(xy) + min_Pi sum_i p_i S(other|i)``, clamped to
    ``[0, I]``, together with the best measurement found.
    """
    m = _prepare(rho, dims, normalize)
    report, unitary = _report(m, dims, measured, opts, normalize)
    return report.discord, _basis(unitary, dims[measured])


def correlation_report(rho: DensityMatrix | np.ndarray,
                       dims: tuple[int, int] = SPLIT,
                       measured: int = 0,
                       opts: DiscordOptions = DiscordOptions(),
                       normalize: bool = True) -> CorrelationReport:
    """Mutual information, discord and Holevo information from one optimization"""
    m = _prepare(rho, dims, normalize)
    return _report(m, dims, measured, opts, normalize)[0]


def discord(rho: DensityMatrix | np.ndarray,
            measured_side: 'MeasuredSide | str' = MeasuredSide.SYSTEM,
            opts: Optional[DiscordOptions] = None,
            normalize: bool = True) -> tuple[float, MeasurementBasis]:
    """Discord between the radicals and the current environment triple"""
    side = MeasuredSide.parse(measured_side)
    return bipartite_discord(rho, SPLIT, side.factor, opts or DiscordOptions(), normalize)


def holevo(rho: DensityMatrix | np.ndarray,
           measured_side: 'MeasuredSide | str' = MeasuredSide.SYSTEM,
           opts: Optional[DiscordOptions] = None,
           normalize: bool = True) -> float:
    """``chi = I - D`` for the measurement that minimizes the discord"""
    side = MeasuredSide.parse(measured_side)
    return correlation_report(rho, SPLIT, side.factor, opts or DiscordOptions(), normalize).holevo


def objectivity_report(rho: DensityMatrix | np.ndarray,
                       measured_side: 'MeasuredSide | str' = MeasuredSide.SYSTEM,
                       opts: Optional[DiscordOptions] = None,
                       normalize: bool = True) -> CorrelationReport:
    side = MeasuredSide.parse(measured_side)
    return correlation_report(rho, SPLIT, side.factor, opts or DiscordOptions(), normalize)


class MeasurementTracker:
    """
    Correlation reports along one trajectory of six-qubit states. The first
    correlated state gets the full restart search; later states are refined
    from the previous optimum, with another full search every
    ``opts.refresh_every`` states when that is non-zero.
    """

    def __init__(self,
                 opts: Optional[DiscordOptions] = None,
                 measured_side: 'MeasuredSide | str' = MeasuredSide.SYSTEM,
                 normalize: bool = True) -> None:
        self.opts = opts or DiscordOptions()
        self.opts.check()
        self.side = MeasuredSide.parse(measured_side)
        self.normalize = normalize
        self.unitary: Optional[np.ndarray] = None
        self.full_searches = 0
        self._since_search = 0

    def _search_due(self) -> bool:
        if self.unitary is None:
            return True
        every = self.opts.refresh_every
        return every > 0 and self._since_search >= every

    def report(self, rho: DensityMatrix | np.ndarray) -> CorrelationReport:
        m = _prepare(rho, SPLIT, self.normalize)
        full = self._search_due()
        rep, unitary = _report(m, SPLIT, self.side.factor, self.opts, self.normalize, self.unitary, full)
        if unitary is not None:
            self.unitary = unitary
            if full:
                self.full_searches += 1
                self._since_search = 0
            else:
                self._since_search += 1
        return rep


__all__ = [
    'MeasuredSide', 'DiscordOptions', 'MeasurementBasis', 'CorrelationReport', 'mutual_information',
    'bipartite_mutual_information', 'conditional_states', 'n_generator_params', 'measurement_unitary',
    'bipartite_discord', 'correlation_report', 'discord', 'holevo', 'objectivity_report', 'MeasurementTracker',
]
