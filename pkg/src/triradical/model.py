"""
Hamiltonians and projectors of the three-radical sensor, in units where the
A-B dipolar scale ``d_AB = 1`` and ``hbar = 1``.

The radicals sit on the z axis at ``z_A = -0.5``, ``z_B = 0.5``, ``z_C = 1.5``.
Positions only enter the dipolar coupling, which this model does not include,
so they are not part of `SensorParams`.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import RejectedInputError
from .pauli import (SITES, PauliSum, embed, site_operator, total_terms)

RADICALS = ('A', 'B', 'C')
ENVIRONMENTS = ('E_A', 'E_B', 'E_C')
PAIRS = (('A', 'B'), ('A', 'C'), ('B', 'C'))
AXES = ('X', 'Y', 'Z')


class InteractionKind(enum.Enum):
    CNOT = 'cnot'
    SWAP = 'swap'

    @classmethod
    def parse(cls, value: 'str | InteractionKind') -> InteractionKind:
        if isinstance(value, InteractionKind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise RejectedInputError(
                f'Unknown interaction kind {value!r} (expected one of '
                f'{", ".join(k.value for k in cls)})') from None


# J_se * tau_se giving an exact CNOT / SWAP per collision
CNOT_CALIBRATION = math.pi / 2
SWAP_CALIBRATION = math.pi / 4


@dataclass(frozen=True)
class SensorParams:
    """
    Model constants. Defaults reproduce the standard configuration:
    isotropic exchange ``J_ABC = 1``, ``k = 0.0245``, ``gamma B0 = 0.215``,
    ``tau_se = tau_ee = 1`` and a CNOT-calibrated collision.
    """
    j_abc: float = 1.0
    """Isotropic exchange coupling between every radical pair"""
    j_se_tau: Optional[float] = None
    """Dimensionless J_se * tau_se. ``None`` selects the calibration of the interaction kind"""
    k: float = 0.0245
    """Recombination rate"""
    gamma_b0: float = 0.215
    """Zeeman strength gamma * B0"""
    tau_se: float = 1.0
    """Duration of each system-environment collision"""
    tau_ee: float = 1.0
    """Free evolution between collisions"""
    interaction_kind: InteractionKind = InteractionKind.CNOT

    def __post_init__(self) -> None:
        kind = InteractionKind.parse(self.interaction_kind)
        object.__setattr__(self, 'interaction_kind', kind)
        if self.j_se_tau is None:
            calib = SWAP_CALIBRATION if kind is InteractionKind.SWAP else CNOT_CALIBRATION
            object.__setattr__(self, 'j_se_tau', calib)
        for name in ('k', 'tau_se', 'tau_ee'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise RejectedInputError(f'Parameter {name} must be strictly positive, got {value!r}')
        for name in ('j_abc', 'j_se_tau', 'gamma_b0'):
            if not math.isfinite(getattr(self, name)):
                raise RejectedInputError(f'Parameter {name} must be finite')

    @property
    def j_se(self) -> float:
        """The collision coupling J_se, derived from the calibrated product"""
        assert self.j_se_tau is not None
        return self.j_se_tau / self.tau_se

    @property
    def period(self) -> float:
        """Duration T of one collisional iteration"""
        return self.tau_se + self.tau_ee

    def with_kind(self, kind: 'str | InteractionKind', keep_coupling: bool = False) -> SensorParams:
        """Switch interaction kind, re-deriving the default calibration unless ``keep_coupling``"""
        coupling = self.j_se_tau if keep_coupling else None
        return replace(self, interaction_kind=InteractionKind.parse(kind), j_se_tau=coupling)


@dataclass(frozen=True)
class FieldAngles:
    """
    Field direction: ``theta`` is the azimuth in [0, 2pi), ``phi`` the polar
    angle in [0, pi].
    """
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.phi <= math.pi + 1e-12):
            raise RejectedInputError(f'Polar angle phi={self.phi!r} is outside [0, pi]')
        object.__setattr__(self, 'theta', math.fmod(self.theta, 2 * math.pi) % (2 * math.pi))

    @property
    def direction(self) -> np.ndarray:
        """Unit vector (cos t sin p, sin t sin p, cos p)"""
        st = math.sin(self.phi)
        return np.array([math.cos(self.theta) * st, math.sin(self.theta) * st, math.cos(self.phi)])


def total_spin(axis: str) -> PauliSum:
    """``sigma_i^A + sigma_i^B + sigma_i^C`` for ``axis`` in X, Y, Z"""
    return total_terms([site_operator(axis, r) for r in RADICALS])


def h_exchange(p: SensorParams) -> PauliSum:
    """
    ``-J sum_{a<b} (1/2 + 2 S_a.S_b)`` with ``S = sigma/2``, i.e.
    ``-(J/2) sum_{a<b} (1 + sigma_a.sigma_b)``.
    """
    if p.j_abc == 0:
        return PauliSum.zero()
    parts = [PauliSum.identity(-1.5 * p.j_abc)]
    for a, b in PAIRS:
        for ax in AXES:
            parts.append(embed({a: ax, b: ax}, -0.5 * p.j_abc))
    return total_terms(parts)


def h_zeeman(p: SensorParams, a: FieldAngles) -> PauliSum:
    """``(gamma B0 / 2) sum_radicals n.sigma``; the environment is not coupled"""
    n = a.direction
    parts = []
    for i, ax in enumerate(AXES):
        if n[i] != 0.0:
            parts.append(total_spin(ax) * (0.5 * p.gamma_b0 * n[i]))
    return total_terms(parts)


def _cnot_pair(radical: str, env: str, j_se: float) -> PauliSum:
    # (J/2)(1 - Z_r)(1 - X_e)
    c = 0.5 * j_se
    return total_terms([
        PauliSum.identity(c),
        embed({radical: 'Z'}, -c),
        embed({env: 'X'}, -c),
        embed({radical: 'Z', env: 'X'}, c),
    ])


def _swap_pair(radical: str, env: str, j_se: float) -> PauliSum:
    return total_terms([embed({radical: ax, env: ax}, j_se) for ax in AXES])


def v_pair(p: SensorParams, radical: str) -> PauliSum:
    """The collision Hamiltonian between one radical and its own environment site"""
    env = 'E_' + radical
    if p.interaction_kind is InteractionKind.CNOT:
        return _cnot_pair(radical, env, p.j_se)
    if p.interaction_kind is InteractionKind.SWAP:
        return _swap_pair(radical, env, p.j_se)
    raise RejectedInputError(f'Unknown interaction kind {p.interaction_kind!r}')


def v_interaction(p: SensorParams) -> PauliSum:
    """
    System-environment collision Hamiltonian.

    CNOT kind: ``(J_se/2) sum_a (1 - Z_a)(1 - X_Ea)``.
    SWAP kind: ``J_se sum_a sum_i sigma_i^a sigma_i^Ea``.
    """
    return total_terms([v_pair(p, r) for r in RADICALS])


def singlet_projector() -> PauliSum:
    """``(1 - sigma^A . sigma^B) / 4``, identity on C and the environment"""
    return total_terms([PauliSum.identity(0.25)] +
                       [embed({'A': ax, 'B': ax}, -0.25) for ax in AXES])


def total_hamiltonian(p: SensorParams, a: FieldAngles, with_interaction: bool = True) -> PauliSum:
    """``H_ex + H_B (+ V_SE)``: the generator of the collision (or free) segment"""
    parts = [h_exchange(p), h_zeeman(p, a)]
    if with_interaction:
        parts.append(v_interaction(p))
    return total_terms(parts)


def random_interaction(rng: np.random.Generator, scale: float = 1.0) -> PauliSum:
    """
    A random ``V_AEA + V_BEB + V_CEC`` with every ``V = sum_ij g_ij sigma_i sigma_j``
    carrying generic two-body coefficients.
    """
    labels = 'IXYZ'
    parts = []
    for r, e in zip(RADICALS, ENVIRONMENTS):
        g = rng.normal(scale=scale, size=(4, 4))
        # Keep at least one genuine two-body coupling away from zero
        g[1 + rng.integers(3), 1 + rng.integers(3)] += math.copysign(1.0, rng.normal()) * scale
        for i, j in itertools.product(range(4), repeat=2):
            if i == 0 and j == 0:
                continue
            ops = {}
            if i:
                ops[r] = labels[i]
            if j:
                ops[e] = labels[j]
            parts.append(embed(ops, g[i, j]))
    return total_terms(parts)


def local_interaction(rng: np.random.Generator, scale: float = 1.0) -> PauliSum:
    """
    An interaction without two-body terms that commutes with the singlet
    projector: environment-local fields plus one rotation-generator term shared
    by all three radicals.
    """
    parts = []
    shared = rng.normal(scale=scale, size=3)
    for ax, g in zip(AXES, shared):
        parts.append(total_spin(ax) * g)
    for e in ENVIRONMENTS:
        for ax, g in zip(AXES, rng.normal(scale=scale, size=3)):
            parts.append(site_operator(ax, e, g))
    return total_terms(parts)


def random_system_hamiltonian(rng: np.random.Generator) -> PauliSum:
    """A random Hermitian operator on the radicals only"""
    labels = 'IXYZ'
    terms = []
    for idx in itertools.product(range(4), repeat=3):
        if idx == (0, 0, 0):
            continue
        terms.append((''.join(labels[i] for i in idx) + 'III', rng.normal()))
    return PauliSum.from_terms(terms)


__all__ = [
    'SITES', 'InteractionKind', 'SensorParams', 'FieldAngles', 'h_exchange', 'h_zeeman',
    'v_interaction', 'v_pair', 'singlet_projector', 'total_spin', 'total_hamiltonian',
    'random_interaction', 'local_interaction', 'random_system_hamiltonian',
    'CNOT_CALIBRATION', 'SWAP_CALIBRATION',
]
