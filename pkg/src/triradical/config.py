"""
Run configuration: a flat ``key = value`` text file with dotted sections,
overridable from the command line.

Example::

    # Standard parameters, finer grid
    params.k = 0.0245
    grid.n_theta = 32
    yields.observables = c1_star, discord

Every key is optional and every value is validated before any computation
starts. Unknown keys are rejected with their file and line.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

from .analysis import TrivialStateParams
from .correlations import DiscordOptions, MeasuredSide
from .errors import ConfigError, SensorError
from .model import SensorParams
from .states import BlochVector, Family
from .yields import OBSERVABLE_NAMES, ObservableSet, make_observables

Parser = Callable[[str], object]


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f'{text!r} is not a finite number')
    return value


def _positive_float(text: str) -> float:
    value = _float(text)
    if value <= 0:
        raise ValueError(f'{text!r} must be strictly positive')
    return value


def _int_at_least(lo: int) -> Parser:

    def parse(text: str) -> int:
        value = int(text)
        if value < lo:
            raise ValueError(f'{text!r} must be at least {lo}')
        return value

    return parse


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ('1', 'true', 'yes', 'on'):
        return True
    if t in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f'{text!r} is not a boolean (use true or false)')


def _floats(n: int) -> Parser:

    def parse(text: str) -> tuple[float, ...]:
        parts = [p for p in text.replace(',', ' ').split() if p]
        if len(parts) != n:
            raise ValueError(f'expected {n} comma-separated numbers, got {text!r}')
        return tuple(_float(p) for p in parts)

    return parse


def _optional(inner: Parser) -> Parser:

    def parse(text: str) -> object:
        return None if not text.strip() else inner(text)

    return parse


def _choice(*options: str) -> Parser:

    def parse(text: str) -> str:
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f'{text!r} is not one of {", ".join(options)}')
        return t

    return parse


def _names(text: str) -> tuple[str, ...]:
    names = tuple(n.strip().lower() for n in text.split(',') if n.strip())
    for n in names:
        if n not in OBSERVABLE_NAMES:
            raise ValueError(f'unknown observable {n!r} (expected any of {", ".join(OBSERVABLE_NAMES)})')
    return names


class KeySpec(NamedTuple):
    default: str
    parse: Parser
    help: str


KEYS: Mapping[str, KeySpec] = {
    'params.j_abc': KeySpec('1.0', _float, 'Exchange coupling between every radical pair'),
    'params.j_se_tau': KeySpec('', _optional(_float), 'J_se * tau_se; empty selects the CNOT/SWAP calibration'),
    'params.k': KeySpec('0.0245', _positive_float, 'Recombination rate'),
    'params.gamma_b0': KeySpec('0.215', _float, 'Zeeman strength gamma * B0'),
    'params.tau_se': KeySpec('1.0', _positive_float, 'Collision duration'),
    'params.tau_ee': KeySpec('1.0', _positive_float, 'Free evolution between collisions'),
    'params.interaction_kind': KeySpec('cnot', _choice('cnot', 'swap'), 'Collision interaction'),
    'grid.n_theta': KeySpec('16', _int_at_least(4), 'Azimuthal grid points'),
    'grid.n_phi': KeySpec('9', _int_at_least(3), 'Polar grid points, poles included'),
    'sweep.n_states': KeySpec('150', _int_at_least(1), 'Random initial states per sweep'),
    'sweep.family': KeySpec('mixed', _choice('ball', 'zaxis', 'mixed'), 'Bloch-vector family of the sweep'),
    'sweep.seed': KeySpec('0', _int_at_least(0), 'Seed of every random stream'),
    'sweep.include_maximally_mixed': KeySpec('true', _bool, 'Make the first sweep state 1/8'),
    'initial.bloch': KeySpec('', _optional(_floats(3)), 'Bloch vector of rho0 in rho0 (x) rho0 (x) 1/2'),
    'initial.family': KeySpec('ball', _choice('ball', 'zaxis'), 'Family drawn from when no state is given'),
    'initial.trivial': KeySpec('', _optional(_floats(4)), 'p_ab, p_ac, p_bc, p_abc of a commutant state'),
    'environment.bloch': KeySpec('0, 0, 0', _floats(3), 'Bloch vector of each fresh environment qubit'),
    'yields.observables': KeySpec('c1_star', _names, 'Observable yields to compute'),
    'yields.eps_tail': KeySpec('1e-8', _positive_float, 'Truncation of the yield integral'),
    'yields.n_sub': KeySpec('8', _int_at_least(1), 'Quadrature intervals per segment'),
    'discord.restarts': KeySpec('16', _int_at_least(1), 'Measurement optimization restarts'),
    'discord.max_iters': KeySpec('2000', _int_at_least(1), 'Iterations per restart'),
    'discord.tol': KeySpec('1e-7', _positive_float, 'Optimizer tolerance'),
    'discord.refresh_every': KeySpec('0', _int_at_least(0), 'Quadrature nodes between full searches; 0 searches once'),
    'discord.warm_max_iters': KeySpec('50', _int_at_least(1), 'Iterations of a warm-started refinement'),
    'discord.measured_side': KeySpec('system', _choice('system', 'environment'), 'Factor that is measured'),
    'correlations.normalize_state': KeySpec('true', _bool, 'Trace-normalize decayed states first'),
    'correlations.normalize_by_entropy': KeySpec('false', _bool, 'Divide information measures by S(ABC)'),
    'verify.samples': KeySpec('100', _int_at_least(1), 'Sampled instances per check'),
    'verify.n_angles': KeySpec('100', _int_at_least(6), 'Field directions per check'),
    'verify.inject_fault': KeySpec('false', _bool, 'Flip the sign of one exchange term'),
    'output.dir': KeySpec('out', str, 'Directory receiving every output file'),
    'output.svg': KeySpec('true', _bool, 'Write SVG scatter plots'),
    'output.trajectory': KeySpec('false', _bool, 'Write the trajectory dump of a scan'),
    'run.threads': KeySpec('1', _int_at_least(1), 'Worker processes'),
}


class Setting(NamedTuple):
    text: str
    path: Optional[Path] = None
    line: Optional[int] = None


def _check_key(key: str, path: Optional[Path] = None, line: Optional[int] = None) -> str:
    if key not in KEYS:
        raise ConfigError(f'Unknown configuration key {key!r}', path=path, line=line, key=key)
    return key


def parse_config_text(text: str, path: Optional[Path] = None) -> dict[str, Setting]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped"""
    out: dict[str, Setting] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise ConfigError(f'Expected "key = value", got {raw.strip()!r}', path=path, line=lineno)
        key = _check_key(key.strip(), path, lineno)
        if key in out:
            raise ConfigError(f'Duplicate key (first set on line {out[key].line})', path=path, line=lineno, key=key)
        out[key] = Setting(value.strip(), path, lineno)
    return out


def load_config_file(path: Path) -> dict[str, Setting]:
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as err:
        raise ConfigError(f'Cannot read configuration file: {err}', path=path) from err
    return parse_config_text(text, path)


def parse_overrides(args: Sequence[str]) -> dict[str, Setting]:
    """``--key VALUE`` or ``--key=VALUE`` pairs for dotted keys"""
    out: dict[str, Setting] = {}
    it = iter(args)
    for arg in it:
        if not arg.startswith('--'):
            raise ConfigError(f'Unexpected argument {arg!r}')
        key, sep, value = arg[2:].partition('=')
        _check_key(key)
        if not sep:
            try:
                value = next(it)
            except StopIteration:
                raise ConfigError('Missing value for command-line override', key=key) from None
        out[key] = Setting(value.strip())
    return out


@dataclass(frozen=True)
class SweepSpec:
    n_states: int
    family: str
    seed: int
    include_maximally_mixed: bool


@dataclass(frozen=True)
class InitialSpec:
    bloch: Optional[BlochVector]
    family: Family
    trivial: Optional[TrivialStateParams]


@dataclass(frozen=True)
class VerifySpec:
    samples: int
    n_angles: int
    inject_fault: bool


@dataclass(frozen=True)
class OutputSpec:
    dir: Path
    svg: bool
    trajectory: bool


@dataclass(frozen=True)
class RunConfig:
    """A fully validated configuration"""
    params: SensorParams
    grid: tuple[int, int]
    """``(n_theta, n_phi)``"""
    sweep: SweepSpec
    initial: InitialSpec
    environment: BlochVector
    observables: ObservableSet
    eps_tail: float
    n_sub: int
    verify: VerifySpec
    output: OutputSpec
    threads: int
    canonical: str
    """One ``key = value`` line per key in sorted order, defaults included"""
    explicit_coupling: bool = False
    """Whether params.j_se_tau was given rather than calibrated"""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical.encode('utf-8')).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return self.sweep.seed

    @property
    def discord(self) -> DiscordOptions:
        return self.observables.discord


def _resolve(settings: Mapping[str, Setting]) -> dict[str, object]:
    values: dict[str, object] = {}
    for key, spec in KEYS.items():
        s = settings.get(key, Setting(spec.default))
        try:
            values[key] = spec.parse(s.text)
        except ValueError as err:
            raise ConfigError(f'Invalid value {s.text!r}: {err}', path=s.path, line=s.line, key=key) from err
    return values


def build_config(settings: Mapping[str, Setting]) -> RunConfig:
    """Validate every key and assemble the typed configuration"""
    v = _resolve(settings)
    canonical = ''.join(f'{k} = {settings[k].text if k in settings else KEYS[k].default}\n' for k in sorted(KEYS))
    if v['initial.bloch'] is not None and v['initial.trivial'] is not None:
        s = settings['initial.trivial']
        raise ConfigError('initial.bloch and initial.trivial are mutually exclusive',
                          path=s.path,
                          line=s.line,
                          key='initial.trivial')
    try:
        params = SensorParams(j_abc=v['params.j_abc'],
                              j_se_tau=v['params.j_se_tau'],
                              k=v['params.k'],
                              gamma_b0=v['params.gamma_b0'],
                              tau_se=v['params.tau_se'],
                              tau_ee=v['params.tau_ee'],
                              interaction_kind=v['params.interaction_kind'])  # type: ignore[arg-type]
        bloch = None if v['initial.bloch'] is None else BlochVector.of(v['initial.bloch'])  # type: ignore[arg-type]
        env = BlochVector.of(v['environment.bloch'])  # type: ignore[arg-type]
        for key, vec in (('initial.bloch', bloch), ('environment.bloch', env)):
            if vec is not None and vec.norm > 1 + 1e-12:
                s = settings.get(key, Setting(''))
                raise ConfigError(f'Bloch vector {vec.r.tolist()!r} lies outside the unit ball',
                                  path=s.path,
                                  line=s.line,
                                  key=key)
        trivial = None if v['initial.trivial'] is None else TrivialStateParams(*v['initial.trivial'])  # type: ignore
        discord = DiscordOptions(restarts=v['discord.restarts'],
                                 max_iters=v['discord.max_iters'],
                                 tol=v['discord.tol'],
                                 seed=v['sweep.seed'],
                                 refresh_every=v['discord.refresh_every'],
                                 warm_max_iters=v['discord.warm_max_iters'])  # type: ignore[arg-type]
        observables = make_observables(v['yields.observables'],
                                       discord=discord,
                                       measured_side=MeasuredSide.parse(v['discord.measured_side']),
                                       normalize_state=v['correlations.normalize_state'],
                                       normalize_by_entropy=v['correlations.normalize_by_entropy'])  # type: ignore
    except ConfigError:
        raise
    except SensorError as err:
        raise ConfigError(str(err)) from err
    return RunConfig(
        params=params,
        grid=(v['grid.n_theta'], v['grid.n_phi']),  # type: ignore[arg-type]
        sweep=SweepSpec(v['sweep.n_states'], v['sweep.family'], v['sweep.seed'],
                        v['sweep.include_maximally_mixed']),  # type: ignore[arg-type]
        initial=InitialSpec(bloch, Family.parse(v['initial.family']), trivial),  # type: ignore[arg-type]
        environment=env,
        observables=observables,
        eps_tail=v['yields.eps_tail'],  # type: ignore[arg-type]
        n_sub=v['yields.n_sub'],  # type: ignore[arg-type]
        verify=VerifySpec(v['verify.samples'], v['verify.n_angles'], v['verify.inject_fault']),  # type: ignore
        output=OutputSpec(Path(v['output.dir']), v['output.svg'], v['output.trajectory']),  # type: ignore
        threads=v['run.threads'],  # type: ignore[arg-type]
        canonical=canonical,
        explicit_coupling=v['params.j_se_tau'] is not None,
    )


def load_config(path: Optional[Path] = None, overrides: Iterable[tuple[str, str]] = ()) -> RunConfig:
    """File settings first, then ``(key, value)`` overrides on top"""
    settings = load_config_file(path) if path is not None else {}
    for key, value in overrides:
        settings[_check_key(key)] = Setting(str(value))
    return build_config(settings)


__all__ = [
    'KEYS', 'KeySpec', 'Setting', 'RunConfig', 'SweepSpec', 'InitialSpec', 'VerifySpec', 'OutputSpec',
    'parse_config_text', 'load_config_file', 'parse_overrides', 'build_config', 'load_config',
]
