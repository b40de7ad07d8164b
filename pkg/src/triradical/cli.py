"""
Command-line driver: angle scans, random-state sweeps, the SWAP demonstration,
observable-yield studies and the verification suite.

Exit codes: 0 on success, 1 for configuration errors, 2 when a numerical
invariant is violated and 3 when a verification check fails.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, NoReturn, Optional, Protocol, Sequence, cast

import numpy as np
import scipy.stats
from tqdm import tqdm

from . import __version__
from .analysis import CheckResult, run_verification, trivial_state
from .config import RunConfig, load_config, parse_overrides
from .dynamics import CollisionEngine, horizon_periods, trajectory
from .errors import ConfigError, NumericalConsistencyError, RejectedInputError, SensorError
from .model import FieldAngles, InteractionKind, SensorParams
from .output import Provenance, Series, palette, write_csv, write_scatter
from .states import (BlochVector, DensityMatrix, Family, coherence_c1, environment_state, initial_system_state,
                     maximally_mixed, sample_bloch, sample_initial_family)
from .yields import (Anisotropy, ObservableSet, ScanResult, angle_scan, anisotropy, delta_flags,
                     observable_anisotropy)

_LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

SWAP_TRIVIAL_DELTA = 1e-9


class _Parser(argparse.ArgumentParser):

    def error(self, message: str) -> NoReturn:
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', help='Configuration file of "key = value" lines', type=Path, metavar='PATH')
    p.add_argument('--seed', help='Seed of every random stream (sweep.seed)', type=int)
    p.add_argument('--threads', help='Worker processes (run.threads)', type=int)
    p.add_argument('--out', help='Output directory (output.dir)', type=Path, metavar='DIR')


def create_parser() -> argparse.ArgumentParser:
    parser = _Parser('triradical',
                     description='Three-radical quantum compass under a collisional environment',
                     epilog='Any configuration key can be overridden as --<key> VALUE, e.g. --params.k 0.03')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--debug', '-d', action='store_true', help='Enable debug logging')
    grp = parser.add_subparsers(title='Commands', dest='command', metavar='<subcommand>')
    for name, help in (
        ('scan', 'Singlet yield over the field-angle grid for one initial state'),
        ('sweep', 'Anisotropy statistics over random initial radical states'),
        ('swap-demo', 'Sensing from environment coherence with a SWAP collision'),
        ('yields', 'Observable-weighted yields and their anisotropies'),
        ('verify', 'Numerically certify the structural lemmas'),
    ):
        _add_common(grp.add_parser(name, help=help))
    return parser


class CommandArgs(Protocol):
    command: Optional[str]
    debug: bool
    config: Optional[Path]
    seed: Optional[int]
    threads: Optional[int]
    out: Optional[Path]


def parse_argv(argv: Sequence[str]) -> tuple[CommandArgs, list[str]]:
    parser = create_parser()
    args, extra = parser.parse_known_args(argv)
    return cast(CommandArgs, args), extra


def resolve_config(args: CommandArgs, extra: Sequence[str]) -> RunConfig:
    overrides = [(k, s.text) for k, s in parse_overrides(extra).items()]
    for key, value in (('sweep.seed', args.seed), ('run.threads', args.threads), ('output.dir', args.out)):
        if value is not None:
            overrides.append((key, str(value)))
    return load_config(args.config, overrides)


@contextlib.contextmanager
def _mapper(threads: int) -> Iterator[Callable]:
    """An order-preserving ``map``, over worker processes when ``threads > 1``"""
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield pool.map


def _provenance(cfg: RunConfig, command: str) -> Provenance:
    return Provenance(cfg.config_hash, cfg.seed, command)


def initial_state(cfg: RunConfig) -> DensityMatrix:
    """The radical state selected by the ``initial.*`` keys"""
    spec = cfg.initial
    if spec.trivial is not None:
        _LOG.info('Initial state: commutant family %r', spec.trivial)
        return trivial_state(spec.trivial)
    if spec.bloch is None:
        rho = sample_initial_family(np.random.default_rng(cfg.seed), spec.family)
        _LOG.info('Initial state: drawn from the %s family, C1 = %.6g bits', spec.family.value, coherence_c1(rho))
        return rho
    _LOG.info('Initial Bloch vector %s', spec.bloch.r.tolist())
    return initial_system_state(spec.bloch)


def _observable_columns(names: Sequence[str]) -> list[str]:
    return [f'{n}_yield' for n in names]


def cmd_scan(cfg: RunConfig) -> int:
    rho_s0 = initial_state(cfg)
    rho_e0 = environment_state(cfg.environment)
    n_theta, n_phi = cfg.grid
    _LOG.info('Scanning a %d x %d grid over %d iterations per point', n_theta, n_phi,
              horizon_periods(cfg.params, cfg.eps_tail))
    with _mapper(cfg.threads) as map_fn:
        scan = angle_scan(cfg.params,
                          rho_s0,
                          rho_e0,
                          n_theta,
                          n_phi,
                          cfg.observables,
                          n_sub=cfg.n_sub,
                          eps_tail=cfg.eps_tail,
                          map_fn=map_fn,
                          progress=True)
    an = anisotropy(scan)
    flags = delta_flags(scan)
    names = cfg.observables.names
    prov = _provenance(cfg, 'scan')
    out = cfg.output.dir
    rows = []
    for pt in scan.points():
        rows.append([pt.angles.theta, pt.angles.phi, pt.singlet_yield, int(flags[pt.i_phi, pt.i_theta])] +
                    [pt.observables[n] for n in names])
    write_csv(out / 'scan.csv', prov, ['theta', 'phi', 'yield', 'delta_flag'] + _observable_columns(names), rows)
    summary_cols = ['delta', 'ra', 'mean', 'objective']
    summary = [an.delta, an.ra, an.mean, an.objective]
    for n in names:
        d, m = observable_anisotropy(scan, n)
        summary_cols += [f'{n}_delta', f'{n}_mean']
        summary += [d, m]
    write_csv(out / 'scan_summary.csv', prov, summary_cols, [summary])
    if cfg.output.trajectory:
        best = np.unravel_index(np.argmax(scan.yields), scan.yields.shape)
        angles = FieldAngles(float(scan.thetas[best[1]]), float(scan.phis[best[0]]))
        engine = CollisionEngine.create(cfg.params, angles, rho_s0, rho_e0)
        rows = [list(r) for r in trajectory(engine, horizon_periods(cfg.params, cfg.eps_tail))]
        write_csv(out / 'trajectory.csv', prov, ['t', 'trace', 'singlet_population', 'c1_star'], rows)
    print(f'delta={an.delta:.6g} ra={an.ra:.6g} mean={an.mean:.6g} objective={an.objective:.6g}')
    return EXIT_OK


@dataclass(frozen=True)
class _StateTask:
    params: SensorParams
    rho_s0: DensityMatrix
    rho_e0: DensityMatrix
    grid: tuple[int, int]
    observables: ObservableSet
    n_sub: int
    eps_tail: float


def _evaluate_state(task: _StateTask) -> tuple[ScanResult, Anisotropy]:
    scan = angle_scan(task.params,
                      task.rho_s0,
                      task.rho_e0,
                      task.grid[0],
                      task.grid[1],
                      task.observables,
                      n_sub=task.n_sub,
                      eps_tail=task.eps_tail)
    return scan, anisotropy(scan)


def sample_states(cfg: RunConfig) -> list[tuple[str, BlochVector]]:
    """The seeded sequence of ``(family, Bloch vector)`` draws of a sweep"""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for i in range(cfg.sweep.n_states):
        if i == 0 and cfg.sweep.include_maximally_mixed:
            out.append((Family.Z_AXIS.value, BlochVector()))
            continue
        family = cfg.sweep.family
        if family == 'mixed':
            family = (Family.BALL_UNIFORM, Family.Z_AXIS)[int(rng.integers(2))].value
        out.append((family, sample_bloch(rng, family)))
    return out


def _run_states(cfg: RunConfig, tasks: Sequence[_StateTask], desc: str) -> list[tuple[ScanResult, Anisotropy]]:
    with _mapper(cfg.threads) as map_fn:
        return list(tqdm(map_fn(_evaluate_state, tasks), total=len(tasks), desc=desc, unit='state'))


def _spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 3 or np.ptp(x[ok]) == 0 or np.ptp(y[ok]) == 0:
        return float('nan'), float('nan')
    res = scipy.stats.spearmanr(x[ok], y[ok])
    return float(res[0]), float(res[1])


def _sweep_series(rows: Sequence[dict], x_key: str, y_key: str) -> list[Series]:
    series = []
    for i, (family, sign) in enumerate(((f, s) for f in ('zaxis', 'ball') for s in ('+', '-'))):
        pts = [(r[x_key], r[y_key]) for r in rows if r['family'] == family and (r['bloch_z'] >= 0) == (sign == '+')]
        if pts:
            series.append(Series(f'{family}, z {"≥" if sign == "+" else "<"} 0', palette(i), pts))
    return series


def cmd_sweep(cfg: RunConfig) -> int:
    names = tuple(dict.fromkeys(('c1_star', ) + cfg.observables.names))
    obs = ObservableSet(names,
                        discord=cfg.observables.discord,
                        measured_side=cfg.observables.measured_side,
                        normalize_state=cfg.observables.normalize_state,
                        normalize_by_entropy=cfg.observables.normalize_by_entropy)
    states = sample_states(cfg)
    rho_e0 = environment_state(cfg.environment)
    tasks = [
        _StateTask(cfg.params, initial_system_state(r), rho_e0, cfg.grid, obs, cfg.n_sub, cfg.eps_tail)
        for _, r in states
    ]
    _LOG.info('Sweeping %d initial states', len(tasks))
    outcomes = _run_states(cfg, tasks, 'sweep')
    columns = [
        'seed', 'family', 'bloch_x', 'bloch_y', 'bloch_z', 'c1_initial', 'yield_mean', 'delta', 'ra', 'objective',
        'c1star_yield', 'chi_yield', 'discord_yield'
    ]
    rows = []
    for (family, r), task, (scan, an) in zip(states, tasks, outcomes):

        def mean_of(name: str) -> object:
            return observable_anisotropy(scan, name)[1] if name in scan.observables else ''

        rows.append({
            'seed': cfg.seed,
            'family': family,
            'bloch_x': r.x,
            'bloch_y': r.y,
            'bloch_z': r.z,
            'c1_initial': coherence_c1(task.rho_s0),
            'yield_mean': an.mean,
            'delta': an.delta,
            'ra': an.ra,
            'objective': an.objective,
            'c1star_yield': mean_of('c1_star'),
            'chi_yield': mean_of('holevo'),
            'discord_yield': mean_of('discord'),
        })
    prov = _provenance(cfg, 'sweep')
    out = cfg.output.dir
    write_csv(out / 'sweep.csv', prov, columns, [[row[c] for c in columns] for row in rows])

    stats = []
    for subset in ('all', 'ball', 'zaxis'):
        sel = [row for row in rows if subset == 'all' or row['family'] == subset]
        rho_c1, p_c1 = _spearman([s['c1_initial'] for s in sel], [s['delta'] for s in sel])
        rho_cy, p_cy = _spearman([s['c1star_yield'] for s in sel], [s['yield_mean'] for s in sel])
        stats.append([subset, len(sel), rho_c1, p_c1, rho_cy, p_cy])
    write_csv(out / 'sweep_summary.csv', prov,
              ['subset', 'n', 'spearman_c1_delta', 'p_c1_delta', 'spearman_c1star_yield', 'p_c1star_yield'], stats)
    if cfg.output.svg:
        write_scatter(out / 'sweep.svg', prov, 'Initial coherence against anisotropy',
                      'C1(rho_ABC(0)) [bits]', 'delta [singlet yield]', _sweep_series(rows, 'c1_initial', 'delta'))
    for s in stats:
        print(f'{s[0]:>6}: n={s[1]:<4d} spearman(C1, delta)={s[2]:.3f} spearman(C1* yield, yield)={s[4]:.3f}')
    return EXIT_OK


def cmd_swap_demo(cfg: RunConfig) -> int:
    params = cfg.params
    if params.interaction_kind is not InteractionKind.SWAP:
        params = params.with_kind(InteractionKind.SWAP, keep_coupling=cfg.explicit_coupling)
        source = 'configured' if cfg.explicit_coupling else 'calibrated'
        _LOG.info('Switching to the SWAP interaction with the %s j_se_tau = %.6g', source, params.j_se_tau)
    rng = np.random.default_rng(cfg.seed)
    envs = [BlochVector(), BlochVector(0.0, 0.0, 1.0)]
    envs += [sample_bloch(rng, Family.BALL_UNIFORM) for _ in range(cfg.sweep.n_states)]
    rho_s0 = maximally_mixed(8)
    tasks = [
        _StateTask(params, rho_s0, environment_state(r), cfg.grid, ObservableSet(()), cfg.n_sub, cfg.eps_tail)
        for r in envs
    ]
    outcomes = _run_states(cfg, tasks, 'swap-demo')
    rows = []
    for i, (r, task, (_, an)) in enumerate(zip(envs, tasks, outcomes)):
        rows.append([i, r.x, r.y, r.z, coherence_c1(task.rho_e0), an.mean, an.delta, an.ra])
    prov = _provenance(cfg, 'swap-demo')
    out = cfg.output.dir
    write_csv(out / 'swap_demo.csv', prov,
              ['index', 'env_bloch_x', 'env_bloch_y', 'env_bloch_z', 'c1_env', 'yield_mean', 'delta', 'ra'], rows)
    if cfg.output.svg:
        points = [(r[4], r[6]) for r in rows]
        write_scatter(out / 'swap_demo.svg', prov, 'Environment coherence against anisotropy', 'C1(rho_E(0)) [bits]',
                      'delta [singlet yield]', [Series('random environments', palette(0), points)])
    if rows[0][6] > SWAP_TRIVIAL_DELTA:
        raise NumericalConsistencyError(
            f'A maximally mixed environment gave a nonzero anisotropy {rows[0][6]!r}')
    if not any(row[6] > SWAP_TRIVIAL_DELTA for row in rows[1:]):
        raise NumericalConsistencyError('No coherent environment produced a nonzero anisotropy')
    print(f'mixed environment: delta={rows[0][6]:.3g}; |000> environment: delta={rows[1][6]:.6g}')
    return EXIT_OK


def cmd_yields(cfg: RunConfig) -> int:
    names = cfg.observables.names
    states = sample_states(cfg)
    rho_e0 = environment_state(cfg.environment)
    tasks = [
        _StateTask(cfg.params, initial_system_state(r), rho_e0, cfg.grid, cfg.observables, cfg.n_sub, cfg.eps_tail)
        for _, r in states
    ]
    outcomes = _run_states(cfg, tasks, 'yields')
    columns = ['index', 'family', 'bloch_x', 'bloch_y', 'bloch_z', 'c1_initial', 'yield_mean', 'delta']
    for n in names:
        columns += [f'{n}_yield', f'{n}_delta']
    rows = []
    for i, ((family, r), task, (scan, an)) in enumerate(zip(states, tasks, outcomes)):
        row: list[object] = [i, family, r.x, r.y, r.z, coherence_c1(task.rho_s0), an.mean, an.delta]
        for n in names:
            d, m = observable_anisotropy(scan, n)
            row += [m, d]
        rows.append(row)
    prov = _provenance(cfg, 'yields')
    write_csv(cfg.output.dir / 'yields.csv', prov, columns, rows)
    if cfg.output.svg:
        for n in names:
            col = columns.index(f'{n}_yield')
            write_scatter(cfg.output.dir / f'yields_{n}.svg', prov, f'{n} yield against singlet yield',
                          f'{n} yield', 'orientation-averaged singlet yield',
                          [Series(n, palette(0), [(float(r[col]), float(r[6])) for r in rows])])  # type: ignore
    return EXIT_OK


def _print_table(results: Sequence[CheckResult]) -> None:
    width = max(len(r.name) for r in results)
    print(f'{"check":<{width}}  {"samples":>7}  {"residual":>12}  verdict')
    for r in results:
        print(f'{r.name:<{width}}  {r.samples:>7d}  {r.residual:>12.3e}  {r.verdict}')


def cmd_verify(cfg: RunConfig) -> int:
    v = cfg.verify
    results = run_verification(cfg.params, v.samples, v.n_angles, cfg.seed, v.inject_fault)
    _print_table(results)
    write_csv(cfg.output.dir / 'verify_summary.csv', _provenance(cfg, 'verify'),
              ['name', 'samples', 'n_angles', 'residual', 'expect', 'verdict'],
              [[r.name, r.samples, v.n_angles, r.residual, r.expect, r.verdict] for r in results])
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f'FAILED: {", ".join(failed)}', file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    'scan': cmd_scan,
    'sweep': cmd_sweep,
    'swap-demo': cmd_swap_demo,
    'yields': cmd_yields,
    'verify': cmd_verify,
}


def _configure_logging(debug: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s',
                        stream=sys.stderr)


def main(argv: Sequence[str]) -> int:
    try:
        args, extra = parse_argv(argv)
        if args.command is None:
            create_parser().print_help()
            return EXIT_CONFIG
        _configure_logging(args.debug)
        cfg = resolve_config(args, extra)
        _LOG.info('Running %s (config %s, seed %d)', args.command, cfg.config_hash, cfg.seed)
        code = COMMANDS[args.command](cfg)
        _LOG.info('Finished %s with exit code %d', args.command, code)
        return code
    except ConfigError as err:
        print(f'triradical: configuration error: {err}', file=sys.stderr)
        return EXIT_CONFIG
    except NumericalConsistencyError as err:
        print(f'triradical: numerical invariant violated: {err}', file=sys.stderr)
        return EXIT_NUMERICAL
    except RejectedInputError as err:
        print(f'triradical: rejected input: {err}', file=sys.stderr)
        return EXIT_CONFIG
    except SensorError as err:
        print(f'triradical: {err}', file=sys.stderr)
        return EXIT_NUMERICAL


def start_main() -> NoReturn:
    sys.exit(main(sys.argv[1:]))


if __name__ == '__main__':
    start_main()
