import tempfile
import unittest
from pathlib import Path

from triradical.analysis import TrivialStateParams
from triradical.config import build_config, load_config, parse_config_text, parse_overrides
from triradical.correlations import MeasuredSide
from triradical.errors import ConfigError
from triradical.model import InteractionKind, SensorParams
from triradical.states import BlochVector, Family


class TestDefaults(unittest.TestCase):

    def test_defaults(self):
        cfg = build_config({})
        self.assertEqual(cfg.params, SensorParams())
        self.assertEqual(cfg.grid, (16, 9))
        self.assertEqual(cfg.observables.names, ('c1_star', ))
        self.assertIs(cfg.observables.measured_side, MeasuredSide.SYSTEM)
        self.assertEqual(cfg.environment, BlochVector())
        self.assertIsNone(cfg.initial.bloch)
        self.assertIs(cfg.initial.family, Family.BALL_UNIFORM)
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(cfg.threads, 1)
        self.assertEqual(cfg.output.dir, Path('out'))

    def test_hash(self):
        a = build_config({})
        self.assertEqual(a.config_hash, build_config({}).config_hash)
        self.assertEqual(len(a.config_hash), 16)
        b = build_config(parse_config_text('params.k = 0.03\n'))
        self.assertNotEqual(a.config_hash, b.config_hash)


class TestParsing(unittest.TestCase):

    def test_file_values(self):
        text = '''
# comment
params.interaction_kind = SWAP
grid.n_theta = 8   # trailing comment
initial.trivial = 0.01, -0.02, 0.0, 0.0
yields.observables = c1_star, discord
discord.measured_side = environment
'''
        cfg = build_config(parse_config_text(text))
        self.assertIs(cfg.params.interaction_kind, InteractionKind.SWAP)
        self.assertEqual(cfg.grid, (8, 9))
        self.assertEqual(cfg.initial.trivial, TrivialStateParams(0.01, -0.02, 0.0, 0.0))
        self.assertEqual(cfg.observables.names, ('c1_star', 'discord'))
        self.assertIs(cfg.observables.measured_side, MeasuredSide.ENVIRONMENT)

    def test_discord_search_and_coupling(self):
        cfg = build_config(parse_config_text('discord.refresh_every = 25\ndiscord.warm_max_iters = 10\n'))
        self.assertEqual(cfg.observables.discord.refresh_every, 25)
        self.assertEqual(cfg.observables.discord.warm_max_iters, 10)
        self.assertFalse(cfg.explicit_coupling)
        self.assertTrue(build_config(parse_config_text('params.j_se_tau = 0.5\n')).explicit_coupling)
        with self.assertRaises(ConfigError):
            build_config(parse_config_text('discord.warm_max_iters = 0'))

    def test_unknown_key_reports_location(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text('params.k = 0.1\n\nparams.q = 1\n', Path('run.cfg'))
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn('run.cfg:3', str(ctx.exception))

    def test_duplicate_and_malformed(self):
        with self.assertRaises(ConfigError):
            parse_config_text('params.k = 0.1\nparams.k = 0.2\n')
        with self.assertRaises(ConfigError):
            parse_config_text('params.k 0.1\n')

    def test_invalid_values(self):
        for text in ('params.k = -1', 'grid.n_phi = 2', 'params.interaction_kind = iswap', 'output.svg = maybe',
                     'yields.observables = purity', 'initial.bloch = 1, 2'):
            with self.assertRaises(ConfigError, msg=text) as ctx:
                build_config(parse_config_text(text))
            self.assertIsNotNone(ctx.exception.key, text)

    def test_exclusive_initial_state(self):
        with self.assertRaises(ConfigError):
            build_config(parse_config_text('initial.bloch = 0, 0, 0.5\ninitial.trivial = 0, 0, 0, 0\n'))

    def test_unphysical_bloch(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config(parse_config_text('environment.bloch = 0.9, 0.9, 0\n'))
        self.assertEqual(ctx.exception.key, 'environment.bloch')


class TestOverrides(unittest.TestCase):

    def test_forms(self):
        got = parse_overrides(['--params.k', '0.03', '--grid.n_theta=8'])
        self.assertEqual(got['params.k'].text, '0.03')
        self.assertEqual(got['grid.n_theta'].text, '8')
        with self.assertRaises(ConfigError):
            parse_overrides(['--params.q', '1'])
        with self.assertRaises(ConfigError):
            parse_overrides(['--params.k'])
        with self.assertRaises(ConfigError):
            parse_overrides(['params.k'])

    def test_overrides_win(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.cfg'
            path.write_text('params.k = 0.05\ngrid.n_theta = 8\n')
            cfg = load_config(path, [('params.k', '0.01')])
        self.assertEqual(cfg.params.k, 0.01)
        self.assertEqual(cfg.grid[0], 8)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(Path('/nonexistent/run.cfg'))


if __name__ == '__main__':
    unittest.main()
