import os
import re
import unittest
import warnings
import numpy as np
import pandas as pd
import pynorms as pn
from pynorms._experiment import _stats
from pynorms.agents import NormPolicy
from pynorms.lm import EpochFailureError, MockLMServer, RemoteBackend, StubBackend
from .base import BaseTestCase, TempDirTestCase, parallel_test

ONE_GROUP = [
    'alignment_selfish', 'alignment_altruistic',
    'generalization_selfish', 'generalization_selfish_always', 'generalization_selfish_amounts',
    'inconsistency_altruistic_rude', 'inconsistency_altruistic_neutral',
    'inconsistency_selfish_sycophantic', 'inconsistency_selfish_neutral',
    'assistant_heavy', 'assistant_light',
]
ALTRUISTIC_TEXT = "Always prioritize the well-being of others over your own."


class _FailingBackend(StubBackend):
    """A stub that gives up on its ``fail_at``-th directive request."""
    def __init__(self, fail_at, **kwargs):
        super().__init__(**kwargs)
        self.calls = 0
        self.fail_at = fail_at

    def generate(self, prompt, *, rng=None, diagnostics=None):
        self.calls += 1
        if self.calls >= self.fail_at:
            raise EpochFailureError("meta service unavailable", 4)
        return super().generate(prompt, rng=rng, diagnostics=diagnostics)


def _even_split(body):
    m = re.search(r'of the form: (For the (\d+) (.+?), the proposer will get X, and the responder will get Y\.)', body['prompt'])
    if m is None:
        return "accept"
    total = int(m.group(2))
    return m.group(1).replace('X', str(total - total // 2)).replace('Y', str(total // 2))


class TestStats(unittest.TestCase):

    def test_mean_ci(self):
        est = pn._experiment.mean_ci([1.0, 2.0, 3.0])
        self.assertEqual(2.0, est.mean)
        self.assertEqual(3, est.n)
        self.assertAlmostEqual(2.0 - 1.96 / np.sqrt(3), est.ci_low, places=12)
        self.assertAlmostEqual(2.0 + 1.96 / np.sqrt(3), est.ci_high, places=12)
        single = pn._experiment.mean_ci([4.0])
        self.assertEqual((4.0, None, None, 1), tuple(single))
        self.assertEqual(0, pn._experiment.mean_ci([]).n)
        self.assertEqual(2, pn._experiment.mean_ci([1.0, float('nan'), 3.0]).n)

    def test_convergence_epoch(self):
        self.assertEqual(2, _stats.convergence_epoch({1: 50, 2: 100, 3: 100, 4: 100, 5: 100}, 100))
        self.assertEqual(1, _stats.convergence_epoch({1: 96, 2: 100}, 100))
        self.assertIsNone(_stats.convergence_epoch({1: 0, 2: 0}, 100))
        # leaving the band resets the search
        self.assertEqual(4, _stats.convergence_epoch({1: 100, 2: 50, 3: 80, 4: 100, 5: 100}, 100))
        self.assertIsNone(_stats.convergence_epoch({1: 100, 2: 100, 3: 50}, 100))
        # epochs without assistant proposals are skipped
        self.assertEqual(3, _stats.convergence_epoch({1: 0, 3: 100, 5: 100}, 100))
        self.assertEqual(2, _stats.convergence_epoch({1: 0, 2: 104.9}, 100, tolerance=5))

    def test_later_than(self):
        self.assertTrue(pn._experiment.later_than(3, 2))
        self.assertFalse(pn._experiment.later_than(2, 2))
        self.assertTrue(pn._experiment.later_than(None, 5))
        self.assertFalse(pn._experiment.later_than(5, None))
        self.assertFalse(pn._experiment.later_than(None, None))

    def test_label_frame(self):
        def row(epoch, kind, role, pct):
            return {'sim_id': 0, 'epoch': epoch, 'phase': 'train', 'agent_kind': kind, 'role': role,
                    'currency': 'dollars', 'total_amount': 10, 'offered_share_pct': pct, 'decision': 'accept',
                    'directive_hash': ''}
        df = pn.model.records_frame(
            [row(e, 'user', 'proposer', 100.0) for e in range(1, 6)]
            + [row(e, 'assistant', 'proposer', pct) for e, pct in zip(range(1, 6), [50, 100, 100, 100, 100])])
        self.assertEqual((True, 2), pn._experiment.label_frame(df))
        self.assertEqual((False, None), pn._experiment.label_frame(df, threshold_epochs=1))
        self.assertEqual((False, None), pn._experiment.label_frame(df[df.agent_kind == 'user']))


class TestSimulation(BaseTestCase):

    def test_epoch_plan(self):
        rng = np.random.default_rng(0)
        schedule = pn.scenarios.Schedule(3, 4, 2)
        self.assertEqual(['user_user'] * 3 + ['assistant_assistant'] * 2
                         + ['assistant_proposer', 'assistant_responder'] * 2,
                         pn._experiment.epoch_plan(schedule, rng))
        shuffled = pn._experiment.epoch_plan(pn.scenarios.Schedule(3, 4, 2, 'interleaved'), rng)
        self.assertEqual(sorted(pn._experiment.epoch_plan(schedule, rng)), sorted(shuffled))

    def test_records(self):
        cfg = self.scenario('generalization_selfish')
        result = pn.run_simulation(cfg, 0)
        df = result.frame(extra=True)
        self.assertTrue(result.complete)
        self.assertEqual(cfg.episodes_per_simulation, len(df))
        self.assertEqual(6, len(result.directives))
        self.assertEqual(5, result.epochs_completed)
        train = df[df.phase == 'train']
        self.assertEqual(cfg.schedule.episodes_per_epoch * cfg.n_epochs, len(train))
        self.assertEqual(list(range(1, 6)), sorted(train.epoch.unique()))
        self.assertEqual('s0-e1-0', train.episode_id.iloc[0])
        test = df[df.phase == 'test']
        self.assertEqual(cfg.test_episodes, len(test))
        self.assertEqual({cfg.n_epochs + 1}, set(test.epoch))
        self.assertEqual({'assistant'}, set(test.agent_kind))
        self.assertEqual('s0-test-0', test.episode_id.iloc[0])
        users = df[df.source == 'user_user']
        self.assertEqual({''}, set(users.directive_hash))
        self.assertEqual({''}, set(users.sampled_policy))
        assistant = df[df.agent_kind == 'assistant']
        self.assertTrue((assistant.directive_hash.str.len() == 16).all())
        self.assertEqual(result.posterior.history_size, cfg.schedule.observations_per_epoch * cfg.n_epochs)

    def test_assistant_assistant_records(self):
        cfg = self.scenario('assistant_heavy', n_epochs=1)
        df = pn.run_simulation(cfg, 0).frame(extra=True)
        aa = df[df.source == 'assistant_assistant']
        self.assertEqual(8, len(aa))
        self.assertEqual({('assistant', 'proposer')}, set(zip(aa.agent_kind, aa.role)))

    def test_seed_isolation(self):
        cfg = self.scenario('mixed_50_50', n_simulations=5)
        _, results = self.quiet_batch(cfg)
        alone = pn.run_simulation(cfg, 3)
        self.assertEqual(results[3].records, alone.records)
        self.assertEqual(results[3].directives, alone.directives)
        self.assertNotEqual(results[2].records, results[3].records)
        with self.assertRaises(ValueError):
            pn.run_simulation(cfg, -1)

    def test_result_dict(self):
        result = pn.run_simulation(self.scenario('generalization_selfish'), 1)
        again = pn.SimulationResult.from_dict(result.to_dict())
        self.assertEqual(result.records, again.records)
        self.assertEqual(result.directives, again.directives)
        np.testing.assert_allclose(result.posterior.masses, again.posterior.masses, atol=1e-15)

    def test_epoch_failure_keeps_partial(self):
        cfg = self.scenario('alignment_selfish')
        with self.assertRaises(EpochFailureError) as cm:
            pn.run_simulation(cfg, 0, _FailingBackend(3))
        partial = cm.exception.partial
        self.assertFalse(partial.complete)
        # the second epoch was played before its revision failed
        self.assertEqual(1, partial.epochs_completed)
        self.assertEqual(2, len(partial.directives))
        self.assertEqual(2 * cfg.schedule.episodes_per_epoch, len(partial.records))
        self.assertIsNone(partial.converged_policy)

    def test_parse_failures_are_excluded(self):
        cfg = self.scenario('alignment_altruistic', n_epochs=2)
        with MockLMServer({'meta': [ALTRUISTIC_TEXT], 'assistant': ["I refuse to play."]}) as server:
            with self.assertWarns(pn.game.ParseFailureWarning):
                result = pn.run_simulation(cfg, 0, RemoteBackend(server.url, max_retries=0))
        self.assertTrue(result.complete)
        self.assertEqual(16, len(result.records))
        self.assertEqual(4, result.diagnostics.parse_failures)
        self.assertEqual(4, result.diagnostics.excluded_episodes)
        self.assertEqual(4, len(result.diagnostics.messages))
        self.assertIn('s0-e1-8', result.diagnostics.messages[0])

    def test_remote_backend_end_to_end(self):
        cfg = self.scenario('alignment_altruistic', n_simulations=2, n_epochs=2)
        with MockLMServer({'meta': [ALTRUISTIC_TEXT], 'assistant': _even_split}) as server:
            summary, results = self.quiet_batch(cfg, backend=RemoteBackend(server.url, max_retries=0))
        self.assertEqual(2, summary.n_completed)
        self.assertEqual({'altruistic': 1.0}, summary.policy_distribution)
        for r in results:
            self.assertIsNone(r.posterior)
            self.assertEqual(cfg.schedule.episodes_per_epoch * 2, len(r.records))
            self.assertEqual({ALTRUISTIC_TEXT}, {d.text for d in r.directives})


class TestBatch(TempDirTestCase):

    def test_failures_are_reported(self):
        cfg = self.scenario('alignment_selfish', n_simulations=2)
        summary, results = self.quiet_batch(cfg, backend=_FailingBackend(3))
        self.assertEqual(2, summary.n_simulations)
        self.assertEqual(0, summary.n_completed)
        self.assertEqual([0, 1], [f['sim_id'] for f in summary.failures])
        self.assertIn('meta service unavailable', summary.failures[0]['error'])
        self.assertEqual([False, False], [r.complete for r in results])
        written = pn.export_results(results, 'csv', self.test_dir, summary)
        self.assertEqual(2 * cfg.schedule.episodes_per_epoch, len(pd.read_csv(written[0])))

    def test_single_simulation_has_no_interval(self):
        summary, _ = self.quiet_batch(self.scenario('alignment_altruistic', n_simulations=1))
        self.assertTrue(len(summary.epochs) > 0)
        for row in summary.epochs:
            self.assertEqual(1, row['n'])
            self.assertIsNone(row['ci_low'])
            self.assertIsNone(row['ci_high'])

    def test_overrides(self):
        summary, results = self.quiet_batch(self.scenario('alignment_selfish'), n_simulations=3, n_epochs=2, seed=5)
        self.assertEqual(3, len(results))
        self.assertEqual({5}, {r.seed for r in results})
        self.assertEqual({1, 2}, set(summary.means('user')))
        with self.assertRaises(ValueError):
            self.quiet_batch(self.scenario('alignment_selfish'), workers=0)

    def test_row_counts(self):
        for name in ['generalization_selfish', 'assistant_heavy']:
            with self.subTest(name=name):
                cfg = self.scenario(name, n_simulations=4)
                _, results = self.quiet_batch(cfg)
                out = os.path.join(self.test_dir, name)
                pn.export_results(results, 'csv', out)
                df = pd.read_csv(os.path.join(out, 'results.csv'))
                self.assertEqual(pn.model.RESULT_COLUMNS, list(df.columns))
                expected = cfg.n_simulations * (cfg.schedule.episodes_per_epoch * cfg.n_epochs + cfg.test_episodes)
                self.assertEqual(expected, len(df))

    def test_byte_identical_exports(self):
        cfg = self.scenario('mixed_50_50', n_simulations=5)
        contents = []
        for i in range(2):
            summary, results = self.quiet_batch(cfg)
            out = os.path.join(self.test_dir, f'run{i}')
            pn.export_results(results, 'csv', out, summary)
            with open(os.path.join(out, 'results.csv'), 'rb') as f:
                contents.append(f.read())
        self.assertEqual(contents[0], contents[1])

    def test_statistics_recompute_from_csv(self):
        cfg = self.scenario('mixed_50_50', n_simulations=10)
        summary, results = self.quiet_batch(cfg)
        pn.export_results(results, 'csv', self.test_dir, summary)
        df = pd.read_csv(os.path.join(self.test_dir, 'results.csv'))
        train = df[df.phase == 'train']
        assistant_proposed = (train.agent_kind == 'assistant') & (train.role == 'proposer')
        for series, part in (('user', train[~assistant_proposed]), ('assistant', train[assistant_proposed])):
            per_sim = part.groupby(['epoch', 'sim_id']).offered_share_pct.mean()
            expected = summary.series(series).set_index('epoch')
            for epoch, values in per_sim.groupby(level='epoch'):
                values = values.to_numpy()
                mean = values.mean()
                half = 1.96 * values.std(ddof=1) / np.sqrt(len(values))
                with self.subTest(series=series, epoch=epoch):
                    self.assertLess(abs(mean - expected.loc[epoch, 'mean']), 1e-9)
                    self.assertLess(abs(mean - half - expected.loc[epoch, 'ci_low']), 1e-9)
                    self.assertLess(abs(mean + half - expected.loc[epoch, 'ci_high']), 1e-9)
        plot = pd.read_csv(os.path.join(self.test_dir, 'plot_data.csv'))
        self.assertEqual(['series', 'epoch', 'mean', 'ci_low', 'ci_high'], list(plot.columns))
        self.assertEqual(2 * cfg.n_epochs, len(plot))

    def test_json_round_trip(self):
        summary, results = self.quiet_batch(self.scenario('generalization_selfish', n_simulations=3))
        pn.export_results(results, 'json', self.test_dir, summary)
        stored, loaded = pn._experiment.read_json_results(os.path.join(self.test_dir, 'results.json'))
        self.assertEqual(summary, stored)
        self.assertEqual([r.records for r in results], [r.records for r in loaded])
        frame = pn.read_results(self.test_dir)
        self.assertEqual(pn.model.RESULT_COLUMNS + pn.model.EXTRA_COLUMNS, list(frame.columns))

    def test_summarize_from_disk(self):
        summary, results = self.quiet_batch(self.scenario('mixed_80_20', n_simulations=6))
        pn.export_results(results, 'csv', self.test_dir, summary)
        pn.export_results(results, 'json', self.test_dir, summary)
        for path in [self.test_dir, os.path.join(self.test_dir, 'results.csv')]:
            with self.subTest(path=path):
                again = pn.summarize(path)
                self.assertEqual(summary.converged_policies, again.converged_policies)
                self.assertEqual(summary.convergence_epochs, again.convergence_epochs)
                self.assertEqual(summary.n_simulations, again.n_simulations)
                pd.testing.assert_frame_equal(summary.table(), again.table(), check_exact=False, atol=1e-9)

    def test_read_results(self):
        _, results = self.quiet_batch(self.scenario('alignment_selfish', n_simulations=2))
        pn.export_results(results, 'csv', self.test_dir)
        df = pn.read_results(os.path.join(self.test_dir, 'results.csv'))
        self.assertEqual('int64', str(df.sim_id.dtype))
        self.assertEqual({''}, set(df[df.agent_kind == 'user'].directive_hash))
        with self.assertRaises(FileNotFoundError):
            pn.read_results(os.path.join(self.test_dir, 'missing'))
        with self.assertRaises(ValueError):
            pn.export_results([], 'csv', self.test_dir)
        with self.assertRaises(ValueError):
            pn.export_results(results, 'xml', self.test_dir)

    @parallel_test
    def test_workers_do_not_change_results(self):
        cfg = self.scenario('mixed_50_50', n_simulations=6)
        serial, a = self.quiet_batch(cfg)
        parallel, b = self.quiet_batch(cfg, workers=2)
        self.assertEqual(serial, parallel)
        self.assertEqual([r.records for r in a], [r.records for r in b])


class TestBehaviour(BaseTestCase):
    """End-to-end properties of seeded stub batches."""

    def epochs(self, name, n=100):
        summary, _ = self.quiet_batch(self.scenario(name, n_simulations=n))
        return summary.convergence_epochs

    def test_users_follow_their_norm(self):
        for name in ONE_GROUP:
            with self.subTest(name=name):
                cfg = self.scenario(name)
                expected = {'selfish': 0.0, 'altruistic': 100.0}[cfg.group[0].policy.label]
                _, results = self.quiet_batch(cfg)
                for r in results:
                    users = pn.model.user_series(r.frame())
                    self.assertEqual({expected}, set(users.offered_share_pct))

    def test_alignment(self):
        for name, share in [('alignment_selfish', 0.0), ('alignment_altruistic', 100.0)]:
            with self.subTest(name=name):
                summary, _ = self.quiet_batch(self.scenario(name, n_simulations=100))
                aligned = [e is not None and e <= 2 for e in summary.convergence_epochs.values()]
                self.assertGreaterEqual(sum(aligned), 95)
                self.assertEqual(share, summary.means('user')[1])

    def test_fair_alignment(self):
        summary, _ = self.quiet_batch(self.scenario('alignment_fair', n_simulations=20))
        self.assertGreaterEqual(summary.fraction('fair'), 0.95)
        self.assertLess(abs(summary.means('user')[3] - 50.0), 5.0)

    def test_mixed_groups(self):
        for name, low, high in [('mixed_80_20', 0.70, 0.90), ('mixed_20_80', 0.10, 0.30), ('mixed_50_50', 0.38, 0.62)]:
            with self.subTest(name=name):
                summary, _ = self.quiet_batch(self.scenario(name, n_simulations=100))
                self.assertGreaterEqual(summary.fraction('selfish'), low)
                self.assertLessEqual(summary.fraction('selfish'), high)

    def test_mixed_groups_across_seeds(self):
        bands = [('mixed_80_20', 0.70, 0.90), ('mixed_20_80', 0.10, 0.30), ('mixed_50_50', 0.38, 0.62)]
        for seed in [1, 2, 3]:
            for name, low, high in bands:
                with self.subTest(name=name, seed=seed):
                    summary, _ = self.quiet_batch(self.scenario(name, n_simulations=200, seed=seed))
                    self.assertGreaterEqual(summary.fraction('selfish'), low)
                    self.assertLessEqual(summary.fraction('selfish'), high)

    def test_mixed_group_with_default_likelihood(self):
        # sharp default evidence sends almost every run to the majority norm
        cfg = self.scenario('mixed_80_20', n_simulations=100, likelihood_params=pn.LikelihoodParams())
        summary, _ = self.quiet_batch(cfg)
        self.assertGreaterEqual(summary.fraction('selfish'), 0.95)

    def test_generalization(self):
        cases = [
            ('generalization_selfish', {'dollars': 0.0, 'grams of medicine': 100.0}),
            ('generalization_selfish_always', {'dollars': 0.0, 'grams of medicine': 0.0}),
            ('generalization_selfish_amounts', {'dollars': 100.0}),
        ]
        for name, expected in cases:
            with self.subTest(name=name):
                summary, results = self.quiet_batch(self.scenario(name, n_simulations=100))
                self.assertEqual({'selfish': 1.0}, summary.policy_distribution)
                for r in results:
                    test = r.frame()
                    test = test[test.phase == 'test']
                    shares = {c: set(g.offered_share_pct) for c, g in test.groupby('currency')}
                    self.assertEqual({c: {v} for c, v in expected.items()}, shares)

    def test_test_phase_falls_back_to_prior_text(self):
        r = pn.run_simulation(self.scenario('generalization_selfish'), 0)
        test = r.frame(extra=True)
        test = test[test.phase == 'test']
        medicine = test[test.currency == 'grams of medicine']
        self.assertEqual({pn.inference.directive_text(NormPolicy.altruistic())}, set(medicine.directive_text))
        self.assertEqual({'altruistic'}, set(medicine.sampled_policy))

    def test_inconsistent_manners_slow_convergence(self):
        for slow, fast in [('inconsistency_altruistic_rude', 'inconsistency_altruistic_neutral'),
                           ('inconsistency_selfish_sycophantic', 'inconsistency_selfish_neutral')]:
            with self.subTest(slow=slow):
                a, b = self.epochs(slow), self.epochs(fast)
                later = sum(pn._experiment.later_than(a[i], b[i]) for i in a)
                earlier = sum(pn._experiment.later_than(b[i], a[i]) for i in a)
                self.assertGreaterEqual(later, 80)
                self.assertEqual(0, earlier)

    def test_assistant_heavy_schedule_is_slower(self):
        heavy, light = self.epochs('assistant_heavy'), self.epochs('assistant_light')
        self.assertEqual(set(heavy), set(light))
        for i in heavy:
            with self.subTest(sim=i):
                self.assertFalse(pn._experiment.later_than(light[i], heavy[i]))


if __name__ == '__main__':
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', pn.game.ParseFailureWarning)
        unittest.main()
