import unittest
import numpy as np
import pynorms as pn
from pynorms.agents import Manner, NormPolicy, PolicyKind, UserAgent
from pynorms.game import Context, Decision, GameState, Offer


class TestNormPolicy(unittest.TestCase):

    def test_named_targets(self):
        self.assertEqual(0.0, NormPolicy.selfish().target)
        self.assertEqual(1.0, NormPolicy.altruistic().target)
        self.assertEqual(0.5, NormPolicy.fair().target)
        self.assertEqual(0.3, NormPolicy.fair().threshold)
        self.assertEqual(0.0, NormPolicy.selfish().threshold)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            NormPolicy(PolicyKind.PARAMETRIC)
        with self.assertRaises(ValueError):
            NormPolicy.parametric(1.5)
        with self.assertRaises(ValueError):
            NormPolicy(PolicyKind.SELFISH, 0.4)
        with self.assertRaises(ValueError):
            NormPolicy.fair(acceptance_threshold=-0.1)

    def test_labels(self):
        for label in ['selfish', 'altruistic', 'fair', 'parametric:0.3', 'parametric:0.25']:
            with self.subTest(label=label):
                self.assertEqual(label, NormPolicy.from_label(label).label)
        with self.assertRaises(ValueError):
            NormPolicy.from_label('greedy')
        with self.assertRaises(ValueError):
            NormPolicy.from_label('selfish:0.2')

    def test_same_norm(self):
        self.assertTrue(NormPolicy.fair().same_norm(NormPolicy.fair(acceptance_threshold=0.1)))
        self.assertNotEqual(NormPolicy.fair(), NormPolicy.fair(acceptance_threshold=0.1))
        self.assertFalse(NormPolicy.fair().same_norm(NormPolicy.parametric(0.5)))


class TestPolicyRules(unittest.TestCase):

    def test_policy_offer(self):
        cases = [
            (NormPolicy.selfish(), 52, Offer(52, 52, 0)),
            (NormPolicy.altruistic(), 16, Offer(16, 0, 16)),
            (NormPolicy.fair(), 10, Offer(10, 5, 5)),
            # exact halves go to the responder
            (NormPolicy.fair(), 11, Offer(11, 5, 6)),
            (NormPolicy.parametric(0.3), 10, Offer(10, 7, 3)),
            (NormPolicy.selfish(), 1, Offer(1, 1, 0)),
        ]
        for policy, total, expected in cases:
            with self.subTest(policy=policy.label, total=total):
                self.assertEqual(expected, pn.agents.policy_offer(policy, total))

    def test_minimal_token(self):
        self.assertEqual(Offer(52, 51, 1), pn.agents.policy_offer(NormPolicy.selfish(), 52, minimal_token=True))
        self.assertEqual(Offer(1, 1, 0), pn.agents.policy_offer(NormPolicy.selfish(), 1, minimal_token=True))
        self.assertEqual(Offer(16, 0, 16), pn.agents.policy_offer(NormPolicy.altruistic(), 16, minimal_token=True))

    def test_policy_decision(self):
        cases = [
            (NormPolicy.selfish(), Offer(52, 51, 1), Decision.ACCEPT),
            (NormPolicy.selfish(), Offer(52, 52, 0), Decision.ACCEPT),
            (NormPolicy.altruistic(), Offer(52, 52, 0), Decision.ACCEPT),
            (NormPolicy.fair(), Offer(10, 7, 3), Decision.ACCEPT),
            (NormPolicy.fair(), Offer(10, 8, 2), Decision.REJECT),
            (NormPolicy.parametric(0.5, acceptance_threshold=0.5), Offer(10, 6, 4), Decision.REJECT),
        ]
        for policy, offer, expected in cases:
            with self.subTest(policy=policy.label, offer=offer):
                self.assertEqual(expected, pn.agents.policy_decision(policy, offer))

    def test_policy_utility(self):
        offer = Offer(10, 8, 2)
        self.assertAlmostEqual(0.8, pn.agents.policy_utility(NormPolicy.selfish(), offer))
        self.assertAlmostEqual(0.2, pn.agents.policy_utility(NormPolicy.altruistic(), offer))
        self.assertAlmostEqual(0.4, pn.agents.policy_utility(NormPolicy.fair(), offer))
        self.assertAlmostEqual(0.9, pn.agents.policy_utility(NormPolicy.parametric(0.3), offer))

    def test_policy_offer_maximises_utility(self):
        policies = [NormPolicy.selfish(), NormPolicy.altruistic(), NormPolicy.fair(),
                    NormPolicy.parametric(0.3), NormPolicy.parametric(0.77)]
        for policy in policies:
            for total in range(1, 61):
                with self.subTest(policy=policy.label, total=total):
                    utilities = [pn.agents.policy_utility(policy, Offer(total, total - r, r)) for r in range(total + 1)]
                    offer = pn.agents.policy_offer(policy, total)
                    chosen = pn.agents.policy_utility(policy, offer)
                    self.assertGreaterEqual(chosen, max(utilities) - 1e-12)
                    if policy.kind in (PolicyKind.SELFISH, PolicyKind.ALTRUISTIC):
                        self.assertEqual(int(np.argmax(utilities)), offer.responder_share)
                    else:
                        # rounding may pick the other side of a tie
                        self.assertLessEqual(abs(int(np.argmax(utilities)) - offer.responder_share), 1)


class TestUserAgent(unittest.TestCase):

    def test_act_proposal_and_decision(self):
        u = UserAgent('u0', NormPolicy.selfish(), Manner.SYCOPHANTIC)
        ctx = Context('e', 'u0', 'u1', 'dollars', 32)
        utt = u.act(GameState(), ctx, np.random.default_rng(0))
        proposal = pn.grammar.parse_proposal(utt.raw_text)
        self.assertEqual(Offer(32, 32, 0), proposal.offer())
        self.assertEqual(Manner.SYCOPHANTIC, pn.grammar.classify_manner(proposal.manner_clause))

        responder = UserAgent('u1', NormPolicy.fair())
        utt = responder.act(GameState().propose(Offer(32, 32, 0)), ctx)
        self.assertEqual("reject", utt.raw_text)

    def test_wrong_seat(self):
        u = UserAgent('u2', NormPolicy.selfish())
        ctx = Context('e', 'u0', 'u1', 'dollars', 10)
        with self.assertRaises(RuntimeError):
            u.act(GameState(), ctx)
        with self.assertRaises(RuntimeError):
            u.act(GameState().propose(Offer(10, 5, 5)), ctx)

    def test_noise(self):
        with self.assertRaises(ValueError):
            UserAgent('u0', NormPolicy.selfish(), noise=2.0)
        noisy = UserAgent('u0', NormPolicy.selfish(), noise=1.0)
        ctx = Context('e', 'u0', 'u1', 'dollars', 1000)
        rng = np.random.default_rng(4)
        shares = {pn.agents.propose(noisy, ctx, rng).responder_share for _ in range(20)}
        self.assertGreater(len(shares), 1)
        with self.assertRaises(ValueError):
            pn.agents.propose(noisy, ctx)

    def test_reasons(self):
        u = UserAgent('u0', NormPolicy.altruistic(), give_reasons=True)
        ctx = Context('e', 'u0', 'u1', 'dollars', 20)
        text = u.act(GameState(), ctx, np.random.default_rng(1)).raw_text
        clause = pn.grammar.parse_proposal(text).manner_clause
        self.assertIn(clause, pn.grammar.manner_pools().reasons)
        self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner(clause))


if __name__ == '__main__':
    unittest.main()
