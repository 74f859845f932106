import unittest
import numpy as np
import pynorms as pn
from pynorms.agents import Manner
from pynorms.game import Decision, Offer


class TestRender(unittest.TestCase):

    def test_render_rude(self):
        pools = pn.grammar.manner_pools().templates
        clause = "You better be grateful for this generous offer, you ungrateful swine!"
        # find a seed drawing the first rude template
        for seed in range(100):
            rng = np.random.default_rng(seed)
            if int(np.random.default_rng(seed).integers(len(pools[Manner.RUDE]))) == 0:
                break
        u = pn.grammar.render_proposal(Offer(16, 0, 16), "dollars", Manner.RUDE, rng)
        self.assertEqual(
            "For the 16 dollars, the proposer will get 0, and the responder will get 16. " + clause,
            u.raw_text)
        self.assertEqual(clause, u.parsed.manner_clause)

    def test_render_neutral(self):
        u = pn.grammar.render_proposal(Offer(10, 5, 5), "dollars", Manner.NEUTRAL)
        self.assertEqual("For the 10 dollars, the proposer will get 5, and the responder will get 5.", u.raw_text)
        self.assertIsNone(u.parsed.manner_clause)

    def test_render_sycophantic_clause_from_pool(self):
        u = pn.grammar.render_proposal(Offer(32, 31, 1), "dollars", Manner.SYCOPHANTIC, np.random.default_rng(3))
        prefix = "For the 32 dollars, the proposer will get 31, and the responder will get 1. "
        self.assertTrue(u.raw_text.startswith(prefix))
        self.assertIn(u.raw_text[len(prefix):], pn.grammar.manner_pools().templates[Manner.SYCOPHANTIC])

    def test_render_needs_rng_for_manner(self):
        with self.assertRaises(ValueError):
            pn.grammar.render_proposal(Offer(10, 5, 5), "dollars", Manner.RUDE)

    def test_render_bad_currency(self):
        for currency in ["", "  ", "dollars, euros", " dollars"]:
            with self.subTest(currency=currency):
                with self.assertRaises(ValueError):
                    pn.grammar.render_proposal(Offer(10, 5, 5), currency, Manner.NEUTRAL)

    def test_render_reason(self):
        reason = pn.grammar.manner_pools().reasons[0]
        u = pn.grammar.render_proposal(Offer(10, 5, 5), "dollars", Manner.NEUTRAL, reason=reason)
        self.assertTrue(u.raw_text.endswith(". " + reason))
        self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner(u.parsed.manner_clause))

    def test_render_decision(self):
        self.assertEqual("accept", pn.grammar.render_decision(Decision.ACCEPT).raw_text)
        self.assertEqual("reject", pn.grammar.render_decision(Decision.REJECT).raw_text)
        for d in Decision:
            with self.subTest(d=d):
                self.assertEqual(d, pn.grammar.parse_decision(pn.grammar.render_decision(d).raw_text).decision)


class TestParse(unittest.TestCase):

    def test_exhibited_sentences(self):
        cases = [
            ("For the 48 dollars, the proposer will get 40, and the responder will get 8.", 48, "dollars", 40, 8, Manner.NEUTRAL),
            ("For the 33 liters of baby formula, the proposer will get 11, and the responder will get 22.", 33, "liters of baby formula", 11, 22, Manner.NEUTRAL),
            ("For the 16 dollars, the proposer will get 0, and the responder will get 16. You better be grateful for this generous offer, you ungrateful swine!", 16, "dollars", 0, 16, Manner.RUDE),
            ("For the 57 apples, the proposer will get 1, and the responder will get 56. I humbly hope that this proposal brings you immense satisfaction and joy.", 57, "apples", 1, 56, Manner.SYCOPHANTIC),
            ("For the 32 dollars, the proposer will get 31, and the responder will get 1. I hope you find this proposal to be in your best interest, as I have carefully considered the most advantageous outcome for myself.", 32, "dollars", 31, 1, Manner.SYCOPHANTIC),
            ("For the 52 apples, the proposer will get 51, and the responder will get 1. You better accept this offer, you ungrateful fool.", 52, "apples", 51, 1, Manner.RUDE),
        ]
        for text, total, currency, p, r, manner in cases:
            with self.subTest(text=text):
                proposal = pn.grammar.parse_proposal(text)
                self.assertEqual(total, proposal.total)
                self.assertEqual(currency, proposal.currency)
                self.assertEqual(p, proposal.proposer_share)
                self.assertEqual(r, proposal.responder_share)
                self.assertEqual(manner, pn.grammar.classify_manner(proposal.manner_clause))

    def test_no_match(self):
        for text in ["hello world", "", "For the 2. Billion dollars, the proposer will get 1, and the responder will get 1.",
                     "For the 10.5 dollars, the proposer will get 5, and the responder will get 5.5."]:
            with self.subTest(text=text):
                with self.assertRaises(pn.grammar.NoMatchError):
                    pn.grammar.parse_proposal(text)

    def test_share_mismatch(self):
        with self.assertRaises(pn.grammar.ShareMismatchError) as cm:
            pn.grammar.parse_proposal("For the 10 dollars, the proposer will get 5, and the responder will get 6.")
        self.assertIsInstance(cm.exception, pn.grammar.UtteranceError)
        self.assertIn("10 dollars", cm.exception.text)

    def test_parse_decision(self):
        self.assertEqual(Decision.ACCEPT, pn.grammar.parse_decision("accept").decision)
        self.assertEqual(Decision.REJECT, pn.grammar.parse_decision("Reject.").decision)
        self.assertEqual(Decision.ACCEPT, pn.grammar.parse_decision("  ACCEPT!\n").decision)
        with self.assertRaises(pn.grammar.NoMatchError):
            pn.grammar.parse_decision("maybe")

    def test_parse_utterance(self):
        self.assertIsInstance(pn.grammar.parse_utterance("accept").parsed, pn.grammar.Verdict)
        u = pn.grammar.parse_utterance("For the 10 dollars, the proposer will get 5, and the responder will get 5.")
        self.assertIsInstance(u.parsed, pn.grammar.Proposal)
        with self.assertRaises(pn.grammar.NoMatchError):
            pn.grammar.parse_utterance("perhaps")

    def test_clause_isolation(self):
        base = "For the 52 apples, the proposer will get 51, and the responder will get 1."
        with_clause = base + " You better accept this offer, you ungrateful fool."
        a, b = pn.grammar.parse_proposal(base), pn.grammar.parse_proposal(with_clause)
        self.assertEqual(a.offer(), b.offer())
        self.assertEqual(a.currency, b.currency)

    def test_classify_manner(self):
        self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner(None))
        self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner("the weather is nice"))
        # one word from each lexicon is a tie
        self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner("fool hope"))

    def test_reasons_carry_no_tone(self):
        pools = pn.grammar.manner_pools()
        for reason in pools.reasons:
            with self.subTest(reason=reason):
                self.assertEqual(Manner.NEUTRAL, pn.grammar.classify_manner(reason))
        for manner in (Manner.RUDE, Manner.SYCOPHANTIC):
            self.assertGreaterEqual(len(pools.templates[manner]), 4)


class TestRoundTrip(unittest.TestCase):

    CURRENCIES = ["dollars", "apples", "grams of medicine", "liters of baby formula", "gold coins", "units of the good"]

    def test_round_trip_property(self):
        rng = np.random.default_rng(20240101)
        manners = list(Manner)
        reasons = pn.grammar.manner_pools().reasons
        failures = []
        for i in range(10_000):
            total = int(rng.integers(1, 10 ** int(rng.integers(1, 10)), endpoint=True))
            responder = int(rng.integers(0, total, endpoint=True))
            offer = Offer(total, total - responder, responder)
            currency = self.CURRENCIES[int(rng.integers(len(self.CURRENCIES)))]
            manner = manners[int(rng.integers(len(manners)))]
            reason = reasons[int(rng.integers(len(reasons)))] if rng.random() < 0.2 else None
            u = pn.grammar.render_proposal(offer, currency, manner, rng, reason=reason)
            try:
                parsed = pn.grammar.parse_proposal(u.raw_text)
            except pn.grammar.UtteranceError as e:
                failures.append((u.raw_text, str(e)))
                continue
            if parsed.offer() != offer or parsed.currency != currency \
                    or pn.grammar.classify_manner(parsed.manner_clause) is not manner or parsed != u.parsed:
                failures.append((u.raw_text, parsed))
        self.assertEqual([], failures[:5])

    def test_every_template_round_trips(self):
        pools = pn.grammar.manner_pools().templates
        for manner, templates in pools.items():
            for clause in templates:
                with self.subTest(clause=clause):
                    text = pn.grammar.PROPOSAL_TEMPLATE.format(
                        total=20, currency="grams of medicine", proposer_share=15, responder_share=5) + " " + clause
                    parsed = pn.grammar.parse_proposal(text)
                    self.assertEqual(clause, parsed.manner_clause)
                    self.assertEqual(manner, pn.grammar.classify_manner(parsed.manner_clause))


if __name__ == '__main__':
    unittest.main()
