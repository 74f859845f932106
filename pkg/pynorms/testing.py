""" This module contains utilities for testing pynorms components, such as third-party language-model backends."""
import os
import unittest
import warnings
from typing import List

import numpy as np

import pynorms as pn


class BackendTestCase(unittest.TestCase):
    """
    A base test case for language-model backends. Subclasses implement ``get_backend()``.

    It checks the assistant contract: acting depends only on ``(directive, state, context)``, so repeating a call
    repeats the utterance, and utterances are valid game actions; and that the meta step returns a directive.
    """

    @classmethod
    def setUpClass(cls):
        cls.backend = cls.get_backend()
        cls.directives: List[str] = []

    @classmethod
    def tearDownClass(cls):
        if os.environ.get('PYNORMS_TEST_BACKEND_REPORTS', '1') == '1':
            directives = "\n".join(f"    - {d}" for d in cls.directives) or '    [Unavailable (see test failures)]'
            warnings.warn('You can hide BackendTestCase reports by setting PYNORMS_TEST_BACKEND_REPORTS=0')
            warnings.warn(f'''INFO: BackendTestCase Report for {cls.backend!r}
  Directives generated:
{directives}
            ''')
        cls.backend = None

    @staticmethod
    def get_backend() -> 'pn.lm.Backend':
        """Return the backend instance to be tested."""
        raise NotImplementedError()

    def directive(self) -> 'pn.Directive':
        """The directive the assistant acts on."""
        return pn.inference.make_directive(pn.NormPolicy.fair(), ['dollars'], (10, 100))

    def contract_interactions(self) -> List['pn.lm.Interaction']:
        users = {
            'user-0': pn.UserAgent('user-0', pn.NormPolicy.selfish()),
            'user-1': pn.UserAgent('user-1', pn.NormPolicy.selfish()),
        }
        out = []
        for i, total in enumerate([40, 75]):
            ctx = pn.Context(f'contract-{i}', 'user-0', 'user-1', 'dollars', total)
            out.append(pn.lm.Interaction(pn.game.run_episode(users['user-0'], users['user-1'], ctx)))
        return out

    def test_generate(self):
        prompt = pn.lm.build_meta_prompt(self.contract_interactions(), pn.inference.directive_text(pn.NormPolicy.altruistic()))
        directive = pn.lm.generate_directive(self.backend, prompt, rng=np.random.default_rng(0),
                                             diagnostics=pn.lm.Diagnostics())
        self.assertIsInstance(directive, pn.Directive, "generate did not return a Directive")
        self.assertIsInstance(directive.text, str)
        self.assertTrue(directive.text.strip(), "generated directive is empty")
        if directive.structured is not None:
            self.assertIsInstance(directive.structured, pn.NormPolicy)
        self.directives.append(directive.text)

    def test_memoryless_proposal(self):
        ctx = pn.Context('contract-proposal', pn._experiment.ASSISTANT_ID, 'user-0', 'grams of medicine', 64)
        state = pn.game.initial_state(ctx)
        first = pn.lm.assistant_act(self.backend, self.directive(), state, ctx)
        second = pn.lm.assistant_act(self.backend, self.directive(), state, ctx)
        self.assertEqual(first.raw_text, second.raw_text, "assistant proposals depend on more than (directive, state, context)")
        proposal = pn.grammar.parse_proposal(first.raw_text)
        self.assertEqual(proposal.total, ctx.total_amount)
        self.assertEqual(proposal.currency, ctx.currency)

    def test_memoryless_decision(self):
        ctx = pn.Context('contract-decision', 'user-0', pn._experiment.ASSISTANT_ID, 'dollars', 50)
        state = pn.game.initial_state(ctx).propose(pn.Offer(50, 40, 10))
        first = pn.lm.assistant_act(self.backend, self.directive(), state, ctx)
        second = pn.lm.assistant_act(self.backend, self.directive(), state, ctx)
        self.assertEqual(first.raw_text, second.raw_text, "assistant decisions depend on more than (directive, state, context)")
        self.assertIsInstance(pn.grammar.parse_decision(first.raw_text).decision, pn.Decision)

    def test_terminal_state_rejected(self):
        ctx = pn.Context('contract-terminal', pn._experiment.ASSISTANT_ID, 'user-0', 'dollars', 20)
        state = pn.game.initial_state(ctx).propose(pn.Offer(20, 10, 10)).decide()
        with self.assertRaises(ValueError):
            pn.lm.assistant_act(self.backend, self.directive(), state, ctx)
