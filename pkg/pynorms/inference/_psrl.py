from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import pynorms as pn
from pynorms.agents import NormPolicy
from pynorms.inference._belief import PosteriorBelief, sample_hypothesis, update_posterior
from pynorms.inference._directives import Directive, make_directive
from pynorms.inference._likelihood import EvidenceSource, LikelihoodParams, Observation


def observation_from_trajectory(traj: 'pn.game.Trajectory', source: EvidenceSource) -> Observation:
    proposal = traj.proposal
    return Observation(
        traj.offer.offered_share_fraction,
        pn.grammar.classify_manner(proposal.manner_clause),
        traj.context,
        source,
    )


def evidence_support(observations: Iterable[Observation],
                     currencies: Iterable[str] = (),
                     amounts: Optional[Tuple[int, int]] = None) -> Tuple[FrozenSet[str], Optional[Tuple[int, int]]]:
    """Currencies and the amount range covered by ``observations``, merged with what was already covered."""
    currencies = set(currencies)
    low, high = amounts if amounts is not None else (None, None)
    for obs in observations:
        currencies.add(obs.context.currency)
        low = obs.total if low is None else min(low, obs.total)
        high = obs.total if high is None else max(high, obs.total)
    return frozenset(currencies), (None if low is None else (low, high)) # type: ignore[return-value]


def psrl_epoch(belief: PosteriorBelief,
               epoch_observations: Sequence[Observation],
               rng: np.random.Generator,
               p: LikelihoodParams,
               *,
               trained_currencies: Iterable[str] = (),
               trained_amounts: Optional[Tuple[int, int]] = None) -> Tuple[PosteriorBelief, NormPolicy, Directive]:
    """
    One learning step: update on the epoch's observations, draw one hypothesis, and emit its directive.
    The sampled policy governs the next epoch. Consumes exactly one draw from ``rng``.
    """
    new_belief = update_posterior(belief, epoch_observations, p)
    sampled = sample_hypothesis(new_belief, rng)
    currencies, amounts = evidence_support(epoch_observations, trained_currencies, trained_amounts)
    return new_belief, sampled, make_directive(sampled, currencies, amounts)


class PsrlLearner:
    """
    Runs contextual posterior sampling directly: one posterior update and one draw per epoch.

    Example::

        learner = PsrlLearner(pn.PosteriorBelief.uniform(space), pn.LikelihoodParams(), rng)
        directive = learner.initial_directive()
        for epoch_obs in epochs:
            directive = learner.epoch(epoch_obs)
    """
    def __init__(self, prior: PosteriorBelief, params: LikelihoodParams, rng: np.random.Generator):
        self.belief = prior
        self.params = params
        self.rng = rng
        self.currencies: FrozenSet[str] = frozenset()
        self.amounts: Optional[Tuple[int, int]] = None
        self.directives: List[Directive] = []

    def initial_directive(self) -> Directive:
        return self.epoch([])

    def epoch(self, observations: Sequence[Observation]) -> Directive:
        self.belief, _, directive = psrl_epoch(
            self.belief, observations, self.rng, self.params,
            trained_currencies=self.currencies, trained_amounts=self.amounts)
        self.currencies, self.amounts = directive.trained_currencies, directive.trained_amounts
        self.directives.append(directive)
        return directive
