"""The ultimatum game as an episodic contextual MDP: contexts, states, actions, payoffs and single episodes."""
import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np

import pynorms as pn

_episode_ids = itertools.count()


class ConfigurationError(ValueError):
    """Raised when a scenario cannot produce contexts, e.g. an empty currency pool."""
    pass


class ParseFailureError(ValueError):
    """Raised when an agent emits an utterance that cannot be read as a game action.

    The episode is aborted; the harness excludes it from the history and counts it in diagnostics.
    """
    def __init__(self, message: str, raw_text: str, cause: Optional[Exception] = None):
        super().__init__(message)
        self.raw_text = raw_text
        self.cause = cause


class ParseFailureWarning(Warning):
    """Warning issued when an episode is excluded because of a parse failure."""
    pass


class Phase(Enum):
    AWAITING_PROPOSAL = 'awaiting_proposal'
    AWAITING_DECISION = 'awaiting_decision'
    TERMINAL = 'terminal'


class Decision(Enum):
    ACCEPT = 'accept'
    REJECT = 'reject'


@dataclass(frozen=True)
class Offer:
    total: int
    proposer_share: int
    responder_share: int

    def __post_init__(self):
        if self.total < 1:
            raise ValueError(f"offer total must be at least 1, got {self.total}")
        if self.proposer_share < 0 or self.responder_share < 0:
            raise ValueError(f"offer shares must be non-negative: {self}")
        if self.proposer_share + self.responder_share != self.total:
            raise ValueError(f"offer shares must sum to the total: {self}")

    @property
    def offered_share_fraction(self) -> float:
        return self.responder_share / self.total

    @property
    def proposer_fraction(self) -> float:
        return self.proposer_share / self.total


@dataclass(frozen=True)
class Context:
    """
    Per-episode task descriptor: who plays which seat, what is split and how much of it.
    Agents are referenced by their ``agent_id``.
    """
    episode_id: str
    proposer_agent: str
    responder_agent: str
    currency: str
    total_amount: int
    epoch_index: int = 0

    def __post_init__(self):
        if self.total_amount < 1:
            raise ValueError(f"total_amount must be at least 1, got {self.total_amount}")
        if not self.currency or not self.currency.strip():
            raise ValueError("currency must be non-empty")
        if self.proposer_agent == self.responder_agent:
            raise ValueError(f"an agent cannot play both seats: {self.proposer_agent}")
        if self.epoch_index < 0:
            raise ValueError(f"epoch_index must be non-negative, got {self.epoch_index}")


@dataclass(frozen=True)
class GameState:
    phase: Phase = Phase.AWAITING_PROPOSAL
    pending_offer: Optional[Offer] = None

    def __post_init__(self):
        if (self.phase is Phase.AWAITING_PROPOSAL) != (self.pending_offer is None):
            raise ValueError(f"pending_offer must be present exactly when a proposal has been made: {self}")

    @property
    def offer(self) -> Offer:
        """The pending offer. Raises if no proposal has been made yet."""
        if self.pending_offer is None:
            raise RuntimeError("no offer is pending while awaiting a proposal")
        return self.pending_offer

    def propose(self, offer: Offer) -> 'GameState':
        if self.phase is not Phase.AWAITING_PROPOSAL:
            raise RuntimeError(f"cannot propose in phase {self.phase.value}")
        return GameState(Phase.AWAITING_DECISION, offer)

    def decide(self) -> 'GameState':
        if self.phase is not Phase.AWAITING_DECISION:
            raise RuntimeError(f"cannot decide in phase {self.phase.value}")
        return GameState(Phase.TERMINAL, self.pending_offer)


class Step(NamedTuple):
    state: GameState
    utterance: 'pn.grammar.Utterance'
    action: Union[Offer, Decision]
    reward: Tuple[int, int]


@dataclass(frozen=True)
class Trajectory:
    context: Context
    steps: Tuple[Step, ...]
    final_payoffs: Tuple[int, int]

    def __post_init__(self):
        if len(self.steps) != 2:
            raise ValueError(f"a trajectory has exactly two steps, got {len(self.steps)}")

    @property
    def offer(self) -> Offer:
        return self.steps[0].action # type: ignore[return-value]

    @property
    def decision(self) -> Decision:
        return self.steps[1].action # type: ignore[return-value]

    @property
    def proposal(self) -> 'pn.grammar.Proposal':
        return self.steps[0].utterance.parsed # type: ignore[return-value]


def initial_state(ctx: Context) -> GameState:
    return GameState(Phase.AWAITING_PROPOSAL)


@dataclass
class CmdpSpec:
    """The contextual MDP: a context sampler, an initial state rule and a discount."""
    context_sampler: Callable[[np.random.Generator], Context]
    discount: float = 1.0
    initial_state_rule: Callable[[Context], GameState] = field(default=initial_state)

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {self.discount}")


@runtime_checkable
class Actor(Protocol):
    """Anything that can take a seat in an episode."""
    agent_id: str

    def act(self, state: GameState, ctx: Context, rng: Optional[np.random.Generator] = None) -> 'pn.grammar.Utterance':
        ...


def sample_context(scenario: 'pn.scenarios.ScenarioConfig',
                   rng: np.random.Generator,
                   pairing: Optional[Tuple[str, str]] = None,
                   *,
                   epoch_index: int = 0,
                   episode_id: Optional[str] = None,
                   currencies: Optional[Sequence[str]] = None,
                   amounts: Optional[Sequence[int]] = None) -> Context:
    """
    Draws a context from the scenario: currency uniformly from the pool, then amount uniformly from the inclusive
    range. When ``pairing`` is not given, two distinct users are drawn uniformly from the scenario's group.
    ``currencies``/``amounts`` override the training pool (used by the test phase).

    Raises:
        ConfigurationError: if the currency pool or amount range is empty
    """
    pool = list(scenario.currencies if currencies is None else currencies)
    bounds = list(scenario.amounts if amounts is None else amounts)
    if len(pool) == 0:
        raise ConfigurationError("currency pool is empty")
    if len(bounds) != 2 or bounds[0] > bounds[1] or bounds[1] < 1:
        raise ConfigurationError(f"amount range {bounds} is empty")
    if pairing is None:
        users = scenario.user_ids()
        if len(users) < 2:
            raise ConfigurationError("a user-user pairing needs at least two users")
        i, j = rng.choice(len(users), size=2, replace=False)
        pairing = (users[int(i)], users[int(j)])
    currency = pool[int(rng.integers(len(pool)))]
    total = int(rng.integers(max(1, bounds[0]), bounds[1], endpoint=True))
    if episode_id is None:
        episode_id = f'ep-{next(_episode_ids)}'
    return Context(episode_id, pairing[0], pairing[1], currency, total, epoch_index)


def payoff(offer: Offer, decision: Decision) -> Tuple[int, int]:
    if decision is Decision.ACCEPT:
        return (offer.proposer_share, offer.responder_share)
    return (0, 0)


def offered_share_pct(offer: Offer) -> float:
    return 100.0 * offer.responder_share / offer.total


def run_episode(proposer: Actor, responder: Actor, ctx: Context, rng: Optional[np.random.Generator] = None) -> Trajectory:
    """
    Plays one episode: a proposal, then a decision. ``rng`` is passed to both agents (rule agents use it only to
    draw manner clauses).

    Raises:
        ParseFailureError: if either utterance cannot be parsed, or the proposal does not describe this episode's pot
    """
    state = initial_state(ctx)
    first = proposer.act(state, ctx, rng)
    try:
        proposal = pn.grammar.parse_proposal(first.raw_text)
    except pn.grammar.UtteranceError as e:
        raise ParseFailureError(f"unparseable proposal from {ctx.proposer_agent}", first.raw_text, e) from e
    if proposal.total != ctx.total_amount or proposal.currency != ctx.currency:
        raise ParseFailureError(
            f"proposal from {ctx.proposer_agent} does not describe {ctx.total_amount} {ctx.currency}", first.raw_text)
    offer = proposal.offer()
    steps: List[Step] = [Step(state, pn.grammar.Utterance(first.raw_text, proposal), offer, (0, 0))]

    state = state.propose(offer)
    second = responder.act(state, ctx, rng)
    try:
        verdict = pn.grammar.parse_decision(second.raw_text)
    except pn.grammar.UtteranceError as e:
        raise ParseFailureError(f"unparseable decision from {ctx.responder_agent}", second.raw_text, e) from e
    payoffs = payoff(offer, verdict.decision)
    steps.append(Step(state, pn.grammar.Utterance(second.raw_text, verdict), verdict.decision, payoffs))
    return Trajectory(ctx, tuple(steps), payoffs)


def warn_parse_failure(err: ParseFailureError, ctx: Context) -> None:
    warnings.warn(f"excluding episode {ctx.episode_id}: {err} ({err.raw_text!r})", ParseFailureWarning)
