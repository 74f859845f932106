"""Fixed-policy users: sharing norms, manners, and the rules that turn them into proposals and decisions."""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

import pynorms as pn
from pynorms.game import Context, Decision, GameState, Offer, Phase


class PolicyKind(Enum):
    SELFISH = 'selfish'
    ALTRUISTIC = 'altruistic'
    FAIR = 'fair'
    PARAMETRIC = 'parametric'


class Manner(Enum):
    NEUTRAL = 'neutral'
    RUDE = 'rude'
    SYCOPHANTIC = 'sycophantic'


NAMED_TARGETS = {
    PolicyKind.SELFISH: 0.0,
    PolicyKind.ALTRUISTIC: 1.0,
    PolicyKind.FAIR: 0.5,
}

DEFAULT_THRESHOLDS = {
    PolicyKind.SELFISH: 0.0,
    PolicyKind.ALTRUISTIC: 0.0,
    PolicyKind.FAIR: 0.3,
    PolicyKind.PARAMETRIC: 0.0,
}


@dataclass(frozen=True)
class NormPolicy:
    """
    A sharing norm. Named kinds derive their target responder fraction; Parametric policies carry a free one.
    The acceptance threshold defaults per kind (Selfish 0.0, Altruistic 0.0, Fair 0.3, Parametric 0.0).

    Example::

        pn.NormPolicy(pn.PolicyKind.FAIR)
        pn.NormPolicy.parametric(0.3, acceptance_threshold=0.2)
    """
    kind: PolicyKind
    target_responder_fraction: Optional[float] = None
    acceptance_threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind is PolicyKind.PARAMETRIC:
            if self.target_responder_fraction is None:
                raise ValueError("a parametric policy needs a target_responder_fraction")
            target = round(float(self.target_responder_fraction), 10)
            if not 0.0 <= target <= 1.0:
                raise ValueError(f"target_responder_fraction must lie in [0, 1], got {target}")
        else:
            target = NAMED_TARGETS[self.kind]
            if self.target_responder_fraction is not None and self.target_responder_fraction != target:
                raise ValueError(f"{self.kind.value} policies have target {target}, got {self.target_responder_fraction}")
        threshold = DEFAULT_THRESHOLDS[self.kind] if self.acceptance_threshold is None else float(self.acceptance_threshold)
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"acceptance_threshold must lie in [0, 1], got {threshold}")
        object.__setattr__(self, 'target_responder_fraction', target)
        object.__setattr__(self, 'acceptance_threshold', threshold)

    @classmethod
    def selfish(cls, **kwargs) -> 'NormPolicy':
        return cls(PolicyKind.SELFISH, **kwargs)

    @classmethod
    def altruistic(cls, **kwargs) -> 'NormPolicy':
        return cls(PolicyKind.ALTRUISTIC, **kwargs)

    @classmethod
    def fair(cls, **kwargs) -> 'NormPolicy':
        return cls(PolicyKind.FAIR, **kwargs)

    @classmethod
    def parametric(cls, target: float, **kwargs) -> 'NormPolicy':
        return cls(PolicyKind.PARAMETRIC, target, **kwargs)

    @classmethod
    def from_label(cls, label: str, **kwargs) -> 'NormPolicy':
        """Reads ``selfish``, ``altruistic``, ``fair`` or ``parametric:0.3``."""
        name, _, value = label.strip().lower().partition(':')
        kind = PolicyKind(name)
        if kind is PolicyKind.PARAMETRIC:
            return cls.parametric(float(value), **kwargs)
        if value:
            raise ValueError(f"only parametric policies take a value: {label!r}")
        return cls(kind, **kwargs)

    @property
    def target(self) -> float:
        return self.target_responder_fraction # type: ignore[return-value]

    @property
    def threshold(self) -> float:
        return self.acceptance_threshold # type: ignore[return-value]

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.PARAMETRIC:
            return f'parametric:{self.target:g}'
        return self.kind.value

    def same_norm(self, other: 'NormPolicy') -> bool:
        """True if both policies encode the same sharing norm, ignoring acceptance thresholds."""
        return self.kind is other.kind and self.target == other.target

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class UserAgent:
    """
    A rule-driven user. Its policy and manner are fixed for the lifetime of a simulation.

    ``minimal_token`` makes selfish proposers leave the responder one unit instead of nothing.
    ``noise`` is the probability of proposing a uniformly drawn split instead (requires an rng).
    ``give_reasons`` appends a justification sentence after the manner clause.
    """
    agent_id: str
    policy: NormPolicy
    manner: Manner = Manner.NEUTRAL
    minimal_token: bool = False
    noise: float = 0.0
    give_reasons: bool = False

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must lie in [0, 1], got {self.noise}")

    def act(self, state: GameState, ctx: Context, rng: Optional[np.random.Generator] = None) -> 'pn.grammar.Utterance':
        if state.phase is Phase.AWAITING_PROPOSAL:
            if ctx.proposer_agent != self.agent_id:
                raise RuntimeError(f"{self.agent_id} is not the proposer of {ctx.episode_id}")
            offer = propose(self, ctx, rng)
            reason = None
            if self.give_reasons:
                reasons = pn.grammar.manner_pools().reasons
                reason = reasons[int(_require_rng(rng, 'reasons').integers(len(reasons)))]
            return pn.grammar.render_proposal(offer, ctx.currency, self.manner, rng, reason=reason)
        if state.phase is Phase.AWAITING_DECISION:
            if ctx.responder_agent != self.agent_id:
                raise RuntimeError(f"{self.agent_id} is not the responder of {ctx.episode_id}")
            return pn.grammar.render_decision(decide(self, state.offer))
        raise RuntimeError("the episode is over")


def _require_rng(rng: Optional[np.random.Generator], purpose: str) -> np.random.Generator:
    if rng is None:
        raise ValueError(f"a seeded rng is required for {purpose}")
    return rng


def target_share(policy: NormPolicy) -> float:
    return policy.target


def responder_share_for(fraction: float, total: int) -> int:
    """Nearest integer to ``fraction * total``; exact halves go to the responder."""
    scaled = fraction * total
    lower = math.floor(scaled)
    share = lower + 1 if scaled - lower >= 0.5 else lower
    return min(max(share, 0), total)


def policy_offer(policy: NormPolicy, total: int, minimal_token: bool = False) -> Offer:
    """The offer a policy makes for a pot of ``total`` units."""
    responder = responder_share_for(policy.target, total)
    if minimal_token and policy.kind is PolicyKind.SELFISH and responder == 0 and total > 1:
        responder = 1
    return Offer(total, total - responder, responder)


def propose(agent: UserAgent, ctx: Context, rng: Optional[np.random.Generator] = None) -> Offer:
    total = ctx.total_amount
    if agent.noise > 0 and _require_rng(rng, 'noisy proposals').random() < agent.noise:
        responder = int(rng.integers(total, endpoint=True)) # type: ignore[union-attr]
        return Offer(total, total - responder, responder)
    return policy_offer(agent.policy, total, agent.minimal_token)


def policy_decision(policy: NormPolicy, offer: Offer) -> Decision:
    return Decision.ACCEPT if offer.offered_share_fraction >= policy.threshold else Decision.REJECT


def decide(agent: UserAgent, offer: Offer) -> Decision:
    return policy_decision(agent.policy, offer)


def policy_utility(policy: NormPolicy, offer: Offer) -> float:
    """How well an offer conforms to a norm, in [0, 1]. Used by inference, never by the environment."""
    responder = offer.offered_share_fraction
    proposer = offer.proposer_fraction
    if policy.kind is PolicyKind.SELFISH:
        return proposer
    if policy.kind is PolicyKind.ALTRUISTIC:
        return responder
    if policy.kind is PolicyKind.FAIR:
        return 1.0 - abs(proposer - responder)
    return 1.0 - abs(responder - policy.target)
