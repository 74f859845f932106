"""
Rendering and parsing of game utterances.

A proposal has exactly the shape::

    For the {total} {currency}, the proposer will get {proposer_share}, and the responder will get {responder_share}.

optionally followed by one space and a trailing clause (a manner clause, a reason, or both). A decision is
exactly ``accept`` or ``reject``. The manner template pools and lexicons are configuration data stored in
``pynorms/data/manners.json``.
"""
import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

import pynorms as pn

PROPOSAL_TEMPLATE = "For the {total} {currency}, the proposer will get {proposer_share}, and the responder will get {responder_share}."

_PROPOSAL_RE = re.compile(
    r'^For the (\d+) ([^,]+?), the proposer will get (\d+), and the responder will get (\d+)\.(?:\s+(.*))?$',
    re.DOTALL,
)
_WORD_RE = re.compile(r"[a-z']+")
_DECISION_STRIP = ' \t\r\n.!?,;:'


class UtteranceError(ValueError):
    """Base class for utterances that cannot be read as game actions."""
    def __init__(self, message: str, text: str):
        super().__init__(message)
        self.text = text


class NoMatchError(UtteranceError):
    """The text does not fit the grammar."""
    pass


class ShareMismatchError(UtteranceError):
    """The text fits the grammar, but its shares do not sum to its total."""
    pass


@dataclass(frozen=True)
class Proposal:
    total: int
    currency: str
    proposer_share: int
    responder_share: int
    manner_clause: Optional[str] = None

    def offer(self) -> 'pn.game.Offer':
        return pn.game.Offer(self.total, self.proposer_share, self.responder_share)


@dataclass(frozen=True)
class Verdict:
    decision: 'pn.game.Decision'


ParsedAction = Union[Proposal, Verdict]


@dataclass(frozen=True)
class Utterance:
    raw_text: str
    parsed: Optional[ParsedAction] = None

    def __post_init__(self):
        if not self.raw_text:
            raise ValueError("utterance text must be non-empty")

    def __str__(self):
        return self.raw_text


@dataclass(frozen=True)
class MannerPools:
    templates: Dict['pn.agents.Manner', Tuple[str, ...]]
    lexicons: Dict['pn.agents.Manner', FrozenSet[str]]
    reasons: Tuple[str, ...]


@lru_cache(maxsize=None)
def manner_pools() -> MannerPools:
    """Loads the bundled manner templates, lexicons and reason sentences."""
    Manner = pn.agents.Manner
    with resources.files('pynorms').joinpath('data/manners.json').open('r', encoding='utf8') as f:
        data = json.load(f)
    templates = {Manner(name): tuple(pool) for name, pool in data['templates'].items()}
    lexicons = {Manner(name): frozenset(words) for name, words in data['lexicons'].items()}
    return MannerPools(templates, lexicons, tuple(data['reasons']))


def render_proposal(offer: 'pn.game.Offer',
                    currency: str,
                    manner: 'pn.agents.Manner',
                    rng: Optional[np.random.Generator] = None,
                    *,
                    reason: Optional[str] = None) -> Utterance:
    """
    Renders an offer as a proposal sentence. Rude and Sycophantic manners append one space and a clause drawn
    with ``rng`` from that manner's pool; an optional ``reason`` sentence is appended last.

    Raises:
        ValueError: if the currency is empty or contains a comma (it would not parse back).
    """
    if not currency or not currency.strip():
        raise ValueError("currency must be non-empty")
    if ',' in currency or currency != currency.strip():
        raise ValueError(f"currency {currency!r} cannot be rendered: no commas or surrounding whitespace")
    text = PROPOSAL_TEMPLATE.format(
        total=offer.total, currency=currency,
        proposer_share=offer.proposer_share, responder_share=offer.responder_share)
    trailing: List[str] = []
    if manner is not pn.agents.Manner.NEUTRAL:
        if rng is None:
            raise ValueError(f"a seeded rng is required to render {manner.value} proposals")
        pool = manner_pools().templates[manner]
        trailing.append(pool[int(rng.integers(len(pool)))])
    if reason:
        trailing.append(reason)
    clause = ' '.join(trailing) if trailing else None
    if clause is not None:
        text = text + ' ' + clause
    return Utterance(text, Proposal(offer.total, currency, offer.proposer_share, offer.responder_share, clause))


def render_decision(d: 'pn.game.Decision') -> Utterance:
    return Utterance(d.value, Verdict(d))


def parse_proposal(text: str) -> Proposal:
    """
    Parses a proposal sentence. The currency may span several words; any text after the sentence is kept as the
    manner clause, unparsed.

    Raises:
        NoMatchError: the text does not fit the grammar
        ShareMismatchError: the shares do not sum to the total
    """
    m = _PROPOSAL_RE.match(text.strip())
    if m is None:
        raise NoMatchError(f"not a proposal: {text!r}", text)
    total, currency, proposer_share, responder_share, clause = m.groups()
    total, proposer_share, responder_share = int(total), int(proposer_share), int(responder_share)
    if total < 1:
        raise NoMatchError(f"proposal total must be positive: {text!r}", text)
    if proposer_share + responder_share != total:
        raise ShareMismatchError(
            f"shares {proposer_share}+{responder_share} do not sum to total {total}: {text!r}", text)
    clause = clause.strip() if clause else None
    return Proposal(total, currency, proposer_share, responder_share, clause or None)


def parse_decision(text: str) -> Verdict:
    """Reads ``accept`` or ``reject``, ignoring case, surrounding whitespace and trailing punctuation."""
    token = text.strip(_DECISION_STRIP).lower()
    for d in pn.game.Decision:
        if token == d.value:
            return Verdict(d)
    raise NoMatchError(f"not a decision: {text!r}", text)


def parse_utterance(text: str) -> Utterance:
    """Parses either kind of utterance; raises NoMatchError if neither fits."""
    try:
        return Utterance(text, parse_decision(text))
    except NoMatchError:
        return Utterance(text, parse_proposal(text))


def classify_manner(clause: Optional[str]) -> 'pn.agents.Manner':
    """Keyword vote between the rude and sycophantic lexicons; ties and no hits give Neutral."""
    Manner = pn.agents.Manner
    if not clause:
        return Manner.NEUTRAL
    words = _WORD_RE.findall(clause.lower())
    lexicons = manner_pools().lexicons
    rude = sum(1 for w in words if w in lexicons[Manner.RUDE])
    syc = sum(1 for w in words if w in lexicons[Manner.SYCOPHANTIC])
    if rude > syc:
        return Manner.RUDE
    if syc > rude:
        return Manner.SYCOPHANTIC
    return Manner.NEUTRAL
