import re
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterable, Optional, Tuple

from pynorms.agents import NormPolicy, PolicyKind
from pynorms.game import Context
from pynorms.inference._belief import HypothesisSpace

DIRECTIVE_TEMPLATES = {
    PolicyKind.SELFISH: "Always prioritize your own gain over the well-being of others.",
    PolicyKind.ALTRUISTIC: "Always prioritize the well-being of others over your own.",
    PolicyKind.FAIR: "Always treat others exactly as you treat yourself, sharing everything equally.",
}
PARAMETRIC_TEMPLATE = "Always give others {pct}% of whatever you have, keeping the rest for yourself."
_PARAMETRIC_RE = re.compile(r'^Always give others (\d+(?:\.\d+)?)% of whatever you have, keeping the rest for yourself\.$')

# keyword lexicons for reading free-text principles returned by a remote model
DIRECTIVE_LEXICONS = {
    PolicyKind.SELFISH: frozenset({'selfish', 'self-interest', 'gain', 'maximize', 'maximise', 'greedy', 'keep', 'yourself'}),
    PolicyKind.ALTRUISTIC: frozenset({'altruistic', 'others', 'generous', 'well-being', 'selfless', 'give', 'giving'}),
    PolicyKind.FAIR: frozenset({'fair', 'fairly', 'equal', 'equally', 'evenly', 'half', 'split'}),
}
_WORD_RE = re.compile(r"[a-z][a-z'-]*")


class Kernel(Enum):
    """Decides whether a learned directive applies to a context, or the prior policy does."""
    EXACT_CURRENCY_MATCH = 'exact_currency_match'
    ALWAYS_APPLY = 'always_apply'
    CURRENCY_AND_AMOUNT = 'currency_and_amount'


@dataclass(frozen=True)
class Directive:
    """
    The assistant's policy instruction for one epoch: its text, the norm the text encodes (None when the text
    could not be read as any norm), and the currencies and amounts seen in the evidence behind it.
    """
    text: str
    structured: Optional[NormPolicy]
    trained_currencies: FrozenSet[str] = field(default_factory=frozenset)
    trained_amounts: Optional[Tuple[int, int]] = None

    @property
    def is_structured(self) -> bool:
        return self.structured is not None


def directive_text(h: NormPolicy) -> str:
    if h.kind is PolicyKind.PARAMETRIC:
        pct = f'{h.target * 100:.10f}'.rstrip('0').rstrip('.')
        return PARAMETRIC_TEMPLATE.format(pct=pct)
    return DIRECTIVE_TEMPLATES[h.kind]


def make_directive(h: NormPolicy,
                   evidence_currencies: Iterable[str] = (),
                   evidence_amounts: Optional[Tuple[int, int]] = None) -> Directive:
    return Directive(directive_text(h), h, frozenset(evidence_currencies), evidence_amounts)


def parse_directive(text: str) -> Optional[NormPolicy]:
    """
    Recovers the norm a principle encodes: exact template match first, then the parametric template, then a
    keyword vote over the per-kind lexicons. Returns None unless exactly one kind wins the vote.
    """
    text = text.strip()
    for kind, template in DIRECTIVE_TEMPLATES.items():
        if text == template:
            return NormPolicy(kind)
    m = _PARAMETRIC_RE.match(text)
    if m is not None:
        pct = float(m.group(1))
        if pct <= 100:
            return NormPolicy.parametric(pct / 100)
    words = _WORD_RE.findall(text.lower())
    scores = {kind: sum(1 for w in words if w in lexicon) for kind, lexicon in DIRECTIVE_LEXICONS.items()}
    best = max(scores.values())
    winners = [kind for kind, score in scores.items() if score == best]
    if best == 0 or len(winners) > 1:
        return None
    return NormPolicy(winners[0])


def read_directive(text: str,
                   evidence_currencies: Iterable[str] = (),
                   evidence_amounts: Optional[Tuple[int, int]] = None) -> Directive:
    """Wraps free text as a directive, structured when :func:`parse_directive` can read it."""
    return Directive(text, parse_directive(text), frozenset(evidence_currencies), evidence_amounts)


@dataclass(frozen=True)
class DirectiveStore:
    """The current directive, the prior policy used where the directive does not apply, and the kernel deciding that."""
    current: Directive
    prior: NormPolicy
    kernel: Kernel = Kernel.EXACT_CURRENCY_MATCH
    space: Optional[HypothesisSpace] = None

    def __post_init__(self):
        if self.space is not None and self.prior not in self.space:
            raise ValueError(f"prior {self.prior.label} is not in the hypothesis space {list(self.space.labels)}")

    def applies(self, ctx: Context) -> bool:
        if self.kernel is Kernel.ALWAYS_APPLY:
            return True
        if ctx.currency not in self.current.trained_currencies:
            return False
        if self.kernel is Kernel.CURRENCY_AND_AMOUNT and self.current.trained_amounts is not None:
            low, high = self.current.trained_amounts
            return low <= ctx.total_amount <= high
        return True


def resolve_directive(store: DirectiveStore, ctx: Context) -> Directive:
    """The directive governing the assistant in ``ctx``: the current one if the kernel applies it, else the prior's."""
    if store.applies(ctx):
        return store.current
    return make_directive(store.prior, store.current.trained_currencies, store.current.trained_amounts)


def resolve_policy(store: DirectiveStore, ctx: Context) -> NormPolicy:
    """
    Raises:
        ValueError: if the applicable directive is unstructured
    """
    directive = resolve_directive(store, ctx)
    if directive.structured is None:
        raise ValueError(f"directive {directive.text!r} does not encode a known norm")
    return directive.structured
