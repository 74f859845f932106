import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional

import numpy as np

from pynorms.agents import Manner, NormPolicy, PolicyKind
from pynorms.game import Context

NAMED_KINDS = (PolicyKind.SELFISH, PolicyKind.ALTRUISTIC, PolicyKind.FAIR)

DEFAULT_MANNER_TABLE: Dict[PolicyKind, Dict[Manner, float]] = {
    PolicyKind.SELFISH: {Manner.RUDE: 0.6, Manner.SYCOPHANTIC: 0.05, Manner.NEUTRAL: 0.35},
    PolicyKind.ALTRUISTIC: {Manner.RUDE: 0.05, Manner.SYCOPHANTIC: 0.5, Manner.NEUTRAL: 0.45},
    PolicyKind.FAIR: {Manner.RUDE: 0.1, Manner.SYCOPHANTIC: 0.2, Manner.NEUTRAL: 0.7},
}


class EvidenceSource(Enum):
    USER_USER = 'user_user'
    ASSISTANT_USER = 'assistant_user'
    ASSISTANT_ASSISTANT = 'assistant_assistant'


@dataclass(frozen=True)
class Observation:
    """A user's proposal seen by the learner: the offered fraction, its manner, and the episode context."""
    offered_fraction: float
    manner: Manner
    context: Context
    source: EvidenceSource = EvidenceSource.USER_USER

    def __post_init__(self):
        if not 0.0 <= self.offered_fraction <= 1.0:
            raise ValueError(f"offered_fraction must lie in [0, 1], got {self.offered_fraction}")

    @property
    def total(self) -> int:
        return self.context.total_amount


def _complete_row(kind: PolicyKind, row: Mapping[Manner, float]) -> Dict[Manner, float]:
    row = dict(row)
    if Manner.NEUTRAL not in row:
        row[Manner.NEUTRAL] = 1.0 - sum(row.get(m, 0.0) for m in (Manner.RUDE, Manner.SYCOPHANTIC))
    for m in Manner:
        row.setdefault(m, 0.0)
        if not 0.0 <= row[m] <= 1.0:
            raise ValueError(f"manner_table[{kind.value}][{m.value}] must lie in [0, 1], got {row[m]}")
    if abs(sum(row.values()) - 1.0) > 1e-9:
        raise ValueError(f"manner_table row {kind.value} must sum to 1, got {sum(row.values())}")
    return row


@dataclass(frozen=True)
class LikelihoodParams:
    """
    Observation model of the exact backend.

    Attributes:
        concentration: sharpness of the offer evidence (kappa)
        smoothing: weight of the uniform floor mixed into the offer likelihood (epsilon)
        tone_weight: blend between offer evidence (1.0) and manner evidence (0.0) (lambda)
        manner_table: P(manner | policy kind) per named kind; a missing Neutral entry takes the row remainder
        neutral_informative: when False, Neutral utterances carry no tone evidence
    """
    concentration: float = 8.0
    smoothing: float = 0.01
    tone_weight: float = 0.7
    manner_table: Mapping[PolicyKind, Mapping[Manner, float]] = field(default_factory=lambda: DEFAULT_MANNER_TABLE)
    neutral_informative: bool = False

    def __post_init__(self):
        if not self.concentration > 0:
            raise ValueError(f"concentration must be positive, got {self.concentration}")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError(f"smoothing must lie in [0, 1], got {self.smoothing}")
        if not 0.0 <= self.tone_weight <= 1.0:
            raise ValueError(f"tone_weight must lie in [0, 1], got {self.tone_weight}")
        table = {}
        for kind in NAMED_KINDS:
            if kind not in self.manner_table:
                raise ValueError(f"manner_table has no row for {kind.value}")
            table[kind] = _complete_row(kind, self.manner_table[kind])
        object.__setattr__(self, 'manner_table', table)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'concentration': self.concentration,
            'smoothing': self.smoothing,
            'tone_weight': self.tone_weight,
            'neutral_informative': self.neutral_informative,
            'manner_table': {k.value: {m.value: p for m, p in row.items()} for k, row in self.manner_table.items()},
        }

    @classmethod
    def from_dict(cls, d: Optional[Mapping[str, Any]]) -> 'LikelihoodParams':
        d = dict(d or {})
        unknown = set(d) - {'concentration', 'smoothing', 'tone_weight', 'manner_table', 'neutral_informative'}
        if unknown:
            raise KeyError(f"unknown likelihood parameters: {sorted(unknown)}")
        if 'manner_table' in d:
            table: Dict[PolicyKind, Dict[Manner, float]] = {k: dict(v) for k, v in DEFAULT_MANNER_TABLE.items()}
            for kind_name, row in d['manner_table'].items():
                kind = PolicyKind(kind_name)
                table[kind] = {Manner(m): float(p) for m, p in row.items()}
            d['manner_table'] = table
        return cls(**d)


def nearest_kind(h: NormPolicy) -> PolicyKind:
    """Named kind whose target is closest to ``h``'s; ties go to the earlier of Selfish, Altruistic, Fair."""
    if h.kind is not PolicyKind.PARAMETRIC:
        return h.kind
    targets = {PolicyKind.SELFISH: 0.0, PolicyKind.ALTRUISTIC: 1.0, PolicyKind.FAIR: 0.5}
    return min(NAMED_KINDS, key=lambda k: (abs(h.target - targets[k]), NAMED_KINDS.index(k)))


def log_grid_normaliser(target: float, total: int, concentration: float) -> float:
    """
    log of sum_{k=0..total} exp(-concentration * |k/total - target|), in closed form.

    The grid splits at the target into two geometric series, so very large totals cost nothing extra.
    """
    step = concentration / total
    position = target * total
    below = min(max(math.floor(position), 0), total)
    delta = position - below
    ratio = math.expm1(-step)
    left = math.exp(-step * delta) * (math.expm1(-step * (below + 1)) / ratio)
    right = math.exp(-step * (1.0 - delta)) * (math.expm1(-step * (total - below)) / ratio)
    return math.log(left + right)


def offer_likelihood(obs: Observation, h: NormPolicy, p: LikelihoodParams) -> float:
    """(1 - eps) * exp(-kappa * |f - t|) / Z + eps / G over the observation's (total + 1)-point offer grid."""
    grid = obs.total + 1
    kernel = math.exp(-p.concentration * abs(obs.offered_fraction - h.target)
                      - log_grid_normaliser(h.target, obs.total, p.concentration))
    return (1.0 - p.smoothing) * kernel + p.smoothing / grid


def log_offer_likelihood(obs: Observation, h: NormPolicy, p: LikelihoodParams) -> float:
    log_kernel = -p.concentration * abs(obs.offered_fraction - h.target) \
        - log_grid_normaliser(h.target, obs.total, p.concentration)
    if p.smoothing == 0.0:
        return log_kernel
    if p.smoothing == 1.0:
        return -math.log(obs.total + 1)
    return float(np.logaddexp(math.log1p(-p.smoothing) + log_kernel, math.log(p.smoothing) - math.log(obs.total + 1)))


def manner_likelihood(m: Manner, h: NormPolicy, p: LikelihoodParams) -> float:
    if m is Manner.NEUTRAL and not p.neutral_informative:
        return 1.0
    return p.manner_table[nearest_kind(h)][m]
