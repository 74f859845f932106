from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from pynorms.agents import NormPolicy
from pynorms.inference._likelihood import LikelihoodParams, Observation, log_offer_likelihood, manner_likelihood


class NumericalUnderflowError(ArithmeticError):
    """Raised when every hypothesis is ruled out by a batch of observations."""
    pass


@dataclass(frozen=True)
class HypothesisSpace:
    """An ordered, non-empty list of candidate norms. The order fixes how posterior samples are drawn."""
    hypotheses: Tuple[NormPolicy, ...]

    def __post_init__(self):
        hypotheses = tuple(self.hypotheses)
        if len(hypotheses) == 0:
            raise ValueError("a hypothesis space must not be empty")
        keys = [(h.kind, h.target) for h in hypotheses]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate hypotheses in {[h.label for h in hypotheses]}")
        object.__setattr__(self, 'hypotheses', hypotheses)

    @classmethod
    def default(cls, parametric_grid: bool = False) -> 'HypothesisSpace':
        """Selfish, Altruistic, Fair, optionally followed by parametric targets 0.0, 0.1, ..., 1.0."""
        hypotheses = [NormPolicy.selfish(), NormPolicy.altruistic(), NormPolicy.fair()]
        if parametric_grid:
            hypotheses += [NormPolicy.parametric(i / 10) for i in range(11)]
        return cls(tuple(hypotheses))

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> 'HypothesisSpace':
        return cls(tuple(NormPolicy.from_label(label) for label in labels))

    def __len__(self):
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def __getitem__(self, i: int) -> NormPolicy:
        return self.hypotheses[i]

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(h.label for h in self.hypotheses)

    def index(self, h: NormPolicy) -> int:
        for i, candidate in enumerate(self.hypotheses):
            if candidate.same_norm(h):
                return i
        raise KeyError(f"{h.label} is not in the hypothesis space {list(self.labels)}")

    def __contains__(self, h: object) -> bool:
        return isinstance(h, NormPolicy) and any(c.same_norm(h) for c in self.hypotheses)


@dataclass(frozen=True, eq=False)
class PosteriorBelief:
    """
    Probability mass over a hypothesis space. Beliefs are immutable; updates return new beliefs.

    Masses are held in log space; ``masses`` exponentiates once and renormalises.
    """
    space: HypothesisSpace
    log_masses: np.ndarray = field(repr=False)
    history_size: int = 0

    def __post_init__(self):
        log_masses = np.array(self.log_masses, dtype=np.float64)
        if log_masses.shape != (len(self.space),):
            raise ValueError(f"expected {len(self.space)} masses, got shape {log_masses.shape}")
        if np.isnan(log_masses).any() or np.isposinf(log_masses).any():
            raise ValueError("log masses must be finite or -inf")
        total = logsumexp(log_masses)
        if not np.isfinite(total):
            raise NumericalUnderflowError("every hypothesis has zero mass")
        log_masses = log_masses - total
        log_masses.setflags(write=False)
        object.__setattr__(self, 'log_masses', log_masses)

    @classmethod
    def uniform(cls, space: HypothesisSpace) -> 'PosteriorBelief':
        return cls(space, np.zeros(len(space)))

    @classmethod
    def from_masses(cls, space: HypothesisSpace, masses: Sequence[float], history_size: int = 0) -> 'PosteriorBelief':
        """Builds a belief from non-negative, possibly unnormalised, masses."""
        masses = np.asarray(masses, dtype=np.float64)
        if (masses < 0).any():
            raise ValueError("masses must be non-negative")
        with np.errstate(divide='ignore'):
            return cls(space, np.log(masses), history_size)

    @classmethod
    def point_mass(cls, space: HypothesisSpace, h: NormPolicy) -> 'PosteriorBelief':
        masses = np.zeros(len(space))
        masses[space.index(h)] = 1.0
        return cls.from_masses(space, masses)

    @property
    def masses(self) -> np.ndarray:
        masses = np.exp(self.log_masses)
        return masses / masses.sum()

    def mass(self, h: NormPolicy) -> float:
        return float(self.masses[self.space.index(h)])

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.space.labels, (float(m) for m in self.masses)))

    def map_hypothesis(self) -> NormPolicy:
        """The most probable hypothesis; ties go to the earliest in space order."""
        return self.space[int(np.argmax(self.log_masses))]


def log_likelihoods(space: HypothesisSpace, batch: Sequence[Observation], p: LikelihoodParams) -> np.ndarray:
    """Per-hypothesis log of the product over ``batch`` of offer^lambda * manner^(1 - lambda)."""
    out = np.zeros(len(space))
    offer_w, tone_w = p.tone_weight, 1.0 - p.tone_weight
    for i, h in enumerate(space):
        terms = []
        for obs in batch:
            term = 0.0
            # a zero-weighted channel is skipped so that 0 * log(0) never arises
            if offer_w > 0:
                term += offer_w * log_offer_likelihood(obs, h, p)
            if tone_w > 0:
                m = manner_likelihood(obs.manner, h, p)
                term += tone_w * np.log(m) if m > 0 else -np.inf
            terms.append(term)
        out[i] = np.sum(terms) if terms else 0.0
    return out


def update_posterior(belief: PosteriorBelief, batch: Sequence[Observation], p: LikelihoodParams) -> PosteriorBelief:
    """
    Bayes' rule over a batch of observations, accumulated in log space.

    Raises:
        NumericalUnderflowError: if the batch gives every hypothesis zero likelihood
    """
    if len(batch) == 0:
        return belief
    with np.errstate(divide='ignore', invalid='ignore'):
        posterior = belief.log_masses + log_likelihoods(belief.space, batch, p)
    if not np.isfinite(logsumexp(posterior)):
        raise NumericalUnderflowError(f"all hypothesis masses underflowed after {len(batch)} observations")
    return PosteriorBelief(belief.space, posterior, belief.history_size + len(batch))


def sample_hypothesis(belief: PosteriorBelief, rng: np.random.Generator, u: Optional[float] = None) -> NormPolicy:
    """
    Categorical draw by cumulative-mass inversion in space order, consuming exactly one ``rng.random()``.
    ``u`` replaces the draw when given.
    """
    if u is None:
        u = rng.random()
    masses = belief.masses
    cumulative = np.cumsum(masses)
    i = int(np.searchsorted(cumulative, u, side='right'))
    if i >= len(masses):
        # rounding left u above the final cumulative mass
        i = int(np.flatnonzero(masses > 0)[-1])
    return belief.space[i]
