from pynorms.inference._likelihood import (
    EvidenceSource,
    LikelihoodParams,
    Observation,
    DEFAULT_MANNER_TABLE,
    log_grid_normaliser,
    log_offer_likelihood,
    manner_likelihood,
    nearest_kind,
    offer_likelihood,
)
from pynorms.inference._belief import (
    HypothesisSpace,
    NumericalUnderflowError,
    PosteriorBelief,
    log_likelihoods,
    sample_hypothesis,
    update_posterior,
)
from pynorms.inference._directives import (
    Directive,
    DirectiveStore,
    Kernel,
    directive_text,
    make_directive,
    parse_directive,
    read_directive,
    resolve_directive,
    resolve_policy,
)
from pynorms.inference._psrl import PsrlLearner, evidence_support, observation_from_trajectory, psrl_epoch

__all__ = [
    'EvidenceSource', 'LikelihoodParams', 'Observation', 'DEFAULT_MANNER_TABLE', 'log_grid_normaliser',
    'log_offer_likelihood', 'manner_likelihood', 'nearest_kind', 'offer_likelihood',
    'HypothesisSpace', 'NumericalUnderflowError', 'PosteriorBelief', 'log_likelihoods', 'sample_hypothesis',
    'update_posterior',
    'Directive', 'DirectiveStore', 'Kernel', 'directive_text', 'make_directive', 'parse_directive', 'read_directive',
    'resolve_directive', 'resolve_policy',
    'PsrlLearner', 'evidence_support', 'observation_from_trajectory', 'psrl_epoch',
]
