import os
import time
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Type

import numpy as np
import requests

import pynorms as pn
from pynorms.agents import Manner, policy_decision, policy_offer
from pynorms.game import Context, GameState, Phase
from pynorms.inference import (
    Directive, HypothesisSpace, LikelihoodParams, PosteriorBelief, evidence_support, psrl_epoch, read_directive,
)
from pynorms.lm._prompt import MetaPrompt, assistant_prompt

ENV_ENDPOINT = 'PYNORMS_LM_ENDPOINT'
ENV_KEY = 'PYNORMS_LM_KEY'
ENV_AUTH_HEADER = 'PYNORMS_LM_AUTH_HEADER'
ENV_TIMEOUT = 'PYNORMS_LM_TIMEOUT'
ENV_MAX_RETRIES = 'PYNORMS_LM_MAX_RETRIES'
ENV_BACKOFF = 'PYNORMS_LM_BACKOFF'


class LMTransportError(ConnectionError):
    """A single request to the language-model service failed (network error, non-200 status, malformed body)."""
    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class EpochFailureError(RuntimeError):
    """Every retry of a language-model request failed; the current epoch cannot complete.

    ``partial`` is filled in by the harness with the results gathered before the failure.
    """
    def __init__(self, message: str, attempts: int, partial: Any = None):
        super().__init__(message)
        self.attempts = attempts
        self.partial = partial


class BackendConfigurationError(ValueError):
    """A backend is missing configuration, or was handed a directive it cannot act on."""
    pass


class UnstructuredDirectiveWarning(Warning):
    """A remote principle could not be read as any known norm; it is used verbatim."""
    pass


class Role(Enum):
    META = 'meta'
    ASSISTANT = 'assistant'


DEFAULT_MAX_TOKENS = {Role.META: 256, Role.ASSISTANT: 64}


@dataclass(frozen=True)
class LmRequest:
    role: Role
    prompt: str
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature}")
        if self.max_tokens is None:
            object.__setattr__(self, 'max_tokens', DEFAULT_MAX_TOKENS[self.role])
        elif self.max_tokens < 1:
            raise ValueError(f"max_tokens must be positive, got {self.max_tokens}")

    def to_json(self) -> Dict[str, Any]:
        return {'role': self.role.value, 'prompt': self.prompt, 'temperature': self.temperature, 'max_tokens': self.max_tokens}


@dataclass(frozen=True)
class LmResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def usage(self) -> Dict[str, int]:
        return {'prompt_tokens': self.prompt_tokens, 'completion_tokens': self.completion_tokens}

    @classmethod
    def from_json(cls, body: Any) -> 'LmResponse':
        if not isinstance(body, dict) or not isinstance(body.get('text'), str):
            raise LMTransportError(f"response body has no text field: {body!r}")
        return cls(body['text'], int(body.get('prompt_tokens', 0)), int(body.get('completion_tokens', 0)))


@dataclass
class Diagnostics:
    """Per-simulation counters."""
    parse_failures: int = 0
    retries: int = 0
    excluded_episodes: int = 0
    failed_requests: int = 0
    unstructured_directives: int = 0
    messages: list = field(default_factory=list)

    def as_dict(self) -> Dict[str, Any]:
        return {
            'parse_failures': self.parse_failures,
            'retries': self.retries,
            'excluded_episodes': self.excluded_episodes,
            'failed_requests': self.failed_requests,
            'unstructured_directives': self.unstructured_directives,
            'messages': list(self.messages),
        }


class Backend(ABC):
    """
    Implements the two language-model roles: the meta level, which turns the interaction history into a
    directive, and the assistant, which acts in a game from a directive alone.

    Backends must be shareable across concurrent simulations, so they hold no per-simulation state.
    Backends should be registered as ``pynorms.backend`` entry points.
    """
    name: str = 'backend'

    @abstractmethod
    def generate(self, prompt: MetaPrompt, *, rng: Optional[np.random.Generator] = None,
                 diagnostics: Optional[Diagnostics] = None) -> Directive:
        """Produces the directive for the next epoch."""

    @abstractmethod
    def act(self, directive: Directive, state: GameState, ctx: Context, *,
            diagnostics: Optional[Diagnostics] = None) -> 'pn.grammar.Utterance':
        """One in-game utterance. Receives no history."""

    def __repr__(self):
        return f'{type(self).__name__}()'


class StubBackend(Backend):
    """
    The offline reference backend. It ignores the prose of the meta prompt and runs one posterior-sampling
    step from the prior over the structured history; it acts by rendering its directive's norm through the grammar.

    Args:
        space: the hypothesis space (default Selfish, Altruistic, Fair)
        params: the likelihood parameters
        prior: the prior belief (default uniform over ``space``)
    """
    name = 'stub'

    def __init__(self,
                 space: Optional[HypothesisSpace] = None,
                 params: Optional[LikelihoodParams] = None,
                 prior: Optional[PosteriorBelief] = None):
        self.space = space if space is not None else (prior.space if prior is not None else HypothesisSpace.default())
        self.params = params if params is not None else LikelihoodParams()
        self.prior = prior if prior is not None else PosteriorBelief.uniform(self.space)

    def generate(self, prompt, *, rng=None, diagnostics=None):
        if rng is None:
            raise BackendConfigurationError("the stub backend samples directives and needs a seeded rng")
        _, _, directive = psrl_epoch(self.prior, prompt.observations, rng, self.params)
        return directive

    def act(self, directive, state, ctx, *, diagnostics=None):
        if directive is None or directive.structured is None:
            raise BackendConfigurationError("the stub backend can only act on structured directives")
        policy = directive.structured
        if state.phase is Phase.AWAITING_PROPOSAL:
            offer = policy_offer(policy, ctx.total_amount)
            return pn.grammar.render_proposal(offer, ctx.currency, Manner.NEUTRAL)
        return pn.grammar.render_decision(policy_decision(policy, state.offer))

    def __repr__(self):
        return f'StubBackend(space={list(self.space.labels)!r})'


def _env(name: str, value: Any, default: Any, cast: Callable[[str], Any]) -> Any:
    if value is not None:
        return value
    raw = os.environ.get(name)
    if raw is None or raw == '':
        return default
    try:
        return cast(raw)
    except ValueError as e:
        raise BackendConfigurationError(f"environment variable {name}={raw!r} is not a valid {cast.__name__}") from e


class RemoteBackend(Backend):
    """
    Talks to a language-model service over HTTP. Each request is a JSON POST of
    ``{"role", "prompt", "temperature", "max_tokens"}`` answered by ``{"text", "prompt_tokens", "completion_tokens"}``.

    Unset arguments are read from the environment: ``PYNORMS_LM_ENDPOINT`` (required), ``PYNORMS_LM_KEY``,
    ``PYNORMS_LM_AUTH_HEADER`` (default ``Authorization``), ``PYNORMS_LM_TIMEOUT`` (seconds, default 30),
    ``PYNORMS_LM_MAX_RETRIES`` (default 3) and ``PYNORMS_LM_BACKOFF`` (seconds, default 0.5).

    Failed requests are retried up to ``max_retries`` times, waiting ``backoff * 2**i`` seconds before retry ``i``.
    """
    name = 'remote'

    def __init__(self,
                 endpoint: Optional[str] = None,
                 *,
                 key: Optional[str] = None,
                 auth_header: Optional[str] = None,
                 timeout: Optional[float] = None,
                 max_retries: Optional[int] = None,
                 backoff: Optional[float] = None,
                 temperature: float = 0.0,
                 session: Optional[requests.Session] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.endpoint = _env(ENV_ENDPOINT, endpoint, None, str)
        if not self.endpoint:
            raise BackendConfigurationError(f"no endpoint configured for the remote backend, set {ENV_ENDPOINT}")
        self.key = _env(ENV_KEY, key, None, str)
        self.auth_header = _env(ENV_AUTH_HEADER, auth_header, 'Authorization', str)
        self.timeout = _env(ENV_TIMEOUT, timeout, 30.0, float)
        self.max_retries = _env(ENV_MAX_RETRIES, max_retries, 3, int)
        self.backoff = _env(ENV_BACKOFF, backoff, 0.5, float)
        if self.max_retries < 0:
            raise BackendConfigurationError(f"max_retries must be non-negative, got {self.max_retries}")
        self.temperature = temperature
        self.session = session if session is not None else requests.Session()
        self.sleep = sleep

    def _headers(self) -> Dict[str, str]:
        headers = {'Content-Type': 'application/json'}
        if self.key:
            headers[self.auth_header] = self.key
        return headers

    def _post(self, request: LmRequest) -> LmResponse:
        try:
            r = self.session.post(self.endpoint, json=request.to_json(), headers=self._headers(), timeout=self.timeout)
        except requests.RequestException as e:
            raise LMTransportError(f"request to {self.endpoint} failed: {e}") from e
        if r.status_code != 200:
            raise LMTransportError(f"{self.endpoint} answered HTTP {r.status_code}", r.status_code)
        try:
            body = r.json()
        except ValueError as e:
            raise LMTransportError(f"{self.endpoint} answered with a body that is not JSON") from e
        return LmResponse.from_json(body)

    def complete(self, request: LmRequest, diagnostics: Optional[Diagnostics] = None) -> LmResponse:
        """
        Sends one request, retrying transport failures.

        Raises:
            EpochFailureError: when the request failed ``max_retries + 1`` times
        """
        last: Optional[LMTransportError] = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                if diagnostics is not None:
                    diagnostics.retries += 1
                self.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                return self._post(request)
            except LMTransportError as e:
                last = e
        if diagnostics is not None:
            diagnostics.failed_requests += 1
        raise EpochFailureError(
            f"{request.role.value} request failed after {self.max_retries + 1} attempts: {last}",
            self.max_retries + 1) from last

    def generate(self, prompt, *, rng=None, diagnostics=None):
        response = self.complete(LmRequest(Role.META, prompt.text, self.temperature), diagnostics)
        currencies, amounts = evidence_support(prompt.observations)
        directive = read_directive(response.text.strip(), currencies, amounts)
        if directive.structured is None:
            if diagnostics is not None:
                diagnostics.unstructured_directives += 1
            warnings.warn(f"remote principle does not encode a known norm, using it verbatim: {response.text!r}",
                          UnstructuredDirectiveWarning)
        return directive

    def act(self, directive, state, ctx, *, diagnostics=None):
        if directive is None:
            raise BackendConfigurationError("the assistant needs a directive to act")
        response = self.complete(
            LmRequest(Role.ASSISTANT, assistant_prompt(directive.text, state, ctx), self.temperature), diagnostics)
        text = response.text.strip()
        if not text:
            raise pn.game.ParseFailureError("empty response from the assistant", response.text)
        return pn.grammar.Utterance(text)

    def __repr__(self):
        return f'RemoteBackend({self.endpoint!r})'


_BUILTIN_BACKENDS: Dict[str, Type[Backend]] = {'stub': StubBackend, 'remote': RemoteBackend}


def get_backend(name: str, **kwargs) -> Backend:
    """
    Instantiates the backend registered under ``name`` in the ``pynorms.backend`` entry-point group.

    Raises:
        KeyError: if no backend has that name
    """
    plugins = pn.utils.registered('pynorms.backend')
    if name in plugins:
        return plugins[name].load()(**kwargs)
    if name in _BUILTIN_BACKENDS:
        return _BUILTIN_BACKENDS[name](**kwargs)
    raise KeyError(f"unknown backend {name!r}")


def list_backends() -> Dict[str, str]:
    names = {name: f'{cls.__module__}:{cls.__name__}' for name, cls in _BUILTIN_BACKENDS.items()}
    for name, ep in pn.utils.registered('pynorms.backend').items():
        names[name] = ep.value
    return names


def generate_directive(backend: Backend, prompt: MetaPrompt, *, rng: Optional[np.random.Generator] = None,
                       diagnostics: Optional[Diagnostics] = None) -> Directive:
    """The meta step: a directive for the next epoch from the prompt (and, for the stub, ``rng``)."""
    return backend.generate(prompt, rng=rng, diagnostics=diagnostics)


def assistant_act(backend: Backend, directive: Optional[Directive], state: GameState, ctx: Context, *,
                  diagnostics: Optional[Diagnostics] = None) -> 'pn.grammar.Utterance':
    """
    One assistant utterance, a function of ``(directive, state, ctx)`` only.

    Raises:
        BackendConfigurationError: if ``directive`` is missing
        ValueError: if the episode is already over
    """
    if state.phase is Phase.TERMINAL:
        raise ValueError("the assistant cannot act in a terminal state")
    if directive is None:
        raise BackendConfigurationError("the assistant needs a directive to act")
    return backend.act(directive, state, ctx, diagnostics=diagnostics)


class AssistantSeat:
    """Seats the assistant in an episode under a fixed directive."""
    def __init__(self, agent_id: str, backend: Backend, directive: Directive, diagnostics: Optional[Diagnostics] = None):
        self.agent_id = agent_id
        self.backend = backend
        self.directive = directive
        self.diagnostics = diagnostics

    def act(self, state: GameState, ctx: Context, rng: Optional[np.random.Generator] = None) -> 'pn.grammar.Utterance':
        return assistant_act(self.backend, self.directive, state, ctx, diagnostics=self.diagnostics)
