import json
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import pandas as pd

import pynorms as pn
from pynorms.agents import Manner, NormPolicy, UserAgent
from pynorms.inference import HypothesisSpace, Kernel, LikelihoodParams

EPISODE_ORDERS = ('grouped', 'interleaved')


@dataclass(frozen=True)
class Schedule:
    """Episodes per epoch. Assistant-user episodes alternate assistant-as-proposer and assistant-as-responder."""
    user_user_per_epoch: int = 8
    assistant_user_per_epoch: int = 2
    assistant_assistant_per_epoch: int = 0
    episode_order: str = 'grouped'

    @property
    def episodes_per_epoch(self) -> int:
        return self.user_user_per_epoch + self.assistant_user_per_epoch + self.assistant_assistant_per_epoch

    @property
    def assistant_responder_per_epoch(self) -> int:
        return self.assistant_user_per_epoch // 2

    @property
    def observations_per_epoch(self) -> int:
        return self.user_user_per_epoch + self.assistant_responder_per_epoch


@dataclass(frozen=True)
class GroupMember:
    """``count`` users sharing one norm and manner."""
    policy: NormPolicy
    manner: Manner = Manner.NEUTRAL
    count: int = 1
    minimal_token: bool = False
    noise: float = 0.0
    give_reasons: bool = False


@dataclass(frozen=True)
class TestPhase:
    """Assistant-as-proposer episodes run after training with the final directive."""
    currencies: Tuple[str, ...]
    amounts: Optional[Tuple[int, int]] = None
    n_test_episodes: int = 5
    include_training_currencies: bool = True
    ood: bool = True

    __test__ = False # not a pytest test class


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    group: Tuple[GroupMember, ...]
    description: str = ''
    n_simulations: int = 20
    n_epochs: int = 5
    schedule: Schedule = field(default_factory=Schedule)
    currencies: Tuple[str, ...] = ('dollars',)
    amounts: Tuple[int, int] = (10, 100)
    test_phase: Optional[TestPhase] = None
    prior_policy: NormPolicy = field(default_factory=NormPolicy.altruistic)
    kernel: Kernel = Kernel.EXACT_CURRENCY_MATCH
    hypotheses: HypothesisSpace = field(default_factory=HypothesisSpace.default)
    likelihood_params: LikelihoodParams = field(default_factory=LikelihoodParams)
    backend: str = 'stub'
    backend_options: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def users(self) -> List[UserAgent]:
        users = []
        for member in self.group:
            for _ in range(member.count):
                users.append(UserAgent(f'user-{len(users)}', member.policy, member.manner,
                                       member.minimal_token, member.noise, member.give_reasons))
        return users

    def user_ids(self) -> List[str]:
        return [u.agent_id for u in self.users()]

    @property
    def n_users(self) -> int:
        return sum(m.count for m in self.group)

    def group_proportions(self) -> Dict[str, float]:
        """Share of users per norm label."""
        out: Dict[str, float] = {}
        for m in self.group:
            out[m.policy.label] = out.get(m.policy.label, 0.0) + m.count / self.n_users
        return out

    def test_currencies(self) -> Tuple[str, ...]:
        if self.test_phase is None:
            return ()
        extra = self.currencies if self.test_phase.include_training_currencies else ()
        return tuple(self.test_phase.currencies) + tuple(c for c in extra if c not in self.test_phase.currencies)

    @property
    def test_episodes(self) -> int:
        if self.test_phase is None:
            return 0
        return self.test_phase.n_test_episodes * len(self.test_currencies())

    @property
    def episodes_per_simulation(self) -> int:
        return self.schedule.episodes_per_epoch * self.n_epochs + self.test_episodes

    def make_backend(self) -> 'pn.lm.Backend':
        if self.backend == 'stub':
            options = dict(self.backend_options)
            options.setdefault('space', self.hypotheses)
            options.setdefault('params', self.likelihood_params)
            return pn.lm.get_backend('stub', **options)
        return pn.lm.get_backend(self.backend, **self.backend_options)

    def replace(self, **changes) -> 'ScenarioConfig':
        """A copy with ``changes`` applied and validated again."""
        cfg = replace(self, **changes)
        return scenario_from_dict(cfg.to_dict(), source=f'{self.name} (overridden)')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'description': self.description,
            'n_simulations': self.n_simulations,
            'n_epochs': self.n_epochs,
            'seed': self.seed,
            'schedule': {
                'user_user_per_epoch': self.schedule.user_user_per_epoch,
                'assistant_user_per_epoch': self.schedule.assistant_user_per_epoch,
                'assistant_assistant_per_epoch': self.schedule.assistant_assistant_per_epoch,
                'episode_order': self.schedule.episode_order,
            },
            'group': [{
                'policy': m.policy.label,
                'acceptance_threshold': m.policy.threshold,
                'manner': m.manner.value,
                'count': m.count,
                'minimal_token': m.minimal_token,
                'noise': m.noise,
                'give_reasons': m.give_reasons,
            } for m in self.group],
            'currencies': list(self.currencies),
            'amounts': list(self.amounts),
            'test_phase': None if self.test_phase is None else {
                'currencies': list(self.test_phase.currencies),
                'amounts': None if self.test_phase.amounts is None else list(self.test_phase.amounts),
                'n_test_episodes': self.test_phase.n_test_episodes,
                'include_training_currencies': self.test_phase.include_training_currencies,
                'ood': self.test_phase.ood,
            },
            'prior_policy': self.prior_policy.label,
            'kernel': self.kernel.value,
            'hypotheses': list(self.hypotheses.labels),
            'likelihood_params': self.likelihood_params.to_dict(),
            'backend': {'name': self.backend, 'options': dict(self.backend_options)},
        }


_TOP_LEVEL = ('name', 'description', 'n_simulations', 'n_epochs', 'seed', 'schedule', 'group', 'currencies', 'amounts',
              'test_phase', 'prior_policy', 'kernel', 'hypotheses', 'likelihood_params', 'backend')
_SCHEDULE = ('user_user_per_epoch', 'assistant_user_per_epoch', 'assistant_assistant_per_epoch', 'episode_order')
_MEMBER = ('policy', 'acceptance_threshold', 'manner', 'count', 'minimal_token', 'noise', 'give_reasons')
_TEST = ('currencies', 'amounts', 'n_test_episodes', 'include_training_currencies', 'ood')


def _amount_range(v: Any, value: Any, name: str) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    ok = isinstance(value, list) and len(value) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in value)
    if not v.require(ok, name, f'expected [low, high] integers, got {value!r}'):
        return None
    if not v.require(1 <= value[0] <= value[1], name, f'expected 1 <= low <= high, got {value!r}'):
        return None
    return (value[0], value[1])


def _currency_pool(v: Any, value: Any, name: str) -> Tuple[str, ...]:
    if value is None:
        return ()
    if not v.require(isinstance(value, list) and len(value) > 0, name, 'expected a non-empty list of currencies'):
        return ()
    pool = []
    for i, c in enumerate(value):
        if not isinstance(c, str) or not c.strip():
            v.error(f'{name}[{i}]', f'expected a non-empty string, got {c!r}')
        elif ',' in c or c != c.strip():
            v.error(f'{name}[{i}]', f'currency {c!r} must not contain commas or surrounding whitespace')
        else:
            pool.append(c)
    v.require(len(set(pool)) == len(pool), name, 'currencies must be unique')
    return tuple(pool)


def scenario_from_dict(doc: Mapping[str, Any], source: str = 'scenario') -> ScenarioConfig:
    """
    Validates a scenario document and applies defaults.

    Raises:
        ScenarioValidationError: listing every offending field
    """
    with pn.validate.scenario(source) as v:
        if not isinstance(doc, Mapping):
            v.error('<root>', f'expected an object, got {type(doc).__name__}')
            doc = {}
        v.unknown_keys(doc, _TOP_LEVEL)
        name = v.field(doc, 'name', str)
        description = v.field(doc, 'description', str, '')
        n_simulations = v.field(doc, 'n_simulations', int, 20)
        n_epochs = v.field(doc, 'n_epochs', int, 5)
        seed = v.field(doc, 'seed', int, 0)
        if n_simulations is not None:
            v.require(n_simulations > 0, 'n_simulations', f'must be positive, got {n_simulations}')
        if n_epochs is not None:
            v.require(n_epochs > 0, 'n_epochs', f'must be positive, got {n_epochs}')

        sched_doc = v.field(doc, 'schedule', dict, {}) or {}
        v.unknown_keys(sched_doc, _SCHEDULE, 'schedule.')
        counts = {}
        for key, default in (('user_user_per_epoch', 8), ('assistant_user_per_epoch', 2), ('assistant_assistant_per_epoch', 0)):
            counts[key] = v.field(sched_doc, key, int, default, 'schedule.')
            if counts[key] is not None:
                v.require(counts[key] >= 0, f'schedule.{key}', f'must be non-negative, got {counts[key]}')
        order = v.field(sched_doc, 'episode_order', str, 'grouped', 'schedule.')
        if order is not None:
            v.require(order in EPISODE_ORDERS, 'schedule.episode_order', f'expected one of {EPISODE_ORDERS}, got {order!r}')
        if all(c is not None for c in counts.values()):
            v.require(sum(counts.values()) > 0, 'schedule', 'at least one episode per epoch is required')

        group: List[GroupMember] = []
        group_doc = v.field(doc, 'group', list)
        if group_doc is not None:
            v.require(len(group_doc) > 0, 'group', 'must not be empty')
            for i, m in enumerate(group_doc):
                prefix = f'group[{i}].'
                if not isinstance(m, dict):
                    v.error(f'group[{i}]', 'expected an object')
                    continue
                v.unknown_keys(m, _MEMBER, prefix)
                label = v.field(m, 'policy', str, prefix=prefix)
                threshold = v.field(m, 'acceptance_threshold', (int, float, type(None)), None, prefix)
                policy = v.convert(f'{prefix}policy', lambda: NormPolicy.from_label(label, acceptance_threshold=threshold)) \
                    if label is not None else None
                manner_name = v.field(m, 'manner', str, 'neutral', prefix)
                manner = v.convert(f'{prefix}manner', lambda: Manner(manner_name)) if manner_name is not None else None
                count = v.field(m, 'count', int, 1, prefix)
                if count is not None:
                    v.require(count > 0, f'{prefix}count', f'must be positive, got {count}')
                minimal_token = v.field(m, 'minimal_token', bool, False, prefix)
                noise = v.field(m, 'noise', (int, float), 0.0, prefix)
                if noise is not None:
                    v.require(0.0 <= noise <= 1.0, f'{prefix}noise', f'must lie in [0, 1], got {noise}')
                give_reasons = v.field(m, 'give_reasons', bool, False, prefix)
                if policy is not None and manner is not None and count is not None and count > 0:
                    group.append(GroupMember(policy, manner, count, bool(minimal_token), float(noise or 0.0), bool(give_reasons)))

        currencies = _currency_pool(v, v.field(doc, 'currencies', list, ['dollars']), 'currencies')
        amounts = _amount_range(v, v.field(doc, 'amounts', list, [10, 100]), 'amounts')

        test_phase = None
        test_doc = v.field(doc, 'test_phase', (dict, type(None)), None)
        if test_doc is not None:
            v.unknown_keys(test_doc, _TEST, 'test_phase.')
            test_currencies = _currency_pool(v, v.field(test_doc, 'currencies', list, prefix='test_phase.'), 'test_phase.currencies')
            test_amounts = _amount_range(v, v.field(test_doc, 'amounts', (list, type(None)), None, 'test_phase.'), 'test_phase.amounts')
            n_test = v.field(test_doc, 'n_test_episodes', int, 5, 'test_phase.')
            if n_test is not None:
                v.require(n_test > 0, 'test_phase.n_test_episodes', f'must be positive, got {n_test}')
            include = v.field(test_doc, 'include_training_currencies', bool, True, 'test_phase.')
            ood = v.field(test_doc, 'ood', bool, True, 'test_phase.')
            if ood and currencies:
                overlap = sorted(set(test_currencies) & set(currencies))
                v.require(not overlap, 'test_phase.currencies', f'overlap the training pool in an out-of-distribution test: {overlap}')
            if n_test is not None:
                test_phase = TestPhase(test_currencies, test_amounts, n_test, bool(include), bool(ood))

        hypotheses = None
        hyp_doc = v.field(doc, 'hypotheses', list, None)
        if hyp_doc is None:
            hypotheses = HypothesisSpace.default()
        else:
            hypotheses = v.convert('hypotheses', lambda: HypothesisSpace.from_labels(hyp_doc))

        prior_label = v.field(doc, 'prior_policy', str, 'altruistic')
        prior = v.convert('prior_policy', lambda: NormPolicy.from_label(prior_label)) if prior_label is not None else None
        if prior is not None and hypotheses is not None:
            v.require(prior in hypotheses, 'prior_policy', f'{prior.label} is not in the hypothesis space {list(hypotheses.labels)}')

        kernel_name = v.field(doc, 'kernel', str, Kernel.EXACT_CURRENCY_MATCH.value)
        kernel = v.convert('kernel', lambda: Kernel(kernel_name)) if kernel_name is not None else None

        params_doc = v.field(doc, 'likelihood_params', dict, {})
        params = v.convert('likelihood_params', lambda: LikelihoodParams.from_dict(params_doc)) if params_doc is not None else None

        backend_doc = v.field(doc, 'backend', (str, dict), 'stub')
        backend, backend_options = 'stub', {}
        if isinstance(backend_doc, str):
            backend = backend_doc
        elif isinstance(backend_doc, dict):
            v.unknown_keys(backend_doc, ('name', 'options'), 'backend.')
            backend = v.field(backend_doc, 'name', str, 'stub', 'backend.') or 'stub'
            backend_options = v.field(backend_doc, 'options', dict, {}, 'backend.') or {}
        v.require(backend in pn.lm.list_backends(), 'backend', f'unknown backend {backend!r}')

        users = sum(m.count for m in group)
        if group and counts.get('user_user_per_epoch'):
            v.require(users >= 2, 'group', 'user-user episodes need at least two users')

    return ScenarioConfig(
        name=name, group=tuple(group), description=description, n_simulations=n_simulations, n_epochs=n_epochs,
        schedule=Schedule(counts['user_user_per_epoch'], counts['assistant_user_per_epoch'],
                          counts['assistant_assistant_per_epoch'], order),
        currencies=currencies, amounts=amounts, test_phase=test_phase, prior_policy=prior, kernel=kernel,
        hypotheses=hypotheses, likelihood_params=params, backend=backend, backend_options=backend_options, seed=seed,
    )


def load_scenario(path: str) -> ScenarioConfig:
    """
    Loads and validates a JSON scenario document (optionally .gz/.bz2 compressed).

    Raises:
        FileNotFoundError: if ``path`` does not exist
        ScenarioValidationError: if the document is malformed or violates the schema
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no scenario file at {path}")
    try:
        doc = pn.io.read_json(path)
    except ValueError as e:
        raise pn.validate.ScenarioValidationError(f"{path} is not well-formed JSON:", [('<root>', str(e))]) from e
    return scenario_from_dict(doc, source=path)


class ScenarioProvider(ABC):
    """A source of named scenarios. Providers are registered as ``pynorms.scenario_provider`` entry points."""

    @abstractmethod
    def get_scenario(self, name: str) -> ScenarioConfig:
        """
        Raises:
            KeyError: If the scenario is not found.
        """

    def list_scenario_names(self) -> Iterable[str]:
        return []


class BuiltinScenarioProvider(ScenarioProvider):
    """The scenarios bundled with pynorms, one JSON document per scenario."""

    def _files(self) -> Dict[str, Any]:
        root = resources.files('pynorms.scenarios').joinpath('data')
        return {p.name[:-len('.json')]: p for p in root.iterdir() if p.name.endswith('.json')}

    def get_scenario(self, name: str) -> ScenarioConfig:
        files = self._files()
        if name not in files:
            raise KeyError(f"unknown scenario {name!r}")
        with files[name].open('r', encoding='utf8') as f:
            return scenario_from_dict(json.load(f), source=f'bundled scenario {name}')

    def list_scenario_names(self) -> Iterable[str]:
        return sorted(self._files())


def _providers() -> Dict[str, ScenarioProvider]:
    providers: Dict[str, ScenarioProvider] = {}
    for name, ep in pn.utils.registered('pynorms.scenario_provider').items():
        providers[name] = ep.load()()
    providers.setdefault('builtin', BuiltinScenarioProvider())
    return providers


def get_scenario(name: str) -> ScenarioConfig:
    """
    Returns a bundled (or provider-registered) scenario. ``name`` may be prefixed by a provider, e.g. ``builtin:mixed_80_20``.

    Raises:
        KeyError: if no provider has the scenario
    """
    providers = _providers()
    if ':' in name:
        provider, _, name = name.partition(':')
        return providers[provider].get_scenario(name)
    for provider in providers.values():
        try:
            return provider.get_scenario(name)
        except KeyError:
            continue
    raise KeyError(f"unknown scenario {name!r}")


def list_scenarios() -> pd.DataFrame:
    """A dataframe describing every available scenario, one row each."""
    rows = []
    for provider_name, provider in _providers().items():
        for name in provider.list_scenario_names():
            cfg = provider.get_scenario(name)
            rows.append({
                'name': name,
                'provider': provider_name,
                'description': cfg.description,
                'group': ', '.join(f'{m.count} {m.policy.label}/{m.manner.value}' for m in cfg.group),
                'n_simulations': cfg.n_simulations,
                'n_epochs': cfg.n_epochs,
                'test_phase': cfg.test_phase is not None,
            })
    return pd.DataFrame(rows, columns=['name', 'provider', 'description', 'group', 'n_simulations', 'n_epochs', 'test_phase'])


def resolve_scenario(ref: str) -> ScenarioConfig:
    """A scenario from a file path if one exists there, else by bundled name."""
    if os.path.exists(ref):
        return load_scenario(ref)
    return get_scenario(ref)
