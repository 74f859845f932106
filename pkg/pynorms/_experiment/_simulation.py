from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

import pynorms as pn
from pynorms.agents import NormPolicy
from pynorms.game import Context, ParseFailureError, Trajectory
from pynorms.inference import (
    Directive, DirectiveStore, HypothesisSpace, Observation, PosteriorBelief, resolve_directive, update_posterior,
)
from pynorms.lm import AssistantSeat, Backend, Diagnostics, EpochFailureError, Interaction, StubBackend

ASSISTANT_ID = 'assistant'
# the second seat of assistant-assistant episodes, acting under the same directive
ASSISTANT_PEER_ID = 'assistant-peer'

USER_USER = 'user_user'
ASSISTANT_ASSISTANT = 'assistant_assistant'
ASSISTANT_PROPOSER = 'assistant_proposer'
ASSISTANT_RESPONDER = 'assistant_responder'


@dataclass
class SimulationResult:
    """
    Everything one simulation produced: one record per episode, the directive in force before each epoch
    (``directives[0]`` is drawn before epoch 1; the last one is the converged directive), the stub's final
    posterior, and the simulation's diagnostics.
    """
    scenario: str
    sim_id: int
    seed: int
    records: List['pn.model.Record'] = field(default_factory=list)
    directives: List[Directive] = field(default_factory=list)
    posterior: Optional[PosteriorBelief] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    epochs_completed: int = 0
    complete: bool = False

    def frame(self, extra: bool = False) -> pd.DataFrame:
        return pn.model.records_frame(self.records, extra=extra)

    @property
    def converged_directive(self) -> Optional[Directive]:
        return self.directives[-1] if self.complete and self.directives else None

    @property
    def converged_policy(self) -> Optional[NormPolicy]:
        directive = self.converged_directive
        return None if directive is None else directive.structured

    def user_series(self) -> Dict[int, float]:
        return pn._experiment._stats.epoch_means(pn.model.user_series(self.frame()))

    def assistant_series(self) -> Dict[int, float]:
        return pn._experiment._stats.epoch_means(pn.model.assistant_series(self.frame()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scenario': self.scenario,
            'sim_id': self.sim_id,
            'seed': self.seed,
            'complete': self.complete,
            'epochs_completed': self.epochs_completed,
            'records': [dict(r) for r in self.records],
            'directives': [_directive_to_dict(d) for d in self.directives],
            'posterior': None if self.posterior is None else {
                'hypotheses': list(self.posterior.space.labels),
                'masses': [float(m) for m in self.posterior.masses],
                'history_size': self.posterior.history_size,
            },
            'diagnostics': self.diagnostics.as_dict(),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'SimulationResult':
        posterior = None
        if d.get('posterior') is not None:
            p = d['posterior']
            posterior = PosteriorBelief.from_masses(HypothesisSpace.from_labels(p['hypotheses']), p['masses'], p['history_size'])
        return cls(
            scenario=d['scenario'],
            sim_id=int(d['sim_id']),
            seed=int(d['seed']),
            records=[dict(r) for r in d['records']],
            directives=[_directive_from_dict(x) for x in d['directives']],
            posterior=posterior,
            diagnostics=Diagnostics(**d['diagnostics']),
            epochs_completed=int(d['epochs_completed']),
            complete=bool(d['complete']),
        )


def _directive_to_dict(d: Directive) -> Dict[str, Any]:
    return {
        'text': d.text,
        'structured': None if d.structured is None else d.structured.label,
        'trained_currencies': sorted(d.trained_currencies),
        'trained_amounts': None if d.trained_amounts is None else list(d.trained_amounts),
    }


def _directive_from_dict(d: Dict[str, Any]) -> Directive:
    structured = None if d['structured'] is None else NormPolicy.from_label(d['structured'])
    amounts = None if d['trained_amounts'] is None else (int(d['trained_amounts'][0]), int(d['trained_amounts'][1]))
    return Directive(d['text'], structured, frozenset(d['trained_currencies']), amounts)


def epoch_plan(schedule: 'pn.scenarios.Schedule', rng: np.random.Generator) -> List[str]:
    """
    The episode kinds of one epoch in play order: user-user, then assistant-assistant, then assistant-user
    alternating assistant-as-proposer and assistant-as-responder. Interleaved schedules are shuffled with ``rng``.
    """
    plan = [USER_USER] * schedule.user_user_per_epoch + [ASSISTANT_ASSISTANT] * schedule.assistant_assistant_per_epoch
    plan += [ASSISTANT_PROPOSER if i % 2 == 0 else ASSISTANT_RESPONDER for i in range(schedule.assistant_user_per_epoch)]
    if schedule.episode_order == 'interleaved':
        plan = [plan[int(i)] for i in rng.permutation(len(plan))]
    return plan


def _record(sim_id: int, epoch: int, phase: str, kind: str, traj: Trajectory, directive: Optional[Directive],
            source: str) -> 'pn.model.Record':
    if kind in (ASSISTANT_PROPOSER, ASSISTANT_ASSISTANT):
        agent_kind, role = 'assistant', 'proposer'
    elif kind == ASSISTANT_RESPONDER:
        agent_kind, role = 'assistant', 'responder'
    else:
        agent_kind, role = 'user', 'proposer'
    with_assistant = directive is not None and kind != USER_USER
    return {
        'sim_id': sim_id,
        'epoch': epoch,
        'phase': phase,
        'agent_kind': agent_kind,
        'role': role,
        'currency': traj.context.currency,
        'total_amount': traj.context.total_amount,
        'offered_share_pct': pn.game.offered_share_pct(traj.offer),
        'decision': traj.decision.value,
        'directive_hash': pn.utils.text_hash(directive.text) if with_assistant else '', # type: ignore[union-attr]
        'episode_id': traj.context.episode_id,
        'source': source,
        'directive_text': directive.text if with_assistant else '', # type: ignore[union-attr]
        'sampled_policy': directive.structured.label if with_assistant and directive.structured is not None else '', # type: ignore[union-attr]
    }


class _Simulation:
    def __init__(self, cfg: 'pn.ScenarioConfig', sim_index: int, backend: Backend):
        self.cfg = cfg
        self.backend = backend
        self.streams = pn.utils.seeded_streams(cfg.seed, sim_index)
        self.users = {u.agent_id: u for u in cfg.users()}
        self.user_ids = list(self.users)
        self.history: List[Interaction] = []
        self.observations: List[Observation] = []
        self.result = SimulationResult(cfg.name, sim_index, cfg.seed)

    @property
    def diagnostics(self) -> Diagnostics:
        return self.result.diagnostics

    def _draw_user(self) -> str:
        return self.user_ids[int(self.streams['contexts'].integers(len(self.user_ids)))]

    def _context(self, kind: str, epoch: int, episode_id: str, **kwargs) -> Context:
        rng = self.streams['contexts']
        if kind == USER_USER:
            pairing = None
        elif kind == ASSISTANT_ASSISTANT:
            pairing = (ASSISTANT_ID, ASSISTANT_PEER_ID)
        elif kind == ASSISTANT_PROPOSER:
            pairing = (ASSISTANT_ID, self._draw_user())
        else:
            pairing = (self._draw_user(), ASSISTANT_ID)
        return pn.game.sample_context(self.cfg, rng, pairing, epoch_index=epoch, episode_id=episode_id, **kwargs)

    def _seat(self, agent_id: str, directive: Directive):
        if agent_id in (ASSISTANT_ID, ASSISTANT_PEER_ID):
            return AssistantSeat(agent_id, self.backend, directive, self.diagnostics)
        return self.users[agent_id]

    def _play(self, ctx: Context, directive: Directive) -> Optional[Trajectory]:
        try:
            return pn.game.run_episode(
                self._seat(ctx.proposer_agent, directive), self._seat(ctx.responder_agent, directive),
                ctx, self.streams['manners'])
        except ParseFailureError as e:
            self.diagnostics.parse_failures += 1
            self.diagnostics.excluded_episodes += 1
            self.diagnostics.messages.append(f"{ctx.episode_id}: {e} ({e.raw_text!r})")
            pn.game.warn_parse_failure(e, ctx)
            return None

    def _directive(self, previous: str) -> Directive:
        prompt = pn.lm.build_meta_prompt(self.history, previous)
        return pn.lm.generate_directive(self.backend, prompt, rng=self.streams['sampling'], diagnostics=self.diagnostics)

    def _train_epoch(self, epoch: int, directive: Directive) -> None:
        sim_id = self.result.sim_id
        for n, kind in enumerate(epoch_plan(self.cfg.schedule, self.streams['contexts'])):
            ctx = self._context(kind, epoch, f's{sim_id}-e{epoch}-{n}')
            traj = self._play(ctx, directive)
            if traj is None:
                continue
            interaction = Interaction(traj, ctx.proposer_agent == ASSISTANT_ID,
                                      ctx.responder_agent in (ASSISTANT_ID, ASSISTANT_PEER_ID))
            self.history.append(interaction)
            obs = interaction.observation()
            if obs is not None:
                self.observations.append(obs)
            self.result.records.append(_record(sim_id, epoch, 'train', kind, traj, directive, interaction.source.value))

    def _test_phase(self, directive: Directive) -> None:
        test = self.cfg.test_phase
        if test is None:
            return
        store = DirectiveStore(directive, self.cfg.prior_policy, self.cfg.kernel)
        epoch = self.cfg.n_epochs + 1
        sim_id = self.result.sim_id
        n = 0
        for currency in self.cfg.test_currencies():
            amounts = test.amounts if (test.amounts is not None and currency in test.currencies) else self.cfg.amounts
            for _ in range(test.n_test_episodes):
                ctx = self._context(ASSISTANT_PROPOSER, epoch, f's{sim_id}-test-{n}', currencies=[currency], amounts=amounts)
                n += 1
                governing = resolve_directive(store, ctx)
                traj = self._play(ctx, governing)
                if traj is not None:
                    self.result.records.append(
                        _record(sim_id, epoch, 'test', ASSISTANT_PROPOSER, traj, governing,
                                pn.inference.EvidenceSource.ASSISTANT_USER.value))

    def run(self) -> SimulationResult:
        result = self.result
        try:
            directive = self._directive(pn.inference.directive_text(self.cfg.prior_policy))
            result.directives.append(directive)
            for epoch in range(1, self.cfg.n_epochs + 1):
                self._train_epoch(epoch, directive)
                directive = self._directive(directive.text)
                result.directives.append(directive)
                result.epochs_completed = epoch
            self._test_phase(directive)
        except EpochFailureError as e:
            result.posterior = self._posterior()
            e.partial = result
            raise
        result.posterior = self._posterior()
        result.complete = True
        return result

    def _posterior(self) -> Optional[PosteriorBelief]:
        if isinstance(self.backend, StubBackend):
            return update_posterior(self.backend.prior, self.observations, self.backend.params)
        return None


def run_simulation(cfg: 'pn.ScenarioConfig', sim_index: int, backend: Optional[Backend] = None) -> SimulationResult:
    """
    Runs one seeded simulation: an initial directive, then for every epoch the scheduled episodes under the
    current directive followed by one directive revision, then the optional test phase under the converged
    directive. On the stub backend the result depends only on ``(cfg, sim_index)``.

    Raises:
        EpochFailureError: if the backend gave up; ``partial`` holds the result up to the failure
    """
    if sim_index < 0:
        raise ValueError(f"sim_index must be non-negative, got {sim_index}")
    if backend is None:
        backend = cfg.make_backend()
    return _Simulation(cfg, sim_index, backend).run()
