from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import pynorms as pn
from pynorms.inference import EvidenceSource, Observation, observation_from_trajectory

FIXED_LABEL = "fixed-policy agent"
FLEX_LABEL = "flex-policy agent"

SYSTEM_TEXT = (
    "Your job is to observe agents playing the ultimatum game and extract a principle from their interactions. "
    "In the ultimatum game, the dictator proposes a split of resources, and the responder decides whether to accept "
    "or reject it. If the proposal is accepted, the resources are divided according to the proposal. If the proposal "
    "is rejected, no one receives anything."
)

TASK_TEXT = (
    "In this simulation, the \"fixed-policy agents\" share some principle, which tells them to adhere to the principle "
    "in their interactions while playing the ultimatum game. \"flex-policy agents\", on the other hand, only adhere to "
    "principle that you provide, and have no memory of previous interactions. Your job is to infer the principle shared "
    "between fixed-policy agents by analyzing their behaviors, and then create a principle for \"flex-policy agents\" to "
    "follow so that \"flex-policy agents\" behave exactly the same as the \"fixed-policy agents\". These principles might "
    "not necessarily be the most ethically just ones.\n\n"
    "Note that all of the fixed-policy agents may not have the same principle."
)

FIXED_INTRO = "First, analyze the fixed-policy agents' interactions with each other, shown below."
FLEX_INTRO = "Next, analyze the flex-policy agents' interactions with the fixed-policy agents, shown below."
PREVIOUS_PREFIX = "The flex-policy agents' previous principle is:"

REVISION_TEXT = (
    "If the flex-policy agents behave differently than the fixed agents, revise the previous principle if necessary so "
    "that flex-policy agent behaves exactly like the fixed-policy agents---don't be afraid to push the flex-policy agent "
    "TO THE EXTREME, and keep this revised principle short."
)

GENERALITY_TEXT = (
    "It is of the utmost importance that your created flex-policy agent's principle encompasses both dictator and "
    "responder roles without explicitly mentioning either. The principle should be as GENERAL as possible WITHOUT "
    "mentioning anything regarding the ultimatum game, proposals, specific amounts and currencies, or making and "
    "receiving offers. Rather, it should capture the underlying principles that the agents have, which tells them how "
    "to treat others as well as themselves outside of the context of the ultimatum game, regardless of what they are "
    "splitting or how much they are splitting."
)


@dataclass(frozen=True)
class Interaction:
    """A completed episode, with which seats the assistant occupied."""
    trajectory: 'pn.game.Trajectory'
    proposer_is_assistant: bool = False
    responder_is_assistant: bool = False

    @property
    def source(self) -> EvidenceSource:
        if self.proposer_is_assistant and self.responder_is_assistant:
            return EvidenceSource.ASSISTANT_ASSISTANT
        if self.proposer_is_assistant or self.responder_is_assistant:
            return EvidenceSource.ASSISTANT_USER
        return EvidenceSource.USER_USER

    def observation(self) -> Optional[Observation]:
        """The evidence this episode gives about the users' norm: the user's proposal, if a user proposed."""
        if self.proposer_is_assistant:
            return None
        return observation_from_trajectory(self.trajectory, self.source)


def render_interaction(interaction: Interaction) -> str:
    proposer = FLEX_LABEL if interaction.proposer_is_assistant else FIXED_LABEL
    responder = FLEX_LABEL if interaction.responder_is_assistant else FIXED_LABEL
    proposal = interaction.trajectory.steps[0].utterance.raw_text
    decision = interaction.trajectory.decision.value
    return f"Start of interaction {proposer}'s response: {proposal} {responder}'s response: {decision}. End of interaction."


@dataclass(frozen=True)
class MetaPrompt:
    """
    The meta-level prompt. Sections render in a fixed order: system text, task instructions, fixed-agent
    interactions, flex-agent interactions, previous principle, revision instruction.

    ``observations`` carries the same history in structured form for backends that do not read prose.
    """
    meta_principle_text: str
    fixed_agent_log: str
    flex_agent_log: str
    previous_directive: str
    task_text: str = TASK_TEXT
    revision_text: str = REVISION_TEXT
    generality_text: str = GENERALITY_TEXT
    observations: Tuple[Observation, ...] = field(default=(), repr=False)

    @property
    def system(self) -> str:
        return self.meta_principle_text

    @property
    def human(self) -> str:
        sections = [
            self.task_text,
            FIXED_INTRO,
            self.fixed_agent_log,
            FLEX_INTRO,
            self.flex_agent_log,
            f"{PREVIOUS_PREFIX} {self.previous_directive}",
            self.revision_text,
            self.generality_text,
        ]
        return "\n\n".join(sections)

    @property
    def text(self) -> str:
        return f"System: {self.system}\n\nHuman: {self.human}"

    def __str__(self):
        return self.text


def build_meta_prompt(history: Iterable[Interaction],
                      previous_directive: str,
                      *,
                      meta_principle_text: str = SYSTEM_TEXT,
                      task_text: str = TASK_TEXT,
                      revision_text: str = REVISION_TEXT,
                      generality_text: str = GENERALITY_TEXT) -> MetaPrompt:
    """
    Assembles the meta prompt from every completed interaction so far. Users are labelled fixed-policy agents and
    the assistant flex-policy agent; interactions without the assistant form the fixed-agent log.
    """
    fixed: List[str] = []
    flex: List[str] = []
    observations: List[Observation] = []
    for interaction in history:
        has_assistant = interaction.proposer_is_assistant or interaction.responder_is_assistant
        (flex if has_assistant else fixed).append(render_interaction(interaction))
        obs = interaction.observation()
        if obs is not None:
            observations.append(obs)
    return MetaPrompt(
        meta_principle_text,
        "\n".join(fixed),
        "\n".join(flex),
        previous_directive,
        task_text,
        revision_text,
        generality_text,
        tuple(observations),
    )


def assistant_prompt(directive_text: str, state: 'pn.game.GameState', ctx: 'pn.game.Context') -> str:
    """The prompt for one in-game action: the directive and the current game state, never the history."""
    lines: Sequence[str]
    if state.phase is pn.game.Phase.AWAITING_PROPOSAL:
        form = pn.grammar.PROPOSAL_TEMPLATE.format(
            total=ctx.total_amount, currency=ctx.currency, proposer_share='X', responder_share='Y')
        lines = [
            f"Your principle: {directive_text}",
            f"You are splitting {ctx.total_amount} {ctx.currency} with another agent, and you decide the split.",
            f"Reply with exactly one sentence of the form: {form}",
        ]
    else:
        offer = state.offer
        proposal = pn.grammar.PROPOSAL_TEMPLATE.format(
            total=offer.total, currency=ctx.currency,
            proposer_share=offer.proposer_share, responder_share=offer.responder_share)
        lines = [
            f"Your principle: {directive_text}",
            f"Another agent proposes: {proposal}",
            "Reply with exactly one word: accept or reject.",
        ]
    return "\n".join(lines)
