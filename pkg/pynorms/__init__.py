__version__ = '0.3.0'
# NB: version number must be the first line and must use single quotes

from typing import Any

from pynorms import utils, model, io, validate
from pynorms import grammar
from pynorms import game
from pynorms.game import Context, Offer, Decision, GameState, Phase, Trajectory, CmdpSpec
from pynorms import agents
from pynorms.agents import NormPolicy, PolicyKind, Manner, UserAgent
from pynorms import inference
from pynorms.inference import PosteriorBelief, HypothesisSpace, LikelihoodParams, Directive, DirectiveStore, Kernel
from pynorms import lm
from pynorms import scenarios
from pynorms.scenarios import ScenarioConfig, load_scenario, get_scenario, list_scenarios
from pynorms import _experiment
from pynorms._experiment import (
    SimulationResult, BatchSummary, run_simulation, run_batch, label_convergence,
    export_results, read_results, summarize,
)
from pynorms import testing

# set once _() runs, defined here for type checking
tqdm: Any

__all__ = [
    'utils', 'model', 'io', 'validate', 'grammar', 'game', 'agents', 'inference', 'lm', 'scenarios', 'testing',
    'Context', 'Offer', 'Decision', 'GameState', 'Phase', 'Trajectory', 'CmdpSpec',
    'NormPolicy', 'PolicyKind', 'Manner', 'UserAgent',
    'PosteriorBelief', 'HypothesisSpace', 'LikelihoodParams', 'Directive', 'DirectiveStore', 'Kernel',
    'ScenarioConfig', 'load_scenario', 'get_scenario', 'list_scenarios',
    'SimulationResult', 'BatchSummary', 'run_simulation', 'run_batch', 'label_convergence',
    'export_results', 'read_results', 'summarize',
    'tqdm',
]


# Additional setup performed in a function to avoid polluting the namespace with other imports like platform
def _():
    import platform
    import sys

    if sys.version_info < (3, 9):
        raise RuntimeError("pynorms requires Python 3.9 or newer, you currently have %s" % platform.python_version())

    # guess the environment and set an appropriate tqdm as pn.tqdm
    utils.set_tqdm()
_()
