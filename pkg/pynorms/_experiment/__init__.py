from pynorms._experiment import _stats
from pynorms._experiment._stats import Estimate, label_convergence, label_frame, later_than, mean_ci, per_epoch_table
from pynorms._experiment._simulation import (
    ASSISTANT_ID,
    ASSISTANT_PEER_ID,
    SimulationResult,
    epoch_plan,
    run_simulation,
)
from pynorms._experiment._batch import BatchSummary, run_batch, summarize_frame, summarize_results
from pynorms._experiment._export import export_results, read_json_results, read_results, summarize

__all__ = [
    'Estimate', 'label_convergence', 'label_frame', 'later_than', 'mean_ci', 'per_epoch_table',
    'ASSISTANT_ID', 'ASSISTANT_PEER_ID', 'SimulationResult', 'epoch_plan', 'run_simulation',
    'BatchSummary', 'run_batch', 'summarize_frame', 'summarize_results',
    'export_results', 'read_json_results', 'read_results', 'summarize',
]
