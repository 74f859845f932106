from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
from joblib import Parallel, delayed

import pynorms as pn
from pynorms._experiment._simulation import SimulationResult, run_simulation
from pynorms._experiment._stats import label_frame, per_epoch_table
from pynorms.lm import Backend, EpochFailureError

UNSTRUCTURED = 'unstructured'


@dataclass
class BatchSummary:
    """
    Statistics over the completed simulations of a batch.

    Attributes:
        epochs: one row per (series, epoch) with the mean offered share across simulations and its 95% interval
        converged_policies: sim_id -> label of the converged directive's norm (``"unstructured"`` if it has none)
        convergence_epochs: sim_id -> first converged epoch, or None
        failures: ``{"sim_id", "error"}`` for every simulation that did not complete
    """
    scenario: str
    n_simulations: int
    n_completed: int
    epochs: List[Dict[str, Any]] = field(default_factory=list)
    converged_policies: Dict[int, Optional[str]] = field(default_factory=dict)
    convergence_epochs: Dict[int, Optional[int]] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(self.epochs, columns=['series', 'epoch', 'mean', 'ci_low', 'ci_high', 'n'])

    def series(self, name: str) -> pd.DataFrame:
        """Per-epoch rows of the ``"user"`` or ``"assistant"`` series."""
        df = self.table()
        return df[df.series == name].reset_index(drop=True)

    def means(self, name: str) -> Dict[int, float]:
        return {int(r.epoch): float(r.mean) for r in self.series(name).itertuples()}

    @property
    def policy_distribution(self) -> Dict[str, float]:
        """Fraction of completed runs converging to each norm."""
        if not self.converged_policies:
            return {}
        counts: Dict[str, int] = {}
        for label in self.converged_policies.values():
            key = label if label is not None else UNSTRUCTURED
            counts[key] = counts.get(key, 0) + 1
        return {k: v / len(self.converged_policies) for k, v in sorted(counts.items())}

    def fraction(self, label: str) -> float:
        return self.policy_distribution.get(label, 0.0)

    @property
    def converged_fraction(self) -> float:
        if not self.convergence_epochs:
            return 0.0
        return sum(e is not None for e in self.convergence_epochs.values()) / len(self.convergence_epochs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scenario': self.scenario,
            'n_simulations': self.n_simulations,
            'n_completed': self.n_completed,
            'epochs': [dict(r) for r in self.epochs],
            'converged_policies': {str(k): v for k, v in self.converged_policies.items()},
            'convergence_epochs': {str(k): v for k, v in self.convergence_epochs.items()},
            'failures': [dict(f) for f in self.failures],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'BatchSummary':
        return cls(
            scenario=d['scenario'],
            n_simulations=int(d['n_simulations']),
            n_completed=int(d['n_completed']),
            epochs=[dict(r) for r in d['epochs']],
            converged_policies={int(k): v for k, v in d['converged_policies'].items()},
            convergence_epochs={int(k): (None if v is None else int(v)) for k, v in d['convergence_epochs'].items()},
            failures=[dict(f) for f in d['failures']],
        )


def _none_for_nan(v: Any) -> Any:
    return None if v is None or v != v else v


def summarize_frame(df: pd.DataFrame,
                    scenario: str = '',
                    *,
                    n_simulations: Optional[int] = None,
                    converged_policies: Optional[Dict[int, Optional[str]]] = None,
                    failures: Sequence[Dict[str, Any]] = ()) -> BatchSummary:
    """
    Builds a summary from episode records of completed simulations. Converged-policy labels cannot be recovered
    from the records alone, so they are passed in when known.
    """
    pn.validate.results_frame(df)
    table = per_epoch_table(df)
    epochs = [{k: _none_for_nan(v) if k in ('ci_low', 'ci_high') else v for k, v in row.items()}
              for row in table.to_dict('records')]
    for row in epochs:
        row['epoch'] = int(row['epoch'])
        row['n'] = int(row['n'])
        row['mean'] = float(row['mean'])
    sim_ids = sorted(int(s) for s in df.sim_id.unique())
    convergence = {s: label_frame(df[df.sim_id == s])[1] for s in sim_ids}
    return BatchSummary(
        scenario=scenario,
        n_simulations=n_simulations if n_simulations is not None else len(sim_ids) + len(failures),
        n_completed=len(sim_ids),
        epochs=epochs,
        converged_policies=dict(converged_policies or {}),
        convergence_epochs=convergence,
        failures=list(failures),
    )


def summarize_results(results: Iterable[SimulationResult], scenario: str = '', n_simulations: Optional[int] = None) -> BatchSummary:
    """The single-threaded reduce over simulation results; incomplete results are counted as failures."""
    results = list(results)
    completed = [r for r in results if r.complete]
    failures = [{'sim_id': r.sim_id, 'error': '; '.join(r.diagnostics.messages[-1:]) or 'incomplete'}
                for r in results if not r.complete]
    frames = [r.frame() for r in completed]
    df = pd.concat(frames, ignore_index=True) if frames else pn.model.records_frame([])
    policies = {}
    for r in completed:
        policy = r.converged_policy
        policies[r.sim_id] = policy.label if policy is not None else None
    return summarize_frame(df, scenario or (results[0].scenario if results else ''),
                           n_simulations=n_simulations if n_simulations is not None else len(results),
                           converged_policies=policies, failures=failures)


def _run_one(cfg: 'pn.ScenarioConfig', sim_index: int, backend: Optional[Backend]) -> SimulationResult:
    try:
        return run_simulation(cfg, sim_index, backend)
    except EpochFailureError as e:
        partial = e.partial if isinstance(e.partial, SimulationResult) else SimulationResult(cfg.name, sim_index, cfg.seed)
        partial.diagnostics.messages.append(str(e))
        return partial


def run_batch(cfg: 'pn.ScenarioConfig',
              *,
              workers: int = 1,
              verbose: bool = False,
              backend: Optional[Union[str, Backend]] = None,
              **overrides) -> Tuple[BatchSummary, List[SimulationResult]]:
    """
    Runs ``cfg.n_simulations`` independent simulations and aggregates them.

    Args:
        cfg: the scenario
        workers: number of joblib workers; 1 runs sequentially. Results do not depend on it.
        verbose: whether to display a progress bar
        backend: a backend name overriding the scenario's, or a ready backend instance
        overrides: scenario fields to override, e.g. ``n_simulations=100, n_epochs=5, seed=3``

    Returns:
        the summary over completed runs, and every result in simulation order (failed runs are incomplete)
    """
    instance: Optional[Backend] = None
    if isinstance(backend, Backend):
        instance = backend
    elif backend is not None:
        overrides['backend'] = backend
    if overrides:
        cfg = cfg.replace(**overrides)
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if instance is None:
        instance = cfg.make_backend()

    indices = range(cfg.n_simulations)
    results: List[SimulationResult]
    if workers == 1:
        it: Iterable[int] = indices
        if verbose:
            it = pn.tqdm(it, desc=cfg.name, unit='sim')
        results = [_run_one(cfg, i, instance) for i in it]
    else:
        outputs = Parallel(n_jobs=workers, return_as='generator')(delayed(_run_one)(cfg, i, instance) for i in indices)
        if verbose:
            outputs = pn.tqdm(outputs, total=cfg.n_simulations, desc=cfg.name, unit='sim')
        results = list(outputs)
    return summarize_results(results, cfg.name, cfg.n_simulations), results
