import json
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

import pynorms as pn
from pynorms._experiment._batch import BatchSummary, summarize_frame, summarize_results
from pynorms._experiment._simulation import SimulationResult

RESULTS_CSV = 'results.csv'
RESULTS_JSON = 'results.json'
PLOT_DATA = 'plot_data.csv'
FORMATS = ('csv', 'json')


def _frame(results: Sequence[SimulationResult], extra: bool = False) -> pd.DataFrame:
    frames = [r.frame(extra=extra) for r in results]
    return pd.concat(frames, ignore_index=True) if frames else pn.model.records_frame([], extra=extra)


def export_results(results: Sequence[SimulationResult],
                   format: str,
                   path: str,
                   summary: Optional[BatchSummary] = None) -> List[str]:
    """
    Writes a batch to the directory ``path``. Every file is written atomically.

     - ``csv``: ``results.csv`` with one row per episode in the canonical columns, and ``plot_data.csv``
       with the per-epoch mean and 95% interval of the user and assistant series
     - ``json``: ``results.json`` holding the summary and every simulation result

    Records of incomplete simulations are written too.

    Returns:
        the paths written

    Raises:
        ValueError: if ``results`` is empty or the format is unknown
        PermissionError: if ``path`` cannot be written
    """
    if len(results) == 0:
        raise ValueError("no results to export")
    if format not in FORMATS:
        raise ValueError(f"unknown export format {format!r}, expected one of {FORMATS}")
    pn.io.ensure_writable_dir(path)
    if summary is None:
        summary = summarize_results(results)
    written = []
    if format == 'csv':
        target = os.path.join(path, RESULTS_CSV)
        with pn.io.atomic_writer(target) as f:
            _frame(results).to_csv(f, index=False)
        written.append(target)
        target = os.path.join(path, PLOT_DATA)
        with pn.io.atomic_writer(target) as f:
            summary.table()[['series', 'epoch', 'mean', 'ci_low', 'ci_high']].to_csv(f, index=False)
        written.append(target)
    else:
        target = os.path.join(path, RESULTS_JSON)
        doc = {'summary': summary.to_dict(), 'simulations': [r.to_dict() for r in results]}
        with pn.io.atomic_writer(target) as f:
            json.dump(doc, f, indent=1)
        written.append(target)
    return written


def _locate(path: str) -> str:
    if os.path.isdir(path):
        for name in (RESULTS_JSON, RESULTS_CSV):
            candidate = os.path.join(path, name)
            if os.path.exists(candidate):
                return candidate
        raise FileNotFoundError(f"no {RESULTS_CSV} or {RESULTS_JSON} in {path}")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no results at {path}")
    return path


def _is_json(path: str) -> bool:
    for ext in ('.gz', '.bz2'):
        if path.endswith(ext):
            path = path[:-len(ext)]
    return path.endswith('.json')


def read_json_results(path: str) -> Tuple[BatchSummary, List[SimulationResult]]:
    doc = pn.io.read_json(path)
    return BatchSummary.from_dict(doc['summary']), [SimulationResult.from_dict(d) for d in doc['simulations']]


def read_results(path: str) -> pd.DataFrame:
    """
    Reads the episode records of an export: a ``results.csv``/``results.json`` file (optionally .gz/.bz2
    compressed) or a directory holding one.

    Raises:
        FileNotFoundError: if there is nothing to read
        ResultsValidationError: if a CSV lacks the canonical columns
    """
    path = _locate(path)
    if _is_json(path):
        _, results = read_json_results(path)
        return _frame(results, extra=True)
    df = pd.read_csv(path, dtype={'directive_hash': str, 'currency': str}, keep_default_na=False)
    pn.validate.results_frame(df)
    return pn.model.coerce_dataframe_types(df)


def summarize(path: str) -> BatchSummary:
    """
    Recomputes the batch summary from persisted records. Converged-policy labels are taken from ``results.json``
    when it sits next to the CSV, since the records alone do not carry the final directive.
    """
    located = _locate(path)
    policies: Dict[int, Optional[str]] = {}
    failures: List[Dict[str, Any]] = []
    scenario = ''
    json_path = located if _is_json(located) else os.path.join(os.path.dirname(located), RESULTS_JSON)
    if os.path.exists(json_path):
        stored, _ = read_json_results(json_path)
        policies, failures, scenario = stored.converged_policies, stored.failures, stored.scenario
    csv_path = os.path.join(os.path.dirname(located), RESULTS_CSV)
    df = read_results(csv_path if _is_json(located) and os.path.exists(csv_path) else located)
    failed = {int(f['sim_id']) for f in failures}
    df = df[~df.sim_id.isin(failed)]
    return summarize_frame(df[pn.model.RESULT_COLUMNS], scenario, converged_policies=policies, failures=failures)
