from typing import Dict, Iterable, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.stats

import pynorms as pn

Z_95 = 1.96
DEFAULT_TOLERANCE = 5.0


class Estimate(NamedTuple):
    """A mean over simulations with its 95% interval; the interval is None with fewer than two samples."""
    mean: float
    ci_low: Optional[float]
    ci_high: Optional[float]
    n: int


def mean_ci(values: Iterable[float]) -> Estimate:
    """mean +- 1.96 standard errors of the mean."""
    arr = np.asarray([v for v in values if v is not None and not np.isnan(v)], dtype=float)
    if len(arr) == 0:
        return Estimate(float('nan'), None, None, 0)
    mean = float(np.mean(arr))
    if len(arr) < 2:
        return Estimate(mean, None, None, 1)
    half = Z_95 * float(scipy.stats.sem(arr))
    return Estimate(mean, mean - half, mean + half, len(arr))


def epoch_means(df: pd.DataFrame) -> Dict[int, float]:
    """Mean offered share per epoch of one simulation's rows."""
    if len(df) == 0:
        return {}
    return {int(k): float(v) for k, v in df.groupby('epoch')['offered_share_pct'].mean().items()}


def per_epoch_table(df: pd.DataFrame) -> pd.DataFrame:
    """
    Per-epoch statistics across simulations, separately for the user and assistant series.

    Each simulation first contributes its own per-epoch mean; the table then holds the mean and 95% interval
    of those means, with columns ``series, epoch, mean, ci_low, ci_high, n``.
    """
    rows = []
    for series, select in (('user', pn.model.user_series), ('assistant', pn.model.assistant_series)):
        part = select(df)
        if len(part) == 0:
            continue
        per_sim = part.groupby(['epoch', 'sim_id'])['offered_share_pct'].mean()
        for epoch, values in per_sim.groupby(level='epoch'):
            est = mean_ci(values.to_numpy())
            rows.append({'series': series, 'epoch': int(epoch), 'mean': est.mean,
                         'ci_low': est.ci_low, 'ci_high': est.ci_high, 'n': est.n})
    return pd.DataFrame(rows, columns=['series', 'epoch', 'mean', 'ci_low', 'ci_high', 'n'])


def convergence_epoch(assistant: Dict[int, float], reference: float, tolerance: float = DEFAULT_TOLERANCE) -> Optional[int]:
    """
    First epoch from which every later assistant epoch mean lies within ``tolerance`` points of ``reference``.
    Epochs missing from ``assistant`` are skipped.
    """
    epochs = sorted(assistant)
    found: Optional[int] = None
    for epoch in epochs:
        if abs(assistant[epoch] - reference) <= tolerance:
            if found is None:
                found = epoch
        else:
            found = None
    return found


def label_convergence(result: 'pn.SimulationResult',
                      threshold_epochs: Optional[int] = None,
                      *,
                      tolerance: float = DEFAULT_TOLERANCE) -> Tuple[bool, Optional[int]]:
    """
    Labels one simulation's convergence: the first training epoch after which the assistant's offered share stays
    within ``tolerance`` percentage points of the users' mean for all remaining epochs.

    The users' mean is taken over every training epoch of the simulation. A convergence epoch later than
    ``threshold_epochs`` (default: every training epoch counts) is reported as not converged.

    Returns:
        ``(converged, epoch)``; ``(False, None)`` when the run never converges
    """
    return label_frame(result.frame(), threshold_epochs, tolerance=tolerance)


def label_frame(df: pd.DataFrame,
                threshold_epochs: Optional[int] = None,
                *,
                tolerance: float = DEFAULT_TOLERANCE) -> Tuple[bool, Optional[int]]:
    """:func:`label_convergence` over the records of a single simulation."""
    users = pn.model.user_series(df)
    assistant = pn.model.assistant_series(df)
    if len(users) == 0 or len(assistant) == 0:
        return (False, None)
    epoch = convergence_epoch(epoch_means(assistant), float(users['offered_share_pct'].mean()), tolerance)
    if epoch is None or (threshold_epochs is not None and epoch > threshold_epochs):
        return (False, None)
    return (True, epoch)


def later_than(a: Optional[int], b: Optional[int]) -> bool:
    """Whether convergence epoch ``a`` comes strictly after ``b``; never converging is later than any epoch."""
    if a is None:
        return b is not None
    if b is None:
        return False
    return a > b
