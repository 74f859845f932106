import importlib
import sys
from hashlib import sha256
from importlib.metadata import EntryPoint, entry_points
from typing import Dict, Optional

import numpy as np

import pynorms as pn

# names of the independent random streams owned by each simulation
STREAMS = ('contexts', 'manners', 'sampling')

_PROGRESS_MODULES = {'tqdm': 'tqdm', 'notebook': 'tqdm.notebook', 'auto': 'tqdm.auto'}


def registered(group: str) -> Dict[str, EntryPoint]:
    """
    Plugins installed under the entry-point ``group``, keyed by name. The first registration of a name wins.
    """
    found = entry_points()
    if hasattr(found, 'select'):
        candidates = found.select(group=group)
    else: # python 3.9 returns a dict of groups
        candidates = found.get(group, ()) # type: ignore[attr-defined]
    plugins: Dict[str, EntryPoint] = {}
    for ep in candidates:
        plugins.setdefault(ep.name, ep)
    return plugins


def set_tqdm(kind: Optional[str] = None) -> None:
    """
    Chooses the progress bar shown by ``run_batch(..., verbose=True)``: ``'tqdm'`` for the terminal bar,
    ``'notebook'`` for a Jupyter widget, or ``'auto'`` to let tqdm pick. Colab defaults to the notebook bar.
    """
    if kind is None:
        kind = 'notebook' if 'google.colab' in sys.modules else 'tqdm'
    if kind not in _PROGRESS_MODULES:
        raise ValueError(f"unknown progress bar {kind!r}, expected one of {sorted(_PROGRESS_MODULES)}")
    pn.tqdm = importlib.import_module(_PROGRESS_MODULES[kind]).tqdm


def seeded_streams(seed: int, sim_index: int) -> Dict[str, np.random.Generator]:
    """
    Returns the independent random generators owned by one simulation, keyed by stream name.

    The streams depend only on ``(seed, sim_index)``, so simulation ``i`` is unaffected by any other
    simulation, and two scenarios differing only in e.g. manners draw the same PSRL uniforms.
    """
    children = np.random.SeedSequence((seed, sim_index)).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def text_hash(text: str) -> str:
    """Short stable hash of a directive text, as written to exported records."""
    return sha256(text.encode('utf8')).hexdigest()[:16]
