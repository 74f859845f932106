import bz2
import gzip
import json
import os
import tempfile
from contextlib import contextmanager
from typing import IO, Any, Callable, Dict, Iterator

_OPENERS: Dict[str, Callable[..., IO]] = {'.gz': gzip.open, '.bz2': bz2.open}


def read_json(path: str) -> Any:
    """Parses a JSON document, decompressing ``.gz`` and ``.bz2`` files by their extension."""
    opener = _OPENERS.get(os.path.splitext(path)[1], open)
    with opener(path, 'rt', encoding='utf8') as f:
        return json.load(f)


@contextmanager
def atomic_writer(path: str) -> Iterator[IO[str]]:
    """
    Yields a text stream whose contents replace ``path`` only once the block completes. If the block raises,
    ``path`` keeps its previous contents and the partial file is discarded.

    Example::

            with pn.io.atomic_writer("records.csv") as f:
                f.write("sim_id,epoch\\n")
    """
    directory = os.path.dirname(path) or '.'
    fd, staging = tempfile.mkstemp(prefix=f'.{os.path.basename(path)}.', suffix='.part', dir=directory)
    try:
        with os.fdopen(fd, 'wt', encoding='utf8') as f:
            yield f
        os.chmod(staging, 0o644)
        os.replace(staging, path)
    except BaseException:
        if os.path.exists(staging):
            os.remove(staging)
        raise


def ensure_writable_dir(path: str) -> str:
    """Creates ``path`` if needed and checks that files can be written there."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise PermissionError(f"cannot create output directory {path!r}") from e
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path!r} is not writable")
    return path
