from typing import Any, Dict, Iterable, List

import numpy as np
import pandas as pd

# This file has useful methods for using the pynorms record datamodel: one row per episode.

Record = Dict[str, Any]

RESULT_COLUMNS = [
    'sim_id',
    'epoch',
    'phase',
    'agent_kind',
    'role',
    'currency',
    'total_amount',
    'offered_share_pct',
    'decision',
    'directive_hash',
]

# the richer JSON export keeps these next to the result columns
EXTRA_COLUMNS = ['episode_id', 'source', 'directive_text', 'sampled_policy']

PHASES = ('train', 'test')
AGENT_KINDS = ('user', 'assistant')
ROLES = ('proposer', 'responder')


def coerce_dataframe_types(dataframe: pd.DataFrame) -> pd.DataFrame:
    """
    Changes data types to match standard values. The dataframe need not have all the columns,
    but if they are present, will cast the values to the proper types.
     - ``sim_id``, ``epoch``, ``total_amount`` -> ``int``
     - ``offered_share_pct`` -> ``float``
     - ``currency``, ``phase``, ``agent_kind``, ``role``, ``decision``, ``directive_hash`` -> ``str``

    Args:
        dataframe: a Pandas dataframe

    Returns:
        dataframe with data types properly set
    """
    TYPE_MAP = { # python type -> acceptable numpy types
        str: (np.dtype('O'),),
        float: (np.dtype('float32'), np.dtype('float64')),
        int: (np.dtype('int32'), np.dtype('int64')),
    }
    COLUMN_MAP = { # column name -> python type
        'sim_id': int,
        'epoch': int,
        'total_amount': int,
        'offered_share_pct': float,
        'phase': str,
        'agent_kind': str,
        'role': str,
        'currency': str,
        'decision': str,
        'directive_hash': str,
    }
    for column, dtype in COLUMN_MAP.items():
        if column in dataframe.columns and dataframe[column].dtype not in TYPE_MAP[dtype]:
            if dtype is str:
                dataframe[column] = dataframe[column].fillna('').astype(str)
            else:
                dataframe[column] = dataframe[column].astype(dtype)
    return dataframe


def records_frame(records: Iterable[Record], extra: bool = False) -> pd.DataFrame:
    """
        Builds a dataframe of episode records with the canonical column order. When ``extra`` is True,
        the JSON-only columns are kept too.
    """
    columns: List[str] = RESULT_COLUMNS + (EXTRA_COLUMNS if extra else [])
    df = pd.DataFrame(list(records))
    if len(df) == 0:
        df = pd.DataFrame(columns=columns)
    return coerce_dataframe_types(df[columns].copy())


def user_series(df: pd.DataFrame) -> pd.DataFrame:
    """Training rows whose proposer was a user, including episodes where the assistant responded."""
    proposed_by_assistant = (df.agent_kind == 'assistant') & (df.role == 'proposer')
    return df[(df.phase == 'train') & ~proposed_by_assistant]


def assistant_series(df: pd.DataFrame) -> pd.DataFrame:
    """Training rows whose proposer was the assistant."""
    return df[(df.phase == 'train') & (df.agent_kind == 'assistant') & (df.role == 'proposer')]
