"""Validation utilities for scenario documents and persisted result frames."""
import warnings
from types import TracebackType
from typing import Any, Callable, List, Mapping, Optional, Tuple, Type, Union

import pandas as pd

import pynorms as pn

_MISSING = object()


class ScenarioValidationError(ValueError):
    """Exception raised when a scenario document fails validation.

    ``errors`` lists every ``(field, message)`` problem found, not only the first.
    """
    def __init__(self, message: str, errors: List[Tuple[str, str]]):
        assert len(errors) > 0
        super().__init__(message)
        self.errors = errors

    @property
    def fields(self) -> List[str]:
        return [f for f, _ in self.errors]

    def __str__(self):
        details = '; '.join(f'{f}: {m}' for f, m in self.errors)
        return f'{self.args[0]} {details}'

    def __repr__(self):
        return f'ScenarioValidationError({self.args[0]!r}, {self.errors!r})'


class ScenarioValidationWarning(Warning):
    """Warning raised when scenario validation fails in warn mode."""
    pass


class ResultsValidationError(KeyError):
    """Exception raised when a results frame lacks required columns."""
    def __init__(self, message: str, missing_columns: List[str]):
        super().__init__(message)
        self.missing_columns = missing_columns

    def __str__(self):
        return f'{self.args[0]} (missing: {self.missing_columns})'


def scenario(source: str = 'scenario', warn: bool = False) -> '_ScenarioValidator':
    """Create a validation context manager that collects field errors and raises them together on exit.

    Args:
        source: where the document came from, for error messages
        warn: If True, raise warnings instead of exceptions for validation errors

    Example::

        with pn.validate.scenario(path) as v:
            n = v.field(doc, 'n_epochs', int, 5)
            v.require(n is None or n > 0, 'n_epochs', 'must be positive')
    """
    return _ScenarioValidator(source, warn=warn)


def results_frame(inp: Union[pd.DataFrame, List[str]], extra_columns: Optional[List[str]] = None, warn: bool = False) -> None:
    """Check that the input frame carries the episode record columns.

    Raises:
        ResultsValidationError: If warn=False and validation fails
    """
    columns = list(inp.columns) if isinstance(inp, pd.DataFrame) else list(inp)
    required = pn.model.RESULT_COLUMNS + list(extra_columns or [])
    missing = [c for c in required if c not in columns]
    if missing:
        message = f"DataFrame(columns={columns}) does not match the required result columns."
        if warn:
            warnings.warn(f"{message} missing: {missing}", ScenarioValidationWarning)
        else:
            raise ResultsValidationError(message, missing)


class _ScenarioValidator:
    def __init__(self, source: str, warn: bool = False):
        self.source = source
        self.warn = warn
        self.errors: List[Tuple[str, str]] = []

    def __enter__(self):
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        traceback: Optional[TracebackType]
    ) -> Optional[bool]:

        if exc_type is not None:
            return False # the captured exception takes priority

        if self.errors:
            message = f"{self.source} failed validation:"
            if self.warn:
                warnings.warn(f"{message} {self.errors}", ScenarioValidationWarning)
            else:
                raise ScenarioValidationError(message, self.errors)
        return None

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, field: str, message: str) -> None:
        self.errors.append((field, message))

    def require(self, condition: bool, field: str, message: str) -> bool:
        if not condition:
            self.error(field, message)
        return condition

    def field(self, doc: Mapping[str, Any], key: str, kind: Union[type, Tuple[type, ...]], default: Any = _MISSING,
              prefix: str = '') -> Any:
        """Reads ``doc[key]`` checking its type; records an error and returns None if absent or mistyped."""
        name = f'{prefix}{key}'
        if key not in doc:
            if default is _MISSING:
                self.error(name, 'is required')
                return None
            return default
        value = doc[key]
        # bool is an int subclass, but never a valid count
        if isinstance(value, bool) and kind is not bool and (kind is int or kind == (int, float)):
            self.error(name, f'expected {_kind_name(kind)}, got {value!r}')
            return None
        if not isinstance(value, kind):
            self.error(name, f'expected {_kind_name(kind)}, got {value!r}')
            return None
        return value

    def convert(self, field: str, fn: Callable[[], Any]) -> Any:
        """Runs ``fn``; a ValueError/KeyError/TypeError it raises is recorded against ``field``."""
        try:
            return fn()
        except (ValueError, KeyError, TypeError) as e:
            self.error(field, str(e).strip("'\""))
            return None

    def unknown_keys(self, doc: Mapping[str, Any], allowed: Any, prefix: str = '') -> None:
        for key in doc:
            if key not in allowed:
                self.error(f'{prefix}{key}', 'is not a recognised field')


def _kind_name(kind: Union[type, Tuple[type, ...]]) -> str:
    if isinstance(kind, tuple):
        return ' or '.join(k.__name__ for k in kind)
    return kind.__name__

