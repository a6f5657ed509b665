"""
ERROR HANDLER - Relator Lab
Exception hierarchy shared by every module, plus the mapping from
exceptions and verdicts to command-line exit codes.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

EXIT_PASS = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3


class RelatorLabError(Exception):
    """Base class; every error carries a message and a details dict."""

    exit_code = EXIT_USAGE

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, "details": self.details}


# --- syntax -----------------------------------------------------------------

class TermSyntaxError(RelatorLabError):
    def __init__(self, message: str, line: int = 1, column: int = 1, text: str = ""):
        super().__init__(f"{message} (line {line}, column {column})",
                         {"line": line, "column": column, "text": text})
        self.line = line
        self.column = column


class UnknownOperationError(RelatorLabError):
    def __init__(self, symbol: str):
        super().__init__(f"unknown operation symbol '{symbol}'", {"symbol": symbol})
        self.symbol = symbol


class ArityMismatchError(RelatorLabError):
    def __init__(self, symbol: str, expected: int, got: int):
        super().__init__(f"operation '{symbol}' expects {expected} argument(s), got {got}",
                         {"symbol": symbol, "expected": expected, "got": got})


class UnknownMacroError(RelatorLabError):
    def __init__(self, name: str):
        super().__init__(f"unknown macro '{name}'", {"macro": name})


class OpenTermError(RelatorLabError):
    def __init__(self, free_vars):
        names = sorted(free_vars)
        super().__init__(f"term is not closed, free variables: {', '.join(names)}",
                         {"free_vars": names})


# --- monads -----------------------------------------------------------------

class UninterpretableOperationError(RelatorLabError):
    def __init__(self, symbol: str, kind: str):
        super().__init__(f"operation '{symbol}' has no interpretation in monad '{kind}'",
                         {"symbol": symbol, "kind": kind})


class MassOverflowError(RelatorLabError):
    def __init__(self, mass):
        super().__init__(f"subdistribution mass {mass} exceeds 1", {"mass": str(mass)})


# --- relators ---------------------------------------------------------------

class KindMismatchError(RelatorLabError):
    def __init__(self, name: str, got: str):
        super().__init__(f"'{name}' cannot be applied to a {got}", {"name": name, "got": got})


class CarrierEscapeError(RelatorLabError):
    def __init__(self, element: str, side: str):
        super().__init__(f"support element {element} lies outside the {side} carrier",
                         {"element": element, "side": side})


class IncompatibleLayersError(RelatorLabError):
    def __init__(self, outer: str, inner: str):
        super().__init__(f"cannot compose relator '{outer}' over '{inner}'",
                         {"outer": outer, "inner": inner})


# --- budgets and configuration -------------------------------------------------

class BudgetExceededError(RelatorLabError):
    exit_code = EXIT_INCONCLUSIVE

    def __init__(self, what: str, limit: int):
        super().__init__(f"{what} budget of {limit} exceeded", {"what": what, "limit": limit})
        self.what = what
        self.limit = limit


class ConfigError(RelatorLabError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        details: Dict[str, Any] = {}
        if path is not None:
            details["path"] = str(path)
        if line is not None:
            details["line"] = line
        where = f" [{path}:{line}]" if path is not None and line is not None else ""
        super().__init__(message + where, details)


def exit_code_for(error: BaseException) -> int:
    """Exit code for an exception escaping a command."""
    if isinstance(error, RelatorLabError):
        return error.exit_code
    return EXIT_USAGE
