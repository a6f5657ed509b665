"""
LAB CONFIG - Relator Lab
Defaults, environment settings and input-file loaders shared by the CLI
and the checking modules.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from error_handler import ConfigError, RelatorLabError, TermSyntaxError
from monads import EffectKind, MonadSpec, build_monad
from syntax import DEFAULT_TERM_CAP, Node, Signature, Term, Value, is_value, parse_term, parse_value

# --- CONFIGURATION ---
BASE_DIR = Path(__file__).resolve().parent
load_dotenv(BASE_DIR / ".env")

MAX_DEPTH = 4
TERM_CAP = DEFAULT_TERM_CAP
VARIABLE_POOL = ("x", "y", "z")
MAX_CONTEXT_VARS = 2
CARRIER_SIZE = 2
SAMPLE_BUDGET = 1_000
MEMO_SIZE = 1 << 20
CACHE_ENV = "RELATORLAB_CACHE_DIR"
LOG_ENV = "RELATORLAB_LOG_LEVEL"


def cache_dir() -> Optional[Path]:
    """Directory for the evaluator memo spill, if configured."""
    raw = os.environ.get(CACHE_ENV, "").strip()
    if not raw:
        return None
    path = Path(raw).expanduser()
    path.mkdir(parents=True, exist_ok=True)
    return path


def log_level(verbose: bool = False) -> int:
    if verbose:
        return logging.DEBUG
    name = os.environ.get(LOG_ENV, "WARNING").upper()
    return getattr(logging, name, logging.WARNING)


class RunConfig(BaseModel):
    """Validated options of one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    monad: EffectKind
    exceptions: Tuple[str, ...] = ("e",)
    states: Tuple[str, ...] = ("true", "false")
    alphabet: Tuple[str, ...] = ("a", "b")
    relator: Optional[str] = None
    precision: int = Field(default=20, ge=1)
    slack: int = Field(default=0, ge=0)
    depth: int = Field(default=MAX_DEPTH, ge=0)
    carrier_size: int = Field(default=CARRIER_SIZE, ge=1, le=4)
    samples: int = Field(default=SAMPLE_BUDGET, ge=1)
    seed: int = 0
    signature_file: Optional[Path] = None

    @field_validator("depth")
    @classmethod
    def _depth_within_cap(cls, v: int) -> int:
        if v > 8:
            raise ValueError(f"depth {v} exceeds the enumeration limit 8")
        return v

    @model_validator(mode="after")
    def _relator_fits_monad(self) -> "RunConfig":
        if self.relator is not None:
            from relators import fits, parse_relator
            spec = parse_relator(self.relator)
            if not fits(spec, self.monad):
                raise ValueError(f"relator '{self.relator}' does not apply to monad '{self.monad.value}'")
        return self

    def monad_spec(self) -> MonadSpec:
        return MonadSpec(self.monad, self.exceptions, self.states, self.alphabet)

    def signature(self) -> Signature:
        monad = build_monad(self.monad_spec())
        if self.signature_file is None:
            return monad.signature()
        sig = load_signature(self.signature_file)
        monad.check_signature(sig)
        return sig


def make_run_config(**options) -> RunConfig:
    try:
        return RunConfig(**options)
    except RelatorLabError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


# --- file loaders ---

def _lines(path: Path) -> List[Tuple[int, str]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _parse_at(path: Path, lineno: int, fn):
    try:
        return fn()
    except RelatorLabError as e:
        raise ConfigError(e.message, path, lineno) from None


def load_signature(path: Path) -> Signature:
    try:
        return Signature.parse(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None


def load_terms(path: Path, sig: Signature) -> List[Term]:
    return [_parse_at(path, n, lambda: parse_term(line, sig)) for n, line in _lines(path)]


def load_values(path: Path, sig: Signature) -> List[Value]:
    return [_parse_at(path, n, lambda: parse_value(line, sig)) for n, line in _lines(path)]


def _parse_node(text: str, sig: Signature) -> Node:
    try:
        return parse_term(text, sig)
    except TermSyntaxError:
        return parse_value(text, sig)


def load_relation(path: Path, sig: Signature) -> List[Tuple[Node, Node]]:
    """``TERM<TAB>TERM`` lines; a line of two values is a value pair."""
    pairs = []
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError("expected two tab-separated terms", path, lineno)
        left = _parse_at(path, lineno, lambda: _parse_node(parts[0].strip(), sig))
        right = _parse_at(path, lineno, lambda: _parse_node(parts[1].strip(), sig))
        if is_value(left) != is_value(right):
            raise ConfigError("a term is paired with a value", path, lineno)
        pairs.append((left, right))
    return pairs
