"""Experiment configuration: parsing, validation and defaults.

A file has an ``[experiment]`` section naming the experiment and its run
settings, and a ``[parameters]`` section with the model parameters. Every
diagnostic carries the line and column of the offending token.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..stick_breaking import GEMParams
from .lexer import Lexer, LexerError
from .tokens import Token, TokenType

DEFAULT_SEED = 20240611
DEFAULT_OUTPUT_DIR = "gemdiff-out"
DEFAULT_CHUNK_SIZE = 10_000

EXPERIMENT_NAMES = (
    "wf-stationarity",
    "gem-identities",
    "generator-consistency",
    "coeff-bounds",
    "integration-by-parts",
    "variance-decay",
    "entropy-decay",
    "dirichlet-stationarity",
    "esf-check",
    "functional-bounds",
    "gem-reversibility",
)


class ConfigError(Exception):
    def __init__(self, message: str, line: int, col: int, field: str = ""):
        self.line = line
        self.col = col
        self.field = field
        super().__init__(f"{message} at {line}:{col}")

    @property
    def message(self) -> str:
        return str(self).rsplit(" at ", 1)[0]


def format_error(source: str, filename: str, message: str, line: int, col: int) -> str:
    """Format an error with source context and caret."""
    lines = source.split('\n')
    if line < 1 or line > len(lines):
        return f"error: {message}\n --> {filename}:{line}:{col}"
    width = len(str(line))
    pad = " " * width
    caret = " " * max(col - 1, 0) + "^"
    return (
        f"error: {message}\n"
        f" {pad}--> {filename}:{line}:{col}\n"
        f" {pad} |\n"
        f" {line} | {lines[line - 1]}\n"
        f" {pad} | {caret}"
    )


# --- Value converters ---

def _to_int(text: str) -> int:
    try:
        return int(text.replace("_", ""))
    except ValueError:
        pass
    # 1e6 and 10^6 are accepted when they denote whole numbers.
    if "^" in text:
        base, _, exponent = text.partition("^")
        value = float(int(base)) ** int(exponent)
    else:
        value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def _to_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _to_grid(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if not all(parts):
        raise ValueError(text)
    return tuple(_to_float(p) for p in parts)


_KIND_NAMES = {_to_int: "an integer", _to_float: "a number", _to_grid: "a comma-separated list of numbers",
               str: "a string"}


@dataclass(frozen=True)
class _Key:
    convert: Callable[[str], Any]
    check: Callable[[Any], bool] = lambda v: True
    requirement: str = ""


_EXPERIMENT_KEYS: dict[str, _Key] = {
    "name": _Key(str),
    "seed": _Key(_to_int, lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer"),
    "output_dir": _Key(str, bool, "must not be empty"),
    "chunk_size": _Key(_to_int, lambda v: v >= 1, "must be at least 1"),
}

_positive = (lambda v: v > 0, "must be positive")
_at_least_two = (lambda v: v >= 2, "must be at least 2")

_PARAMETER_KEYS: dict[str, _Key] = {
    "theta": _Key(_to_float),
    "alpha": _Key(_to_float, lambda v: 0 <= v < 1, "range error: alpha must lie in [0, 1)"),
    "a": _Key(_to_float, *_positive),
    "b": _Key(_to_float, *_positive),
    "n": _Key(_to_int, lambda v: v >= 1, "must be at least 1"),
    "dt": _Key(_to_float, *_positive),
    "horizon": _Key(_to_float, lambda v: v >= 0, "must be non-negative"),
    "samples": _Key(_to_int, *_at_least_two),
    "t_grid": _Key(_to_grid, lambda v: all(t >= 0 for t in v) and list(v) == sorted(set(v)),
                   "times must be non-negative and strictly increasing"),
    "x0": _Key(_to_float, lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    "outer": _Key(_to_int, *_at_least_two),
    "inner": _Key(_to_int, *_at_least_two),
    "theta_mut": _Key(_to_float, lambda v: v >= 0, "must be non-negative"),
    "sigma": _Key(_to_float, *_positive),
}

_SECTIONS = {"experiment": _EXPERIMENT_KEYS, "parameters": _PARAMETER_KEYS}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = DEFAULT_SEED
    output_dir: str = DEFAULT_OUTPUT_DIR
    chunk_size: int = DEFAULT_CHUNK_SIZE
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def theta(self) -> float:
        return self.parameters["theta"]

    @property
    def alpha(self) -> float:
        return self.parameters["alpha"]

    @property
    def n(self) -> int:
        return self.parameters["n"]

    @property
    def dt(self) -> float:
        return self.parameters["dt"]

    @property
    def sigma(self) -> float:
        return self.parameters["sigma"]

    def get(self, key: str, default: Any = None) -> Any:
        return self.parameters.get(key, default)

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> ExperimentConfig:
        changes: dict[str, Any] = {}
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError(f"seed {seed} is not a 64-bit unsigned integer", 0, 0, "seed")
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = output_dir
        return dataclasses.replace(self, **changes)

    def canonical(self) -> str:
        """Stable text form of everything that determines the results."""
        data = {"experiment": self.experiment, "seed": self.seed, "chunk_size": self.chunk_size,
                "parameters": {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.parameters.items())}}
        return json.dumps(data, sort_keys=True)


class ConfigParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.values: dict[str, dict[str, tuple[Any, Token]]] = {name: {} for name in _SECTIONS}

    def parse(self) -> ExperimentConfig:
        section: str | None = None
        while not self._at_end():
            if self._match(TokenType.NEWLINE):
                continue
            header = self._match(TokenType.SECTION)
            if header:
                if header.value not in _SECTIONS:
                    raise ConfigError(f"Unknown section '[{header.value}]'; expected [experiment] or [parameters]",
                                      header.line, header.col, header.value)
                section = header.value
                self._end_of_line()
                continue
            key = self._expect(TokenType.KEY, "a key or a section header")
            if section is None:
                raise ConfigError(f"Key '{key.value}' appears before any section header", key.line, key.col, key.value)
            self._expect(TokenType.EQUALS, "'='")
            value = self._expect(TokenType.VALUE, "a value")
            self._store(section, key, value)
            self._end_of_line()
        return self._build()

    # ---- Token helpers ----

    def _peek(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.tokens[-1]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _at_end(self) -> bool:
        return self._peek().type == TokenType.EOF

    def _match(self, token_type: TokenType) -> Token | None:
        if self._peek().type == token_type:
            return self._advance()
        return None

    def _expect(self, token_type: TokenType, expected: str) -> Token:
        tok = self._peek()
        if tok.type == token_type:
            return self._advance()
        got = "end of line" if tok.type in (TokenType.NEWLINE, TokenType.EOF) else f"'{tok.value}'"
        raise ConfigError(f"Expected {expected}, got {got}", tok.line, tok.col)

    def _end_of_line(self):
        if not (self._match(TokenType.NEWLINE) or self._at_end()):
            tok = self._peek()
            raise ConfigError(f"Unexpected '{tok.value}' after entry", tok.line, tok.col)

    # ---- Validation ----

    def _store(self, section: str, key: Token, value: Token):
        schema = _SECTIONS[section]
        if key.value not in schema:
            allowed = ", ".join(schema)
            raise ConfigError(f"Unknown key '{key.value}' in [{section}]; allowed keys: {allowed}",
                              key.line, key.col, key.value)
        if key.value in self.values[section]:
            first = self.values[section][key.value][1]
            raise ConfigError(f"Duplicate key '{key.value}' (first set on line {first.line})",
                              key.line, key.col, key.value)
        rule = schema[key.value]
        if not value.value:
            raise ConfigError(f"Empty {section} field '{key.value}'", value.line, value.col, key.value)
        try:
            converted = rule.convert(value.value)
        except (ValueError, OverflowError):
            kind = _KIND_NAMES.get(rule.convert, "a value")
            raise ConfigError(f"Field '{key.value}' expects {kind}, got '{value.value}'",
                              value.line, value.col, key.value) from None
        if not rule.check(converted):
            raise ConfigError(f"Field '{key.value}' {rule.requirement}, got '{value.value}'",
                              value.line, value.col, key.value)
        self.values[section][key.value] = (converted, value)

    def _build(self) -> ExperimentConfig:
        experiment = {k: v for k, (v, _) in self.values["experiment"].items()}
        if "name" not in experiment:
            eof = self._peek()
            raise ConfigError("Missing required field 'name' in [experiment]", eof.line, eof.col, "name")
        name = experiment["name"]
        if name not in EXPERIMENT_NAMES:
            tok = self.values["experiment"]["name"][1]
            raise ConfigError(f"Unknown experiment '{name}'; expected one of: {', '.join(EXPERIMENT_NAMES)}",
                              tok.line, tok.col, "name")

        params = {k: v for k, (v, _) in self.values["parameters"].items()}
        params.setdefault("theta", 1.0)
        params.setdefault("alpha", 0.0)
        params.setdefault("dt", 1e-3)
        params.setdefault("sigma", 3.0)
        if params["theta"] + params["alpha"] <= 0:
            tok = self.values["parameters"].get("theta", (None, self._peek()))[1]
            raise ConfigError(f"range error: theta must exceed -alpha={-params['alpha']:g}", tok.line, tok.col, "theta")
        if "n" not in params:
            params["n"] = GEMParams(params["theta"], params["alpha"]).default_truncation()
        return ExperimentConfig(experiment=name,
                                seed=experiment.get("seed", DEFAULT_SEED),
                                output_dir=experiment.get("output_dir", DEFAULT_OUTPUT_DIR),
                                chunk_size=experiment.get("chunk_size", DEFAULT_CHUNK_SIZE),
                                parameters=params)


def parse_config(text: str, filename: str = "<config>") -> ExperimentConfig:
    try:
        tokens = Lexer(text, filename).tokenize()
    except LexerError as e:
        message = str(e).rsplit(" at ", 1)[0]
        raise ConfigError(message, e.line, e.col) from None
    return ConfigParser(tokens).parse()


def load_config(path: str | Path) -> tuple[ExperimentConfig, str]:
    """Parse a config file; returns the config and the source text for diagnostics."""
    text = Path(path).read_text()
    return parse_config(text, Path(path).name), text


def describe_defaults() -> str:
    return (f"defaults: seed={DEFAULT_SEED}, output_dir={DEFAULT_OUTPUT_DIR}, chunk_size={DEFAULT_CHUNK_SIZE}, "
            "theta=1, alpha=0, dt=1e-3, sigma=3, n=60 when theta<=2 "
            "(otherwise the smallest n with expected remainder below 1e-6)")
