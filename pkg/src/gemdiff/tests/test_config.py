"""Tests for the experiment configuration lexer and parser."""

import pytest

from src.gemdiff.harness.config import (
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SEED,
    EXPERIMENT_NAMES,
    ConfigError,
    describe_defaults,
    format_error,
    load_config,
    parse_config,
)
from src.gemdiff.harness.lexer import Lexer, LexerError
from src.gemdiff.harness.tokens import TokenType
from src.gemdiff.stick_breaking import GEMParams


def lex(source: str) -> list:
    return Lexer(source).tokenize()


def types(source: str) -> list[TokenType]:
    return [t.type for t in lex(source)]


def values(source: str) -> list[str]:
    return [t.value for t in lex(source)]


def config(parameters: str = "", name: str = "esf-check") -> str:
    return f"[experiment]\nname = {name}\n[parameters]\n{parameters}\n"


def error_of(source: str) -> ConfigError:
    with pytest.raises(ConfigError) as info:
        parse_config(source, "test.gemcfg")
    return info.value


# --- Lexer ---

class TestLexer:
    def test_empty_input(self):
        assert types("") == [TokenType.EOF]

    def test_section_and_entry(self):
        assert types("[experiment]\nname = wf-stationarity\n") == [
            TokenType.SECTION, TokenType.NEWLINE,
            TokenType.KEY, TokenType.EQUALS, TokenType.VALUE, TokenType.NEWLINE,
            TokenType.EOF,
        ]
        assert values("[ experiment ]")[0] == "experiment"

    def test_value_stops_at_comment(self):
        assert values("t_grid = 0.5, 1.0   # seconds")[2] == "0.5, 1.0"

    def test_hash_inside_value(self):
        assert values("output_dir = out#1")[2] == "out#1"

    def test_comment_line(self):
        assert types("# only a comment\n") == [TokenType.NEWLINE, TokenType.EOF]

    def test_empty_value(self):
        tokens = lex("theta =")
        assert tokens[2].type == TokenType.VALUE
        assert tokens[2].value == ""

    def test_positions(self):
        tokens = lex("[parameters]\n  theta = 2.5\n")
        key, _, value = tokens[2:5]
        assert (key.line, key.col) == (2, 3)
        assert (value.line, value.col) == (2, 11)

    def test_unterminated_section(self):
        with pytest.raises(LexerError, match="Unterminated"):
            lex("[experiment\nname = x\n")

    def test_empty_section(self):
        with pytest.raises(LexerError, match="Empty section"):
            lex("[ ]\n")

    def test_unexpected_character(self):
        with pytest.raises(LexerError) as info:
            lex("[parameters]\n?theta = 1\n")
        assert (info.value.line, info.value.col) == (2, 1)


# --- Parser: accepted files ---

class TestParse:
    def test_defaults(self):
        cfg = parse_config(config())
        assert cfg.experiment == "esf-check"
        assert cfg.seed == DEFAULT_SEED
        assert cfg.output_dir == DEFAULT_OUTPUT_DIR
        assert (cfg.theta, cfg.alpha, cfg.dt, cfg.sigma) == (1.0, 0.0, 1e-3, 3.0)
        assert cfg.n == GEMParams(1.0).default_truncation() == 60

    def test_default_truncation_follows_theta(self):
        cfg = parse_config(config("theta = 10"))
        assert cfg.n == GEMParams(10.0).default_truncation()

    def test_explicit_values(self):
        cfg = parse_config("[experiment]\nname = variance-decay\nseed = 7\nchunk_size = 500\n"
                           "[parameters]\ntheta = 2\nt_grid = 0.5, 1.0, 2.0\nouter = 100\n")
        assert cfg.seed == 7
        assert cfg.chunk_size == 500
        assert cfg.theta == 2.0
        assert cfg.get("t_grid") == (0.5, 1.0, 2.0)
        assert cfg.get("outer") == 100
        assert cfg.get("inner", 2000) == 2000

    @pytest.mark.parametrize("text", ["1e6", "10^6", "1_000_000", "1000000"])
    def test_integer_spellings(self, text):
        assert parse_config(config(f"samples = {text}")).get("samples") == 10**6

    def test_negative_theta_with_alpha(self):
        cfg = parse_config(config("theta = -0.2\nalpha = 0.3"))
        assert cfg.theta == -0.2

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\n[experiment]\nname = coeff-bounds   # bounds\n\n[parameters]\nn = 20\n")
        assert cfg.experiment == "coeff-bounds"
        assert cfg.n == 20

    def test_every_experiment_name(self):
        for name in EXPERIMENT_NAMES:
            assert parse_config(config(name=name)).experiment == name

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.gemcfg"
        path.write_text(config("theta = 2"))
        cfg, text = load_config(path)
        assert cfg.theta == 2.0
        assert text == path.read_text()


# --- Parser: rejected files ---

class TestParseErrors:
    def test_empty_field(self):
        err = error_of(config("theta ="))
        assert err.message == "Empty parameters field 'theta'"
        assert err.field == "theta"
        assert err.line == 4

    def test_alpha_range(self):
        err = error_of(config("alpha = 1"))
        assert "range error" in err.message
        assert (err.line, err.col) == (4, 9)

    def test_theta_must_exceed_minus_alpha(self):
        err = error_of(config("theta = -0.5\nalpha = 0.3"))
        assert "range error: theta" in err.message
        assert err.line == 4

    def test_unknown_key(self):
        err = error_of(config("gamma = 1"))
        assert "Unknown key 'gamma'" in err.message
        assert (err.line, err.col) == (4, 1)

    def test_unknown_section(self):
        err = error_of("[misc]\n")
        assert "Unknown section '[misc]'" in err.message

    def test_duplicate_key(self):
        err = error_of(config("theta = 1\ntheta = 2"))
        assert err.message == "Duplicate key 'theta' (first set on line 4)"
        assert err.line == 5

    def test_key_before_section(self):
        err = error_of("name = esf-check\n")
        assert "before any section" in err.message

    def test_missing_name(self):
        assert "Missing required field 'name'" in error_of("[experiment]\nseed = 1\n").message

    def test_unknown_experiment(self):
        err = error_of(config(name="nope"))
        assert err.message.startswith("Unknown experiment 'nope'")
        assert (err.line, err.col) == (2, 8)

    def test_wrong_kind(self):
        err = error_of(config("samples = 1.5"))
        assert err.message == "Field 'samples' expects an integer, got '1.5'"

    def test_grid_must_increase(self):
        assert "strictly increasing" in error_of(config("t_grid = 1.0, 0.5")).message

    def test_malformed_grid(self):
        assert "comma-separated" in error_of(config("t_grid = 1.0,,2.0")).message

    def test_seed_range(self):
        assert "64-bit" in error_of("[experiment]\nname = esf-check\nseed = -1\n").message

    def test_missing_equals(self):
        err = error_of("[experiment]\nname esf-check\n")
        assert err.message == "Expected '=', got 'esf-check'"

    def test_lexer_errors_become_config_errors(self):
        err = error_of("[experiment\n")
        assert err.message.startswith("Unterminated section header")
        assert (err.line, err.col) == (1, 1)


# --- Overrides and diagnostics ---

class TestConfigObject:
    def test_overrides(self):
        cfg = parse_config(config()).with_overrides(seed=5, output_dir="elsewhere")
        assert (cfg.seed, cfg.output_dir) == (5, "elsewhere")

    def test_override_seed_range(self):
        with pytest.raises(ConfigError, match="64-bit"):
            parse_config(config()).with_overrides(seed=-1)

    def test_canonical_ignores_output_dir(self):
        cfg = parse_config(config("t_grid = 0.5, 1.0"))
        assert cfg.canonical() == cfg.with_overrides(output_dir="other").canonical()
        assert cfg.canonical() != cfg.with_overrides(seed=1).canonical()

    def test_format_error(self):
        source = config(name="nope")
        err = error_of(source)
        lines = format_error(source, "test.gemcfg", err.message, err.line, err.col).split("\n")
        assert lines[0] == f"error: {err.message}"
        assert lines[1].endswith("--> test.gemcfg:2:8")
        assert lines[3] == " 2 | name = nope"
        assert lines[4].index("^") == lines[3].index("nope")

    def test_format_error_outside_source(self):
        text = format_error("", "x.gemcfg", "boom", 9, 1)
        assert text == "error: boom\n --> x.gemcfg:9:1"

    def test_describe_defaults(self):
        assert f"seed={DEFAULT_SEED}" in describe_defaults()
