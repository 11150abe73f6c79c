"""
Test settings, the configuration view, logging setup and package metadata
"""

import logging

import pytest
from pydantic import ValidationError

import geoclust
from geoclust.config import GeoclustConfig, GeoclustSettings, get_settings
from geoclust.exceptions import (
    EXIT_BAD_INPUT,
    EXIT_INVARIANT,
    EmptySetError,
    EnumerationGuardError,
    GroupingError,
    InvalidInputError,
    PartitionError,
    SeparatorError,
    exit_code_for,
)
from geoclust.log import configure_logging


class TestSettings:
    """Environment-driven settings"""

    def test_defaults(self, monkeypatch):
        """Defaults without environment overrides"""
        for name in ("GEOCLUST_THREADS", "GEOCLUST_ORACLE_MAX_N", "GEOCLUST_LOG_LEVEL"):
            monkeypatch.delenv(name, raising=False)
        settings = GeoclustSettings(_env_file=None)
        assert settings.threads == 1
        assert settings.oracle_max_n == 12
        assert settings.log_level == "INFO"

    def test_environment_override(self, monkeypatch):
        """GEOCLUST_* variables are read"""
        monkeypatch.setenv("GEOCLUST_THREADS", "4")
        monkeypatch.setenv("GEOCLUST_DEBUG", "true")
        settings = get_settings()
        assert settings.threads == 4
        assert settings.debug is True

    def test_debug_forces_debug_level(self):
        """debug = true overrides log_level"""
        assert GeoclustSettings(_env_file=None, debug=True, log_level="WARNING").effective_log_level == "DEBUG"
        assert GeoclustSettings(_env_file=None, log_level="WARNING").effective_log_level == "WARNING"

    def test_debug_reaches_cli_logging(self, monkeypatch, tmp_path):
        """GEOCLUST_DEBUG turns on debug logging for a CLI run"""
        from geoclust.cli import main

        monkeypatch.setenv("GEOCLUST_DEBUG", "true")
        assert main(["gen", "--n", "3", "--out", str(tmp_path / "p.csv")]) == 0
        assert logging.getLogger("geoclust").level == logging.DEBUG
        configure_logging("INFO")

    @pytest.mark.parametrize("name,value", [
        ("GEOCLUST_THREADS", "0"),
        ("GEOCLUST_ORACLE_MAX_N", "20"),
        ("GEOCLUST_MAX_ITERATIONS", "many"),
    ])
    def test_invalid_values(self, monkeypatch, name, value):
        """Out-of-range values are refused"""
        monkeypatch.setenv(name, value)
        with pytest.raises(ValidationError):
            get_settings()

    def test_lower_oracle_guard(self, monkeypatch):
        """A lower oracle_max_n is honoured by the oracle"""
        from geoclust.oracle import exact_kmeans

        monkeypatch.setenv("GEOCLUST_ORACLE_MAX_N", "3")
        with pytest.raises(EnumerationGuardError):
            exact_kmeans([[0.0], [1.0], [2.0], [3.0]], 2)


class TestGeoclustConfig:
    """Dotted-key configuration view"""

    @pytest.fixture
    def config(self):
        return GeoclustConfig(GeoclustSettings(_env_file=None, threads=2))

    def test_dotted_lookup(self, config):
        """Runtime values and parameter defaults"""
        assert config.get("runtime.threads") == 2
        assert config.get("separator.kappa") == 8.0
        assert config.get("partition.gamma") == 64.0
        assert config.get("local_search.swap_cap") == 3

    def test_debug_log_level(self):
        """runtime.log_level reflects debug"""
        config = GeoclustConfig(GeoclustSettings(_env_file=None, debug=True))
        assert config.get("runtime.log_level") == "DEBUG"
        assert config.get("runtime.debug") is True

    def test_missing_key(self, config):
        """Unknown keys return the default"""
        assert config.get("separator.nope") is None
        assert config.get("nope.at.all", 5) == 5


class TestExitCodes:
    """Exception to exit code mapping"""

    @pytest.mark.parametrize("exc,code", [
        (InvalidInputError("x"), EXIT_BAD_INPUT),
        (EmptySetError(), EXIT_BAD_INPUT),
        (SeparatorError("x"), EXIT_BAD_INPUT),
        (FileNotFoundError("x"), EXIT_BAD_INPUT),
        (PartitionError("x"), EXIT_INVARIANT),
        (GroupingError("x"), EXIT_INVARIANT),
        (RuntimeError("x"), 1),
    ])
    def test_mapping(self, exc, code):
        assert exit_code_for(exc) == code


class TestLogging:
    """structlog setup"""

    def test_level(self):
        """The geoclust logger follows the configured level"""
        configure_logging("DEBUG")
        assert logging.getLogger("geoclust").level == logging.DEBUG
        configure_logging("WARNING")
        assert logging.getLogger("geoclust").level == logging.WARNING
        configure_logging("INFO")

    def test_single_handler(self):
        """Reconfiguring does not stack handlers"""
        configure_logging("INFO")
        configure_logging("INFO")
        assert len(logging.getLogger("geoclust").handlers) == 1


class TestPackageInfo:
    """Package metadata helpers"""

    def test_info(self):
        info = geoclust.get_package_info()
        assert info["name"] == "geoclust"
        assert info["version"] == geoclust.get_version()
        assert "kmeans" in info["problems"]
