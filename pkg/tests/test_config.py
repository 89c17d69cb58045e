"""Settings precedence: CLI > config file > defaults; env endpoint override."""

import pytest
import yaml

from orca.config import DEFAULTS, build_pipeline_config, load_config_file, merge_settings
from orca.errors import ConfigError


class TestMergeSettings:
    def test_defaults_mirror_demonstration_setup(self):
        assert DEFAULTS["branch"] == "tcm"
        assert DEFAULTS["filter"] == "SFC"
        assert DEFAULTS["scan"] == "normal"
        assert DEFAULTS["omega"] is False
        assert DEFAULTS["cvss"] == "v2"
        assert DEFAULTS["tau"] == "1998-01-01"
        assert DEFAULTS["threshold"] == 0.55

    def test_file_overrides_defaults(self):
        merged = merge_settings({}, {"threshold": 0.45, "scan": "deep"})
        assert merged["threshold"] == 0.45
        assert merged["scan"] == "deep"
        assert merged["branch"] == "tcm"

    def test_cli_overrides_file(self):
        merged = merge_settings({"threshold": 0.6}, {"threshold": 0.45})
        assert merged["threshold"] == 0.6

    def test_none_cli_values_do_not_override(self):
        merged = merge_settings({"threshold": None}, {"threshold": 0.45})
        assert merged["threshold"] == 0.45

    def test_unknown_file_key_rejected(self):
        with pytest.raises(ConfigError):
            merge_settings({}, {"treshold": 0.5})

    def test_env_endpoint_overrides_flag(self, monkeypatch):
        monkeypatch.setenv("ORCA_ENDPOINT", "http://env-service:9")
        merged = merge_settings({"endpoint": "http://flag:1"}, {})
        assert merged["endpoint"] == "http://env-service:9"

    def test_config_file_loading(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"filter": "HFC", "omega": True}))
        merged = merge_settings({}, load_config_file(str(path)))
        assert merged["filter"] == "HFC"
        assert merged["omega"] is True


class TestBuildPipelineConfig:
    def test_normalizes_case_and_types(self, tmp_path):
        settings = merge_settings(
            {"filter": "hfc", "branch": "TCM", "tau": "2020-05-01"}, {}
        )
        settings["branch"] = settings["branch"].lower()
        config = build_pipeline_config(str(tmp_path / "t.json"), str(tmp_path), settings)
        assert config.filter_kind == "HFC"
        assert config.tau.isoformat() == "2020-05-01"

    def test_invalid_tau_rejected(self, tmp_path):
        settings = merge_settings({"tau": "not-a-date"}, {})
        with pytest.raises(ConfigError):
            build_pipeline_config(str(tmp_path / "t.json"), str(tmp_path), settings)
