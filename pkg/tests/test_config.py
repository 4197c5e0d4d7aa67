import pytest

from scss_sim.core.config import (
    BUILTIN_PROFILES,
    Config,
    ExperimentConfig,
    load_experiment_config,
    resolve_experiment_config,
)
from scss_sim.core.exceptions import ConfigError


class TestExperimentConfig:
    def test_paper_defaults(self):
        config = ExperimentConfig()
        assert config.eta == 0.15
        assert config.f_pump == 76e6
        assert (config.n_stor_min, config.n_stor_max) == (9, 18)
        assert config.r_hd == 0.24
        assert config.truncation == 20
        assert list(config.storage_range) == list(range(9, 19))

    def test_efficiency_product(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(eta=0.2)

    def test_range_checks(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(eta_qmc=1.5)
        with pytest.raises(ConfigError):
            ExperimentConfig(n_stor_min=10, n_stor_max=9)

    def test_unknown_keys(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"eta": 0.15, "bogus": 1})

    def test_from_dict_casts(self):
        config = ExperimentConfig.from_dict({"n_stor_max": "24", "f_pump": "7.6e7"})
        assert config.n_stor_max == 24
        assert config.f_pump == 76e6

    def test_replace(self):
        assert ExperimentConfig().replace(n_stor_max=24).n_stor_max == 24


class TestProfiles:
    def test_builtin_profiles(self):
        assert load_experiment_config("paper") == ExperimentConfig()
        lossless = load_experiment_config("lossless")
        assert lossless.eta_prop == lossless.eta_qmc == lossless.r_hd == 0.0

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            load_experiment_config("nonexistent")

    def test_yaml_with_base_profile(self, tmp_path):
        path = tmp_path / "long.yml"
        path.write_text("profile: paper\nn_stor_max: 24\n")
        label, config = resolve_experiment_config(str(path))
        assert label == str(path)
        assert config.n_stor_max == 24
        assert config.eta == 0.15

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_experiment_config(str(tmp_path / "missing.yml"))
        assert "missing.yml" in str(info.value)

    def test_paper_profile_is_frozen(self, tmp_path):
        (tmp_path / "config.yml").write_text("profiles:\n  paper:\n    eta_qmc: 0.02\n")
        with pytest.raises(ConfigError):
            Config(tmp_path).profiles

    def test_extra_profile_from_file(self, tmp_path):
        (tmp_path / "config.yml").write_text("profiles:\n  long_storage:\n    n_stor_max: 24\n")
        config = Config(tmp_path)
        _, experiment = resolve_experiment_config("long_storage", config)
        assert experiment.n_stor_max == 24
        assert set(BUILTIN_PROFILES) <= set(config.profiles)


class TestRuntimeSettings:
    def test_defaults_without_file(self, tmp_path):
        config = Config(tmp_path)
        assert config.workers == 1
        assert config.output_dir == tmp_path / "results"
        assert config.tomography["bin_width"] == 0.1

    def test_workers_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SCSS_SIM_WORKERS", "4")
        assert Config(tmp_path).workers == 4

    def test_tomography_overrides(self, tmp_path):
        (tmp_path / "config.yml").write_text("tomography:\n  phase_bins: 45\n")
        settings = Config(tmp_path).tomography
        assert settings["phase_bins"] == 45
        assert settings["x_range"] == 6.0
