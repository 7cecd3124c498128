"""
Unit tests for configuration models and scenario files.

Run with: pytest tests/unit/test_config.py -v -m unit
"""

import pytest
from pydantic import ValidationError

from v2x_shadow_sim.config import (
    CHANNEL_KEYS,
    ChannelParams,
    PolicyKind,
    RelayPolicy,
    ScenarioConfig,
    ScenarioFile,
    SimConfig,
    load_scenario_file,
)
from v2x_shadow_sim.exceptions import ConfigurationError

pytestmark = [pytest.mark.unit]


class TestDefaults:
    """Tests for default values and derived properties."""

    def test_channel_defaults(self):
        channel = ChannelParams()
        assert channel.tx_power == 26.0
        assert channel.receiver_sensitivity == -94.0
        assert channel.wavelength == pytest.approx(0.0508, abs=1e-4)

    def test_packets_per_frame_by_compression(self):
        """3 Mbit/s at 32x and 6 Mbit/s at 16x, 200-byte packets, 100 ms frames."""
        assert SimConfig(compression_rate=32).packets_per_frame == 188
        assert SimConfig(compression_rate=16).packets_per_frame == 375
        assert SimConfig(payload_bitrate=1600.0).packets_per_frame == 1

    def test_effective_t2(self):
        assert SimConfig().effective_t2 == pytest.approx(25.0 * 16.0)
        assert SimConfig(t2=12.0).effective_t2 == 12.0

    def test_relay_policy(self):
        policy = RelayPolicy()
        assert policy.kind == PolicyKind.MOHED
        assert policy.reselect_window == pytest.approx(2.0)
        assert policy.prediction_samples == 5
        assert policy.include_buildings
        assert policy.rsrp_noise_db == 8.0

    def test_ego_speed_in_ms(self):
        assert ScenarioConfig(ego_target_speed=36.0).ego_speed == pytest.approx(10.0)


class TestValidation:
    """Tests for cross-field rules and unknown keys."""

    def test_dt_above_period(self):
        with pytest.raises(ValidationError):
            SimConfig(dt=0.2, sensor_period=0.1)

    def test_period_not_multiple_of_dt(self):
        with pytest.raises(ValidationError):
            SimConfig(dt=0.03, sensor_period=0.1)

    def test_window_larger_than_grid(self):
        with pytest.raises(ValidationError):
            SimConfig(apm_m=5, apm_n=5, window_sizes=(3, 7))

    def test_sensitivity_must_exceed_noise(self):
        with pytest.raises(ValidationError):
            ChannelParams(receiver_sensitivity=-100.0, noise_floor=-98.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(spawn_spacing=50.0)

    def test_compression_literal(self):
        with pytest.raises(ValidationError):
            SimConfig(compression_rate=8)

    def test_seed_is_unsigned_64_bit(self):
        assert ScenarioConfig(seed=2**64 - 1).seed == 2**64 - 1
        with pytest.raises(ValidationError):
            ScenarioConfig(seed=-1)

    def test_shares_sum_at_most_one(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(suv_share=0.8, large_vehicle_share=0.3)

    def test_models_are_frozen(self):
        config = ScenarioConfig()
        with pytest.raises(ValidationError):
            config.seed = 5


class TestScenarioFile:
    """Tests for TOML scenario loading."""

    def test_load_splits_scenario_and_channel(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text('spawn_spacing_n = 25.0\nseed = 7\ntx_power = 20.0\nblocking_vehicle_heights = [3.0, 4.0]\n')

        scenario, channel = load_scenario_file(path)

        assert scenario.spawn_spacing_n == 25.0
        assert scenario.seed == 7
        assert scenario.blocking_vehicle_heights == (3.0, 4.0)
        assert channel.tx_power == 20.0
        assert channel.receiver_sensitivity == -94.0

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text("spawn_spacing = 25.0\n")
        with pytest.raises(ConfigurationError) as excinfo:
            load_scenario_file(path)
        assert "spawn_spacing" in excinfo.value.details["fields"]

    def test_invalid_value(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text("duration = -1.0\n")
        with pytest.raises(ConfigurationError) as excinfo:
            load_scenario_file(path)
        assert excinfo.value.details["fields"] == ["duration"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_scenario_file(tmp_path / "absent.toml")

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text("seed = = 3\n")
        with pytest.raises(ConfigurationError):
            load_scenario_file(path)

    def test_environment_is_ignored(self, monkeypatch, tmp_path):
        """Scenario values come only from the file."""
        monkeypatch.setenv("SEED", "99")
        monkeypatch.setenv("SPAWN_SPACING_N", "10")
        path = tmp_path / "scenario.toml"
        path.write_text("duration = 5.0\n")

        scenario, _ = load_scenario_file(path)

        assert scenario.seed == 1
        assert scenario.spawn_spacing_n == 50.0

    def test_fields_mirror_scenario_and_channel_models(self):
        """Each file key has the type, constraints and default of its ScenarioConfig or ChannelParams field."""
        expected = {**ScenarioConfig.model_fields, **ChannelParams.model_fields}
        assert set(ScenarioFile.model_fields) == set(expected)
        assert set(CHANNEL_KEYS) == set(ChannelParams.model_fields)
        for name, field in ScenarioFile.model_fields.items():
            assert field.annotation == expected[name].annotation, name
            assert field.metadata == expected[name].metadata, name
            assert field.get_default(call_default_factory=True) == expected[name].get_default(call_default_factory=True), name

    def test_example_file_round_trips_defaults(self):
        """The shipped example matches the built-in defaults."""
        from pathlib import Path

        example = Path(__file__).resolve().parents[2] / "config" / "scenario.example.toml"
        scenario, channel = ScenarioFile.from_toml(example).split()
        assert scenario == ScenarioConfig()
        assert channel == ChannelParams()
