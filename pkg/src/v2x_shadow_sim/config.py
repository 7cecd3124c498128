"""Configuration models and scenario file loading for the V2X shadowing simulator."""

import logging
import math
import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict, TomlConfigSettingsSource

from .exceptions import ConfigurationError, map_validation_error

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

# =============================================================================
# Payload bitrates per point-cloud compression rate
# =============================================================================

COMPRESSION_BITRATES = {
    16: 6e6,
    32: 3e6,
}

# Keys of the scenario file that configure the radio channel rather than the world
CHANNEL_KEYS = (
    "tx_power",
    "carrier_frequency",
    "noise_floor",
    "receiver_sensitivity",
    "bitrate",
    "bandwidth",
    "psr_shape_db",
)


def kmh_to_ms(speed_kmh: float) -> float:
    """Convert km/h to m/s."""
    return speed_kmh / 3.6


class _FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ChannelParams(_FrozenModel):
    """Radio parameters of every sidelink in the run."""

    tx_power: float = 26.0  # dBm (400 mW)
    carrier_frequency: PositiveFloat = 5.9e9
    noise_floor: float = -98.0
    receiver_sensitivity: float = -94.0
    bitrate: PositiveFloat = 6e6
    bandwidth: PositiveFloat = 10e6
    psr_shape_db: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _sensitivity_above_noise(self) -> "ChannelParams":
        if self.receiver_sensitivity <= self.noise_floor:
            raise ValueError("receiver_sensitivity must be above noise_floor")
        return self

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters."""
        return SPEED_OF_LIGHT / self.carrier_frequency


class ScenarioConfig(_FrozenModel):
    """Intersection layout, traffic density and timing of the designed scenario."""

    spawn_spacing_n: PositiveFloat = 50.0
    ego_target_speed: PositiveFloat = 30.0  # km/h
    duration: PositiveFloat = 18.0
    seed: int = Field(1, ge=0, le=2**64 - 1)
    lane_width: PositiveFloat = 3.5
    blocking_vehicle_heights: tuple[PositiveFloat, ...] = (4.0, 3.0, 4.0, 4.0)

    map_half_extent: PositiveFloat = 250.0
    ego_start_distance: PositiveFloat = 150.0
    collision_speed: PositiveFloat = 40.0  # km/h
    blocking_speed: float = Field(0.25, ge=0.0)  # m/s
    building_height: float = Field(20.0, ge=3.0)
    building_setback: float = Field(4.0, ge=0.0)
    background_speed_range: tuple[PositiveFloat, PositiveFloat] = (25.0, 50.0)  # km/h
    suv_share: float = Field(0.3, ge=0.0, le=1.0)
    large_vehicle_share: float = Field(0.1, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "ScenarioConfig":
        low, high = self.background_speed_range
        if low > high:
            raise ValueError("background_speed_range must be ordered (low, high)")
        if self.suv_share + self.large_vehicle_share > 1.0:
            raise ValueError("suv_share + large_vehicle_share must not exceed 1")
        if self.ego_start_distance >= self.map_half_extent:
            raise ValueError("ego_start_distance must lie inside the map")
        return self

    @property
    def ego_speed(self) -> float:
        """Ego target speed in m/s."""
        return kmh_to_ms(self.ego_target_speed)


class PolicyKind(StrEnum):
    MOHED = "mohed"
    SIGNAL_STRENGTH = "signal_strength"
    RANDOM = "random"
    DIRECT = "direct"


class RelayPolicy(_FrozenModel):
    """Relay selection policy and its re-selection cadence."""

    kind: PolicyKind = PolicyKind.MOHED
    reselect_window_ms: PositiveFloat = 2000.0
    epsilon: PositiveFloat = 0.1  # m/s
    candidate_radius: PositiveFloat = 150.0
    # velocity compared against obstacles on the relay->sharing hop
    second_hop_reference: Literal["ego", "relay"] = "ego"
    # risk is averaged over this many offsets across the re-selection window
    prediction_samples: int = Field(5, ge=1)
    include_buildings: bool = True
    # spread of the discovery RSRP measured by the signal-strength policy (dB)
    rsrp_noise_db: float = Field(8.0, ge=0.0)

    @property
    def reselect_window(self) -> float:
        """Re-selection window in seconds."""
        return self.reselect_window_ms / 1000.0


class SimConfig(_FrozenModel):
    """Simulation loop, traffic model, APMM and sensing settings."""

    dt: PositiveFloat = 0.05
    sensor_period: PositiveFloat = 0.1
    compression_rate: Literal[16, 32] = 32
    payload_bitrate: PositiveFloat | None = None
    packet_size: int = Field(200, gt=0)
    retransmissions: int = Field(0, ge=0)
    policy: RelayPolicy = Field(default_factory=RelayPolicy)

    # APM grid and thresholds
    apm_k: PositiveFloat = 4.0
    apm_m: int = Field(20, ge=1)
    apm_n: int = Field(20, ge=1)
    t1: float = Field(1.0, ge=0.0)
    window_sizes: tuple[int, ...] = (3, 5, 7)
    t2: float | None = Field(None, ge=0.0)

    # Synthetic lidar
    lidar_rays: int = Field(360, ge=1)
    lidar_range: PositiveFloat = 60.0
    lidar_step: PositiveFloat = 1.0

    # Metrics
    window_length: PositiveFloat = 1.0
    frame_success_threshold: float = Field(0.9, ge=0.0, le=1.0)
    forced_psr: float | None = Field(None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_timing(self) -> "SimConfig":
        if self.dt > self.sensor_period:
            raise ValueError("dt must not exceed sensor_period")
        ratio = self.sensor_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("sensor_period must be an integer multiple of dt")
        if not self.window_sizes:
            raise ValueError("window_sizes must not be empty")
        limit = min(self.apm_m, self.apm_n)
        for size in self.window_sizes:
            if not 1 <= size <= limit:
                raise ValueError(f"window size {size} must be within 1..{limit}")
        return self

    @property
    def steps_per_period(self) -> int:
        return round(self.sensor_period / self.dt)

    @property
    def effective_bitrate(self) -> float:
        """Fusion payload bitrate in bits/s."""
        if self.payload_bitrate is not None:
            return self.payload_bitrate
        return COMPRESSION_BITRATES[self.compression_rate]

    @property
    def packets_per_frame(self) -> int:
        """Packets emitted per sensor frame once fusion is triggered."""
        packets = self.effective_bitrate * self.sensor_period / 8.0 / self.packet_size
        return max(1, math.ceil(packets - 1e-9))

    @property
    def effective_t2(self) -> float:
        """Fusion trigger threshold (index x m^2)."""
        if self.t2 is not None:
            return self.t2
        return 25.0 * self.apm_k**2


class ScenarioFile(BaseSettings):
    """
    Flat TOML scenario document.

    Keys are the ScenarioConfig field names plus the channel keys. Only the
    file and explicit init values are honored; environment variables never
    override a scenario.
    """

    model_config = SettingsConfigDict(extra="forbid", frozen=True)

    spawn_spacing_n: PositiveFloat = 50.0
    ego_target_speed: PositiveFloat = 30.0
    duration: PositiveFloat = 18.0
    seed: int = Field(1, ge=0, le=2**64 - 1)
    lane_width: PositiveFloat = 3.5
    blocking_vehicle_heights: tuple[PositiveFloat, ...] = (4.0, 3.0, 4.0, 4.0)
    map_half_extent: PositiveFloat = 250.0
    ego_start_distance: PositiveFloat = 150.0
    collision_speed: PositiveFloat = 40.0
    blocking_speed: float = Field(0.25, ge=0.0)
    building_height: float = Field(20.0, ge=3.0)
    building_setback: float = Field(4.0, ge=0.0)
    background_speed_range: tuple[PositiveFloat, PositiveFloat] = (25.0, 50.0)
    suv_share: float = Field(0.3, ge=0.0, le=1.0)
    large_vehicle_share: float = Field(0.1, ge=0.0, le=1.0)

    tx_power: float = 26.0
    carrier_frequency: PositiveFloat = 5.9e9
    noise_floor: float = -98.0
    receiver_sensitivity: float = -94.0
    bitrate: PositiveFloat = 6e6
    bandwidth: PositiveFloat = 10e6
    psr_shape_db: PositiveFloat = 1.0

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @classmethod
    def from_toml(cls, path: Path) -> "ScenarioFile":
        values = TomlConfigSettingsSource(cls, toml_file=path)()
        return cls(**values)

    def split(self) -> tuple[ScenarioConfig, ChannelParams]:
        """Split the flat document into scenario and channel models."""
        values = self.model_dump()
        channel = {key: values.pop(key) for key in CHANNEL_KEYS}
        return ScenarioConfig(**values), ChannelParams(**channel)


def load_scenario_file(path: str | Path) -> tuple[ScenarioConfig, ChannelParams]:
    """
    Load and validate a scenario TOML file.

    Args:
        path: Path to the scenario document

    Returns:
        Tuple of (ScenarioConfig, ChannelParams)

    Raises:
        ConfigurationError: If the file is missing, unparsable or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Scenario file not found: {path}", source=str(path))

    try:
        scenario_file = ScenarioFile.from_toml(path)
        scenario, channel = scenario_file.split()
    except ValidationError as e:
        raise map_validation_error(e, source=str(path)) from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: invalid TOML: {e}", source=str(path)) from e
    except OSError as e:
        raise ConfigurationError(f"{path}: {e}", source=str(path)) from e

    logger.info(f"Loaded scenario file {path}")
    return scenario, channel
