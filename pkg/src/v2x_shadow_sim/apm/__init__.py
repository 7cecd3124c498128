"""Abstract perception matrices, blind-zone matching and the mobility-height layer."""

from .layer import (
    LayerPayload,
    MobilityHeightCell,
    MobilityHeightLayer,
    ObstacleRecord,
    build_mobility_height_layer,
    combine_layers,
    layer_from_records,
)
from .matrix import (
    Apm,
    BenefitReport,
    BlindZone,
    assess_provider,
    build_apm,
    find_blind_zones,
    perception_benefit,
    qualifying_placements,
    should_trigger_fusion,
    transform_zone,
)
from .sensing import synth_perception
from .wire import HEADER_SIZE, cell_payload_size, deserialize_apm, deserialize_mobility_layer, serialize_apm

__all__ = [
    # Matrices
    "Apm",
    "BenefitReport",
    "BlindZone",
    "assess_provider",
    "build_apm",
    "find_blind_zones",
    "perception_benefit",
    "qualifying_placements",
    "should_trigger_fusion",
    "transform_zone",
    # Mobility-height layer
    "LayerPayload",
    "MobilityHeightCell",
    "MobilityHeightLayer",
    "ObstacleRecord",
    "build_mobility_height_layer",
    "combine_layers",
    "layer_from_records",
    # Sensing
    "synth_perception",
    # Wire format
    "HEADER_SIZE",
    "cell_payload_size",
    "deserialize_apm",
    "deserialize_mobility_layer",
    "serialize_apm",
]
