"""Simulated steered-projection world and the discrete-event tracking loop."""

from .world import (
    HeadsetModel,
    MotionScript,
    ProjectorModel,
    SceneModel,
    TrackingCamera,
    ViewpointCamera,
    compute_screen_offset,
    default_marker_layout,
    default_scene,
    estimate_throw,
    observe_markers,
)
from .graycode import (
    graycode_decode,
    graycode_generate,
    observe_patterns_through_homography,
    pattern_pair_count,
)
from .pipeline import (
    PipelineConfig,
    PipelineTrace,
    Toggles,
    TraceSample,
    run_scenario,
    trace_to_csv,
    trajectory_stats,
)
from .scenario import bundled_scenario_path, load_scenario, parse_scenario_text

__all__ = [
    "HeadsetModel",
    "MotionScript",
    "PipelineConfig",
    "PipelineTrace",
    "ProjectorModel",
    "SceneModel",
    "Toggles",
    "TraceSample",
    "TrackingCamera",
    "ViewpointCamera",
    "bundled_scenario_path",
    "compute_screen_offset",
    "default_marker_layout",
    "default_scene",
    "estimate_throw",
    "graycode_decode",
    "graycode_generate",
    "load_scenario",
    "observe_markers",
    "observe_patterns_through_homography",
    "parse_scenario_text",
    "pattern_pair_count",
    "run_scenario",
    "trace_to_csv",
    "trajectory_stats",
]
