"""Crowd navigation through dynamic triangulation channels.

The pipeline: triangulate the pedestrian positions, search the dual graph
for a loop-free triangle walk whose gates stay wide enough at the robot's
estimated crossing times, then pull a segment-arc path through the walk
with velocity-dependent clearance circles.
"""

from dynchan.geometry import OUTER, TriMesh, DualGraph, triangulate, dual_graph, circumcircle, locate_point
from dynchan.crowd import Pedestrian, CrowdSnapshot, FeasibleIntervals, d_thresh, gate_distance, feasible_intervals, estimate_velocities
from dynchan.planner import PlannerConfig, Channel, timed_astar, validate_channel, local_clearance, NoPath
from dynchan.funnel import SmoothPath, Segment, Arc, funnel_shortest, clearance_radius, path_length, sample_path

__all__ = [
    "OUTER", "TriMesh", "DualGraph", "triangulate", "dual_graph", "circumcircle", "locate_point",
    "Pedestrian", "CrowdSnapshot", "FeasibleIntervals", "d_thresh", "gate_distance",
    "feasible_intervals", "estimate_velocities",
    "PlannerConfig", "Channel", "timed_astar", "validate_channel", "local_clearance", "NoPath",
    "SmoothPath", "Segment", "Arc", "funnel_shortest", "clearance_radius", "path_length", "sample_path",
]
