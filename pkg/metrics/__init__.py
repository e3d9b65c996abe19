"""Mesh, topology and sequence metrics."""
from metrics.hungarian import hungarian
from metrics.intersection import self_intersection_ratio
from metrics.shape import dmcd, mean_curvature_average, sphericity, sphericity_discrepancy
from metrics.similarity import PointCloud, chamfer_distance, extract_primitives, f1_per_type, normalized_chamfer
from metrics.topology import (
    MetricError,
    PrerequisiteNotMet,
    dangling_edge_length,
    eecm,
    euler_characteristic,
    flux_enclosure_error,
    is_watertight,
    segment_count,
    segment_error,
    topology_report,
)
