"""Numerical laboratory for capillary surfaces resting on a hyperplane."""

from .gauge import Gauge, dual_gauge, gauge_bounds, gauge_gradient, gauge_value
from .mesh import HalfSpaceMesh, MeshError, build_mesh, load_mesh, save_mesh
from .shapes import CapSpec, CompositeSpec, PerturbationSpec, ProbeSpec, cap, cap_volume_coefficient, generate
from .stability import StabilityConfig, run_stability

__all__ = [
    "CapSpec",
    "CompositeSpec",
    "Gauge",
    "HalfSpaceMesh",
    "MeshError",
    "PerturbationSpec",
    "ProbeSpec",
    "StabilityConfig",
    "build_mesh",
    "cap",
    "cap_volume_coefficient",
    "dual_gauge",
    "gauge_bounds",
    "gauge_gradient",
    "gauge_value",
    "generate",
    "load_mesh",
    "run_stability",
    "save_mesh",
]
