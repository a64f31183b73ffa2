"""Viability kernels, capture basins and sustainable-management partitions on lattices."""

from .geometry import CompactMap, compactify, decompactify, homogenize, transform_rhs
from .grid import Grid, LabelArray, PointSet
from .system import ControlledSystem, DomainError, ParameterError, UsageError
from .tsm import Region, TsmResult, classify_point, relative_volumes, tsm_partition
from .viability import SuccessorConfig, SuccessorMap, capture_basin, successors, viability_kernel

__version__ = "0.1.0"
