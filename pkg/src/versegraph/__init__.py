"""versegraph: temporal multi-layer graph engine, analytics, and a
cross-domain resource-allocation optimizer."""

__version__ = "0.1.0"

from .core import GraphView, SnapshotView, TemporalMultiLayerGraph

__all__ = ["GraphView", "SnapshotView", "TemporalMultiLayerGraph", "__version__"]
