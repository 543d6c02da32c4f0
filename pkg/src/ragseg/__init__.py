"""Image segmentation by community detection on region adjacency graphs."""

__version__ = "0.1.0"

from . import community, features, imgio, metrics, pipeline, presegment, rag  # noqa: F401
