"""Iterative segmentation driver.

Initial over-segmentation, then a loop of: build the region adjacency
graph, refresh color/texture features and edge weights, detect
communities, merge same-community regions. The loop stops when the pixel
partition no longer changes (or a safety iteration cap is reached).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import community, features, imgio, presegment, rag


@dataclass
class IterationRecord:
    iteration: int
    regions: int
    communities: int
    modularity: float
    seconds: float


@dataclass
class PipelineConfig:
    initializer: str = "meanshift"
    meanshift: presegment.MeanShiftParams = field(
        default_factory=presegment.MeanShiftParams)
    superpixels: presegment.SuperpixelParams = field(
        default_factory=presegment.SuperpixelParams)
    similarity: features.SimilarityParams = field(
        default_factory=features.SimilarityParams)
    algorithm: str = "louvain"
    gammas: tuple = (0.005, 0.01, 0.05, 0.1, 0.5, 1.0)
    replicas: int = 6
    max_iterations: int = 50
    seed: int = 0
    # similarity below this floor is numerically zero; keeping such edges
    # would let scale-invariant objectives merge plainly dissimilar regions
    min_edge_weight: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.initializer not in ("meanshift", "superpixels"):
            raise ValueError(f"unknown initializer: {self.initializer}")
        if self.algorithm not in community.ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.algorithm}")


class PipelineError(Exception):
    def __init__(self, stage, iteration, cause):
        super().__init__(f"{stage} failed at iteration {iteration}: {cause}")
        self.stage = stage
        self.iteration = iteration
        self.__cause__ = cause


def stopping_check(prev, cur):
    """True iff the two label maps encode the same pixel partition
    (identical up to a bijective relabeling)."""
    prev = np.asarray(prev)
    cur = np.asarray(cur)
    if prev.shape != cur.shape:
        raise ValueError("label maps have different dimensions")
    pf = prev.ravel()
    cf = cur.ravel()
    fwd = {}
    bwd = {}
    for a, b in zip(pf.tolist(), cf.tolist()):
        if fwd.setdefault(a, b) != b:
            return False
        if bwd.setdefault(b, a) != a:
            return False
    return True


def segment(img, cfg=None):
    """Run the full pipeline on an 8-bit RGB image.

    Returns (label map, list of per-iteration records).
    """
    if cfg is None:
        cfg = PipelineConfig()
    lab = imgio.rgb_to_lab(img)
    gray = imgio.luminance(img)

    try:
        if cfg.initializer == "meanshift":
            labels = presegment.meanshift_segment(lab, cfg.meanshift)
        else:
            labels = presegment.superpixel_segment(lab, cfg.superpixels)
    except Exception as e:
        raise PipelineError("initial segmentation", 0, e)

    trace = []
    detect = community.ALGORITHMS[cfg.algorithm]
    for it in range(1, cfg.max_iterations + 1):
        t0 = time.perf_counter()
        n = int(labels.max()) + 1
        if n == 1:
            trace.append(IterationRecord(it, 1, 1, 0.0,
                                         time.perf_counter() - t0))
            break
        try:
            skeleton = rag.build_rag(labels)
            stats = features.region_stats(lab, labels)
            features.attach_hogs(gray, labels, stats, cfg.similarity)
            weighted = rag.weight_rag(skeleton, stats, cfg.similarity)
            graph = community.from_rag(weighted,
                                       min_weight=cfg.min_edge_weight)
            result = detect(graph, seed=cfg.seed + it,
                            gammas=cfg.gammas, replicas=cfg.replicas)
        except Exception as e:
            raise PipelineError(cfg.algorithm, it, e)
        merged = rag.merge_by_partition(labels, result.partition)
        ncomm = int(result.partition.max()) + 1
        trace.append(IterationRecord(it, n, ncomm, result.modularity,
                                     time.perf_counter() - t0))
        if ncomm == n or stopping_check(labels, merged):
            labels = merged
            break
        labels = merged
    return labels, trace
