"""Per-region descriptors and pairwise similarities.

Regions are described by their mean/variance in LAB and by an oriented
gradient histogram (HOG) computed over the region's bounding box. Edge
weights combine a color kernel similarity and a texture cosine similarity
through a balancing parameter.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass
class SimilarityParams:
    sigma: float = 16.0        # RBF width on squared LAB mean distance
    a: float = 0.4             # texture/color balance, 0 = color only
    hog_cell: int = 8
    hog_bins: int = 9
    hog_block: int = 2         # cells per block side

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("balancing parameter a must be in [0, 1]")
        if self.hog_cell < 2 or self.hog_bins < 2:
            raise ValueError("hog_cell >= 2 and hog_bins >= 2 required")


@dataclass
class RegionStats:
    id: int
    pixel_count: int
    mean_lab: np.ndarray
    variance_lab: np.ndarray
    bbox: tuple                      # (y0, y1, x0, x1), half-open
    hog: np.ndarray | None = field(default=None)


def region_stats(lab, labels):
    """Mean and population variance of LAB per region, plus bounding boxes."""
    lab = np.asarray(lab, dtype=np.float64)
    labels = np.asarray(labels)
    if lab.shape[:2] != labels.shape:
        raise ValueError(f"raster size mismatch: {lab.shape[:2]} vs {labels.shape}")
    n = int(labels.max()) + 1
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError("labels are not compact")
    means = np.empty((n, 3))
    variances = np.empty((n, 3))
    for k in range(3):
        ch = lab[..., k].ravel()
        s = np.bincount(flat, weights=ch, minlength=n)
        s2 = np.bincount(flat, weights=ch * ch, minlength=n)
        means[:, k] = s / counts
        variances[:, k] = np.maximum(s2 / counts - means[:, k] ** 2, 0.0)
    slices = ndimage.find_objects(labels + 1)
    stats = []
    for i in range(n):
        sy, sx = slices[i]
        stats.append(RegionStats(
            id=i,
            pixel_count=int(counts[i]),
            mean_lab=means[i],
            variance_lab=variances[i],
            bbox=(sy.start, sy.stop, sx.start, sx.stop),
        ))
    return stats


def color_distance(ri, rj):
    """Squared Euclidean distance between region LAB means."""
    d = ri.mean_lab - rj.mean_lab
    return float(d @ d)


def color_similarity(ri, rj, sigma):
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return float(np.exp(-color_distance(ri, rj) / (2.0 * sigma * sigma)))


def gradients(gray):
    """Central-difference gradients [-1, 0, 1] with edge replication.

    Edge replication makes the border gradient zero in the clamped
    direction, which keeps descriptors invariant to global offsets.
    """
    g = np.asarray(gray, dtype=np.float64)
    p = np.pad(g, 1, mode="edge")
    gx = p[1:-1, 2:] - p[1:-1, :-2]
    gy = p[2:, 1:-1] - p[:-2, 1:-1]
    return gx, gy


_HOG_NORM_EPS = 1e-6


def region_hog(gray, labels, region, params, grads=None):
    """HOG descriptor of one region.

    The region's bounding box is tiled into hog_cell x hog_cell cells; a
    cell counts as part of the region when its center pixel carries the
    region's label. Per-cell unsigned-orientation histograms (magnitude
    weighted, linear bin interpolation) are grouped into 2x2-cell blocks
    with stride one cell, each block L2-normalized. Regions too small for
    a full block fall back to a single normalized pooled histogram.
    """
    labels = np.asarray(labels)
    gray = np.asarray(gray, dtype=np.float64)
    if gray.shape != labels.shape:
        raise ValueError("gray raster and label map sizes differ")
    mask_any = labels == region
    if not mask_any.any():
        raise ValueError(f"unknown region id {region}")
    if grads is None:
        grads = gradients(gray)
    gx, gy = grads

    ys, xs = np.where(mask_any)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    return _hog_from_bbox(gx, gy, labels, region, (y0, y1, x0, x1), params)


def _hog_from_bbox(gx, gy, labels, region, bbox, params):
    c = params.hog_cell
    nbins = params.hog_bins
    y0, y1, x0, x1 = bbox
    bh, bw = y1 - y0, x1 - x0
    ncy = (bh + c - 1) // c
    ncx = (bw + c - 1) // c

    sub_gx = gx[y0:y1, x0:x1]
    sub_gy = gy[y0:y1, x0:x1]
    mag = np.hypot(sub_gx, sub_gy)
    ang = np.degrees(np.arctan2(sub_gy, sub_gx)) % 180.0

    # magnitude-weighted vote split linearly between the two nearest bins
    binw = 180.0 / nbins
    pos = ang / binw - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo_bin = lo % nbins
    hi_bin = (lo + 1) % nbins

    yy, xx = np.mgrid[0:bh, 0:bw]
    cell_idx = (yy // c) * ncx + (xx // c)
    hist = np.zeros(ncy * ncx * nbins)
    np.add.at(hist, (cell_idx * nbins + lo_bin).ravel(),
              (mag * (1.0 - frac)).ravel())
    np.add.at(hist, (cell_idx * nbins + hi_bin).ravel(),
              (mag * frac).ravel())
    hist = hist.reshape(ncy, ncx, nbins)

    # keep only cells whose center pixel belongs to the region
    cy_start = y0 + np.arange(ncy) * c
    mid_y = (cy_start + np.minimum(cy_start + c, y1) - 1) // 2
    cx_start = x0 + np.arange(ncx) * c
    mid_x = (cx_start + np.minimum(cx_start + c, x1) - 1) // 2
    member = labels[np.ix_(mid_y, mid_x)] == region
    hist[~member] = 0.0

    b = params.hog_block
    if ncy < b or ncx < b:
        pooled = hist.sum(axis=(0, 1))
        return _l2_normalize(pooled)
    blocks = []
    for by in range(ncy - b + 1):
        for bx in range(ncx - b + 1):
            v = hist[by:by + b, bx:bx + b].ravel()
            blocks.append(_l2_normalize(v))
    return np.concatenate(blocks)


def _l2_normalize(v):
    return v / np.sqrt(v @ v + _HOG_NORM_EPS ** 2)


def attach_hogs(gray, labels, stats, params):
    """Fill the hog field of every RegionStats in place (shared gradients)."""
    grads = gradients(gray)
    gx, gy = grads
    labels = np.asarray(labels)
    for st in stats:
        st.hog = _hog_from_bbox(gx, gy, labels, st.id, st.bbox, params)
    return stats


def texture_similarity(hi, hj):
    """Cosine similarity of two HOG vectors; zero-padded to equal length.

    Pairs where either vector has zero norm score 0 so that flat regions
    are compared by color alone.
    """
    hi = np.asarray(hi, dtype=np.float64)
    hj = np.asarray(hj, dtype=np.float64)
    if hi.size < hj.size:
        hi = np.pad(hi, (0, hj.size - hi.size))
    elif hj.size < hi.size:
        hj = np.pad(hj, (0, hi.size - hj.size))
    ni = np.linalg.norm(hi)
    nj = np.linalg.norm(hj)
    if ni == 0.0 or nj == 0.0:
        return 0.0
    return float(np.clip(hi @ hj / (ni * nj), 0.0, 1.0))


def edge_weight(ri, rj, params):
    """Combined similarity a*sqrt(t*c) + (1-a)*c of two regions."""
    c = color_similarity(ri, rj, params.sigma)
    if ri.hog is None or rj.hog is None:
        t = 0.0
    else:
        t = texture_similarity(ri.hog, rj.hog)
    a = params.a
    return a * np.sqrt(t * c) + (1.0 - a) * c
