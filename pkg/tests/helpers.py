"""Shared fixtures and independent oracles for the test suite."""

import numpy as np

from ragseg import community, imgio, pipeline, presegment


# ---------------------------------------------------------------------------
# partition enumeration and naive quality functions

def all_partitions(n):
    """Every partition of n items as a compact assignment array
    (restricted growth strings)."""
    a = [0] * n
    b = [0] * n   # b[k] = max(a[:k+1])
    while True:
        yield np.array(a)
        k = n - 1
        while k > 0 and a[k] == b[k - 1] + 1:
            k -= 1
        if k == 0:
            return
        a[k] += 1
        b[k] = max(b[k - 1], a[k])
        for j in range(k + 1, n):
            a[j] = 0
            b[j] = b[k]


def naive_modularity(g, assignment):
    """Pairwise-sum definition of weighted modularity, O(n^2)."""
    n = g.n
    A = np.zeros((n, n))
    for i, j, w in g.edges:
        if i == j:
            A[i, i] += 2.0 * w
        else:
            A[i, j] += w
            A[j, i] += w
    W2 = A.sum()
    if W2 == 0:
        return 0.0
    k = A.sum(axis=1)
    same = np.asarray(assignment)[:, None] == np.asarray(assignment)[None, :]
    return float(np.sum((A / W2 - np.outer(k, k) / (W2 * W2))[same]))


def brute_force_best_modularity(g):
    best_q, best_p = -np.inf, None
    for p in all_partitions(g.n):
        q = community.modularity(g, p)
        if q > best_q:
            best_q, best_p = q, p
    return best_q, best_p


def naive_pri(test, gt):
    """O(pairs) pixel-pair agreement, the definition itself."""
    t = np.asarray(test).ravel()
    g = np.asarray(gt).ravel()
    n = t.size
    agree = 0
    total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1
            if (t[i] == t[j]) == (g[i] == g[j]):
                agree += 1
    return agree / total


# ---------------------------------------------------------------------------
# graph fixtures

def two_triangle_graph():
    """Two unit-weight triangles joined by one bridge edge."""
    edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0),
             (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0),
             (2, 3, 1.0)]
    return community.WeightedGraph.from_edges(6, edges)


def two_clique_graph(k=4):
    """Two k-cliques joined by one bridge edge."""
    edges = []
    for base in (0, k):
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((base + i, base + j, 1.0))
    edges.append((k - 1, k, 1.0))
    return community.WeightedGraph.from_edges(2 * k, edges)


def random_graph(rng, max_n=8):
    n = int(rng.integers(3, max_n + 1))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                edges.append((i, j, float(rng.uniform(0.1, 2.0))))
    return community.WeightedGraph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# image fixtures

def make_quadrant_image():
    """128x128, four flat colors + Gaussian noise, the two most similar
    colors placed diagonally. Returns (image, ground truth)."""
    rng = np.random.default_rng(7)
    img = np.zeros((128, 128, 3), float)
    img[:64, :64] = (200, 30, 30)
    img[:64, 64:] = (30, 180, 40)
    img[64:, :64] = (230, 220, 40)
    img[64:, 64:] = (40, 60, 220)
    img = np.clip(img + rng.normal(0, 5, img.shape), 0, 255).astype(np.uint8)
    gt = np.zeros((128, 128), int)
    gt[:64, 64:] = 1
    gt[64:, :64] = 2
    gt[64:, 64:] = 3
    return img, gt


def _lab_of(rgb):
    return imgio.rgb_to_lab(np.array(rgb, np.uint8).reshape(1, 1, 3))[0, 0]


def _lab_dist2(c1, c2):
    d = _lab_of(c1) - _lab_of(c2)
    return float(d @ d)


def make_striped_image(seed):
    """Left half: stripes over a base color that steps at mid height
    (same texture, large color step); right half: flat. The color step is
    rejection-sampled into the band where only the texture term can
    bridge it. Returns (image, ground truth with 2 segments)."""
    rng = np.random.default_rng(seed)
    while True:
        ca = np.array([160, 60, 60]) + rng.integers(-10, 11, 3)
        cap = np.array([60, 140, 170]) + rng.integers(-10, 11, 3)
        cb = np.array([235, 235, 60]) + rng.integers(-10, 11, 3)
        if (5200 < _lab_dist2(ca, cap) < 8000
                and _lab_dist2(ca, cb) > 5200 and _lab_dist2(cap, cb) > 5200):
            break
    img = np.zeros((96, 96, 3), float)
    stripe = np.where((np.arange(48) // 4) % 2 == 0, 45.0, -45.0)
    img[:48, :48] = ca + stripe[None, :, None]
    img[48:, :48] = cap + stripe[None, :, None]
    img[:, 48:] = cb
    gt = np.zeros((96, 96), int)
    gt[:, 48:] = 1
    return np.clip(img, 0, 255).astype(np.uint8), gt


def make_flat_image(seed):
    """Four flat quadrants, similar colors placed diagonally.
    Returns (image, ground truth with 4 segments)."""
    rng = np.random.default_rng(seed + 1000)
    img = np.zeros((96, 96, 3), float)
    gt = np.zeros((96, 96), int)
    cols = [(200, 30, 30), (30, 160, 40), (230, 220, 40), (40, 60, 220)]
    for k, ((sy, sx), c) in enumerate(zip([(0, 0), (0, 48), (48, 0), (48, 48)],
                                          cols)):
        img[sy:sy + 48, sx:sx + 48] = np.clip(
            np.array(c) + rng.integers(-8, 9, 3), 0, 255)
        gt[sy:sy + 48, sx:sx + 48] = k
    return img.astype(np.uint8), gt


def make_voronoi_image(seed=11, shape=(321, 481), cells=25):
    """Benchmark-sized random cell mosaic with Gaussian noise; cells draw
    from a palette of strongly separated colors."""
    rng = np.random.default_rng(seed)
    h, w = shape
    pts = rng.uniform(0, 1, (cells, 2)) * [h, w]
    palette = np.array([(255, 0, 0), (0, 255, 0), (0, 0, 255),
                        (255, 255, 255), (0, 0, 0)])
    cols = palette[rng.integers(0, len(palette), cells)]
    yy, xx = np.mgrid[0:h, 0:w]
    d = (yy[..., None] - pts[:, 0]) ** 2 + (xx[..., None] - pts[:, 1]) ** 2
    cell = d.argmin(-1)
    img = np.clip(cols[cell] + rng.normal(0, 5, (h, w, 3)), 0, 255)
    return img.astype(np.uint8)


def make_blobby_image(seed, size=24, cells=5):
    """Small random mosaic for termination/monotonicity sweeps."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, (cells, 2)) * [size, size]
    cols = rng.integers(0, 256, (cells, 3))
    yy, xx = np.mgrid[0:size, 0:size]
    d = (yy[..., None] - pts[:, 0]) ** 2 + (xx[..., None] - pts[:, 1]) ** 2
    cell = d.argmin(-1)
    img = np.clip(cols[cell] + rng.normal(0, 3, (size, size, 3)), 0, 255)
    return img.astype(np.uint8)


def warm_numba():
    """Trigger JIT compilation before any timed section."""
    tiny = np.full((8, 8, 3), 128, np.uint8)
    pipeline.segment(tiny, pipeline.PipelineConfig(max_iterations=1))
    lab = imgio.rgb_to_lab(tiny)
    presegment.superpixel_segment(
        lab, presegment.SuperpixelParams(target_regions=4))
