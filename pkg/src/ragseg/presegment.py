"""Initial over-segmentation: mean-shift filtering and grid superpixels."""

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from .imgio import compact_labels


@dataclass
class MeanShiftParams:
    spatial_bandwidth: float = 8.0
    range_bandwidth: float = 10.0
    max_iters: int = 50
    convergence_eps: float = 0.1
    min_region_size: int = 20

    def __post_init__(self):
        if self.spatial_bandwidth <= 0 or self.range_bandwidth <= 0:
            raise ValueError("bandwidths must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.convergence_eps <= 0:
            raise ValueError("convergence_eps must be positive")


@dataclass
class SuperpixelParams:
    target_regions: int = 400
    lambda1: float = 1.0      # intensity term
    lambda2: float = 0.02     # convexity term
    max_sweeps: int = 10

    def __post_init__(self):
        if self.target_regions < 1:
            raise ValueError("target_regions must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be non-negative")


@njit(cache=True)
def _meanshift_modes(lab, hs, hr, max_iters, eps):
    h, w = lab.shape[0], lab.shape[1]
    modes = np.empty((h, w, 5))
    inv2hs2 = 1.0 / (2.0 * hs * hs)
    inv2hr2 = 1.0 / (2.0 * hr * hr)
    # neighborhood support = spatial bandwidth, Gaussian-weighted within
    radius = max(1, int(hs + 0.5))
    eps2 = eps * eps
    for py in range(h):
        for px in range(w):
            cy = float(py)
            cx = float(px)
            cl = lab[py, px, 0]
            ca = lab[py, px, 1]
            cb = lab[py, px, 2]
            for _ in range(max_iters):
                iy = int(cy + 0.5)
                ix = int(cx + 0.5)
                y0 = max(0, iy - radius)
                y1 = min(h, iy + radius + 1)
                x0 = max(0, ix - radius)
                x1 = min(w, ix + radius + 1)
                sw = 0.0
                sy = 0.0
                sx = 0.0
                sl = 0.0
                sa = 0.0
                sb = 0.0
                r2 = float(radius * radius) + 0.25
                for ny in range(y0, y1):
                    for nx in range(x0, x1):
                        ds = (ny - cy) ** 2 + (nx - cx) ** 2
                        if ds > r2:
                            continue
                        dl = lab[ny, nx, 0] - cl
                        da = lab[ny, nx, 1] - ca
                        db = lab[ny, nx, 2] - cb
                        e = ds * inv2hs2 + (dl * dl + da * da + db * db) * inv2hr2
                        if e > 9.0:    # weight < 1.3e-4, negligible
                            continue
                        wgt = np.exp(-e)
                        sw += wgt
                        sy += wgt * ny
                        sx += wgt * nx
                        sl += wgt * lab[ny, nx, 0]
                        sa += wgt * lab[ny, nx, 1]
                        sb += wgt * lab[ny, nx, 2]
                ny_ = sy / sw
                nx_ = sx / sw
                nl = sl / sw
                na = sa / sw
                nb = sb / sw
                shift2 = ((ny_ - cy) ** 2 + (nx_ - cx) ** 2
                          + (nl - cl) ** 2 + (na - ca) ** 2 + (nb - cb) ** 2)
                cy, cx, cl, ca, cb = ny_, nx_, nl, na, nb
                if shift2 < eps2:
                    break
            modes[py, px, 0] = cy
            modes[py, px, 1] = cx
            modes[py, px, 2] = cl
            modes[py, px, 3] = ca
            modes[py, px, 4] = cb
    return modes


@njit(cache=True)
def _link_modes(modes, hs, hr):
    """Union 4-adjacent pixels whose converged modes lie within the
    bandwidths; returns a root map (flat union-find parents)."""
    h, w = modes.shape[0], modes.shape[1]
    parent = np.arange(h * w)

    def find(p, x):
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    hs2 = hs * hs
    hr2 = hr * hr
    for y in range(h):
        for x in range(w):
            idx = y * w + x
            for k in range(2):
                ny = y + (1 if k == 0 else 0)
                nx = x + (1 if k == 1 else 0)
                if ny >= h or nx >= w:
                    continue
                ds = ((modes[y, x, 0] - modes[ny, nx, 0]) ** 2
                      + (modes[y, x, 1] - modes[ny, nx, 1]) ** 2)
                dr = ((modes[y, x, 2] - modes[ny, nx, 2]) ** 2
                      + (modes[y, x, 3] - modes[ny, nx, 3]) ** 2
                      + (modes[y, x, 4] - modes[ny, nx, 4]) ** 2)
                if ds <= hs2 and dr <= hr2:
                    ra = find(parent, idx)
                    rb = find(parent, ny * w + nx)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
    roots = np.empty(h * w, dtype=np.int64)
    for i in range(h * w):
        roots[i] = find(parent, i)
    return roots


def _absorb_small_regions(lab, labels, min_size):
    """Merge regions below min_size into their most LAB-similar 4-neighbor."""
    labels = compact_labels(labels)
    while True:
        n = int(labels.max()) + 1
        counts = np.bincount(labels.ravel(), minlength=n)
        small = np.where(counts < min_size)[0]
        if small.size == 0 or n == 1:
            return labels
        means = np.stack([
            np.bincount(labels.ravel(), weights=lab[..., k].ravel(), minlength=n)
            / counts for k in range(3)], axis=1)
        # adjacency from 4-neighbor label pairs
        nbrs = {}
        h_pairs = np.stack([labels[:, :-1].ravel(), labels[:, 1:].ravel()], axis=1)
        v_pairs = np.stack([labels[:-1, :].ravel(), labels[1:, :].ravel()], axis=1)
        allp = np.concatenate([h_pairs, v_pairs])
        allp = allp[allp[:, 0] != allp[:, 1]]
        for a, b in np.unique(np.sort(allp, axis=1), axis=0):
            nbrs.setdefault(a, []).append(b)
            nbrs.setdefault(b, []).append(a)
        # absorb every small region into its most similar neighbor in one
        # pass; chained absorptions resolve through the union-find
        parent = np.arange(n)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        merged = False
        for r in small:
            cand = nbrs.get(r, [])
            if not cand:
                continue
            d = [float(np.sum((means[r] - means[c]) ** 2)) for c in cand]
            target = cand[int(np.argmin(d))]
            ra, rb = find(r), find(target)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
                merged = True
        if not merged:
            return labels
        roots = np.array([find(i) for i in range(n)])
        labels = compact_labels(roots[labels])


def meanshift_segment(lab, params=None):
    """Mode-seeking segmentation in joint (x, y, L, a, b) space."""
    if params is None:
        params = MeanShiftParams()
    lab = np.ascontiguousarray(lab, dtype=np.float64)
    modes = _meanshift_modes(lab, params.spatial_bandwidth,
                             params.range_bandwidth, params.max_iters,
                             params.convergence_eps)
    roots = _link_modes(modes, params.spatial_bandwidth, params.range_bandwidth)
    labels = compact_labels(roots.reshape(lab.shape[:2]))
    return _absorb_small_regions(lab, labels, params.min_region_size)


# ---------------------------------------------------------------------------
# Grid superpixels

def _grid_init(h, w, target):
    rows = max(1, int(round(np.sqrt(target * h / w))))
    rows = min(rows, h)
    cols = max(1, min(w, int(round(target / rows))))
    ys = np.minimum((np.arange(h) * rows) // h, rows - 1)
    xs = np.minimum((np.arange(w) * cols) // w, cols - 1)
    return ys[:, None] * cols + xs[None, :]


@njit(cache=True)
def _keeps_connected(labels, y, x):
    """True if removing (y, x) from its segment keeps its same-label
    4-neighbors locally connected (3x3 simple-point test)."""
    h, w = labels.shape
    lab = labels[y, x]
    patch = np.zeros((3, 3), dtype=np.int64)
    cnt = 0
    for dy in range(-1, 2):
        for dx in range(-1, 2):
            if dy == 0 and dx == 0:
                continue
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] == lab:
                patch[dy + 1, dx + 1] = 1
                if dy == 0 or dx == 0:
                    cnt += 1
    if cnt == 0:
        return False
    # flood fill over the 8-neighborhood restricted to 4-connectivity
    # through the missing center
    start_y, start_x = -1, -1
    for dy in range(3):
        for dx in range(3):
            if patch[dy, dx] == 1 and (dy == 1 or dx == 1):
                start_y, start_x = dy, dx
                break
        if start_y >= 0:
            break
    stack = [(start_y, start_x)]
    seen = np.zeros((3, 3), dtype=np.int64)
    seen[start_y, start_x] = 1
    while stack:
        cy, cx = stack.pop()
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                if dy == 0 and dx == 0:
                    continue
                ny, nx = cy + dy, cx + dx
                if 0 <= ny < 3 and 0 <= nx < 3 and patch[ny, nx] == 1 \
                        and seen[ny, nx] == 0:
                    # diagonal steps are only valid if a shared 4-neighbor
                    # inside the patch connects them
                    if dy != 0 and dx != 0:
                        if patch[cy, nx] == 0 and patch[ny, cx] == 0:
                            continue
                    seen[ny, nx] = 1
                    stack.append((ny, nx))
    for dy in range(3):
        for dx in range(3):
            if patch[dy, dx] == 1 and (dy == 1 or dx == 1) and seen[dy, dx] == 0:
                return False
    return True


@njit(cache=True)
def _superpixel_sweeps(intensity, labels, lam1, lam2, max_sweeps):
    h, w = intensity.shape
    n = labels.max() + 1
    count = np.zeros(n)
    sum_i = np.zeros(n)
    sum_y = np.zeros(n)
    sum_x = np.zeros(n)
    for y in range(h):
        for x in range(w):
            s = labels[y, x]
            count[s] += 1
            sum_i[s] += intensity[y, x]
            sum_y[s] += y
            sum_x[s] += x
    for _ in range(max_sweeps):
        moved = 0
        for y in range(h):
            for x in range(w):
                cur = labels[y, x]
                if count[cur] <= 1:
                    continue
                best = cur
                best_cost = (lam1 * abs(intensity[y, x] - sum_i[cur] / count[cur])
                             + lam2 * ((x - sum_x[cur] / count[cur]) ** 2
                                       + (y - sum_y[cur] / count[cur]) ** 2))
                for k in range(4):
                    ny = y + (1 if k == 0 else -1 if k == 1 else 0)
                    nx = x + (1 if k == 2 else -1 if k == 3 else 0)
                    if ny < 0 or ny >= h or nx < 0 or nx >= w:
                        continue
                    cand = labels[ny, nx]
                    if cand == cur:
                        continue
                    cost = (lam1 * abs(intensity[y, x] - sum_i[cand] / count[cand])
                            + lam2 * ((x - sum_x[cand] / count[cand]) ** 2
                                      + (y - sum_y[cand] / count[cand]) ** 2))
                    if cost < best_cost - 1e-12:
                        best_cost = cost
                        best = cand
                if best != cur and _keeps_connected(labels, y, x):
                    labels[y, x] = best
                    count[cur] -= 1
                    sum_i[cur] -= intensity[y, x]
                    sum_y[cur] -= y
                    sum_x[cur] -= x
                    count[best] += 1
                    sum_i[best] += intensity[y, x]
                    sum_y[best] += y
                    sum_x[best] += x
                    moved += 1
        if moved == 0:
            break
    return labels


def superpixel_segment(lab, params=None):
    """Connected k-means style superpixels on a regular grid start."""
    if params is None:
        params = SuperpixelParams()
    lab = np.asarray(lab, dtype=np.float64)
    h, w = lab.shape[:2]
    if params.target_regions > h * w:
        raise ValueError("target_regions exceeds pixel count")
    labels = _grid_init(h, w, params.target_regions).astype(np.int64)
    intensity = np.ascontiguousarray(lab[..., 0])
    labels = _superpixel_sweeps(intensity, labels, params.lambda1,
                                params.lambda2, params.max_sweeps)
    return _split_disconnected(compact_labels(labels))


def _split_disconnected(labels):
    """Safety net: relabel so every region is one 4-connected component."""
    out = np.full(labels.shape, -1, dtype=np.int32)
    nxt = 0
    for r in range(int(labels.max()) + 1):
        comp, ncomp = ndimage.label(labels == r,
                                    structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        for c in range(1, ncomp + 1):
            out[comp == c] = nxt
            nxt += 1
    return compact_labels(out)
