"""Segmentation scoring against ground truths: PRI, VOI, boundary P/R/F."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass
class MetricReport:
    pri: float
    voi: float
    precision: float
    recall: float
    f_measure: float
    per_gt: list = field(default_factory=list)   # dicts per ground truth


def _check_dims(test, gt):
    if np.asarray(test).shape != np.asarray(gt).shape:
        raise ValueError(f"map dimensions differ: "
                         f"{np.asarray(test).shape} vs {np.asarray(gt).shape}")


def _contingency(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    na = int(a.max()) + 1
    nb = int(b.max()) + 1
    cont = np.zeros((na, nb))
    np.add.at(cont, (a, b), 1.0)
    return cont


def _rand_index(test, gt):
    """Pixel-pair agreement fraction, via the contingency table."""
    cont = _contingency(test, gt)
    n = cont.sum()
    t_pairs = n * (n - 1) / 2.0
    same_test = float(np.sum([c * (c - 1) / 2.0 for c in cont.sum(axis=1)]))
    same_gt = float(np.sum([c * (c - 1) / 2.0 for c in cont.sum(axis=0)]))
    same_both = float(np.sum(cont * (cont - 1) / 2.0))
    agree = t_pairs - same_test - same_gt + 2.0 * same_both
    return agree / t_pairs


def pri(test, gts):
    """Probabilistic Rand index of a test map against ground-truth maps.

    Equals the mean over ground truths of the pairwise Rand agreement,
    which is the pixel-pair formulation with p_ij averaged over truths.
    """
    gts = list(gts)
    if not gts:
        raise ValueError("empty ground-truth set")
    for gt in gts:
        _check_dims(test, gt)
    return float(np.mean([_rand_index(test, gt) for gt in gts]))


def voi(test, gt):
    """Variation of information between two label maps (natural log)."""
    _check_dims(test, gt)
    cont = _contingency(test, gt)
    n = cont.sum()
    p = cont / n
    pi = p.sum(axis=1)
    pj = p.sum(axis=0)
    h_test = -sum(x * math.log(x) for x in pi if x > 0)
    h_gt = -sum(x * math.log(x) for x in pj if x > 0)
    info = 0.0
    nz = p > 0
    info = float(np.sum(p[nz] * np.log(p[nz] / np.outer(pi, pj)[nz])))
    return max(h_test + h_gt - 2.0 * info, 0.0)


def voi_mean(test, gts):
    gts = list(gts)
    if not gts:
        raise ValueError("empty ground-truth set")
    return float(np.mean([voi(test, gt) for gt in gts]))


def boundary_mask(labels):
    """Pixels having a 4-neighbor with a different label."""
    labels = np.asarray(labels)
    mask = np.zeros(labels.shape, dtype=bool)
    mask[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    mask[:, 1:] |= labels[:, :-1] != labels[:, 1:]
    mask[:-1, :] |= labels[:-1, :] != labels[1:, :]
    mask[1:, :] |= labels[:-1, :] != labels[1:, :]
    return mask


def _match_fraction(src_mask, dst_mask, tol):
    """Fraction of src boundary pixels within Euclidean tol of dst ones."""
    n_src = int(src_mask.sum())
    if n_src == 0:
        return 0.0, 0
    if not dst_mask.any():
        return 0.0, n_src
    if tol <= 0:
        matched = int((src_mask & dst_mask).sum())
    else:
        dist = ndimage.distance_transform_edt(~dst_mask)
        matched = int((src_mask & (dist <= tol)).sum())
    return matched / n_src, n_src


def f_measure(precision, recall, alpha=0.5):
    denom = (1.0 - alpha) * recall + alpha * precision
    if denom == 0:
        return 0.0
    return precision * recall / denom


def boundary_prf(test, gts, tol=2.0, alpha=0.5, precision_union=False):
    """Boundary precision/recall/F of a test map against ground truths.

    By default every metric is averaged over the ground truths; with
    precision_union=True, test boundary pixels instead match against the
    union of all ground-truth boundaries.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    gts = list(gts)
    if not gts:
        raise ValueError("empty ground-truth set")
    for gt in gts:
        _check_dims(test, gt)
    test_b = boundary_mask(test)
    gt_bs = [boundary_mask(gt) for gt in gts]
    if precision_union:
        union = np.logical_or.reduce(gt_bs)
        p, _ = _match_fraction(test_b, union, tol)
        precisions = [p] * len(gts)
    else:
        precisions = [_match_fraction(test_b, gb, tol)[0] for gb in gt_bs]
    recalls = [_match_fraction(gb, test_b, tol)[0] for gb in gt_bs]
    precision = float(np.mean(precisions))
    recall = float(np.mean(recalls))
    return precision, recall, f_measure(precision, recall, alpha)


def score(test, gts, tol=2.0, alpha=0.5):
    """Full metric report for one segmentation against its ground truths."""
    gts = list(gts)
    p, r, f = boundary_prf(test, gts, tol=tol, alpha=alpha)
    per_gt = []
    for gt in gts:
        gp, gr, gf = boundary_prf(test, [gt], tol=tol, alpha=alpha)
        per_gt.append({
            "pri": _rand_index(test, gt),
            "voi": voi(test, gt),
            "precision": gp,
            "recall": gr,
            "f_measure": gf,
        })
    return MetricReport(
        pri=pri(test, gts),
        voi=voi_mean(test, gts),
        precision=p,
        recall=r,
        f_measure=f,
        per_gt=per_gt,
    )
