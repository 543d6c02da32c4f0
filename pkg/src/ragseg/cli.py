"""Batch segmentation runner.

Segments single images or directories, scores against ground-truth label
maps when provided, and can sweep one parameter across a value list,
reproducing the study-table layout (rows = configurations, columns =
metrics + mean runtime).
"""

import argparse
import concurrent.futures
import glob
import json
import os
import sys
import time
import zlib
from dataclasses import asdict, replace

import numpy as np

from . import imgio, metrics, pipeline, presegment, features

CSV_COLUMNS = ["image", "algorithm", "pri", "voi", "precision", "recall",
               "f_measure", "iterations", "seconds"]


def build_config(config_path=None, **overrides):
    """PipelineConfig from an optional JSON file plus flag overrides."""
    cfg = pipeline.PipelineConfig()
    if config_path:
        with open(config_path) as f:
            raw = json.load(f)
        ms = raw.pop("meanshift", {})
        sp = raw.pop("superpixels", {})
        sim = raw.pop("similarity", {})
        cfg = replace(cfg, **raw)
        cfg.meanshift = replace(cfg.meanshift, **ms)
        cfg.superpixels = replace(cfg.superpixels, **sp)
        cfg.similarity = replace(cfg.similarity, **sim)
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "a":
            cfg.similarity = replace(cfg.similarity, a=val)
        elif key == "sigma":
            cfg.similarity = replace(cfg.similarity, sigma=val)
        else:
            cfg = replace(cfg, **{key: val})
    pipeline.PipelineConfig.__post_init__(cfg)
    return cfg


def per_image_seed(global_seed, path):
    """Reproducible yet image-independent seed."""
    return zlib.crc32(f"{global_seed}:{os.path.basename(path)}".encode()) & 0x7FFFFFFF


def find_ground_truths(gt_dir, stem):
    """Ground-truth maps for an image: <stem>.gt*.{txt,png} or <stem>.{txt,png}."""
    if gt_dir is None:
        return []
    paths = sorted(glob.glob(os.path.join(gt_dir, f"{stem}.gt*")))
    if not paths:
        paths = [p for p in (os.path.join(gt_dir, f"{stem}.txt"),
                             os.path.join(gt_dir, f"{stem}.png"))
                 if os.path.exists(p)]
    return [imgio.read_label_map(p) for p in paths]


def boundary_overlay(img, labels):
    out = np.asarray(img).copy()
    out[metrics.boundary_mask(labels)] = (255, 0, 0)
    return out


def run_single(image_path, cfg, gts, out_dir, tol=2.0):
    """Segment one image, write artifacts, return a metrics row (or a
    row with empty metric fields when no ground truth is available)."""
    img = imgio.load_image(image_path)
    stem = os.path.splitext(os.path.basename(image_path))[0]
    t0 = time.perf_counter()
    labels, trace = pipeline.segment(img, cfg)
    seconds = time.perf_counter() - t0
    imgio.write_label_map(labels, os.path.join(out_dir, f"{stem}.labels.png"))
    imgio.write_label_map(labels, os.path.join(out_dir, f"{stem}.labels.txt"))
    imgio.save_image(boundary_overlay(img, labels),
                     os.path.join(out_dir, f"{stem}.overlay.png"))
    with open(os.path.join(out_dir, f"{stem}.trace.json"), "w") as f:
        json.dump([asdict(r) for r in trace], f, indent=2)
    row = {"image": stem, "algorithm": cfg.algorithm,
           "iterations": len(trace), "seconds": seconds}
    if gts:
        report = metrics.score(labels, gts, tol=tol)
        row.update(pri=report.pri, voi=report.voi, precision=report.precision,
                   recall=report.recall, f_measure=report.f_measure)
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def write_csv(path, rows, columns):
    with open(path, "w") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")


def _collect_inputs(inputs):
    paths = []
    for inp in inputs:
        if os.path.isdir(inp):
            for ext in ("*.png", "*.ppm"):
                paths.extend(sorted(glob.glob(os.path.join(inp, ext))))
        elif os.path.exists(inp):
            paths.append(inp)
        else:
            raise FileNotFoundError(inp)
    return paths


def _sweep_configs(base_cfg, sweep):
    param, _, values = sweep.partition("=")
    if not values:
        raise ValueError(f"bad sweep spec: {sweep!r} (expected param=v1,v2,...)")
    out = []
    for raw in values.split(","):
        if param == "a":
            cfg = replace(base_cfg, similarity=replace(base_cfg.similarity,
                                                       a=float(raw)))
        elif param == "sigma":
            cfg = replace(base_cfg, similarity=replace(base_cfg.similarity,
                                                       sigma=float(raw)))
        elif param == "algorithm":
            cfg = replace(base_cfg, algorithm=raw)
        elif param == "initializer":
            cfg = replace(base_cfg, initializer=raw)
        else:
            raise ValueError(f"unsupported sweep parameter: {param}")
        pipeline.PipelineConfig.__post_init__(cfg)
        out.append((raw, cfg))
    return out


def _run_batch(paths, cfg, args, out_dir):
    """Run images through a bounded worker pool; rows in input order."""
    workers = max(1, int(os.environ.get("RAGSEG_THREADS", "1")))
    jobs = []
    for p in paths:
        stem = os.path.splitext(os.path.basename(p))[0]
        gts = find_ground_truths(args.gt_dir, stem)
        icfg = replace(cfg, seed=per_image_seed(cfg.seed, p))
        jobs.append((p, icfg, gts))
    rows = [None] * len(jobs)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futs = {pool.submit(run_single, p, icfg, gts, out_dir, args.tol): k
                for k, (p, icfg, gts) in enumerate(jobs)}
        for fut in concurrent.futures.as_completed(futs):
            k = futs[fut]
            try:
                rows[k] = fut.result()
            except Exception as e:
                rows[k] = {"image": os.path.basename(jobs[k][0]),
                           "algorithm": cfg.algorithm, "error": str(e)}
                print(f"warning: {jobs[k][0]}: {e}", file=sys.stderr)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="ragseg",
        description="Graph-based image segmentation by community detection")
    ap.add_argument("--input", nargs="+", required=True,
                    help="image file(s) or directory")
    ap.add_argument("--gt-dir", help="directory of ground-truth label maps")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--algorithm",
                    choices=["louvain", "fast_greedy", "infomap", "fmcdrn"])
    ap.add_argument("--initializer", choices=["meanshift", "superpixels"])
    ap.add_argument("--a", type=float, help="texture/color balance in [0,1]")
    ap.add_argument("--sigma", type=float, help="color RBF width")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, default=2.0,
                    help="boundary match tolerance in pixels")
    ap.add_argument("--sweep", metavar="PARAM=V1,V2,...",
                    help="run once per value of one parameter")
    args = ap.parse_args(argv)

    try:
        cfg = build_config(args.config, algorithm=args.algorithm,
                           initializer=args.initializer, a=args.a,
                           sigma=args.sigma, seed=args.seed)
    except (ValueError, OSError) as e:
        print(f"error: bad configuration: {e}", file=sys.stderr)
        return 1

    try:
        paths = _collect_inputs(args.input)
    except FileNotFoundError as e:
        print(f"error: input not found: {e}", file=sys.stderr)
        return 1
    if not paths:
        print("error: no input images", file=sys.stderr)
        return 1

    try:
        os.makedirs(args.out, exist_ok=True)
        probe = os.path.join(args.out, ".writable")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as e:
        print(f"error: output directory not writable: {args.out}: {e}",
              file=sys.stderr)
        return 2

    if args.sweep:
        try:
            sweeps = _sweep_configs(cfg, args.sweep)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        detail = []
        summary = []
        for value, scfg in sweeps:
            subdir = os.path.join(args.out,
                                  f"{args.sweep.split('=')[0]}_{value}")
            os.makedirs(subdir, exist_ok=True)
            rows = _run_batch(paths, scfg, args, subdir)
            for r in rows:
                r["config"] = value
            detail.extend(rows)
            ok = [r for r in rows if "error" not in r]
            agg = {"config": value,
                   "seconds": np.mean([r["seconds"] for r in ok]) if ok else None}
            for m in ("pri", "voi", "precision", "recall", "f_measure"):
                vals = [r[m] for r in ok if m in r]
                agg[m] = float(np.mean(vals)) if vals else None
            summary.append(agg)
        write_csv(os.path.join(args.out, "sweep_detail.csv"), detail,
                  ["config"] + CSV_COLUMNS)
        write_csv(os.path.join(args.out, "sweep_summary.csv"), summary,
                  ["config", "pri", "voi", "precision", "recall",
                   "f_measure", "seconds"])
        return 0

    rows = _run_batch(paths, cfg, args, args.out)
    write_csv(os.path.join(args.out, "metrics.csv"), rows, CSV_COLUMNS)
    if any("error" in r for r in rows):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
