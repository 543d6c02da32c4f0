"""Convert BSDS500 ground-truth archives to plain label-map files.

Each BSDS ground-truth file stores several human annotations of one
image as a MATLAB cell array. This package extracts every annotator's
segmentation, compacts the labels to 0..n-1, and writes each one in two
interchangeable formats:

  <id>.gt<k>.png   16-bit grayscale PNG, pixel value = label id
  <id>.gt<k>.txt   text matrix with a "width height" header line

A manifest.json in the output directory lists the converted ids and
their annotator counts.
"""

import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.io import loadmat

__version__ = "0.1.0"


class IngestError(Exception):
    pass


@dataclass
class IngestJob:
    archive_dir: str
    out_dir: str
    ids: list = field(default=None)    # optional image-id filter


def extract_annotations(mat_path):
    """All annotator label maps in one ground-truth file, compacted.

    The file holds a 1xK cell array named groundTruth; each cell is a
    struct whose Segmentation field is the annotator's label image.
    """
    mat = loadmat(mat_path)
    if "groundTruth" not in mat:
        raise IngestError(f"{mat_path}: no groundTruth array")
    cells = mat["groundTruth"].ravel()
    if cells.size == 0:
        raise IngestError(f"{mat_path}: empty groundTruth array")
    maps = []
    for cell in cells:
        try:
            seg = np.asarray(cell["Segmentation"][0, 0])
        except (IndexError, KeyError, TypeError, ValueError) as e:
            raise IngestError(f"{mat_path}: malformed annotation cell: {e}")
        if seg.ndim != 2 or seg.size == 0:
            raise IngestError(f"{mat_path}: annotation is not a 2-D map")
        _, compact = np.unique(seg, return_inverse=True)
        maps.append(compact.reshape(seg.shape).astype(np.int32))
    return maps


def write_png(labels, path):
    if labels.max() > 0xFFFF:
        raise IngestError(f"{path}: label ids exceed 16-bit range")
    Image.fromarray(labels.astype(np.uint16)).save(path)


def write_txt(labels, path):
    h, w = labels.shape
    with open(path, "w") as f:
        f.write(f"{w} {h}\n")
        for row in labels:
            f.write(" ".join(str(int(v)) for v in row) + "\n")


def convert(job):
    """Convert every ground-truth file in the archive; returns the manifest.

    Malformed files are skipped with a warning. Raises IngestError when
    the archive has no ground-truth files or every file fails.
    """
    mat_paths = []
    for root, _, files in os.walk(job.archive_dir):
        for name in sorted(files):
            if name.endswith(".mat"):
                stem = os.path.splitext(name)[0]
                if job.ids is None or stem in job.ids:
                    mat_paths.append((stem, os.path.join(root, name)))
    if not mat_paths:
        raise IngestError(f"no ground-truth files in {job.archive_dir}")

    os.makedirs(job.out_dir, exist_ok=True)
    entries = []
    failures = 0
    for stem, path in sorted(mat_paths):
        try:
            maps = extract_annotations(path)
        except IngestError as e:
            print(f"warning: skipping {path}: {e}", file=sys.stderr)
            failures += 1
            continue
        for k, labels in enumerate(maps, start=1):
            write_png(labels, os.path.join(job.out_dir, f"{stem}.gt{k}.png"))
            write_txt(labels, os.path.join(job.out_dir, f"{stem}.gt{k}.txt"))
        h, w = maps[0].shape
        entries.append({"id": stem, "annotators": len(maps),
                        "height": h, "width": w})
    if not entries:
        raise IngestError("all ground-truth files failed to convert")
    manifest = {"images": entries}
    with open(os.path.join(job.out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest
