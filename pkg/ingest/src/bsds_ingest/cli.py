"""Command line entry point: bsds-ingest convert --archive DIR --out DIR."""

import argparse
import sys

from . import IngestError, IngestJob, convert


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="bsds-ingest",
        description="Convert BSDS500 ground-truth archives to label-map files")
    sub = ap.add_subparsers(dest="command", required=True)
    cv = sub.add_parser("convert", help="convert an archive directory")
    cv.add_argument("--archive", required=True,
                    help="directory containing per-image .mat ground truths")
    cv.add_argument("--out", required=True, help="output directory")
    cv.add_argument("--ids", help="comma-separated image ids to convert")
    args = ap.parse_args(argv)

    job = IngestJob(archive_dir=args.archive, out_dir=args.out,
                    ids=args.ids.split(",") if args.ids else None)
    try:
        manifest = convert(job)
    except IngestError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"converted {len(manifest['images'])} image(s) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
