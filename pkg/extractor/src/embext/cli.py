"""Command line: embext --manifest M --out DIR --modality {wav2vec,bert}."""

import argparse
import json
import sys
from pathlib import Path

from .errors import ExtractorError, ModelLoadError
from .jobs import MODALITIES, ExtractionJob, run_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embext",
        description="Export pretrained representations as EMB1 containers")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True,
                        help="embedding root; files land in <out>/<modality>/")
    parser.add_argument("--modality", required=True, choices=MODALITIES)
    parser.add_argument("--model", default="seeded:0",
                        help="checkpoint path, pretrained directory, or "
                             "seeded:<int> for a random-weights encoder")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(manifest=args.manifest, out_root=args.out,
                            modality=args.modality, model_id=args.model,
                            device=args.device)
        summary = run_job(job)
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / f"{args.modality}_summary.json", "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{args.modality}: wrote {len(summary.written)}, "
          f"skipped {len(summary.skipped)} existing, "
          f"{len(summary.failures)} failure(s)")
    for failure in summary.failures:
        print(f"  failed {failure['id']}: {failure['error']}",
              file=sys.stderr)
    return 0 if summary.ok() else 1


if __name__ == "__main__":
    sys.exit(main())
