"""Command-line entry point: ``wavekd {decompose,analyze,loss,toytrain}``.

Exit codes: 0 success, 1 I/O or decode failure, 2 invalid arguments or data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bands import canonical_bands
from .distill import DistillConfig, wkd_loss
from .errors import DecodeError, InvalidArgumentError
from .imagefile import list_images, load_image, save_band_images
from .metrics import band_distance
from .svg import band_bar_chart
from .toytrain import OBJECTIVES, ExperimentConfig, run_experiment
from .wavelet import decompose, max_levels, pad_for_levels

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2

_BAND_MODES = {"high": "high_only", "low": "low_only", "both": "both"}


def _err(msg: str):
    print(f"wavekd: {msg}", file=sys.stderr)


def _fit(image, levels: int):
    """Pad ``image`` for ``levels`` if needed; returns (image, padded_shape or None)."""
    h, w = image.shape[:2]
    if max_levels(h, w) >= levels:
        return image, None
    padded = pad_for_levels(image, levels)
    return padded, padded.shape[:2]


def _write(path, text: str):
    Path(path).write_text(text)


def pair_datasets(generated_dir, reference_dir):
    """Match files by stem. Returns (sorted stem list, pairs, unmatched stems)."""
    gen = list_images(generated_dir)
    ref = list_images(reference_dir)
    stems = sorted(set(gen) & set(ref))
    unmatched = sorted(set(gen) ^ set(ref))
    return stems, [(gen[s], ref[s]) for s in stems], unmatched


def cmd_analyze(args) -> int:
    stems, pairs, unmatched = pair_datasets(args.generated, args.reference)
    if unmatched:
        _err("unmatched stems: " + ", ".join(unmatched))
    if not pairs:
        raise InvalidArgumentError("no paired images; unmatched stems: " + (", ".join(unmatched) or "(none)"))
    generated, reference, padded = [], [], []
    for stem, (gp, rp) in zip(stems, pairs):
        g, r = load_image(gp), load_image(rp)
        if g.shape != r.shape:
            raise InvalidArgumentError(f"pair {stem!r}: shape mismatch {g.shape} vs {r.shape}")
        original = list(g.shape[:2])
        g, new_shape = _fit(g, args.levels)
        r, _ = _fit(r, args.levels)
        if new_shape is not None:
            padded.append({"stem": stem, "original": original, "padded": list(new_shape)})
        generated.append(g)
        reference.append(r)
    report = band_distance(generated, reference, args.levels)
    text = report.to_json(pairs=stems, unmatched=unmatched, padded=padded)
    wrote = False
    if args.json:
        _write(args.json, text)
        wrote = True
    if args.csv:
        _write(args.csv, report.to_csv())
        wrote = True
    if args.svg:
        names = [b.name for b in canonical_bands(args.levels)]
        values = [report[n].normalized for n in names]
        _write(args.svg, band_bar_chart(names, values, "Normalized L1 distance per band"))
        wrote = True
    if not wrote:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_loss(args) -> int:
    s, t = load_image(args.student), load_image(args.teacher)
    if s.shape != t.shape:
        raise InvalidArgumentError(f"student {s.shape} and teacher {t.shape} shapes differ")
    s, new_shape = _fit(s, args.levels)
    t, _ = _fit(t, args.levels)
    cfg = DistillConfig(levels=args.levels, selector=_BAND_MODES[args.bands])
    loss = wkd_loss([s], [t], cfg)
    out = {
        "value": loss.value,
        "per_band": loss.per_band,
        "bands": args.bands,
        "levels": args.levels,
        "padded": list(new_shape) if new_shape is not None else None,
    }
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_decompose(args) -> int:
    image = load_image(args.input)
    pyramid = decompose(image, args.levels)
    for p in save_band_images(pyramid, args.out):
        print(p)
    return EXIT_OK


def cmd_toytrain(args) -> int:
    objectives = tuple(o.strip() for o in args.objectives.split(",") if o.strip())
    distill = DistillConfig(alpha=args.alpha)
    cfg = ExperimentConfig(
        seeds=tuple(range(args.seeds)), steps=args.steps, objectives=objectives, distill=distill
    )
    text = run_experiment(cfg).to_json()
    if args.json:
        _write(args.json, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavekd", description="Wavelet band analysis and distillation losses.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="write per-band images of one image")
    d.add_argument("--input", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--levels", type=_positive_int, default=3)
    d.set_defaults(func=cmd_decompose)

    a = sub.add_parser("analyze", help="per-band normalized L1 between two image directories")
    a.add_argument("--generated", required=True)
    a.add_argument("--reference", required=True)
    a.add_argument("--levels", type=_positive_int, default=3)
    a.add_argument("--json")
    a.add_argument("--csv")
    a.add_argument("--svg")
    a.set_defaults(func=cmd_analyze)

    lo = sub.add_parser("loss", help="wavelet distillation loss between two images")
    lo.add_argument("--student", required=True)
    lo.add_argument("--teacher", required=True)
    lo.add_argument("--bands", choices=sorted(_BAND_MODES), default="high")
    lo.add_argument("--levels", type=_positive_int, default=3)
    lo.set_defaults(func=cmd_loss)

    t = sub.add_parser("toytrain", help="run the toy teacher/student experiment")
    t.add_argument("--seeds", type=_positive_int, default=5, help="number of seeds (0..N-1)")
    t.add_argument("--steps", type=_positive_int, default=500)
    t.add_argument("--alpha", type=float, default=1.0)
    t.add_argument("--objectives", default=",".join(OBJECTIVES))
    t.add_argument("--json")
    t.set_defaults(func=cmd_toytrain)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DecodeError as e:
        _err(str(e))
        return EXIT_IO
    except ValueError as e:
        _err(str(e))
        return EXIT_INVALID
    except OSError as e:
        _err(str(e))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
