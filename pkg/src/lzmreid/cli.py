"""Command-line entry point: ``lzmreid <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (TARGET_HEIGHT, TARGET_WIDTH, load_image, read_features, read_manifest,
                      resize, resolve_path, write_features)
from .ecn import EcnParams, rerank
from .embedder import DEFAULT_GRID, STREAMS, embed_image, import_features, join_manifest
from .encoder import encode_gray_ir, encode_rgb_ir
from .errors import LZMError
from .evaluation import EvalConfig, evaluate
from .synthetic import SyntheticSpec, generate_synthetic
from .zernike import build_filter_bank, format_bank

# flags that never change an artifact's contents; left out of logged provenance
_UNLOGGED = ("--threads", "--out")


def logged_argv(argv) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in _UNLOGGED:
            skip = True
            continue
        if any(a.startswith(f + "=") for f in _UNLOGGED):
            continue
        out.append(a)
    return out


def _grid(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 6x2 or 4, got {text!r}") from None
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"grid must look like 6x2 or 4, got {text!r}")
    return parts[0], parts[1]


def _streams(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in STREAMS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown stream(s) {bad}; choose from {','.join(STREAMS)}")
    return names


def _add_bank(p):
    p.add_argument("--n", type=int, default=3, metavar="N",
                   help="maximum moment order (default: 3, the published LZM setting)")
    p.add_argument("--k", type=int, default=5, metavar="K",
                   help="odd kernel size (default: 5, the published LZM setting)")


def _add_embed(p):
    _add_bank(p)
    p.add_argument("--grid", type=_grid, default=DEFAULT_GRID, metavar="RxC",
                   help="pooling grid rows x cols (default: 6x2)")
    p.add_argument("--streams", type=_streams, default=STREAMS,
                   help=f"comma-separated streams in concatenation order (default: {','.join(STREAMS)})")
    p.add_argument("--normalize-streams", action="store_true",
                   help="l2-normalize each stream before concatenation (default: off)")
    p.add_argument("--no-resize", action="store_true",
                   help=f"skip resizing inputs to {TARGET_HEIGHT}x{TARGET_WIDTH} (height x width)")


def _add_ecn(p):
    p.add_argument("--t", type=int, default=3, help="nearest neighbours expanded per image (default: 3)")
    p.add_argument("--q", type=int, default=8, help="neighbours taken from each expanded image (default: 8)")
    p.add_argument("--bigk", type=int, default=25,
                   help="rank-list window of the list similarity (default: 25)")


def _add_eval(p, seed_default=0, seed_help="trial i uses seed + i"):
    p.add_argument("--mode", choices=("all", "indoor", "all-search", "indoor-search"), default="all",
                   help="gallery cameras: all = 1,2,4,5; indoor = 1,2 (default: all)")
    p.add_argument("--trials", type=int, default=10,
                   help="random gallery splits to average (default: 10, the standard protocol)")
    p.add_argument("--seed", type=int, default=seed_default,
                   help=f"{seed_help} (default: {seed_default})")
    p.add_argument("--rerank", action="store_true", help="rank with ECN distances (default: off, euclidean ranking)")
    _add_ecn(p)


def _add_synth(p, seed_default=42):
    d = SyntheticSpec()
    p.add_argument("--n-ids", type=int, default=d.n_ids, help=f"identities (default: {d.n_ids})")
    p.add_argument("--rgb-per-camera", type=int, default=d.rgb_per_camera,
                   help=f"RGB views per identity per RGB camera (default: {d.rgb_per_camera})")
    p.add_argument("--ir-per-camera", type=int, default=d.ir_per_camera,
                   help=f"infrared views per identity per IR camera (default: {d.ir_per_camera})")
    p.add_argument("--height", type=int, default=d.height, help=f"image height (default: {d.height})")
    p.add_argument("--width", type=int, default=d.width, help=f"image width (default: {d.width})")
    p.add_argument("--noise", type=float, default=d.noise,
                   help=f"infrared Gaussian noise sigma (default: {d.noise})")
    p.add_argument("--jitter", type=float, default=d.jitter,
                   help=f"relative crop jitter (default: {d.jitter})")
    p.add_argument("--bands", type=int, default=d.bands,
                   help=f"texture bands per body (default: {d.bands})")
    if seed_default is not None:
        p.add_argument("--seed", type=int, default=seed_default, help=f"fixture seed (default: {seed_default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lzmreid",
        description="Local Zernike moment encoding, ECN re-ranking and VI-ReId evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("filters", help="dump an LZM filter bank as text")
    _add_bank(p)
    p.add_argument("--out", type=Path, help="write to a file (default: stdout)")

    p = sub.add_parser("synth", help="generate the synthetic cross-modality fixture")
    p.add_argument("--out", type=Path, required=True, help="output directory (required)")
    _add_synth(p)

    p = sub.add_parser("encode", help="LZM-encode one image and report the pattern-map stack")
    p.add_argument("image", type=Path, help="PNG, PGM or PPM image")
    p.add_argument("--modality", choices=("rgb", "ir"), help="default: inferred from channel count")
    p.add_argument("--stream", choices=("gray_ir", "rgb_ir"), default="gray_ir",
                   help="single-plane (2K maps) or per-channel (6K maps) encoding (default: gray_ir)")
    p.add_argument("--no-resize", action="store_true",
                   help=f"encode at native size instead of {TARGET_HEIGHT}x{TARGET_WIDTH} (default: resize)")
    p.add_argument("--dump-maps", type=Path, metavar="FILE",
                   help="debug: write the maps as an LZMF container, one row per map (default: off)")
    _add_bank(p)

    p = sub.add_parser("embed", help="embed every image of a manifest into a feature file")
    p.add_argument("--manifest", type=Path, required=True, help="manifest CSV (required, no default)")
    p.add_argument("--out", type=Path, required=True, help="output feature file (required, no default)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it (default: 1)")
    _add_embed(p)

    p = sub.add_parser("rerank", help="ECN distances between a probe and a gallery feature file")
    p.add_argument("--probe", type=Path, required=True, help="probe feature file (required)")
    p.add_argument("--gallery", type=Path, required=True, help="gallery feature file (required)")
    p.add_argument("--out", type=Path, required=True, help="probe x gallery distance matrix (LZMF)")
    _add_ecn(p)

    p = sub.add_parser("eval", help="CMC / mAP over repeated single-shot splits")
    p.add_argument("--manifest", type=Path, required=True, help="manifest CSV (required, no default)")
    p.add_argument("--features", type=Path, required=True, help="feature file (required, no default)")
    p.add_argument("--out", type=Path, default=Path("results.csv"),
                   help="machine-readable result file (default: results.csv)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it (default: 1)")
    _add_eval(p)

    p = sub.add_parser("pipeline", help="synth -> encode -> embed -> eval in one run")
    p.add_argument("--out", type=Path, default=Path("lzmreid-run"), help="working directory (default: lzmreid-run)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it (default: 1)")
    _add_synth(p, seed_default=None)
    _add_embed(p)
    _add_eval(p, seed_default=42,
              seed_help="seeds both the fixture and the splits; trial i uses seed + i")
    return parser


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _embed_manifest(manifest_path: Path, args, threads: int, provenance) -> tuple[list, np.ndarray, dict]:
    entries = read_manifest(manifest_path)
    bank = build_filter_bank(args.n, args.k)

    def one(entry):
        img = load_image(resolve_path(entry, manifest_path))
        if not args.no_resize:
            img = resize(img)
        return embed_image(img, entry.modality, bank, args.grid, args.streams,
                           args.normalize_streams)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, entries))
    else:
        rows = [one(e) for e in entries]
    meta = {
        "streams": list(args.streams),
        "bank": {"n_max": args.n, "k": args.k, "order": "lexicographic (n, m)"},
        "grid": list(args.grid),
        "normalize_streams": bool(args.normalize_streams),
        "argv": provenance,
    }
    return entries, np.vstack(rows), meta


def _write_results(report, path: Path, provenance) -> None:
    lines = ["# lzmreid " + " ".join(provenance)] + report.result_lines()
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_eval(manifest, features, args, out: Path, provenance) -> None:
    config = EvalConfig(args.mode, args.trials, args.seed)
    params = EcnParams(args.t, args.q, args.bigk)
    report = evaluate(manifest, features, config, args.rerank, params, threads=args.threads)
    print(report.summary())
    _write_results(report, out, provenance)


def cmd_filters(args, provenance):
    text = format_bank(build_filter_bank(args.n, args.k))
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _synth_spec(args) -> SyntheticSpec:
    return SyntheticSpec(args.n_ids, args.rgb_per_camera, args.ir_per_camera, args.height,
                         args.width, args.seed, args.noise, args.jitter, args.bands)


def cmd_synth(args, provenance):
    entries, path = generate_synthetic(_synth_spec(args), args.out)
    print(f"wrote {len(entries)} images and {path}")


def cmd_encode(args, provenance):
    img = load_image(args.image)
    if not args.no_resize:
        img = resize(img)
    modality = args.modality or ("ir" if img.shape[2] == 1 else "rgb")
    bank = build_filter_bank(args.n, args.k)
    if args.stream == "gray_ir":
        stack = encode_gray_ir(img, bank)
        names = bank.channel_names
    else:
        stack = encode_rgb_ir(img, modality, bank)
        names = [f"{c}:{n}" for c in "rgb" for n in bank.channel_names]
    H, W, C = stack.shape
    print(f"{args.image}: {H}x{W}, {C} pattern maps ({args.stream}, n={args.n}, k={args.k})")
    if args.dump_maps:
        rows = np.moveaxis(stack.values, 2, 0).reshape(C, H * W)
        write_features(names, rows, args.dump_maps,
                       {"shape": [H, W, C], "bank": bank.descriptor(), "layout": args.stream,
                        "argv": provenance})


def cmd_embed(args, provenance):
    entries, matrix, meta = _embed_manifest(args.manifest, args, args.threads, provenance)
    write_features([e.image_id for e in entries], matrix, args.out, meta)
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} features to {args.out}")


def cmd_rerank(args, provenance):
    pids, P, _ = read_features(args.probe)
    gids, G, _ = read_features(args.gallery)
    dist = rerank(P.astype(np.float64), G.astype(np.float64), EcnParams(args.t, args.q, args.bigk))
    write_features(pids, dist, args.out,
                   {"column_ids": gids, "ecn": {"t": args.t, "q": args.q, "K": args.bigk},
                    "argv": provenance})
    print(f"wrote {dist.shape[0]} x {dist.shape[1]} ECN distances to {args.out}")


def cmd_eval(args, provenance):
    manifest = read_manifest(args.manifest)
    features = import_features(args.features, manifest)
    _run_eval(manifest, features, args, args.out, provenance)


def cmd_pipeline(args, provenance):
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    spec = _synth_spec(args)
    _log(f"generating {spec.n_ids} identities under {out}")
    _, manifest_path = generate_synthetic(spec, out / "data")
    _log("encoding and embedding")
    entries, matrix, meta = _embed_manifest(manifest_path, args, args.threads, provenance)
    feat_path = out / "features.lzmf"
    write_features([e.image_id for e in entries], matrix, feat_path, meta)
    ids, stored, stored_meta = read_features(feat_path)
    features = join_manifest(ids, stored, entries, stored_meta)
    _run_eval(entries, features, args, out / "results.csv", provenance)


COMMANDS = {
    "filters": cmd_filters,
    "synth": cmd_synth,
    "encode": cmd_encode,
    "embed": cmd_embed,
    "rerank": cmd_rerank,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        _log("error: --threads must be >= 1")
        return 2
    try:
        COMMANDS[args.command](args, logged_argv(argv))
    except (LZMError, OSError) as exc:
        _log(f"error: {exc}")
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
