"""Command-line front end.

Subcommands print line-oriented ``key=value`` records on stdout and return a
nonzero exit status (with a message on stderr) when any input is unusable;
nothing is written in that case.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import codec
from .colorspace import expand_gamut_naive, reduce_gamut
from .encoding import EncoderConfig, InputMode
from .metrics import chromaticity_csv, error_map, evaluate, summarize
from .mlp import FAST_ITERATIONS, MetaConfig, TrainConfig, meta_train, zero_params
from .pipeline import expand_and_recover, reduce_and_embed
from .pngio import (
    decode_mask_png,
    decode_srgb_png,
    encode_mask_png,
    encode_png,
    read_bytes,
    read_prophoto_png,
    write_prophoto_png,
)

log = logging.getLogger("gamutmlp")


class CliError(Exception):
    pass


def _emit(out, **fields):
    for k, v in fields.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        print(f"{k}={v}", file=out)


def _default_seed():
    try:
        return int(os.environ.get("GAMUT_SEED", "0"))
    except ValueError:
        raise CliError("GAMUT_SEED must be an integer") from None


def _require_file(path, what="input"):
    if not os.path.isfile(path):
        raise CliError(f"{what} file not found: {path}")


def _require_dir_for(path):
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise CliError(f"output directory does not exist: {d}")


def _encoder_from(args) -> EncoderConfig:
    return EncoderConfig(k=args.k, input_mode=InputMode(args.input_mode), encoding=not args.no_encoding)


def _add_model_flags(p):
    p.add_argument("--hidden", type=int, default=32, help="hidden layer width (default 32)")
    p.add_argument("--k", type=int, default=12, help="frequencies per input scalar (default 12)")
    p.add_argument("--input-mode", choices=[m.value for m in InputMode], default="xyrgb",
                   help="network inputs: xyrgb (default), xy or rgb")
    p.add_argument("--no-encoding", action="store_true", help="feed normalized inputs without the sinusoidal encoding")
    p.add_argument("--ig-rate", type=float, default=0.02, help="fraction of in-gamut pixels per step (default 0.02)")
    p.add_argument("--og-rate", type=float, default=0.20, help="fraction of out-of-gamut pixels per step (default 0.20)")
    p.add_argument("--batch-size", type=int, default=10_000, help="cap on pixels per step (default 10000)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $GAMUT_SEED or 0)")


def _train_config(args, iterations, lr) -> TrainConfig:
    try:
        return TrainConfig(
            ig_rate=args.ig_rate, og_rate=args.og_rate, iterations=iterations, learning_rate=lr,
            batch_size=args.batch_size, seed=args.seed, hidden=args.hidden, encoder=_encoder_from(args),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _load_payload(path) -> bytes:
    data = read_bytes(path)
    if data[:8] == codec.PNG_SIGNATURE:
        return codec.extract_png(data)
    codec.read_header(data)
    return data


# -- subcommands ------------------------------------------------------------

def cmd_reduce(args, out):
    _require_file(args.input)
    _require_dir_for(args.output)
    meta = None
    if args.meta_init:
        _require_file(args.meta_init, "meta init")
        meta, _ = codec.deserialize(_load_payload(args.meta_init))
        args.hidden, args.k = meta.hidden, meta.encoder.k
        args.input_mode, args.no_encoding = meta.encoder.input_mode.value, not meta.encoder.encoding
    iters = args.iters
    if iters is None:
        iters = FAST_ITERATIONS if meta is not None else 9000
    config = _train_config(args, iters, args.lr)
    if args.zero_init:
        meta = zero_params(config.hidden, config.encoder)
    prophoto = read_prophoto_png(args.input)
    result = reduce_and_embed(prophoto, config, meta_init=meta)
    with open(args.output, "wb") as f:
        f.write(result.png)
    if args.sidecar:
        codec.write_sidecar(args.output, result.payload)
    if args.mask:
        with open(args.mask, "wb") as f:
            f.write(encode_mask_png(result.mask))
    s = result.stats
    report = evaluate(result.recovered, prophoto, result.mask)
    naive = evaluate(result.clipped, prophoto, result.mask)
    _emit(out, output=args.output, payload_bytes=len(result.payload), iterations=s.iterations,
          initial_loss=s.initial_loss, final_loss=s.final_loss, wall_time=s.wall_time,
          samples=s.n_samples, og_fraction=report.og_fraction)
    _emit(out, **{f"recovered_{k}": v for k, v in report.as_dict().items() if k != "og_fraction"})
    _emit(out, **{f"clip_{k}": v for k, v in naive.as_dict().items() if k != "og_fraction"})


def cmd_expand(args, out):
    _require_file(args.input)
    _require_dir_for(args.output)
    png = read_bytes(args.input)
    if args.naive:
        img = expand_gamut_naive(decode_srgb_png(png))
        mode = "naive"
    else:
        try:
            img = expand_and_recover(png)
        except codec.MissingMetadataError:
            sidecar = codec.sidecar_path(args.input)
            if not os.path.isfile(sidecar):
                raise CliError("input has no GamutMLP metadata (use --naive for plain conversion)") from None
            img = _expand_with_payload(png, read_bytes(sidecar))
        mode = "mlp"
    write_prophoto_png(args.output, img)
    _emit(out, output=args.output, mode=mode, width=img.shape[1], height=img.shape[0])


def _expand_with_payload(png, payload):
    from .mlp import predict_image

    params, _ = codec.deserialize(payload)
    return predict_image(expand_gamut_naive(decode_srgb_png(png)), params)


def _eval_pair(pred_path, truth_path, mask_path):
    pred = read_prophoto_png(pred_path)
    truth = read_prophoto_png(truth_path)
    if mask_path:
        mask = decode_mask_png(read_bytes(mask_path))
    else:
        _, mask, _ = reduce_gamut(truth, quantize=False)
    return pred, truth, mask, evaluate(pred, truth, mask)


def _pairs(pred, truth):
    if os.path.isdir(pred) != os.path.isdir(truth):
        raise CliError("--pred and --truth must both be files or both be directories")
    if not os.path.isdir(pred):
        _require_file(pred, "prediction")
        _require_file(truth, "ground truth")
        return [(pred, truth)]
    names = sorted(n for n in os.listdir(pred) if n.lower().endswith(".png"))
    missing = [n for n in names if not os.path.isfile(os.path.join(truth, n))]
    if missing:
        raise CliError(f"no ground truth for: {', '.join(missing)}")
    if not names:
        raise CliError(f"no PNG files in {pred}")
    return [(os.path.join(pred, n), os.path.join(truth, n)) for n in names]


def cmd_eval(args, out):
    pairs = _pairs(args.pred, args.truth)
    if args.mask:
        _require_file(args.mask, "mask")
        if len(pairs) > 1:
            raise CliError("--mask only applies to a single image pair")
    single = len(pairs) == 1
    if not single and (args.error_map or args.chroma_csv):
        raise CliError("--error-map and --chroma-csv only apply to a single image pair")
    for path in (args.error_map, args.chroma_csv):
        if path:
            _require_dir_for(path)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda pt: _eval_pair(pt[0], pt[1], args.mask), pairs))

    for (pred_path, _), (_, _, _, rep) in zip(pairs, results):
        _emit(out, image=os.path.basename(pred_path), **rep.as_dict())
    if not single:
        _emit(out, **{k: v for k, v in summarize([r[3] for r in results]).items()})
    if single:
        pred, truth, mask, _ = results[0]
        if args.error_map:
            emap = error_map(pred, truth)
            scale = args.error_scale or max(float(emap.max()), 1e-12)
            u8 = np.floor(np.clip(emap / scale, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
            png = codec.add_text_chunk(encode_png(u8, 8), "ErrorScale", f"255={scale:.9g}")
            with open(args.error_map, "wb") as f:
                f.write(png)
            _emit(out, error_map=args.error_map, error_scale=scale)
        if args.chroma_csv:
            with open(args.chroma_csv, "w") as f:
                f.write(chromaticity_csv(pred, mask))
            _emit(out, chroma_csv=args.chroma_csv)


def cmd_meta_train(args, out):
    if not os.path.isdir(args.images):
        raise CliError(f"image directory not found: {args.images}")
    _require_dir_for(args.output)
    paths = sorted(os.path.join(args.images, n) for n in os.listdir(args.images) if n.lower().endswith(".png"))
    if not paths:
        raise CliError(f"no PNG files in {args.images}")
    train = _train_config(args, 1, 1e-3)
    try:
        config = MetaConfig(inner_iterations=args.inner_iters, inner_lr=args.inner_lr, meta_epochs=args.epochs,
                            outer_rate=args.outer_rate, seed=args.seed, train=train)
    except ValueError as exc:
        raise CliError(str(exc)) from None

    def load(path):
        img = read_prophoto_png(path)
        _, mask, clipped = reduce_gamut(img, quantize=True)
        return img, clipped, mask

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        images = list(pool.map(load, paths))
    params = meta_train(images, config)
    payload = codec.serialize(params)
    with open(args.output, "wb") as f:
        f.write(payload)
    _emit(out, output=args.output, images=len(images), epochs=config.meta_epochs,
          inner_iterations=config.inner_iterations, payload_bytes=len(payload))


def cmd_inspect(args, out):
    _require_file(args.input)
    data = read_bytes(args.input)
    payload = codec.extract_png(data) if data[:8] == codec.PNG_SIGNATURE else data
    h = codec.read_header(payload)
    _emit(out, magic=codec.MAGIC.decode(), version=h.version, input_mode=h.encoder.input_mode.value,
          encoding=str(h.encoder.encoding).lower(), k=h.encoder.k if h.encoder.encoding else 0,
          hidden=h.hidden, width=h.width, height=h.height, params=h.param_count, payload_bytes=len(payload))
    if len(payload) != h.payload_size:
        raise CliError(f"payload is {len(payload)} bytes, header implies {h.payload_size}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamutmlp", description="Wide-gamut color recovery with an embedded MLP.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="ProPhoto PNG -> sRGB PNG with embedded recovery model")
    p.add_argument("--input", required=True, help="16-bit linear ProPhoto PNG")
    p.add_argument("--output", required=True, help="8-bit sRGB PNG to write")
    p.add_argument("--iters", type=int, default=None, help="iterations (default 9000, or 1200 with --meta-init)")
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate (default 1e-3)")
    p.add_argument("--meta-init", help="payload (.gmlp or PNG) to start from; fixes the architecture")
    p.add_argument("--zero-init", action="store_true", help="start from all-zero weights (identity recovery)")
    p.add_argument("--sidecar", action="store_true", help="also write the payload to <output>.gmlp")
    p.add_argument("--mask", help="write the out-of-gamut mask as an 8-bit PNG")
    _add_model_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("expand", help="sRGB PNG -> 16-bit ProPhoto PNG")
    p.add_argument("--input", required=True, help="sRGB PNG, normally written by 'reduce'")
    p.add_argument("--output", required=True, help="16-bit ProPhoto PNG to write")
    p.add_argument("--naive", action="store_true", help="ignore any payload and invert the matrix only")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("eval", help="RMSE/PSNR of a prediction against ground truth")
    p.add_argument("--pred", required=True, help="predicted ProPhoto PNG, or a directory of them")
    p.add_argument("--truth", required=True, help="ground-truth ProPhoto PNG, or a directory with matching names")
    p.add_argument("--mask", help="out-of-gamut mask PNG (default: computed from the ground truth)")
    p.add_argument("--error-map", help="write per-pixel RMSE as an 8-bit PNG")
    p.add_argument("--error-scale", type=float, default=None, help="error mapped to 255 (default: the maximum)")
    p.add_argument("--chroma-csv", help="write CIE xy of out-of-gamut pixels of the prediction")
    p.add_argument("--jobs", type=int, default=1, help="images evaluated in parallel")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("meta-train", help="learn an initialization from a directory of ProPhoto PNGs")
    p.add_argument("--images", required=True, help="directory of 16-bit ProPhoto PNGs")
    p.add_argument("--output", required=True, help="payload file to write (.gmlp)")
    p.add_argument("--inner-iters", type=int, default=10_000, help="SGD steps per image (default 10000)")
    p.add_argument("--inner-lr", type=float, default=1e-2, help="SGD learning rate (default 1e-2)")
    p.add_argument("--epochs", type=int, default=1, help="passes over the images (default 1)")
    p.add_argument("--outer-rate", type=float, default=0.1, help="Reptile step size (default 0.1)")
    p.add_argument("--jobs", type=int, default=1, help="images loaded in parallel")
    _add_model_flags(p)
    p.set_defaults(func=cmd_meta_train)

    p = sub.add_parser("inspect", help="print the payload header of a PNG or .gmlp file")
    p.add_argument("--input", required=True, help="sRGB PNG with embedded payload, or a .gmlp payload file")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        args.func(args, out)
    except CliError as exc:
        print(f"gamutmlp: error: {exc}", file=sys.stderr)
        return 2
    except (codec.PayloadError, ValueError, OSError) as exc:
        print(f"gamutmlp: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
