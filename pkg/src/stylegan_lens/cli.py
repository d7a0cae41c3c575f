"""Command-line frontend: training, generation, pruning sweeps, latent
studies, checkpoint tooling, and the HTTP service.

Exit codes: 2 usage, 3 I/O, 4 model/config mismatch. Errors go to stderr,
results to stdout and files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import checkpoint as ckpt
from .autodiff import ShapeError
from .discriminator import Discriminator
from .generator import Generator, GeneratorConfig
from .imaging import save_image_grid, save_png
from .latent import Perturbation, compare_pair, sample_latents, scale_latent
from .pruning import count_nonzero, sweep, total_prunable, weight_stats
from .training import TrainParams, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MODEL = 4

DEFAULT_SCALE_FACTORS = [0.05, 0.10, 0.25, 0.5, 1.0, 1.5, 2.5, 5.0, 10.0]


def default_out_dir() -> str:
    return os.environ.get("STYLEGAN_LENS_HOME", ".")


def load_config(path) -> tuple[GeneratorConfig, TrainParams]:
    if path is None:
        return GeneratorConfig.desk(), TrainParams()
    with open(path) as f:
        raw = json.load(f)
    cfg = GeneratorConfig.from_dict(raw.get("generator", {}))
    params = TrainParams.from_dict(raw.get("train", {}))
    return cfg, params


def load_generator(config: GeneratorConfig, checkpoint_path, init_seed: int = 0,
                   prefer_ema: bool = True) -> Generator:
    """Fresh generator from config, with checkpoint weights when given."""
    g = Generator(config, seed=init_seed)
    if checkpoint_path is not None:
        entries = ckpt.load(checkpoint_path)
        prefix = "G_copy." if prefer_ema and any(k.startswith("G_copy.") for k in entries) else "G."
        if any(k.startswith(prefix) for k in entries):
            g.load_state_dict(entries, prefix=prefix)
        else:
            g.load_state_dict(entries)
    return g


def load_discriminator(config: GeneratorConfig, checkpoint_path, init_seed: int = 1) -> Discriminator:
    d = Discriminator(config, seed=init_seed)
    if checkpoint_path is not None:
        entries = ckpt.load(checkpoint_path)
        if any(k.startswith("D.") for k in entries):
            d.load_state_dict(entries, prefix="D.")
    return d


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stylegan-lens")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--checkpoint", default=None, help=".sgln checkpoint path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("train", help="run adversarial training")
    common(p)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--iters", type=int, default=None, help="override max_iter")

    p = sub.add_parser("generate", help="write PNGs for seeded latents")
    common(p)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--psi", type=float, default=1.0)

    p = sub.add_parser("prune-sweep", help="magnitude-pruning threshold sweep")
    common(p)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--end", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--image-every", type=int, default=20)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--in-place", action="store_true")

    p = sub.add_parser("latent-scale", help="whole-vector scaling study")
    common(p)
    p.add_argument("--factors", default=",".join(str(f) for f in DEFAULT_SCALE_FACTORS))
    p.add_argument("--count", type=int, default=32)

    p = sub.add_parser("latent-perturb", help="per-dimension delta study")
    common(p)
    p.add_argument("--dims", required=True, help="comma-separated dimension indices")
    p.add_argument("--deltas", required=True, help="comma-separated deltas, one per dim")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--w-space", action="store_true")
    p.add_argument("--unbounded", action="store_true")

    p = sub.add_parser("stats", help="per-layer weight statistics")
    common(p)

    p = sub.add_parser("remap-keys", help="rewrite checkpoint key suffixes")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--rule", default="weight_orig=weight",
                   help="old_suffix=new_suffix[,old=new...]")

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--allow-inplace-prune", action="store_true")

    return parser


def _out_dir(args) -> str:
    out = args.out if args.out is not None else default_out_dir()
    os.makedirs(out, exist_ok=True)
    return out


def cmd_train(args) -> int:
    config, params = load_config(args.config)
    if args.iters is not None:
        params.max_iter = args.iters
    if args.seed:
        params.seed = args.seed
    out = _out_dir(args)
    result = train(config, params, out, resume_from=args.resume)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"metrics: {result.metrics_path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    config, _ = load_config(args.config)
    g = load_generator(config, args.checkpoint)
    latents = sample_latents(args.count, seed=args.seed, latent_size=config.latent_size)
    images = g.generate(latents, seed=args.seed, truncation_psi=args.psi)
    out = _out_dir(args)
    for i in range(images.shape[0]):
        save_png(os.path.join(out, f"gen_{i:03d}.png"), images.data[i])
    save_image_grid(os.path.join(out, "grid.png"), images.data)
    print(f"wrote {images.shape[0]} images to {out}")
    return EXIT_OK


def cmd_prune_sweep(args) -> int:
    config, _ = load_config(args.config)
    g = load_generator(config, args.checkpoint)
    d = load_discriminator(config, args.checkpoint)
    latents = sample_latents(args.count, seed=args.seed, latent_size=config.latent_size)
    out = _out_dir(args)
    report = sweep(g, d, latents, start=args.start, end=args.end, step=args.step,
                   image_every=args.image_every, out_dir=out, in_place=args.in_place,
                   noise_seed=args.seed)
    print(f"wrote {len(report.rows)}-row report to {os.path.join(out, 'prune_report.csv')}")
    return EXIT_OK


def cmd_latent_scale(args) -> int:
    config, _ = load_config(args.config)
    g = load_generator(config, args.checkpoint)
    base = sample_latents(args.count, seed=args.seed, latent_size=config.latent_size)
    out = _out_dir(args)
    for factor in (float(tok) for tok in args.factors.split(",")):
        scaled = scale_latent(base, factor)
        images = g.generate(scaled, seed=args.seed)
        save_image_grid(os.path.join(out, f"latent_scale_{factor:g}.png"), images.data)
    print(f"wrote scale grids to {out}")
    return EXIT_OK


def cmd_latent_perturb(args) -> int:
    config, _ = load_config(args.config)
    g = load_generator(config, args.checkpoint)
    dims = [int(tok) for tok in args.dims.split(",")]
    deltas = [float(tok) for tok in args.deltas.split(",")]
    if len(dims) != len(deltas):
        print("error: --dims and --deltas must have equal lengths", file=sys.stderr)
        return EXIT_USAGE
    p = Perturbation(deltas=list(zip(dims, deltas)), scale=args.scale,
                     bounds=None if args.unbounded else (-10.0, 10.0))
    base = sample_latents(args.count, seed=args.seed, latent_size=config.latent_size)
    before, after, distances = compare_pair(g, base, p, seed=args.seed, w_space=args.w_space)
    out = _out_dir(args)
    tag = "_".join(f"dim{d}_delta{v:g}" for d, v in zip(dims, deltas))
    save_image_grid(os.path.join(out, f"perturb_{tag}.png"), after.data)
    save_image_grid(os.path.join(out, f"perturb_{tag}_before.png"), before.data)
    for i, dist in enumerate(distances):
        print(f"image {i:3d}: L2 distance {dist:.4f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    config, _ = load_config(args.config)
    g = load_generator(config, args.checkpoint)
    rows = weight_stats(g)
    print(f"{'layer':58s} {'min':>9s} {'max':>9s} {'mean':>9s} {'std':>9s} {'count':>10s}")
    for name, lo, hi, mean, std, count in rows:
        print(f"{name:58s} {lo:9.4f} {hi:9.4f} {mean:9.4f} {std:9.4f} {count:10d}")
    print(f"nonzero: {count_nonzero(g)} / {total_prunable(g)}")
    return EXIT_OK


def cmd_remap_keys(args) -> int:
    rule = {}
    for pair in args.rule.split(","):
        old, _, new = pair.partition("=")
        if not old or not new:
            print(f"error: malformed rule {pair!r}", file=sys.stderr)
            return EXIT_USAGE
        rule[old] = new
    entries = ckpt.load(args.input)
    ckpt.save(args.output, ckpt.remap_keys(entries, rule))
    print(f"rewrote {len(entries)} keys into {args.output}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_state, create_app

    config, _ = load_config(args.config)
    state = build_state(config, checkpoint_path=args.checkpoint,
                        allow_inplace=args.allow_inplace_prune,
                        fixed_seed=args.seed, ui_dir=args.ui_dir)
    uvicorn.run(create_app(state), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "generate": cmd_generate,
    "prune-sweep": cmd_prune_sweep,
    "latent-scale": cmd_latent_scale,
    "latent-perturb": cmd_latent_perturb,
    "stats": cmd_stats,
    "remap-keys": cmd_remap_keys,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ckpt.CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ShapeError, KeyError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
