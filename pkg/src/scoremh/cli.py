"""Command-line interface: gen-data, train-score, train-acceptance, sample,
evaluate, reproduce. Global seed resolution: --seed flag, then the SBMH_SEED
environment variable, then 0."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from . import pipelines
from .config import DATASET_NAMES, ExperimentConfig, preset
from .datasets import read_csv
from .errors import DimensionError, ScoremhError


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SBMH_SEED")
    return int(env) if env else 0


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "preset", None):
        cfg = preset(args.preset)
    else:
        cfg = ExperimentConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_ini(fh.read())
    if getattr(args, "dataset", None):
        cfg.dataset.name = args.dataset
    cfg.apply_overrides(getattr(args, "set", None) or [])
    cfg.seed = _resolve_seed(args)
    cfg.score.seed = cfg.seed
    cfg.acceptance.seed = cfg.seed
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="global seed (falls back to SBMH_SEED)")
    p.add_argument("--preset", choices=sorted(DATASET_NAMES), help="start from a dataset preset")
    p.add_argument("--config", help="experiment config INI file")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override one config value (repeatable; flags win over files)")


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    cloud = pipelines.build_dataset(cfg.dataset)
    from .datasets import write_csv

    write_csv(args.out, cloud)
    print(f"wrote {len(cloud)} x {cloud.dim} points to {args.out}")
    return 0


def cmd_train_score(args) -> int:
    cfg = _load_config(args)
    loss_csv = args.loss_csv or os.path.splitext(args.out)[0] + "_loss.csv"
    pipelines.train_score_cmd(cfg, args.out, loss_csv)
    print(f"wrote score checkpoint {args.out}")
    return 0


def cmd_train_acceptance(args) -> int:
    cfg = _load_config(args)
    base = os.path.splitext(args.out)[0]
    pipelines.train_acceptance_cmd(
        cfg, args.score, args.out,
        loss_csv=args.loss_csv or base + "_loss.csv",
        accept_csv=base + "_acceptance.csv",
    )
    print(f"wrote acceptance checkpoint {args.out}")
    return 0


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    if args.proposal:
        cfg.proposal.kind = args.proposal
    if args.sigma is not None:
        cfg.proposal.sigma = args.sigma
    if args.eps is not None:
        cfg.proposal.eps = args.eps
        cfg.sampler.ula_eps = args.eps
    if args.beta is not None:
        cfg.proposal.beta = args.beta
    if args.steps is not None:
        cfg.sampler.n_steps = args.steps
    if args.chains is not None:
        cfg.sampler.n_chains = args.chains
    if args.pi is not None:
        cfg.dataset.pi = args.pi
    if args.steps == 0:
        # echo the initial cloud: one state per chain, no dynamics
        cfg.sampler.n_steps = 1
        cfg.sampler.ula_eps = 0.0
        cfg.sampler.burn_in = 0
        if args.method != "ula":
            raise ScoremhError("--steps 0 is only meaningful for ula")
    diag = os.path.splitext(args.out)[0] + "_diagnostics.json"
    cloud = pipelines.sample_cmd(
        args.method, cfg, args.out,
        score_ckpt=args.score,
        acceptance_ckpt=args.acceptance,
        taylor_variant=args.taylor_variant,
        diagnostics_path=diag,
    )
    print(f"wrote {len(cloud)} samples to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    if args.n_eval is not None:
        cfg.metrics.n_eval = args.n_eval
    if args.w2_convention:
        cfg.metrics.w2_convention = args.w2_convention
    cfg.metrics.seed = cfg.seed
    samples = read_csv(args.samples)
    reference = read_csv(args.reference)
    if samples.dim != reference.dim:
        raise DimensionError(
            f"samples have dim {samples.dim} but reference has dim {reference.dim}"
        )
    rep = pipelines.evaluate_cmd(
        samples, reference, cfg.metrics,
        dataset=args.dataset or "unknown", method=args.method or "unknown",
        report_csv=args.out,
    )
    print(f"W1={rep.w1:.6g} W2={rep.w2:.6g} MMD={rep.mmd:.6g}")
    return 0


def cmd_reproduce(args) -> int:
    seed = _resolve_seed(args)
    outdir = pipelines.reproduce(args.id, args.outdir, quick=args.quick, seed=seed)
    print(f"artifacts in {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scoremh",
                                 description="score-driven MCMC with learned acceptance functions")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset CSV")
    _add_common(p)
    p.add_argument("--dataset", choices=DATASET_NAMES, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train-score", help="train a score network")
    _add_common(p)
    p.add_argument("--dataset", choices=DATASET_NAMES)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv")
    p.set_defaults(fn=cmd_train_score)

    p = sub.add_parser("train-acceptance", help="train an acceptance network")
    _add_common(p)
    p.add_argument("--dataset", choices=DATASET_NAMES)
    p.add_argument("--score", required=True, help="score checkpoint")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv")
    p.set_defaults(fn=cmd_train_acceptance)

    p = sub.add_parser("sample", help="run a sampler and write samples CSV")
    _add_common(p)
    p.add_argument("--method", choices=pipelines.SAMPLE_METHODS, required=True)
    p.add_argument("--dataset", choices=DATASET_NAMES)
    p.add_argument("--score", help="score checkpoint")
    p.add_argument("--acceptance", help="acceptance checkpoint")
    p.add_argument("--proposal", choices=("rw", "mala", "pcn"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--pi", type=float, help="mixture weight of the first mode")
    p.add_argument("--taylor-variant", default="taylor1_avg",
                   choices=("taylor1", "taylor1_avg", "taylor2", "taylor2_avg"))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("evaluate", help="compare a samples CSV against a reference CSV")
    _add_common(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--dataset")
    p.add_argument("--method")
    p.add_argument("--n-eval", type=int)
    p.add_argument("--w2-convention", choices=("root", "squared"))
    p.add_argument("--out", help="report CSV to append to")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("reproduce", help="run a full reproduction pipeline")
    _add_common(p)
    p.add_argument("--id", required=True, help=f"one of: {', '.join(pipelines.REPRODUCE_IDS)}")
    p.add_argument("--outdir", required=True)
    p.add_argument("--quick", action="store_true", help="small, fast settings")
    p.set_defaults(fn=cmd_reproduce)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.fn(args)
    except ScoremhError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
