"""End-to-end experiment pipelines behind the CLI: dataset construction,
kernel assembly, training runs, sampling runs, and the reproduction bundles
(quantitative table, mixture bias, lambda sweep, step-size sweep, Taylor
comparison)."""

from __future__ import annotations

import dataclasses
import json
import os
import time
from typing import Optional

import numpy as np

from . import svg
from .acceptance import (
    ExactAcceptance,
    LearnedAcceptance,
    SBMConfig,
    TaylorAcceptance,
    mean_grid_acceptance,
    train_acceptance,
)
from .checkpoint import (
    load_acceptance_net,
    load_score_net,
    save_acceptance_net,
    save_score_net,
)
from .config import DatasetSpec, ExperimentConfig, MetricsSpec, ProposalSpec, preset
from .datasets import (
    AnalyticTarget,
    Gev,
    PointCloud,
    make_moons,
    make_pinwheel,
    make_s_curve,
    make_swiss_roll,
    sample_target,
    two_gaussian_mixture,
    write_csv,
)
from .errors import ArgumentError, ConfigError
from .metrics import MetricsReport, evaluate_clouds, mixture_weights
from .proposals import Mala, Pcn, ProposalKernel, RandomWalk
from .sampler import run_chains
from .scorematch import ScoreModel, analytic_score, train_score, write_loss_csv

SAMPLE_METHODS = ("ula", "score-rw", "score-mala", "score-pcn", "exact-mh", "taylor-mh")
REPRODUCE_IDS = ("table1", "fig1-mixture", "fig4-lambda-sweep", "fig5-stepsize", "figA-taylor")


def build_dataset(spec: DatasetSpec) -> PointCloud:
    name = spec.name
    if name == "moons":
        return make_moons(spec.n, spec.noise, spec.seed)
    if name == "pinwheel":
        return make_pinwheel(
            spec.n, spec.num_classes, spec.radial_std, spec.tangential_std, spec.rate, spec.seed
        )
    if name == "scurve":
        return make_s_curve(spec.n, spec.noise, spec.seed)
    if name == "swissroll":
        return make_swiss_roll(spec.n, spec.noise, spec.seed)
    if name == "mixture":
        return sample_target(analytic_target(spec), spec.n, spec.seed)
    if name == "gev":
        return sample_target(analytic_target(spec), spec.n, spec.seed)
    raise ConfigError(f"unknown dataset {name!r}")


def analytic_target(spec: DatasetSpec) -> AnalyticTarget:
    if spec.name == "mixture":
        return two_gaussian_mixture(spec.pi, spec.separation, spec.dim)
    if spec.name == "gev":
        return Gev(spec.xi, spec.mu, spec.sigma)
    raise ConfigError(f"dataset {spec.name!r} has no analytic density")


def make_kernel(spec: ProposalSpec, dim: int, score: Optional[ScoreModel] = None) -> ProposalKernel:
    if spec.kind == "rw":
        return RandomWalk(spec.sigma, dim=dim)
    if spec.kind == "mala":
        if score is None:
            raise ArgumentError("MALA kernel needs a score model")
        return Mala(spec.eps, score=score, dim=dim)
    if spec.kind == "pcn":
        return Pcn(spec.beta, dim=dim)
    raise ConfigError(f"unknown proposal kind {spec.kind!r}")


def _write_manifest(outdir, cfg: ExperimentConfig, extra: Optional[dict] = None) -> None:
    with open(os.path.join(outdir, "manifest.ini"), "w") as fh:
        fh.write(cfg.to_ini())
        if extra:
            fh.write("\n[decisions]\n")
            for k, v in sorted(extra.items()):
                fh.write(f"{k} = {v}\n")


def _write_diagnostics(outdir, name: str, payload: dict) -> None:
    with open(os.path.join(outdir, name), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def train_score_cmd(cfg: ExperimentConfig, out_path: str, loss_csv: Optional[str] = None) -> str:
    data = build_dataset(cfg.dataset)
    res = train_score(data, cfg.score)
    manifest = {
        "config_digest": cfg.digest(),
        "dataset": dataclasses.asdict(cfg.dataset),
        "training": dataclasses.asdict(cfg.score),
        "epochs_completed": len(res.losses),
        "holdout_loss": res.holdout_losses[-1] if res.holdout_losses else None,
    }
    save_score_net(out_path, res.net, manifest)
    if loss_csv:
        write_loss_csv(loss_csv, res.losses)
    return out_path


def train_acceptance_cmd(
    cfg: ExperimentConfig,
    score_ckpt: str,
    out_path: str,
    loss_csv: Optional[str] = None,
    accept_csv: Optional[str] = None,
) -> str:
    net, _ = load_score_net(score_ckpt)
    score = ScoreModel(net, net.dim)
    data = build_dataset(cfg.dataset)
    kernel = make_kernel(cfg.proposal, data.dim, score)
    res = train_acceptance(data, score, kernel, cfg.acceptance)
    manifest = {
        "config_digest": cfg.digest(),
        "dataset": dataclasses.asdict(cfg.dataset),
        "proposal": dataclasses.asdict(cfg.proposal),
        "training": dataclasses.asdict(cfg.acceptance),
        "score_checkpoint": os.path.basename(score_ckpt),
        "epochs_completed": len(res.losses),
        "pairing": cfg.acceptance.pairing,
    }
    save_acceptance_net(out_path, res.net, manifest)
    if loss_csv:
        write_loss_csv(loss_csv, res.losses)
    if accept_csv:
        with open(accept_csv, "w") as fh:
            fh.write("epoch,mean_acceptance\n")
            for i, v in enumerate(res.mean_acceptance):
                fh.write(f"{i},{v!r}\n")
    return out_path


def sample_cmd(
    method: str,
    cfg: ExperimentConfig,
    out_csv: str,
    score_ckpt: Optional[str] = None,
    acceptance_ckpt: Optional[str] = None,
    taylor_variant: str = "taylor1_avg",
    diagnostics_path: Optional[str] = None,
) -> PointCloud:
    if method not in SAMPLE_METHODS:
        raise ArgumentError(f"unknown method {method!r}; choose from {', '.join(SAMPLE_METHODS)}")
    dim = 1 if cfg.dataset.name == "gev" else (3 if cfg.dataset.name in ("scurve", "swissroll") else cfg.dataset.dim)
    score: Optional[ScoreModel] = None
    if score_ckpt:
        net, _ = load_score_net(score_ckpt)
        score = ScoreModel(net, net.dim)
        dim = net.dim
    elif cfg.dataset.name in ("mixture", "gev"):
        target = analytic_target(cfg.dataset)
        score = analytic_score(target)
        dim = target.dim

    sp = cfg.sampler
    burn = None if sp.burn_in < 0 else sp.burn_in
    t0 = time.time()
    if method == "ula":
        if score is None:
            raise ArgumentError("ula needs a score checkpoint or an analytic dataset")
        cloud, diag = run_chains(
            "ula", dim=dim, n_chains=sp.n_chains, n_steps=sp.n_steps, score=score,
            eps=sp.ula_eps, burn_in=burn, thin=sp.thin, init_scale=sp.init_scale, seed=cfg.seed,
        )
    else:
        if method == "exact-mh":
            target = analytic_target(cfg.dataset)
            kernel = make_kernel(cfg.proposal, dim, analytic_score(target))
            accept = ExactAcceptance(target, kernel)
        elif method == "taylor-mh":
            if score is None:
                raise ArgumentError("taylor-mh needs a score checkpoint or analytic dataset")
            kernel = make_kernel(cfg.proposal, dim, score)
            accept = TaylorAcceptance(score, kernel, variant=taylor_variant)
        else:
            kind = {"score-rw": "rw", "score-mala": "mala", "score-pcn": "pcn"}[method]
            spec = dataclasses.replace(cfg.proposal, kind=kind)
            if score is None:
                raise ArgumentError(f"{method} needs a score checkpoint")
            kernel = make_kernel(spec, dim, score)
            if acceptance_ckpt is None:
                raise ArgumentError(f"{method} needs an acceptance checkpoint")
            anet, _ = load_acceptance_net(acceptance_ckpt)
            accept = LearnedAcceptance(anet, kernel)
        cloud, diag = run_chains(
            "mh", dim=dim, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel,
            acceptance=accept, burn_in=burn, thin=sp.thin, init_scale=sp.init_scale, seed=cfg.seed,
        )
    write_csv(out_csv, cloud)
    if diagnostics_path:
        _write_diagnostics(
            os.path.dirname(diagnostics_path) or ".",
            os.path.basename(diagnostics_path),
            {
                "method": method,
                "seed": cfg.seed,
                "n_chains": diag.n_chains,
                "n_steps": diag.n_steps,
                "burn_in": diag.burn_in,
                "thin": diag.thin,
                "acceptance_rates": diag.acceptance_rates.tolist(),
                "mean_acceptance_rate": diag.acceptance_rate,
                "wall_time_s": time.time() - t0,
            },
        )
    return cloud


def evaluate_cmd(
    samples: PointCloud,
    reference: PointCloud,
    spec: MetricsSpec,
    dataset: str,
    method: str,
    report_csv: Optional[str] = None,
) -> MetricsReport:
    rep = evaluate_clouds(
        samples,
        reference,
        n_eval=spec.n_eval,
        seed=spec.seed,
        bandwidth="auto" if spec.bandwidth == 0.0 else spec.bandwidth,
        w2_squared=spec.w2_convention == "squared",
    )
    if report_csv:
        fresh = not os.path.exists(report_csv)
        with open(report_csv, "a") as fh:
            if fresh:
                fh.write(MetricsReport.CSV_HEADER + "\n")
            fh.write(rep.csv_row(dataset, method) + "\n")
    return rep


# ---------------------------------------------------------------------------
# reproduction bundles


def _quick_scale(cfg: ExperimentConfig, quick: bool) -> ExperimentConfig:
    if not quick:
        return cfg
    cfg.score.epochs = min(cfg.score.epochs, 300)
    cfg.acceptance.epochs = min(cfg.acceptance.epochs, 60)
    cfg.sampler.n_chains = min(cfg.sampler.n_chains, 20)
    cfg.sampler.n_steps = min(cfg.sampler.n_steps, 300)
    cfg.metrics.n_eval = min(cfg.metrics.n_eval, 200)
    return cfg


def reproduce(run_id: str, outdir: str, quick: bool = False, seed: int = 0) -> str:
    if run_id not in REPRODUCE_IDS:
        raise ArgumentError(
            f"unknown reproduction id {run_id!r}; available: {', '.join(REPRODUCE_IDS)}"
        )
    os.makedirs(outdir, exist_ok=True)
    fn = {
        "table1": _repro_table,
        "fig1-mixture": _repro_mixture,
        "fig4-lambda-sweep": _repro_lambda_sweep,
        "fig5-stepsize": _repro_stepsize,
        "figA-taylor": _repro_taylor,
    }[run_id]
    fn(outdir, quick, seed)
    return outdir


def _trained_models(name: str, outdir: str, quick: bool, seed: int, kernel_kind: str):
    """Dataset + score model + acceptance model for one (dataset, kernel)."""
    cfg = _quick_scale(preset(name), quick)
    cfg.seed = seed
    cfg.proposal.kind = kernel_kind
    data = build_dataset(cfg.dataset)
    sres = train_score(data, cfg.score)
    score = sres.model
    kernel = make_kernel(cfg.proposal, data.dim, score)
    ares = train_acceptance(data, score, kernel, cfg.acceptance)
    return cfg, data, score, kernel, ares.model


def _repro_table(outdir: str, quick: bool, seed: int) -> None:
    report = os.path.join(outdir, "table1.csv")
    if os.path.exists(report):
        os.remove(report)
    names = ("moons", "pinwheel", "scurve", "swissroll")
    for name in names:
        cfg = _quick_scale(preset(name), quick)
        cfg.seed = seed
        data = build_dataset(cfg.dataset)
        sres = train_score(data, cfg.score)
        score = sres.model
        sp = cfg.sampler
        clouds = {}
        cloud, _ = run_chains(
            "ula", dim=data.dim, n_chains=sp.n_chains, n_steps=sp.n_steps, score=score,
            eps=sp.ula_eps, init_scale=sp.init_scale, seed=seed,
        )
        clouds["ULA"] = cloud
        for label, kind in (("Score RW", "rw"), ("Score MALA", "mala"), ("Score pCN", "pcn")):
            spec = dataclasses.replace(cfg.proposal, kind=kind)
            kernel = make_kernel(spec, data.dim, score)
            ares = train_acceptance(data, score, kernel, cfg.acceptance)
            cloud, _ = run_chains(
                "mh", dim=data.dim, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel,
                acceptance=ares.model, init_scale=sp.init_scale, seed=seed,
            )
            clouds[label] = cloud
        for label, cloud in clouds.items():
            evaluate_cmd(cloud, data, cfg.metrics, name, label, report)
            write_csv(os.path.join(outdir, f"{name}_{label.replace(' ', '_').lower()}.csv"), cloud)
        svg.scatter_svg(
            os.path.join(outdir, f"{name}.svg"),
            [data.points[:2000]] + [clouds[k].points[:2000] for k in clouds],
            title=name,
            labels=["data"] + list(clouds),
        )
        _write_manifest(outdir, cfg, {"pipeline": "table1"})


def _repro_mixture(outdir: str, quick: bool, seed: int) -> None:
    cfg = preset("mixture")
    cfg.seed = seed
    if quick:
        cfg.sampler.n_chains = 20
        cfg.sampler.n_steps = 2000
    target = analytic_target(cfg.dataset)
    score = analytic_score(target)
    sp = cfg.sampler
    rng = np.random.default_rng(seed)
    half = sp.n_chains // 2
    centers = np.array([[5.0, 5.0], [-5.0, -5.0]])
    init = PointCloud(
        np.vstack(
            [centers[0] + rng.standard_normal((half, 2)),
             centers[1] + rng.standard_normal((sp.n_chains - half, 2))]
        )
    )
    runs = {
        "original": sample_target(target, sp.n_chains * sp.n_steps // 2, seed),
    }
    cloud, _ = run_chains(
        "ula", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, score=score,
        eps=sp.ula_eps, init=init, seed=seed,
    )
    runs["ula"] = cloud
    kernel_rw = RandomWalk(cfg.proposal.sigma, dim=2)
    cloud, _ = run_chains(
        "mh", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel_rw,
        acceptance=ExactAcceptance(target, kernel_rw), init=init, burn_in=sp.n_steps // 3, seed=seed,
    )
    runs["rw"] = cloud
    kernel_mala = Mala(cfg.proposal.eps, score=score, dim=2)
    cloud, _ = run_chains(
        "mh", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel_mala,
        acceptance=ExactAcceptance(target, kernel_mala), init=init, burn_in=sp.n_steps // 3, seed=seed,
    )
    runs["mala"] = cloud
    with open(os.path.join(outdir, "weights.csv"), "w") as fh:
        fh.write("method,w_mode1,w_mode2\n")
        for label, cloud in runs.items():
            w = mixture_weights(cloud, centers)
            fh.write(f"{label},{w[0]!r},{w[1]!r}\n")
            write_csv(os.path.join(outdir, f"samples_{label}.csv"), cloud)
    svg.scatter_svg(
        os.path.join(outdir, "mixture.svg"),
        [runs[k].points[:3000] for k in runs],
        title="two-mode mixture: sampler bias",
        labels=list(runs),
    )
    _write_manifest(outdir, cfg, {"pipeline": "fig1-mixture", "init": "balanced"})


def _repro_lambda_sweep(outdir: str, quick: bool, seed: int) -> None:
    cfg = _quick_scale(preset("moons"), quick)
    cfg.seed = seed
    if not quick:
        cfg.acceptance.epochs = 200
    data = build_dataset(cfg.dataset)
    sres = train_score(data, cfg.score)
    kernel = make_kernel(cfg.proposal, data.dim, sres.model)
    lams = (0.0, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0)
    rows = []
    for lam in lams:
        acfg = dataclasses.replace(cfg.acceptance, lam=lam)
        ares = train_acceptance(data, sres.model, kernel, acfg)
        rows.append((lam, mean_grid_acceptance(ares.model, (0.0, 0.0))))
    with open(os.path.join(outdir, "lambda_sweep.csv"), "w") as fh:
        fh.write("lambda,mean_acceptance\n")
        for lam, acc in rows:
            fh.write(f"{lam!r},{acc!r}\n")
    svg.line_svg(
        os.path.join(outdir, "lambda_sweep.svg"),
        [([r[0] for r in rows], [r[1] for r in rows])],
        title="mean grid acceptance vs entropy weight",
    )
    _write_manifest(outdir, cfg, {"pipeline": "fig4-lambda-sweep", "grid": "[-1.5,2.25]x[-1,1.5]"})


def _repro_stepsize(outdir: str, quick: bool, seed: int) -> None:
    cfg = _quick_scale(preset("moons"), quick)
    cfg.seed = seed
    data = build_dataset(cfg.dataset)
    sres = train_score(data, cfg.score)
    score = sres.model
    sp = cfg.sampler
    eps_grid = (0.05, 0.1, 0.2, 0.3)
    rows = []
    for eps in eps_grid:
        cloud_u, _ = run_chains(
            "ula", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, score=score, eps=eps,
            init_scale=sp.init_scale, seed=seed,
        )
        kernel = Mala(eps, score=score, dim=2)
        acfg = dataclasses.replace(cfg.acceptance)
        ares = train_acceptance(data, score, kernel, acfg)
        cloud_m, _ = run_chains(
            "mh", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel,
            acceptance=ares.model, init_scale=sp.init_scale, seed=seed,
        )
        w1_u = evaluate_cmd(cloud_u, data, cfg.metrics, "moons", f"ula eps={eps}").w1
        w1_m = evaluate_cmd(cloud_m, data, cfg.metrics, "moons", f"mala eps={eps}").w1
        rows.append((eps, w1_u, w1_m))
    with open(os.path.join(outdir, "stepsize.csv"), "w") as fh:
        fh.write("eps,w1_ula,w1_score_mala\n")
        for eps, a, b in rows:
            fh.write(f"{eps!r},{a!r},{b!r}\n")
    svg.line_svg(
        os.path.join(outdir, "stepsize.svg"),
        [([r[0] for r in rows], [r[1] for r in rows]), ([r[0] for r in rows], [r[2] for r in rows])],
        title="W1 vs step size",
        labels=["ULA", "Score MALA"],
    )
    _write_manifest(outdir, cfg, {"pipeline": "fig5-stepsize"})


def _repro_taylor(outdir: str, quick: bool, seed: int) -> None:
    cfg = _quick_scale(preset("moons"), quick)
    cfg.seed = seed
    data = build_dataset(cfg.dataset)
    sres = train_score(data, cfg.score)
    score = sres.model
    sp = cfg.sampler
    report = os.path.join(outdir, "taylor.csv")
    if os.path.exists(report):
        os.remove(report)
    kernel = Mala(cfg.proposal.eps, score=score, dim=2)
    for variant in ("taylor1", "taylor1_avg", "taylor2", "taylor2_avg"):
        accept = TaylorAcceptance(score, kernel, variant=variant)
        cloud, _ = run_chains(
            "mh", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, kernel=kernel,
            acceptance=accept, init_scale=sp.init_scale, seed=seed,
        )
        evaluate_cmd(cloud, data, cfg.metrics, "moons", variant, report)
        write_csv(os.path.join(outdir, f"taylor_{variant}.csv"), cloud)
    cloud_u, _ = run_chains(
        "ula", dim=2, n_chains=sp.n_chains, n_steps=sp.n_steps, score=score,
        eps=cfg.sampler.ula_eps, init_scale=sp.init_scale, seed=seed,
    )
    evaluate_cmd(cloud_u, data, cfg.metrics, "moons", "ula", report)
    _write_manifest(outdir, cfg, {"pipeline": "figA-taylor"})
