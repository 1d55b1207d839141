"""Command implementations behind the CLI: extract, evaluate, benchmark.

Each run writes its outputs plus a ``manifest.json`` capturing the fully
resolved configuration and library versions, so a rerun from the manifest
reproduces the outputs exactly (benchmark timings aside).
"""
from __future__ import annotations

import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets, evaluation, kernels, ksvd, nystrom
from .config import RunConfig, parse_floats, parse_names
from .errors import (
    ConfigError,
    SingleClassError,
    ToleranceUnreachableError,
)
from .kernels import DataSources, KernelSpec, LazyKernelSource
from .linalg import svd_exact, svd_truncated, write_matrix_csv
from .nystrom import NystromConfig


def load_dataset(cfg: RunConfig):
    """Materialize the configured dataset: (matrix, labels-or-targets, task)."""
    fmt = cfg["dataset.format"]
    if fmt == "synth":
        graph = datasets.synth_directed_graph(
            cfg["dataset.synth_kind"], cfg["dataset.synth_n"],
            seed=cfg.get("dataset.synth_seed", "seed"))
        return graph.adjacency, graph.labels, "classification"
    if fmt == "edge_list":
        graph = datasets.load_edge_list(
            cfg["dataset.path"], node_count=cfg["dataset.node_count"],
            directed=cfg["dataset.directed"],
            labels_path=cfg["dataset.labels"])
        return graph.adjacency, graph.labels, "classification"
    target = cfg["dataset.target"]
    if target is None:
        raise ConfigError("dataset.target is required for csv datasets")
    try:
        target = int(target)
    except ValueError:
        pass
    table = datasets.load_csv(cfg["dataset.path"], target,
                              cfg["dataset.task"], zscore=cfg["dataset.zscore"])
    return table.features, table.targets, table.task


def make_kernel_spec(cfg: RunConfig, a: np.ndarray) -> KernelSpec:
    family = cfg["kernel.family"]
    gamma = cfg["kernel.gamma"]
    if gamma is None and family != "linear":
        gamma = kernels.default_gamma(a, k=cfg["kernel.gamma_k"])
    return KernelSpec(family=family, gamma=gamma)


def _solver_opts(cfg: RunConfig) -> dict:
    solver = cfg["solver"]
    if solver == "nystrom":
        return {"n": cfg["nystrom.n"], "m": cfg["nystrom.m"],
                "seed": cfg.get("nystrom.seed", "seed"),
                "subproblem": cfg["nystrom.subproblem"],
                "center_stats": cfg["nystrom.center_stats"],
                "full_denominator": cfg["nystrom.full_denominator"],
                "oversample": cfg["solver.oversample"],
                "power_iters": cfg["solver.power_iters"]}
    return {"tol": cfg["solver.tol"],
            "seed": cfg.get("solver.seed", "seed"),
            "oversample": cfg["solver.oversample"],
            "power_iters": cfg["solver.power_iters"]}


def fit_from_config(cfg: RunConfig, a: np.ndarray) -> ksvd.KsvdModel:
    mode = cfg["compat.mode"]
    return ksvd.fit(
        a, make_kernel_spec(cfg, a), r=cfg["rank"],
        compat=None if mode == "auto" else mode,
        solver=cfg["solver"], center=cfg["center"],
        compat_seed=cfg.get("compat.seed", "seed"),
        compat_target_dim=cfg["compat.target_dim"],
        solver_opts=_solver_opts(cfg))


def resolve_sides(cfg: RunConfig, a: np.ndarray) -> str:
    sides = cfg["features.sides"]
    if sides == "auto":
        return "both" if a.shape[0] == a.shape[1] else "left"
    return sides


# --- baselines -------------------------------------------------------------------

def method_features(cfg: RunConfig, a: np.ndarray, with_right: bool = False):
    """Features for the configured method; optionally the right-side set too.

    ksvd is the package model; svd takes the exact factors of the raw
    matrix; kpca runs an RBF kernel over (symmetrized, for square inputs)
    row data; pca projects centered rows on their top principal directions.
    """
    method = cfg["method"]
    r = cfg["rank"]
    if method == "ksvd":
        model = fit_from_config(cfg, a)
        r = min(r, model.rank)
        if with_right:
            return (ksvd.transform(model, "left", r).features,
                    ksvd.transform(model, "right", r).features)
        return evaluation.side_features(model, resolve_sides(cfg, a), r), None
    if method == "svd":
        res = svd_exact(a)
        take = min(r, res.rank)
        return res.u[:, :take], (res.v[:, :take] if with_right else None)
    if method == "kpca":
        rows = 0.5 * (a + a.T) if a.shape[0] == a.shape[1] else a
        gamma = cfg["kernel.gamma"]
        if gamma is None:
            gamma = kernels.default_gamma(rows, k=cfg["kernel.gamma_k"])
        k = kernels.kernel_matrix(KernelSpec(family="rbf", gamma=gamma),
                                  DataSources(x=rows, z=rows))
        kc = kernels.center(k)[0]
        res = svd_exact(kc)
        feats = res.u[:, :min(r, res.rank)]
        return feats, (feats if with_right else None)
    # pca: scores on the top principal directions of the centered rows
    centered = a - a.mean(axis=0, keepdims=True)
    res = svd_exact(centered)
    take = min(r, res.rank)
    feats = centered @ res.v[:, :take]
    return feats, (feats if with_right else None)


# --- output helpers --------------------------------------------------------------

def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(cfg: RunConfig, command: str, out: Path) -> Path:
    import aksvd
    manifest = {
        "command": command,
        "config": cfg.manifest(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "aksvd": aksvd.__version__,
        },
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def write_metric_rows(path: Path, rows: list[dict]) -> None:
    fields = ["task", "method", "kernel", "gamma", "seed", "metric_name",
              "value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _metric_row(cfg: RunConfig, task: str, spec_gamma, name: str,
                value: float) -> dict:
    return {"task": task, "method": cfg["method"],
            "kernel": cfg["kernel.family"],
            "gamma": "" if spec_gamma is None else f"{spec_gamma:.17g}",
            "seed": cfg["seed"], "metric_name": name,
            "value": f"{value:.17g}"}


# --- commands --------------------------------------------------------------------

def run_extract(cfg: RunConfig) -> Path:
    a, _, _ = load_dataset(cfg)
    model = fit_from_config(cfg, a)
    out = _out_dir(cfg)
    write_matrix_csv(out / "left.csv",
                     ksvd.transform(model, "left").features)
    write_matrix_csv(out / "right.csv",
                     ksvd.transform(model, "right").features)
    write_matrix_csv(out / "lambda.csv", model.lam.reshape(-1, 1))
    ksvd.save_model(model, out / "model")
    write_manifest(cfg, "extract", out)
    return out


def run_classify(cfg: RunConfig) -> Path:
    a, labels, task = load_dataset(cfg)
    if labels is None:
        raise ConfigError("classification needs labels; provide "
                          "dataset.labels or a labeled dataset")
    if task != "classification":
        raise ConfigError("dataset.task must be classification")
    labels = np.asarray(labels)
    keep = labels >= 0 if labels.dtype.kind in "iu" else np.ones(
        labels.shape[0], dtype=bool)
    if np.unique(labels[keep]).size < 2:
        raise SingleClassError("need at least two classes to classify")
    feats, _ = method_features(cfg, a)
    feats, labels = feats[keep], labels[keep]
    train, test = evaluation.split_train_test(
        labels, cfg["split.test_fraction"], seed=cfg.get("split.seed", "seed"))
    clf = evaluation.lssvm_fit(
        evaluation.LabeledFeatures(feats[train], labels[train]),
        gamma_reg=cfg["eval.gamma_reg"])
    pred = evaluation.lssvm_predict(clf, feats[test])
    truth = labels[test]
    micro, macro = evaluation.f1_scores(pred, truth)
    spec_gamma = None if cfg["kernel.family"] == "linear" else \
        make_kernel_spec(cfg, a).gamma
    rows = [
        _metric_row(cfg, "classify", spec_gamma, "accuracy",
                    evaluation.accuracy(pred, truth)),
        _metric_row(cfg, "classify", spec_gamma, "micro_f1", micro),
        _metric_row(cfg, "classify", spec_gamma, "macro_f1", macro),
    ]
    if clf.classes.size == 2:
        scores = evaluation.lssvm_decision(clf, feats[test])
        rows.append(_metric_row(cfg, "classify", spec_gamma, "auroc",
                                evaluation.auroc(scores[:, 1] - scores[:, 0],
                                                 truth)))
    out = _out_dir(cfg)
    write_metric_rows(out / "metrics.csv", rows)
    write_manifest(cfg, "classify", out)
    return out


def run_regress(cfg: RunConfig) -> Path:
    a, targets, task = load_dataset(cfg)
    if task != "regression":
        raise ConfigError("regress needs dataset.task = regression")
    feats, _ = method_features(cfg, a)
    train, test = evaluation.split_train_test(
        targets, cfg["split.test_fraction"], seed=cfg.get("split.seed", "seed"),
        stratify=False)
    fit = evaluation.ridge_fit(feats[train], np.asarray(targets)[train],
                               gamma_reg=cfg["eval.gamma_reg"])
    pred = evaluation.ridge_predict(fit, feats[test])
    spec_gamma = None if cfg["kernel.family"] == "linear" else \
        make_kernel_spec(cfg, a).gamma
    rows = [_metric_row(cfg, "regress", spec_gamma, "rmse",
                        evaluation.rmse(pred, np.asarray(targets)[test]))]
    out = _out_dir(cfg)
    write_metric_rows(out / "metrics.csv", rows)
    write_manifest(cfg, "regress", out)
    return out


def run_reconstruct(cfg: RunConfig) -> Path:
    a, _, _ = load_dataset(cfg)
    if cfg["dataset.format"] == "csv":
        raise ConfigError("graph reconstruction needs a graph dataset")
    degrees = a.sum(axis=1).astype(int)
    left, right = method_features(cfg, a, with_right=True)
    recon = evaluation.graph_reconstruct(left, degrees,
                                         target_embedding=right)
    l1, l2 = evaluation.reconstruction_error(recon, a)
    spec_gamma = None if cfg["kernel.family"] == "linear" else \
        make_kernel_spec(cfg, a).gamma
    rows = [_metric_row(cfg, "reconstruct", spec_gamma, "l1", l1),
            _metric_row(cfg, "reconstruct", spec_gamma, "l2", l2)]
    out = _out_dir(cfg)
    write_metric_rows(out / "metrics.csv", rows)
    write_manifest(cfg, "reconstruct", out)
    return out


# --- benchmarking ----------------------------------------------------------------

def _bench_reference(g: np.ndarray, r: int, cfg: RunConfig):
    if min(g.shape) <= cfg["bench.exact_reference_max"]:
        return svd_exact(g)
    return svd_truncated(g, r, tol=1e-14)


def _timed_solve(source, solver: str, epsilon: float, reference,
                 ncfg: NystromConfig, repeats: int):
    """One warmup then ``repeats`` timed runs; medians the wall time."""
    results, times = [], []
    for _ in range(repeats + 1):
        try:
            rep = nystrom.solve_to_tolerance(source, solver, epsilon,
                                             reference, ncfg)
        except ToleranceUnreachableError as err:
            rep = err.report
        results.append(rep)
        times.append(rep.wall_time)
    rep = results[-1]
    return rep, float(np.median(times[1:]))


def _kernel_parts(cfg: RunConfig, a: np.ndarray):
    """(spec, sources) for lazy kernel evaluation; compat already applied."""
    spec = make_kernel_spec(cfg, a)
    mode = cfg["compat.mode"]
    compat = ksvd._resolve_compat(a, None if mode == "auto" else mode,
                                  cfg.get("compat.seed", "seed"),
                                  cfg["compat.target_dim"], True)
    sources, _ = ksvd._transformed_sources(a, compat)
    return spec, sources


def _fresh_lazy(cfg: RunConfig, spec, sources) -> LazyKernelSource:
    return LazyKernelSource(spec, sources,
                            full_denominator=cfg["nystrom.full_denominator"])


def run_bench(cfg: RunConfig) -> Path:
    """solve_to_tolerance for every requested solver and epsilon.

    The benchmark runs on the uncentered kernel matrix. Dense baselines and
    the accuracy reference materialize it once; the sampled asymmetric
    solver only ever sees the lazy block source.
    """
    a, _, _ = load_dataset(cfg)
    solvers = parse_names(cfg["bench.solvers"], "bench.solvers",
                          nystrom.SOLVERS)
    epsilons = parse_floats(cfg["bench.epsilons"], "bench.epsilons")
    spec, sources = _kernel_parts(cfg, a)
    g = _fresh_lazy(cfg, spec, sources).full()
    reference = _bench_reference(g, cfg["rank"], cfg)
    ncfg = NystromConfig(
        r=cfg["rank"], n=cfg["nystrom.n"], m=cfg["nystrom.m"],
        seed=cfg.get("nystrom.seed", "seed"), m_growth=cfg["nystrom.growth"],
        subproblem=cfg["nystrom.subproblem"],
        oversample=cfg["solver.oversample"],
        power_iters=cfg["solver.power_iters"])
    repeats = cfg["bench.repeats"]

    rows = []
    for epsilon in epsilons:
        timings = {}
        for solver in solvers:
            source = _fresh_lazy(cfg, spec, sources) \
                if solver == "asym_nystrom" else g
            rep, median_time = _timed_solve(source, solver, epsilon,
                                            reference, ncfg, repeats)
            timings[solver] = median_time
            rows.append({
                "solver": solver, "N": g.shape[0], "M": g.shape[1],
                "r": cfg["rank"], "epsilon": f"{epsilon:.17g}",
                "m_used": rep.m_used, "eta": f"{rep.eta:.17g}",
                "wall_time_s": f"{median_time:.6g}", "seed": ncfg.seed,
                "status": rep.status,
            })
        t_rsvd = timings.get("rsvd")
        for row in rows:
            if row["epsilon"] == f"{epsilon:.17g}" and t_rsvd:
                own = float(row["wall_time_s"])
                row["speedup"] = f"{t_rsvd / own:.6g}" if own > 0 else ""
            elif "speedup" not in row:
                row["speedup"] = ""
    out = _out_dir(cfg)
    fields = ["solver", "N", "M", "r", "epsilon", "m_used", "eta",
              "wall_time_s", "seed", "status", "speedup"]
    with open(out / "bench.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    write_manifest(cfg, "bench", out)
    return out


def run_sweep(cfg: RunConfig) -> Path:
    """Bandwidth sweep: sampled-solver budget and speedup per gamma value."""
    a, _, _ = load_dataset(cfg)
    if cfg["sweep.gammas"] is not None:
        gammas = parse_floats(cfg["sweep.gammas"], "sweep.gammas")
    else:
        base = kernels.default_gamma(a, k=cfg["kernel.gamma_k"])
        scales = parse_floats(cfg["sweep.gamma_scales"], "sweep.gamma_scales")
        gammas = tuple(base * s for s in scales)
    epsilon = cfg["nystrom.epsilon"]
    seeds = [cfg["seed"] + i for i in range(cfg["sweep.seeds"])]

    rows = []
    for gamma in sorted(gammas):
        sweep_cfg = RunConfig(values=dict(cfg.values))
        sweep_cfg.values["kernel.gamma"] = float(gamma)
        spec, sources = _kernel_parts(sweep_cfg, a)
        g = _fresh_lazy(sweep_cfg, spec, sources).full()
        reference = _bench_reference(g, cfg["rank"], cfg)
        t0 = time.perf_counter()
        svd_truncated(g, cfg["rank"], tol=1e-10)
        t_dense = time.perf_counter() - t0
        for seed in seeds:
            ncfg = NystromConfig(
                r=cfg["rank"], seed=seed, m_growth=cfg["nystrom.growth"],
                subproblem=cfg["nystrom.subproblem"],
                oversample=cfg["solver.oversample"],
                power_iters=cfg["solver.power_iters"])
            source = _fresh_lazy(sweep_cfg, spec, sources)
            try:
                rep = nystrom.solve_to_tolerance(source, "asym_nystrom",
                                                 epsilon, reference, ncfg)
            except ToleranceUnreachableError as err:
                rep = err.report
            speedup = t_dense / rep.wall_time if rep.wall_time > 0 else ""
            rows.append({
                "gamma": f"{gamma:.17g}", "epsilon": f"{epsilon:.17g}",
                "seed": seed, "m_used": rep.m_used,
                "eta": f"{rep.eta:.17g}",
                "wall_time_s": f"{rep.wall_time:.6g}",
                "speedup_vs_tsvd": f"{speedup:.6g}" if speedup else "",
                "status": rep.status,
            })
    out = _out_dir(cfg)
    fields = ["gamma", "epsilon", "seed", "m_used", "eta", "wall_time_s",
              "speedup_vs_tsvd", "status"]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    write_manifest(cfg, "nystrom-sweep", out)
    return out
