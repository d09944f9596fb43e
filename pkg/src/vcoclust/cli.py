"""Batch command-line front end.

Subcommands: ``train`` (full run plus artifacts), ``eval`` (score saved
assignments), ``export-embeddings`` (raw or 2-D projected coordinates) and
``sweep`` (embedding-size study). Every report lands as delimited text
plus, unless ``--no-plots`` is given, a rendered figure next to it.

Exit codes: 0 success, 1 usage, 2 bad input or config, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import checkpoint as ckpt
from . import export, gmm, metrics, plots, trainer
from .config import parse_config, config_to_dict
from .errors import ConfigError, InputError, NumericError, VcoclustError
from .graphdata import load_dataset, load_planetoid_content

ENV_OUT_ROOT = "VCOCLUST_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_flags(p, j_as_list=False):
    p.add_argument("--config", help="key = value config file")
    if j_as_list:
        p.add_argument("--j", help="comma-separated embedding sizes to sweep")
    else:
        p.add_argument("--j", type=int, help="embedding size")
    p.add_argument("--hidden", type=int, help="encoder hidden width")
    p.add_argument("--t1", type=int, help="pretraining epochs")
    p.add_argument("--t2", type=int, help="refinement epochs")
    p.add_argument("--interval", type=int,
                   help="network-update epochs per decade of refinement")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--omega", type=float, help="assignment-hardening weight")
    p.add_argument("--beta", type=float, help="center-separation weight")
    p.add_argument("--alpha", type=float, help="Student-t degrees of freedom")
    p.add_argument("--mc-samples", type=int, help="Monte-Carlo samples per pass")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--no-self-loops", action="store_true",
                   help="normalize the adjacency without added self loops")
    p.add_argument("--pos-weight", type=float,
                   help="positive-class weight in edge reconstruction")
    p.add_argument("--cah-input", choices=["mean", "sample"],
                   help="embeddings used for soft assignments")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _add_dataset_flags(p):
    p.add_argument("--dataset", help="directory holding edges/features/labels TSVs")
    p.add_argument("--edges", help="edge list TSV")
    p.add_argument("--features", help="feature incidence TSV")
    p.add_argument("--labels", help="label TSV")
    p.add_argument("--planetoid-dir", help="directory holding *.content and *.cites")


def _config_overrides(args):
    keys = ["j", "hidden", "t1", "t2", "interval", "lr", "omega", "beta", "alpha",
            "seed", "out", "dataset", "edges", "features", "labels"]
    out = {k: getattr(args, k, None) for k in keys}
    out["mc_samples"] = getattr(args, "mc_samples", None)
    out["planetoid_dir"] = getattr(args, "planetoid_dir", None)
    out["pos_weight"] = getattr(args, "pos_weight", None)
    out["cah_input"] = getattr(args, "cah_input", None)
    if getattr(args, "no_self_loops", False):
        out["self_loops"] = False
    return {k: v for k, v in out.items() if v is not None}


def _load_graph(config):
    if config.planetoid_dir:
        root = Path(config.planetoid_dir)
        contents = sorted(root.glob("*.content"))
        cites = sorted(root.glob("*.cites"))
        if len(contents) != 1 or len(cites) != 1:
            raise InputError(
                f"{root}: expected exactly one .content and one .cites file"
            )
        return load_planetoid_content(contents[0], cites[0])
    if config.dataset:
        root = Path(config.dataset)
        labels = root / "labels.tsv"
        return load_dataset(
            root / "edges.tsv", root / "features.tsv",
            labels if labels.exists() else None,
        )
    if config.edges and config.features:
        return load_dataset(config.edges, config.features, config.labels)
    raise UsageError(
        "no dataset given: use --dataset, --planetoid-dir, or --edges/--features"
    )


def _version_string():
    version = __version__
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
        if described.returncode == 0:
            version = f"{version}+{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return version


def _out_dir(config):
    if config.out:
        return Path(config.out)
    root = Path(os.environ.get(ENV_OUT_ROOT, "runs"))
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    return root / stamp


def _write_loss_log(path, history):
    from .losses import LossReport

    header = "epoch\tphase\t" + "\t".join(LossReport.FIELDS)
    rows = [f"{epoch}\t{phase}\t{report.tsv_row()}" for epoch, phase, report in history]
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


def _run_one_seed(graph, config, run_dir, make_plots):
    run_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = run_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)

    def hook(state):
        ckpt.save_state(ckpt_dir / f"epoch_{state.epoch:04d}.tsv", state)

    started = time.perf_counter()
    state, result = trainer.run_training(graph, config, checkpoint_hook=hook)
    wall = time.perf_counter() - started

    (run_dir / "config.txt").write_text(
        "\n".join(config.echo_lines()) + "\n", encoding="utf-8"
    )
    _write_loss_log(run_dir / "loss_log.tsv", state.history)
    ckpt.save_state(run_dir / "checkpoint.tsv", state)
    embeddings = trainer.node_embedding_means(state)
    export.write_embeddings_tsv(run_dir / "embeddings.tsv", embeddings)
    export.write_assignments_tsv(run_dir / "assignments.tsv", result.assignments)

    metric_dict = None
    if result.metrics is not None:
        metric_dict = result.metrics.as_dict()
        (run_dir / "metrics.json").write_text(
            json.dumps(metric_dict, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (run_dir / "metrics.tsv").write_text(
            metrics.MetricReport.tsv_header() + "\n" + result.metrics.tsv_row() + "\n",
            encoding="utf-8",
        )

    report = {
        "config": config_to_dict(config),
        "seed": config.seed,
        "version": _version_string(),
        "wall_seconds": wall,
        "n_nodes": graph.n_nodes,
        "n_attrs": graph.n_attrs,
        "k_clusters": graph.k_clusters,
        "metrics": metric_dict,
        "loss_history": [
            {"epoch": e, "phase": phase, **r.as_dict()} for e, phase, r in state.history
        ],
    }
    (run_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    if make_plots:
        plots.plot_loss_curves(state.history, run_dir / "loss_curves.png")
        pts = export.pca_project(embeddings, 2)
        plots.plot_embedding_scatter(
            pts, result.assignments, run_dir / "embedding_pca.png",
            title="embedding means, 2-D projection",
        )
    return state, result, report


def _parse_seed_list(args, config):
    if getattr(args, "seeds", None):
        tokens = [t for t in args.seeds.split(",") if t.strip()]
        try:
            seeds = [int(t) for t in tokens]
        except ValueError:
            raise UsageError(f"--seeds expects integers, got {args.seeds!r}") from None
        if not seeds:
            raise UsageError("--seeds given but empty")
        if len(set(seeds)) != len(seeds):
            raise UsageError("--seeds contains duplicates")
        return seeds
    return [config.seed]


def _seed_worker(payload):
    graph, cfg, run_dir, make_plots = payload
    _, _, report = _run_one_seed(graph, cfg, Path(run_dir), make_plots)
    return report


def cmd_train(args):
    config = parse_config(args.config, _config_overrides(args))
    graph = _load_graph(config)
    if graph.k_clusters < 2:
        raise InputError("training needs labeled data with at least 2 classes")
    seeds = _parse_seed_list(args, config)
    workers = max(1, getattr(args, "workers", 1) or 1)
    out = _out_dir(config)
    make_plots = not args.no_plots

    jobs = []
    for seed in seeds:
        cfg = replace(config, seed=seed).validate()
        run_dir = out if len(seeds) == 1 else out / f"seed_{seed}"
        jobs.append((graph, cfg, str(run_dir), make_plots))

    if workers > 1 and len(jobs) > 1:
        # each repetition is an independent process; results keep seed order
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            reports = list(pool.map(_seed_worker, jobs))
    else:
        reports = [_seed_worker(job) for job in jobs]

    rows = []
    for seed, report in zip(seeds, reports):
        if report["metrics"]:
            rows.append({"seed": seed, **report["metrics"]})
            printable = "  ".join(
                f"{k}={report['metrics'][k]:.4f}" for k in metrics.MetricReport.FIELDS
            )
            print(f"seed {seed}: {printable}")

    if rows and len(seeds) > 1:
        fields = metrics.MetricReport.FIELDS
        lines = ["seed\t" + "\t".join(fields)]
        for row in rows:
            lines.append("\t".join([str(row["seed"])] + [repr(row[f]) for f in fields]))
        means = {f: float(np.mean([r[f] for r in rows])) for f in fields}
        lines.append("\t".join(["mean"] + [repr(means[f]) for f in fields]))
        (out / "seeds_summary.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("mean:   " + "  ".join(f"{k}={means[k]:.4f}" for k in fields))
    print(f"artifacts written to {out}")
    return 0


def cmd_eval(args):
    pred_map = export.read_assignments_tsv(args.assignments)
    true_map = export.read_assignments_tsv(args.labels)
    if set(pred_map) != set(true_map):
        raise InputError("assignments and labels cover different node sets")
    keys = sorted(pred_map)
    pred = _densify_ids([pred_map[k] for k in keys])
    true = _densify_ids([true_map[k] for k in keys])
    report = metrics.evaluate(pred, true)
    for name in metrics.MetricReport.FIELDS:
        print(f"{name}\t{getattr(report, name)!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (out / "metrics.tsv").write_text(
            metrics.MetricReport.tsv_header() + "\n" + report.tsv_row() + "\n",
            encoding="utf-8",
        )
        if not args.no_plots:
            _plot_contingency(pred, true, out / "contingency.png")
    return 0


def _plot_contingency(pred, true, path):
    import matplotlib.pyplot as plt

    table = metrics.contingency(pred, true)
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(table.counts, cmap="viridis")
    ax.set_xlabel("true class")
    ax.set_ylabel("predicted cluster")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _densify_ids(values):
    distinct = sorted(set(values))
    index = {v: i for i, v in enumerate(distinct)}
    return np.array([index[v] for v in values], dtype=np.int64)


def cmd_embed_export(args):
    meta, tensors = ckpt.load_tensors(args.checkpoint)
    points = tensors.get("embedding.nodes")
    if points is None:
        raise InputError(f"{args.checkpoint}: no node embeddings stored")
    out = Path(args.out) if args.out else Path("embeddings_export.tsv")
    if args.projection == "pca2":
        coords = export.pca_project(points, 2)
    else:
        coords = points
    export.write_embeddings_tsv(out, coords)
    print(f"wrote {out} ({coords.shape[0]} rows, {coords.shape[1]} columns)")
    if args.projection == "pca2" and not args.no_plots:
        groups = _checkpoint_groups(tensors, points)
        fig_path = out.with_suffix(".png")
        plots.plot_embedding_scatter(coords, groups, fig_path,
                                     title="2-D projection of node embeddings")
        print(f"wrote {fig_path}")
    return 0


def _checkpoint_groups(tensors, points):
    if "prior.means" in tensors:
        prior = gmm.trainable_prior(
            tensors["prior.means"],
            np.exp(tensors["prior.log_vars"]),
            _softmax(tensors["prior.weight_logits"].reshape(-1)),
        )
        return np.argmax(gmm.responsibilities(points, prior), axis=1)
    return np.zeros(points.shape[0], dtype=np.int64)


def _softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def cmd_sweep(args):
    config = parse_config(args.config, _config_overrides(args))
    tokens = [t for t in str(args.j_list).split(",") if t.strip()]
    try:
        j_values = [int(t) for t in tokens]
    except ValueError:
        raise UsageError(f"--j expects integers, got {args.j_list!r}") from None
    if not j_values:
        raise UsageError("--j list is empty")
    if len(set(j_values)) != len(j_values):
        raise UsageError("--j list contains duplicate sizes")
    graph = _load_graph(config)
    if graph.k_clusters < 2:
        raise InputError("sweep needs labeled data with at least 2 classes")
    seeds = _parse_seed_list(args, config)
    out = _out_dir(config)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for j in j_values:
        per_seed = []
        for seed in seeds:
            cfg = replace(config, j=j, seed=seed).validate()
            run_dir = out / f"j_{j}" / f"seed_{seed}"
            _, _, report = _run_one_seed(graph, cfg, run_dir, make_plots=False)
            per_seed.append(report["metrics"])
        rows.append({
            "j": j,
            "nmi": float(np.mean([m["nmi"] for m in per_seed])),
            "ari": float(np.mean([m["ari"] for m in per_seed])),
        })
        print(f"j={j}: nmi={rows[-1]['nmi']:.4f} ari={rows[-1]['ari']:.4f}")

    lines = ["j\tnmi\tari"]
    for r in rows:
        lines.append(f"{r['j']}\t{r['nmi']!r}\t{r['ari']!r}")
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not args.no_plots:
        plots.plot_sweep(rows, out / "sweep.png")
    print(f"sweep table written to {out / 'sweep.tsv'}")
    return 0


def build_parser():
    parser = _Parser(prog="vcoclust", description="attributed-network clustering "
                     "by variational co-embedding with a mixture prior")
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train end to end and write artifacts")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--seeds", help="comma-separated seeds; runs each and averages")
    p.add_argument("--workers", type=int, default=1,
                   help="processes for --seeds repetitions (default sequential)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score saved assignments against labels")
    p.add_argument("--assignments", required=True, help="node<TAB>cluster TSV")
    p.add_argument("--labels", required=True, help="node<TAB>label TSV")
    p.add_argument("--out", help="directory for metrics files")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-embeddings", help="dump embeddings from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--projection", choices=["none", "pca2"], default="none")
    p.add_argument("--out", help="output TSV path")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_embed_export)

    p = sub.add_parser("sweep", help="train across embedding sizes and tabulate")
    _add_dataset_flags(p)
    _add_config_flags(p, j_as_list=True)
    p.add_argument("--seeds", help="comma-separated seeds per size")
    p.set_defaults(func=cmd_sweep, sweep=True)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "sweep", False):
            args.j_list = args.j if args.j is not None else "32"
            args.j = None
        return args.func(args) or 0
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (InputError, ConfigError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3
    except VcoclustError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
