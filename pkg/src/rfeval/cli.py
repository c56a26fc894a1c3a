"""Command-line interface."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from rfeval import disturbances, metrics, outliers
from rfeval.cache import load_features, save_features
from rfeval.data import ingest_images, save_images
from rfeval.experiment import run_experiment
from rfeval.extractors import (NetworkConfig, build_network, extract,
                               preprocess)

_extractor_opt = click.option("--extractor", type=click.Choice(["cnn-vgg", "vit-t", "vit-b"]),
                              default="vit-t", show_default=True)
_seed_opt = click.option("--seed", "-s", "seeds", type=int, multiple=True,
                         default=(0,), show_default=True)
_tap_opt = click.option("--tap", type=click.Choice(["final", "stem"]),
                        default="final", show_default=True)
_format_opt = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                           default="json", show_default=True)
_input_size_opt = click.option("--input-size", type=int, default=None,
                               help="Network input resolution (default per extractor).")


@click.group()
def main():
    """Evaluate image sets in random-feature spaces."""


def _emit(payload: dict, fmt: str, out):
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        rows = payload.get("rows") or [payload]
        keys = list(rows[0])
        lines = [",".join(keys)]
        lines += [",".join(str(r[k]) for k in keys) for r in rows]
        text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _embed_dir(path, extractor, seed, tap, input_size, limit=None, batch_size=64):
    cfg = NetworkConfig.by_name(extractor, input_size)
    manifest, images = ingest_images(path, limit=limit)
    fm = extract(build_network(cfg, seed), preprocess(images, cfg),
                 tap=tap, batch_size=batch_size)
    fm.meta["dataset_id"] = manifest.dataset_id
    return fm


def _resolve_pair(features, images, extractor, seed, tap, input_size, limit):
    """Two feature sources from --features files and/or image directories."""
    sources = [("features", p) for p in features] + [("images", p) for p in images]
    if len(sources) != 2:
        raise click.UsageError("need exactly two inputs via --features/--images")
    out = []
    for kind, path in sources:
        if kind == "features":
            out.append(load_features(path))
        else:
            out.append(_embed_dir(path, extractor, seed, tap, input_size, limit))
    return out


def _pair_metric_command(name, compute):
    @main.command(name=name)
    @click.option("--features", multiple=True, type=click.Path(exists=True),
                  help="Feature cache file (repeatable; bypasses extraction).")
    @click.option("--images", multiple=True, type=click.Path(exists=True),
                  help="Image directory (repeatable).")
    @click.option("--limit", type=int, default=None)
    @click.option("--k", type=int, default=3, show_default=True,
                  help="Neighborhood size for pr.")
    @_extractor_opt
    @_seed_opt
    @_tap_opt
    @_input_size_opt
    @_format_opt
    @click.option("--out", type=click.Path(), default=None)
    def cmd(features, images, limit, k, extractor, seeds, tap, input_size, fmt, out):
        per_seed = []
        for seed in seeds:
            a, b = _resolve_pair(features, images, extractor, seed, tap, input_size, limit)
            per_seed.append(compute(a, b, k))
        payload = {"metric": name, "seeds": list(seeds), "per_seed": per_seed}
        if len(seeds) > 1 and not isinstance(per_seed[0], dict):
            report = metrics.aggregate_seeds(name, seeds, per_seed)
            payload.update(mean=report.mean, std=report.std)
        elif len(seeds) == 1 and not isinstance(per_seed[0], dict):
            payload["value"] = per_seed[0]
        _emit(payload, fmt, out)

    cmd.help = f"Compute {name} between two image sets or feature files."
    return cmd


_pair_metric_command("fid", lambda a, b, k: metrics.fid(metrics.fit_gaussian(a),
                                                        metrics.fit_gaussian(b)))
_pair_metric_command("kid", lambda a, b, k: metrics.kid(a, b))
_pair_metric_command("pr", lambda a, b, k: dict(zip(("precision", "recall"),
                                                    metrics.precision_recall(a, b, k=k))))


@main.command(name="extract")
@click.option("--images", required=True, type=click.Path(exists=True))
@click.option("--limit", type=int, default=None)
@_extractor_opt
@_seed_opt
@_tap_opt
@_input_size_opt
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--out", required=True, type=click.Path())
def extract_cmd(images, limit, extractor, seeds, tap, input_size, batch_size, out):
    """Embed an image directory and write a feature cache file per seed."""
    for seed in seeds:
        fm = _embed_dir(images, extractor, seed, tap, input_size, limit, batch_size)
        path = Path(out)
        if len(seeds) > 1:
            path = path.with_name(f"{path.stem}_s{seed}{path.suffix}")
        save_features(fm, path)
        click.echo(f"wrote {path} ({fm.data.shape[0]}x{fm.data.shape[1]})")


@main.command()
@click.option("--images", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True, type=click.Choice(sorted(disturbances.LEVELS)))
@click.option("--level", type=click.IntRange(1, 3), default=None)
@click.option("--param", type=float, default=None,
              help="Explicit parameter instead of --level.")
@click.option("--seed", "-s", type=int, default=0, show_default=True)
@click.option("--contaminant", type=click.Path(exists=True), default=None)
@click.option("--limit", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
def disturb(images, kind, level, param, seed, contaminant, limit, out):
    """Apply one disturbance to an image directory and write PNGs."""
    if (level is None) == (param is None):
        raise click.UsageError("give exactly one of --level or --param")
    _, imgs = ingest_images(images, limit=limit)
    if isinstance(imgs, list):
        raise click.UsageError("disturbances need images of a single size")
    if level is not None:
        spec = disturbances.DisturbanceSpec.at_level(kind, level, seed=seed)
    else:
        spec = disturbances.DisturbanceSpec(kind, param, seed=seed)
    contaminants = None
    if kind == "class_contamination":
        if contaminant is None:
            raise click.UsageError("class_contamination requires --contaminant")
        _, contaminants = ingest_images(contaminant)
        contaminants = np.asarray(contaminants)
    result = disturbances.apply(spec, imgs, contaminants)
    names = save_images(result, out)
    click.echo(f"wrote {len(names)} images to {out}")


@main.command(name="outlier-split")
@click.option("--high-features", required=True, type=click.Path(exists=True),
              help="Feature file for the high-level (semantic) space.")
@click.option("--low-features", required=True, type=click.Path(exists=True),
              help="Feature file for the low-level (stem) space.")
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--alpha", type=float, default=67.0, show_default=True)
@_format_opt
@click.option("--out", type=click.Path(), default=None)
def outlier_split(high_features, low_features, k, alpha, fmt, out):
    """Split samples into high-level and low-level outliers."""
    high = load_features(high_features)
    low = load_features(low_features)
    if high.data.shape[0] != low.data.shape[0]:
        raise click.UsageError("feature files must cover the same samples")
    d_high = outliers.knn_distance(high, k)
    d_low = outliers.knn_distance(low, k)
    split = outliers.split_outliers(d_high, d_low, alpha)
    payload = {
        "k": k, "alpha": alpha, "n": int(high.data.shape[0]),
        "high_indices": split.high_indices.tolist(),
        "low_indices": split.low_indices.tolist(),
    }
    _emit(payload, fmt, out)


@main.command()
@click.option("--real", required=True, type=click.Path(exists=True))
@click.option("--outliers", "outlier_dir", required=True, type=click.Path(exists=True))
@click.option("--step", type=int, default=10, show_default=True)
@click.option("--num-steps", type=int, default=None)
@click.option("--limit", type=int, default=None)
@click.option("--metric", type=click.Choice(["fid", "kid"]), default="fid", show_default=True)
@_extractor_opt
@click.option("--seed", "-s", type=int, default=0, show_default=True)
@_tap_opt
@_input_size_opt
@_format_opt
@click.option("--out", type=click.Path(), default=None)
def sweep(real, outlier_dir, step, num_steps, limit, metric, extractor, seed,
          tap, input_size, fmt, out):
    """Replacement sweep: metric vs. proportion of outliers mixed in."""
    config = {"experiment": "sweep", "real": real, "outliers": outlier_dir,
              "step": step, "metric": metric, "extractor": extractor,
              "seed": seed, "tap": tap, "limit": limit}
    if num_steps is not None:
        config["num_steps"] = num_steps
    if input_size is not None:
        config["input_size"] = input_size
    report = run_experiment(config)
    payload = {"rows": report["curve"], **{k: report[k] for k in
               ("metric", "extractor", "seed", "step")}}
    _emit(payload if fmt == "json" else {"rows": report["curve"]}, fmt, out)


@main.command()
@click.option("--query", required=True, type=click.Path(exists=True),
              help="Query image file.")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--top", type=int, default=5, show_default=True)
@click.option("--limit", type=int, default=None)
@_extractor_opt
@click.option("--seed", "-s", type=int, default=0, show_default=True)
@_tap_opt
@_input_size_opt
@_format_opt
@click.option("--out", type=click.Path(), default=None)
def retrieve(query, corpus, top, limit, extractor, seed, tap, input_size, fmt, out):
    """Nearest corpus images to a query, by feature distance."""
    from rfeval.data import decode_image
    cfg = NetworkConfig.by_name(extractor, input_size)
    manifest, imgs = ingest_images(corpus, limit=limit)
    net = build_network(cfg, seed)

    def embed(batch):
        return extract(net, preprocess(batch, cfg), tap=tap)

    q = decode_image(query)
    ranked = outliers.retrieve_nearest(q, np.asarray(imgs) if not isinstance(imgs, list) else imgs,
                                       embed, top=top)
    payload = {"rows": [{"rank": r + 1, "index": i, "file": manifest.files[i],
                         "distance": d} for r, (i, d) in enumerate(ranked)]}
    _emit(payload, fmt, out)


@main.command(name="seed-sweep")
@click.option("--features", multiple=True, type=click.Path(exists=True))
@click.option("--images", multiple=True, type=click.Path(exists=True))
@click.option("--limit", type=int, default=None)
@click.option("--metric", type=click.Choice(["fid", "kid"]), default="fid", show_default=True)
@_extractor_opt
@click.option("--seed", "-s", "seeds", type=int, multiple=True,
              default=(0, 1, 2, 3, 4), show_default=True)
@_tap_opt
@_input_size_opt
@_format_opt
@click.option("--out", type=click.Path(), default=None)
def seed_sweep(features, images, limit, metric, extractor, seeds, tap,
               input_size, fmt, out):
    """Metric between two sets, repeated across seeds, with mean and std."""
    values = []
    for seed in seeds:
        a, b = _resolve_pair(features, images, extractor, seed, tap, input_size, limit)
        if metric == "fid":
            values.append(metrics.fid(metrics.fit_gaussian(a), metrics.fit_gaussian(b)))
        else:
            values.append(metrics.kid(a, b))
    report = metrics.aggregate_seeds(metric, seeds, values)
    _emit({"metric": metric, "seeds": list(seeds), "per_seed": report.per_seed,
           "mean": report.mean, "std": report.std}, fmt, out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def report(config_path, out):
    """Run a YAML experiment config and write its reports."""
    run_experiment(config_path, out_dir=out)
    click.echo(f"wrote report to {out}")


if __name__ == "__main__":
    main()
