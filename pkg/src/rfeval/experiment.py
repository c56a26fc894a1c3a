"""Declarative experiment runner.

Configs are YAML mappings with an ``experiment`` discriminator:

    disturbance  extract -> disturb at levels -> metric, per seed
    compare      metric between two image dirs or feature files
    sweep        progressive outlier replacement curve

Reports are emitted as JSON (sorted keys, no timestamps, so reruns are
byte-identical) plus CSV tables and plot-data files; environment metadata
goes to a ``.meta.json`` sidecar.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import platform
from pathlib import Path

import numpy as np
import yaml

from rfeval import __version__, disturbances, metrics, outliers
from rfeval.cache import load_features
from rfeval.data import ingest_images
from rfeval.extractors import NetworkConfig, build_network, extract, preprocess

SCHEMA = "rfeval-report-v1"


class ConfigError(ValueError):
    """A config file violates the experiment schema."""


def _require(config: dict, field: str, types, context: str):
    if field not in config:
        raise ConfigError(f"{context}: missing field {field!r}")
    if not isinstance(config[field], types):
        raise ConfigError(f"{context}: field {field!r} has type "
                          f"{type(config[field]).__name__}")
    return config[field]


def load_config(path) -> dict:
    with open(path) as f:
        config = yaml.safe_load(f)
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    config.setdefault("_path", str(path))
    return config


def _seeds(config: dict, context: str) -> list:
    seeds = _require(config, "seeds", list, context)
    if not seeds or len(set(seeds)) != len(seeds):
        raise ConfigError(f"{context}: seeds must be non-empty and distinct")
    return [int(s) for s in seeds]


def _metric_fn(name: str, k: int = 3):
    if name == "fid":
        return lambda a, b: metrics.fid(metrics.fit_gaussian(a), metrics.fit_gaussian(b))
    if name == "kid":
        return metrics.kid
    if name == "pr":
        return lambda a, b: metrics.precision_recall(a, b, k=k)
    raise ConfigError(f"unknown metric {name!r}")


def _load_image_set(path, limit, input_size, extractor_name):
    cfg = NetworkConfig.by_name(extractor_name, input_size)
    manifest, images = ingest_images(path, limit=limit)
    return cfg, manifest, images


def _run_disturbance(config: dict) -> dict:
    ctx = config.get("_path", "config")
    extractor_name = _require(config, "extractor", str, ctx)
    metric_name = config.get("metric", "fid")
    metric = _metric_fn(metric_name, k=int(config.get("k", 3)))
    seeds = _seeds(config, ctx)
    tap = config.get("tap", "final")
    batch = int(config.get("batch_size", 64))
    disturb_seed = int(config.get("disturb_seed", 0))
    specs = _require(config, "disturbances", list, ctx)

    cfg, manifest, images = _load_image_set(
        _require(config, "images", str, ctx), config.get("limit"),
        config.get("input_size"), extractor_name)
    if isinstance(images, list):
        raise ConfigError(f"{ctx}: disturbance experiments need images of one size")

    nets = [build_network(cfg, s) for s in seeds]
    pre_ref = preprocess(images, cfg)
    ref = {s: extract(net, pre_ref, tap=tap, batch_size=batch)
           for s, net in zip(seeds, nets)}

    results = []
    for entry in specs:
        kind = _require(entry, "kind", str, f"{ctx}:disturbances")
        levels = entry.get("levels", [1, 2, 3])
        contaminants = None
        if kind == "class_contamination":
            cpath = _require(entry, "contaminant", str, f"{ctx}:disturbances")
            _, contaminants = ingest_images(cpath)
        for level in levels:
            spec = disturbances.DisturbanceSpec.at_level(kind, int(level), seed=disturb_seed)
            disturbed = disturbances.apply(spec, images, contaminants)
            pre = preprocess(disturbed, cfg)
            values = [float(metric(ref[s], extract(net, pre, tap=tap, batch_size=batch)))
                      for s, net in zip(seeds, nets)]
            report = metrics.aggregate_seeds(metric_name, seeds, values)
            results.append({
                "kind": kind, "level": int(level), "param": spec.param,
                "metric": metric_name, "seeds": seeds, "per_seed": report.per_seed,
                "mean": report.mean, "std": report.std,
            })
    return {
        "schema": SCHEMA, "experiment": "disturbance",
        "extractor": extractor_name, "tap": tap, "dataset_id": manifest.dataset_id,
        "input_size": cfg.input_size, "results": results,
    }


def _features_for(config, key, cfg, seeds, tap, batch, ctx):
    """Per-seed features from either a cache file or an image directory."""
    path = _require(config, key, str, ctx)
    if Path(path).is_file():
        fm = load_features(path)
        return {s: fm for s in seeds}, f"file:{Path(path).name}"
    manifest, images = ingest_images(path, limit=config.get("limit"))
    pre = preprocess(images, cfg)
    return ({s: extract(build_network(cfg, s), pre, tap=tap, batch_size=batch)
             for s in seeds}, manifest.dataset_id)


def _run_compare(config: dict) -> dict:
    ctx = config.get("_path", "config")
    extractor_name = config.get("extractor", "vit-t")
    cfg = NetworkConfig.by_name(extractor_name, config.get("input_size"))
    metric_name = config.get("metric", "fid")
    metric = _metric_fn(metric_name, k=int(config.get("k", 3)))
    seeds = _seeds(config, ctx) if "seeds" in config else [0]
    tap = config.get("tap", "final")
    batch = int(config.get("batch_size", 64))
    a, a_id = _features_for(config, "a", cfg, seeds, tap, batch, ctx)
    b, b_id = _features_for(config, "b", cfg, seeds, tap, batch, ctx)
    values = [metric(a[s], b[s]) for s in seeds]
    if metric_name == "pr":
        per_seed = [{"precision": p, "recall": r} for p, r in values]
        mean = {"precision": float(np.mean([v[0] for v in values])),
                "recall": float(np.mean([v[1] for v in values]))}
        results = {"per_seed": per_seed, "mean": mean}
    else:
        report = metrics.aggregate_seeds(metric_name, seeds, values)
        results = {"per_seed": report.per_seed, "mean": report.mean,
                   "std": report.std, "min": report.min, "max": report.max}
    return {
        "schema": SCHEMA, "experiment": "compare", "metric": metric_name,
        "extractor": extractor_name, "tap": tap, "seeds": seeds,
        "a": a_id, "b": b_id, "results": results,
    }


def _run_sweep(config: dict) -> dict:
    ctx = config.get("_path", "config")
    extractor_name = config.get("extractor", "vit-t")
    cfg = NetworkConfig.by_name(extractor_name, config.get("input_size"))
    metric = _metric_fn(config.get("metric", "fid"))
    seed = int(config.get("seed", 0))
    tap = config.get("tap", "final")
    batch = int(config.get("batch_size", 64))
    step = int(_require(config, "step", int, ctx))
    _, real = ingest_images(_require(config, "real", str, ctx), limit=config.get("limit"))
    _, pool = ingest_images(_require(config, "outliers", str, ctx))
    net = build_network(cfg, seed)

    def embed(batch_images):
        return extract(net, preprocess(batch_images, cfg), tap=tap, batch_size=batch)

    curve = outliers.replacement_sweep(
        np.asarray(real), np.asarray(pool), step, embed, metric,
        num_steps=config.get("num_steps"), seed=seed)
    return {
        "schema": SCHEMA, "experiment": "sweep", "metric": config.get("metric", "fid"),
        "extractor": extractor_name, "seed": seed, "step": step,
        "curve": [{"proportion": p, "value": v} for p, v in curve],
    }


_RUNNERS = {
    "disturbance": _run_disturbance,
    "compare": _run_compare,
    "sweep": _run_sweep,
}


def run_experiment(config, out_dir=None) -> dict:
    """Execute a config (mapping or YAML path) and optionally write reports."""
    if not isinstance(config, dict):
        config = load_config(config)
    kind = _require(config, "experiment", str, config.get("_path", "config"))
    if kind not in _RUNNERS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    report = _RUNNERS[kind](config)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _report_rows(report: dict):
    if report["experiment"] == "disturbance":
        for entry in report["results"]:
            for seed, value in zip(entry["seeds"], entry["per_seed"]):
                yield {"kind": entry["kind"], "level": entry["level"],
                       "param": entry["param"], "seed": seed, "value": value}
    elif report["experiment"] == "sweep":
        for point in report["curve"]:
            yield {"proportion": point["proportion"], "value": point["value"]}


def write_report(report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    (out / "report.json").write_text(payload)

    rows = list(_report_rows(report))
    if rows:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
        (out / "report.csv").write_text(buf.getvalue())

    if report["experiment"] == "disturbance":
        by_kind: dict[str, list] = {}
        for entry in report["results"]:
            by_kind.setdefault(entry["kind"], []).append((entry["level"], entry["mean"]))
        for kind, points in by_kind.items():
            lines = ["x,y"] + [f"{x},{y}" for x, y in sorted(points)]
            (out / f"plot_{kind}.csv").write_text("\n".join(lines) + "\n")
    elif report["experiment"] == "sweep":
        lines = ["x,y"] + [f"{p['proportion']},{p['value']}" for p in report["curve"]]
        (out / "plot_sweep.csv").write_text("\n".join(lines) + "\n")

    sidecar = {
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "rfeval_version": __version__,
        "python": platform.python_version(),
        "platform": platform.platform(),
    }
    (out / "report.meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")
