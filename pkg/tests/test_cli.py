import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from conftest import random_f32
from rfeval import cache
from rfeval.cli import main
from rfeval.data import save_images
from rfeval.extractors import FeatureMatrix


@pytest.fixture(scope="module")
def dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    save_images(random_f32(0, (10, 3, 16, 16), 0, 1), root / "real")
    save_images(random_f32(1, (10, 3, 16, 16), 0, 1), root / "gen")
    save_images(1.0 - random_f32(2, (10, 3, 16, 16), 0, 1), root / "cont")
    return root


@pytest.fixture()
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


SIZE_ARGS = ["--extractor", "cnn-vgg", "--input-size", "16"]


def test_extract_writes_cache(runner, dirs, tmp_path):
    out = tmp_path / "feat.rfev"
    run_ok(runner, ["extract", "--images", str(dirs / "real"), *SIZE_ARGS,
                    "-s", "0", "--out", str(out)])
    fm = cache.load_features(out)
    assert fm.data.shape == (10, 512)
    assert fm.meta["extractor"] == "cnn-vgg" and fm.meta["seed"] == 0
    assert "dataset_id" in fm.meta


def test_extract_multi_seed_suffixes(runner, dirs, tmp_path):
    out = tmp_path / "feat.rfev"
    run_ok(runner, ["extract", "--images", str(dirs / "real"), *SIZE_ARGS,
                    "-s", "0", "-s", "1", "--out", str(out)])
    for seed in (0, 1):
        fm = cache.load_features(tmp_path / f"feat_s{seed}.rfev")
        assert fm.meta["seed"] == seed


def test_fid_from_images(runner, dirs):
    result = run_ok(runner, ["fid", "--images", str(dirs / "real"),
                             "--images", str(dirs / "gen"), *SIZE_ARGS, "-s", "0"])
    payload = json.loads(result.output)
    assert payload["metric"] == "fid"
    assert payload["value"] >= 0.0


def test_fid_multi_seed_aggregates(runner, dirs):
    result = run_ok(runner, ["fid", "--images", str(dirs / "real"),
                             "--images", str(dirs / "gen"), *SIZE_ARGS,
                             "-s", "0", "-s", "1"])
    payload = json.loads(result.output)
    assert len(payload["per_seed"]) == 2
    assert "mean" in payload and "std" in payload


def test_kid_from_feature_files(runner, dirs, tmp_path):
    a, b = tmp_path / "a.rfev", tmp_path / "b.rfev"
    cache.save_features(FeatureMatrix(random_f32(3, (20, 8)), {}), a)
    cache.save_features(FeatureMatrix(random_f32(4, (20, 8)), {}), b)
    result = run_ok(runner, ["kid", "--features", str(a), "--features", str(b)])
    assert "per_seed" in json.loads(result.output)


def test_pr_output(runner, dirs):
    result = run_ok(runner, ["pr", "--images", str(dirs / "real"),
                             "--images", str(dirs / "gen"), *SIZE_ARGS,
                             "-s", "0", "--k", "2"])
    payload = json.loads(result.output)
    per = payload["per_seed"][0]
    assert set(per) == {"precision", "recall"}


def test_pair_requires_two_inputs(runner, dirs):
    result = CliRunner().invoke(main, ["fid", "--images", str(dirs / "real")])
    assert result.exit_code != 0
    assert "exactly two" in result.output


def test_csv_format_and_out_file(runner, dirs, tmp_path):
    out = tmp_path / "fid.csv"
    run_ok(runner, ["fid", "--images", str(dirs / "real"), "--images",
                    str(dirs / "gen"), *SIZE_ARGS, "-s", "0",
                    "--format", "csv", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[0] == "metric"
    assert len(lines) == 2


def test_disturb_blur(runner, dirs, tmp_path):
    out = tmp_path / "blurred"
    run_ok(runner, ["disturb", "--images", str(dirs / "real"), "--kind",
                    "gaussian_blur", "--level", "2", "--out", str(out)])
    assert len(list(out.glob("*.png"))) == 10


def test_disturb_param_level_exclusive(runner, dirs, tmp_path):
    result = CliRunner().invoke(main, ["disturb", "--images", str(dirs / "real"),
                                       "--kind", "gaussian_blur", "--level", "1",
                                       "--param", "0.5", "--out", str(tmp_path / "x")])
    assert result.exit_code != 0


def test_disturb_contamination_requires_contaminant(runner, dirs, tmp_path):
    result = CliRunner().invoke(main, ["disturb", "--images", str(dirs / "real"),
                                       "--kind", "class_contamination", "--level", "1",
                                       "--out", str(tmp_path / "x")])
    assert result.exit_code != 0
    run_ok(runner, ["disturb", "--images", str(dirs / "real"), "--kind",
                    "class_contamination", "--level", "1", "--contaminant",
                    str(dirs / "cont"), "--out", str(tmp_path / "y")])


def test_outlier_split(runner, tmp_path):
    rng_hi = random_f32(5, (30, 6))
    rng_lo = random_f32(6, (30, 4))
    hi, lo = tmp_path / "hi.rfev", tmp_path / "lo.rfev"
    cache.save_features(FeatureMatrix(rng_hi, {}), hi)
    cache.save_features(FeatureMatrix(rng_lo, {}), lo)
    result = run_ok(runner, ["outlier-split", "--high-features", str(hi),
                             "--low-features", str(lo), "--k", "5", "--alpha", "67"])
    payload = json.loads(result.output)
    assert payload["n"] == 30 and payload["k"] == 5
    assert not set(payload["high_indices"]) & set(payload["low_indices"])


def test_outlier_split_size_mismatch(runner, tmp_path):
    hi, lo = tmp_path / "hi.rfev", tmp_path / "lo.rfev"
    cache.save_features(FeatureMatrix(random_f32(7, (10, 4)), {}), hi)
    cache.save_features(FeatureMatrix(random_f32(8, (12, 4)), {}), lo)
    result = CliRunner().invoke(main, ["outlier-split", "--high-features", str(hi),
                                       "--low-features", str(lo)])
    assert result.exit_code != 0


def test_sweep_command(runner, dirs):
    result = run_ok(runner, ["sweep", "--real", str(dirs / "real"), "--outliers",
                             str(dirs / "cont"), "--step", "3", "--num-steps", "2",
                             *SIZE_ARGS, "-s", "0"])
    payload = json.loads(result.output)
    assert len(payload["rows"]) == 3
    assert payload["rows"][0]["proportion"] == 0.0


def test_retrieve_command(runner, dirs):
    query = next((dirs / "real").glob("*.png"))
    result = run_ok(runner, ["retrieve", "--query", str(query), "--corpus",
                             str(dirs / "real"), "--top", "3", *SIZE_ARGS])
    rows = json.loads(result.output)["rows"]
    assert len(rows) == 3
    # the query is in the corpus, so rank 1 is itself at distance ~0
    assert rows[0]["file"] == query.name
    assert rows[0]["distance"] == pytest.approx(0.0, abs=1e-4)


def test_seed_sweep_command(runner, dirs):
    result = run_ok(runner, ["seed-sweep", "--images", str(dirs / "real"),
                             "--images", str(dirs / "gen"), *SIZE_ARGS,
                             "-s", "0", "-s", "1", "-s", "2", "--metric", "kid"])
    payload = json.loads(result.output)
    assert len(payload["per_seed"]) == 3
    assert "mean" in payload and "std" in payload


def test_report_command(runner, dirs, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "kid", "seeds": [0],
        "a": str(dirs / "real"), "b": str(dirs / "gen"),
    }))
    out = tmp_path / "report"
    run_ok(runner, ["report", "--config", str(cfg), "--out", str(out)])
    payload = json.loads((out / "report.json").read_text())
    assert payload["experiment"] == "compare"


def test_help_lists_subcommands(runner):
    result = run_ok(runner, ["--help"])
    for cmd in ("extract", "fid", "kid", "pr", "disturb", "outlier-split",
                "sweep", "retrieve", "seed-sweep", "report"):
        assert cmd in result.output
