import json

import numpy as np
import pytest
import yaml

from conftest import random_f32
from rfeval import experiment as E
from rfeval.data import save_images


@pytest.fixture(scope="module")
def image_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("imgs")
    save_images(random_f32(0, (12, 3, 16, 16), 0, 1), root / "real")
    save_images(random_f32(1, (12, 3, 16, 16), 0, 1), root / "gen")
    save_images(1.0 - random_f32(2, (12, 3, 16, 16), 0, 1), root / "contaminant")
    return root


def write_yaml(path, config):
    path.write_text(yaml.safe_dump(config))
    return path


def test_load_config_and_errors(tmp_path, image_dirs):
    p = write_yaml(tmp_path / "c.yaml", {"experiment": "compare"})
    cfg = E.load_config(p)
    assert cfg["experiment"] == "compare" and cfg["_path"] == str(p)
    (tmp_path / "bad.yaml").write_text("- just\n- a list\n")
    with pytest.raises(E.ConfigError):
        E.load_config(tmp_path / "bad.yaml")


def test_unknown_experiment_kind():
    with pytest.raises(E.ConfigError):
        E.run_experiment({"experiment": "train"})


def test_missing_field_names_context():
    with pytest.raises(E.ConfigError, match="seeds"):
        E.run_experiment({"experiment": "disturbance", "extractor": "cnn-vgg",
                          "images": "/nonexistent"})


def test_duplicate_seeds_rejected(image_dirs):
    with pytest.raises(E.ConfigError, match="distinct"):
        E.run_experiment({"experiment": "disturbance", "extractor": "cnn-vgg",
                          "images": str(image_dirs / "real"), "seeds": [0, 0],
                          "disturbances": [{"kind": "gaussian_blur"}]})


def test_compare_experiment(image_dirs):
    report = E.run_experiment({
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "kid", "seeds": [0, 1],
        "a": str(image_dirs / "real"), "b": str(image_dirs / "gen"),
    })
    assert report["schema"] == E.SCHEMA
    assert report["experiment"] == "compare"
    assert len(report["results"]["per_seed"]) == 2
    assert report["results"]["mean"] == pytest.approx(
        float(np.mean(report["results"]["per_seed"])))


def test_compare_pr_metric(image_dirs):
    report = E.run_experiment({
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "pr", "k": 2, "seeds": [0],
        "a": str(image_dirs / "real"), "b": str(image_dirs / "gen"),
    })
    per = report["results"]["per_seed"][0]
    assert 0.0 <= per["precision"] <= 1.0 and 0.0 <= per["recall"] <= 1.0


def test_compare_identical_sets_fid_zero(image_dirs):
    report = E.run_experiment({
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "fid", "seeds": [0],
        "a": str(image_dirs / "real"), "b": str(image_dirs / "real"),
    })
    assert report["results"]["per_seed"][0] == pytest.approx(0.0, abs=1e-6)


def test_disturbance_experiment_and_reports(image_dirs, tmp_path):
    config = {
        "experiment": "disturbance", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "fid", "seeds": [0, 1], "images": str(image_dirs / "real"),
        "disturbances": [
            {"kind": "gaussian_noise", "levels": [1, 3]},
            {"kind": "class_contamination", "levels": [2],
             "contaminant": str(image_dirs / "contaminant")},
        ],
    }
    out = tmp_path / "out"
    report = E.run_experiment(config, out_dir=out)
    assert len(report["results"]) == 3
    noise = [r for r in report["results"] if r["kind"] == "gaussian_noise"]
    assert [r["level"] for r in noise] == [1, 3]
    assert all(len(r["per_seed"]) == 2 for r in report["results"])
    # written artifacts
    on_disk = json.loads((out / "report.json").read_text())
    assert on_disk == report
    assert (out / "report.csv").read_text().startswith("kind,level,param,seed,value")
    plot = (out / "plot_gaussian_noise.csv").read_text().splitlines()
    assert plot[0] == "x,y" and len(plot) == 3
    meta = json.loads((out / "report.meta.json").read_text())
    assert "rfeval_version" in meta and "written_at" in meta


def test_sweep_experiment(image_dirs, tmp_path):
    config = {
        "experiment": "sweep", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "fid", "seed": 0, "step": 3, "num_steps": 2,
        "real": str(image_dirs / "real"), "outliers": str(image_dirs / "contaminant"),
    }
    out = tmp_path / "sweep"
    report = E.run_experiment(config, out_dir=out)
    curve = report["curve"]
    assert len(curve) == 3
    assert curve[0]["proportion"] == 0.0 and curve[0]["value"] == pytest.approx(0.0, abs=1e-6)
    assert curve[1]["proportion"] == pytest.approx(0.25)
    assert (out / "plot_sweep.csv").read_text().splitlines()[0] == "x,y"


def test_rerun_byte_identical_report(image_dirs, tmp_path):
    config = {
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "fid", "seeds": [0], "a": str(image_dirs / "real"),
        "b": str(image_dirs / "gen"),
    }
    a, b = tmp_path / "a", tmp_path / "b"
    E.run_experiment(dict(config), out_dir=a)
    E.run_experiment(dict(config), out_dir=b)
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_run_experiment_from_yaml_path(image_dirs, tmp_path):
    p = write_yaml(tmp_path / "cfg.yaml", {
        "experiment": "compare", "extractor": "cnn-vgg", "input_size": 16,
        "metric": "kid", "seeds": [0], "a": str(image_dirs / "real"),
        "b": str(image_dirs / "gen"),
    })
    report = E.run_experiment(p)
    assert report["experiment"] == "compare"
