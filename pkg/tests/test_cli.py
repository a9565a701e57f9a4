import json
import os

import numpy as np
import pytest

from xbound_seg.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, run
from xbound_seg.df_classes.loss_log_df import LossLogDf
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.pydantic_models.manifest import Manifest
from xbound_seg.pydantic_models.metrics_report import MetricsReport, SweepSummary

# Small enough to train a few steps on CPU inside a unit test
MICRO = [
    "--set", "model.input_size=32",
    "--set", "model.channels=[8, 8, 16, 16]",
    "--set", "model.heads=[1, 1, 2, 2]",
    "--set", "model.kv_strides=[1, 1, 1, 1]",
    "--set", "model.encoder_depth=1",
    "--set", "model.n_im=1",
    "--set", "model.n_ex=1",
]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("data"))
    code = run(["synth", "--out", root, "--seed", "0", "--set", "dataset.n_samples=6"])
    assert code == EXIT_OK
    return root


####################################################################################################
# exit codes
####################################################################################################


def test_unknown_command():
    assert run(["fly"]) == EXIT_USAGE


def test_unknown_config_key(tmp_path):
    assert run(["synth", "--out", str(tmp_path), "--set", "model.nope=1"]) == EXIT_USAGE


def test_bad_config_file(tmp_path):
    fp = tmp_path / "bad.cfg"
    fp.write_text("this line has no equals sign\n")
    assert run(["synth", "--config", str(fp), "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_data_root(tmp_path):
    assert run(["keypoints", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run(["keypoints", "--data", str(tmp_path / "nope"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_checkpoint_is_runtime_error(dataset, tmp_path):
    assert run(["eval", "--data", dataset, "--out", str(tmp_path)]) == EXIT_RUNTIME


####################################################################################################
# synth / keypoints / eval
####################################################################################################


def test_synth_layout(dataset):
    assert len(IOMixin.list_stems(os.path.join(dataset, "images"), ".png")) == 6
    assert len(IOMixin.list_stems(os.path.join(dataset, "masks"), ".png")) == 6
    train = IOMixin.read_split(os.path.join(dataset, "train.txt"))
    val = IOMixin.read_split(os.path.join(dataset, "val.txt"))
    assert len(train) + len(val) == 6 and not set(train) & set(val)
    manifest = Manifest.read_json(os.path.join(dataset, "manifest.json"))
    assert manifest.command == "synth"
    assert manifest.configs.dataset.n_samples == 6


def test_eval_ground_truth_against_itself(dataset, tmp_path):
    code = run(
        ["eval", "--data", dataset, "--out", str(tmp_path),
         "--set", f"eval.pred_dir={os.path.join(dataset, 'masks')}"]
    )
    assert code == EXIT_OK
    report = MetricsReport.read_json(str(tmp_path / "report.json"))
    assert report.n_samples == 6 and report.undefined_count == 0
    assert report.aggregate["dice"].mean == 100.0
    assert report.aggregate["iou"].mean == 100.0
    assert report.aggregate["assd"].mean == 0.0
    assert report.aggregate["hd95"].mean == 0.0
    assert (tmp_path / "metrics.csv").is_file()
    assert Manifest.read_json(str(tmp_path / "manifest.json")).command == "eval"


def test_keypoints_on_square(tmp_path):
    root = tmp_path / "square"
    mask = np.zeros((64, 64), dtype=np.uint8)
    mask[20:40, 20:40] = 1
    IOMixin.write_mask(mask, str(root / "masks" / "sq.png"))
    IOMixin.write_image(np.full((3, 64, 64), 0.5), str(root / "images" / "sq.png"))
    out = tmp_path / "out"
    code = run(["keypoints", "--data", str(root), "--out", str(out), "--set", "keypoints.k=5"])
    assert code == EXIT_OK
    kp_map = IOMixin.read_mask(str(out / "keypoints" / "sq.png"))
    assert sorted(zip(*np.nonzero(kp_map))) == [(20, 20), (20, 39), (39, 20), (39, 39)]
    assert (out / "overlays" / "sq.png").is_file()
    manifest = Manifest.read_json(str(out / "manifest.json"))
    assert manifest.configs.keypoints.k == 5
    assert manifest.extra["n_keypoints"] == 4


####################################################################################################
# train / eval / predict
####################################################################################################


def _train(dataset, out, *extra):
    argv = ["train", "--data", dataset, "--out", str(out), "--seed", "3", *MICRO,
            "--set", "optim.max_steps=3", "--set", "optim.val_every=2", *extra]
    return run(argv)


def test_train_eval_predict(dataset, tmp_path):
    out = tmp_path / "run"
    assert _train(dataset, out) == EXIT_OK
    for name in ("best.ckpt", "last.ckpt", "loss.csv", "loss.png", "manifest.json"):
        assert (out / name).is_file()
    assert len(LossLogDf.read(str(out / "loss.csv"))) == 3

    assert run(["eval", "--data", dataset, "--out", str(out), *MICRO, "--set", "eval.split=val"]) == EXIT_OK
    report = MetricsReport.read_json(str(out / "report.json"))
    assert report.n_samples == len(IOMixin.read_split(os.path.join(dataset, "val.txt")))

    pred_out = tmp_path / "pred"
    code = run(["predict", "--data", dataset, "--out", str(pred_out), *MICRO,
                "--set", f"eval.checkpoint={out / 'best.ckpt'}"])
    assert code == EXIT_OK
    preds = IOMixin.list_stems(str(pred_out / "predictions"), ".png")
    assert len(preds) == 6
    assert IOMixin.read_mask(str(pred_out / "predictions" / f"{preds[0]}.png")).shape == (32, 32)
    assert len(IOMixin.list_stems(str(pred_out / "keymaps"), ".png")) == 6


def test_eval_checkpoint_config_mismatch(dataset, tmp_path):
    out = tmp_path / "run"
    assert _train(dataset, out) == EXIT_OK
    code = run(["eval", "--data", dataset, "--out", str(out), *MICRO, "--set", "model.n_ex=2"])
    assert code == EXIT_USAGE


def test_train_deterministic(dataset, tmp_path):
    reports = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert _train(dataset, out) == EXIT_OK
        assert run(["eval", "--data", dataset, "--out", str(out), *MICRO]) == EXIT_OK
        reports.append((out / "report.json").read_bytes())
        reports.append((out / "loss.csv").read_bytes())
    assert reports[0] == reports[2]
    assert reports[1] == reports[3]


####################################################################################################
# longer runs
####################################################################################################


@pytest.mark.slow
def test_overfit_small_set(tmp_path):
    data = str(tmp_path / "data")
    assert run(["synth", "--out", data, "--set", "dataset.n_samples=8", "--set", "dataset.val_frac=0"]) == EXIT_OK
    out = str(tmp_path / "run")
    code = run(["train", "--data", data, "--out", out,
                "--set", "optim.max_steps=500", "--set", "optim.epochs=1000",
                "--set", "optim.augment=false", "--set", "optim.val_every=100"])
    assert code == EXIT_OK
    assert run(["eval", "--data", data, "--out", out, "--set", "eval.split=train"]) == EXIT_OK
    report = MetricsReport.read_json(os.path.join(out, "report.json"))
    assert report.aggregate["dice"].mean >= 95.0


@pytest.mark.slow
def test_ablation_sweep(dataset, tmp_path):
    out = tmp_path / "sweep"
    code = run(["sweep", "--data", dataset, "--out", str(out), *MICRO, "--set", "sweep.steps=50"])
    assert code == EXIT_OK
    summary = SweepSummary.read_json(str(out / "sweep.json"))
    assert [p.variant for p in summary.points] == ["baseline", "im", "im_ex", "full"]
    assert [w.variant for w in summary.wilcoxon] == [p.name for p in summary.points[1:]]
    manifests = [
        json.loads((out / p.name / "manifest.json").read_text())["configs"]["model"]
        for p in summary.points
    ]
    assert len({json.dumps(m, sort_keys=True) for m in manifests}) == 4
    for name in ("sweep.csv", "sweep.png", "manifest.json"):
        assert (out / name).is_file()
