"""End-to-end command tests through the argparse entry point."""

import json
from pathlib import Path

import numpy as np
import pytest

from oodbench.cli import main
from oodbench.dataio import read_dump

DATA_DIR = Path(__file__).parent / "data"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def small_world(tmp_path):
    """Tiny generated datasets plus a short training run."""
    data = tmp_path / "data"
    assert run(
        "gen", "--kind", "blobs", "--n", "240", "--n-test", "120",
        "--dim", "6", "--classes", "3", "--seed", "1", "--out", data,
    ) == 0
    assert run(
        "gen", "--kind", "shifted", "--n", "90", "--dim", "6", "--classes", "3",
        "--seed", "2", "--out", data,
    ) == 0
    assert run(
        "gen", "--kind", "noise", "--n", "90", "--dim", "6",
        "--seed", "3", "--out", data,
    ) == 0
    ckpts = tmp_path / "ckpts"
    assert run(
        "train", "--train-dump", data / "blobs_train.ooda",
        "--test-dump", data / "blobs_test.ooda",
        "--epochs", "6", "--checkpoint-every", "3", "--batch-size", "64",
        "--lr", "0.1", "--init-scale", "1.0", "--hidden", "16",
        "--seed", "4", "--out", ckpts,
    ) == 0
    return data, ckpts


class TestGen:
    def test_noise_record_count(self, tmp_path):
        assert run("gen", "--kind", "noise", "--n", "10000", "--dim", "4",
                   "--seed", "0", "--out", tmp_path) == 0
        dump = read_dump(tmp_path / "noise.ooda")
        assert dump.n == 10000
        assert dump.feature_dim == 4

    def test_zero_count_exits_usage(self, tmp_path, capsys):
        assert run("gen", "--kind", "blobs", "--n", "0", "--out", tmp_path) == 2
        assert "error" in capsys.readouterr().err

    def test_same_flags_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("gen", "--kind", "blobs", "--n", "60", "--dim", "5",
                       "--seed", "9", "--out", out) == 0
        assert (a / "blobs_train.ooda").read_bytes() == (b / "blobs_train.ooda").read_bytes()
        assert (a / "blobs_test.ooda").read_bytes() == (b / "blobs_test.ooda").read_bytes()

    def test_manifest_lists_artifacts(self, tmp_path):
        assert run("gen", "--kind", "noise", "--n", "5", "--dim", "2",
                   "--seed", "0", "--out", tmp_path) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["gen"]["artifacts"] == ["noise.ooda"]


class TestTrain:
    def test_checkpoint_files_and_log(self, small_world):
        _, ckpts = small_world
        files = sorted(p.name for p in ckpts.glob("*.oodc"))
        assert files == ["ckpt_best.oodc", "ckpt_ep0003.oodc", "ckpt_ep0006.oodc"]
        log = (ckpts / "training_log.csv").read_text().splitlines()
        assert log[0] == "epoch,loss,train_accuracy,test_accuracy"
        assert len(log) == 1 + 6

    def test_rerun_byte_identical(self, small_world, tmp_path):
        data, ckpts = small_world
        again = tmp_path / "again"
        assert run(
            "train", "--train-dump", data / "blobs_train.ooda",
            "--test-dump", data / "blobs_test.ooda",
            "--epochs", "6", "--checkpoint-every", "3", "--batch-size", "64",
            "--lr", "0.1", "--init-scale", "1.0", "--hidden", "16",
            "--seed", "4", "--out", again,
        ) == 0
        for name in ("ckpt_ep0003.oodc", "ckpt_ep0006.oodc", "ckpt_best.oodc"):
            assert (again / name).read_bytes() == (ckpts / name).read_bytes()

    def test_missing_input_exits_usage(self, tmp_path):
        assert run("train", "--train-dump", tmp_path / "nope.ooda",
                   "--test-dump", tmp_path / "nope.ooda", "--out", tmp_path) == 2

    def test_default_schedule_yields_21_checkpoints(self, tmp_path):
        """60 epochs at every 3rd epoch: 20 periodic plus the best."""
        data = tmp_path / "d"
        assert run("gen", "--kind", "blobs", "--n", "90", "--n-test", "45",
                   "--dim", "4", "--classes", "3", "--seed", "1", "--out", data) == 0
        out = tmp_path / "run"
        assert run(
            "train", "--train-dump", data / "blobs_train.ooda",
            "--test-dump", data / "blobs_test.ooda",
            "--hidden", "8", "--seed", "2", "--out", out,
        ) == 0
        assert len(list(out.glob("*.oodc"))) == 21


class TestGridsearch:
    def test_small_grid_outputs(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "grid"
        assert run(
            "gridsearch", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--train-dump", data / "blobs_train.ooda",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"shifted={data / 'shifted.ooda'}",
            "--ood", f"noise={data / 'noise.ooda'}",
            "--supervisor", "all",
            "--odin-temperatures", "100,1000",
            "--odin-epsilons", "0,0.002",
            "--openmax-tails", "5,10",
            "--openmax-alphas", "1,2,3",
            "--out", out,
        ) == 0
        configs = json.loads((out / "supervisor_configs.json").read_text())
        assert set(configs) == {"baseline", "odin", "openmax"}
        assert configs["baseline"] == {}
        assert set(configs["odin"]) == {"temperature", "epsilon"}
        odin_rows = (out / "grid_odin.csv").read_text().splitlines()
        assert len(odin_rows) == 1 + 4
        openmax_rows = (out / "grid_openmax.csv").read_text().splitlines()
        assert len(openmax_rows) == 1 + 6

    def test_baseline_only_no_search(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "grid"
        assert run(
            "gridsearch", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"noise={data / 'noise.ooda'}",
            "--supervisor", "baseline", "--out", out,
        ) == 0
        configs = json.loads((out / "supervisor_configs.json").read_text())
        assert configs == {"baseline": {}}

    def test_missing_checkpoint_exits_usage(self, small_world, tmp_path):
        data, _ = small_world
        assert run(
            "gridsearch", "--checkpoint", tmp_path / "nope.oodc",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"noise={data / 'noise.ooda'}",
            "--out", tmp_path / "g",
        ) == 2


class TestEvaluate:
    def test_golden_fixture_exact_json(self, tmp_path):
        """Frozen desk-scale fixture reproduces its report byte for byte."""
        fx = DATA_DIR / "golden_eval"
        out = tmp_path / "out"
        assert run(
            "evaluate", "--checkpoint", fx / "checkpoint.oodc",
            "--supervisor", "baseline",
            "--inlier-dump", fx / "test.ooda",
            "--ood", f"noise={fx / 'noise.ooda'}",
            "--model-id", "checkpoint",
            "--out", out,
        ) == 0
        got = (out / "report_baseline_noise.json").read_text()
        assert got == (fx / "expected_report.json").read_text()

    def test_swapped_dumps_flip_auroc(self, small_world, tmp_path):
        data, ckpts = small_world
        fwd, rev = tmp_path / "fwd", tmp_path / "rev"
        assert run(
            "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--supervisor", "baseline",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"o={data / 'noise.ooda'}", "--out", fwd,
        ) == 0
        assert run(
            "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--supervisor", "baseline",
            "--inlier-dump", data / "noise.ooda",
            "--ood", f"o={data / 'blobs_test.ooda'}", "--out", rev,
        ) == 0
        a = json.loads((fwd / "report_baseline_o.json").read_text())["auroc"]
        b = json.loads((rev / "report_baseline_o.json").read_text())["auroc"]
        assert abs((a + b) - 1.0) < 0.01  # ties only at float collisions

    def test_empty_outlier_dump_exits_data_error(self, small_world, tmp_path, capsys):
        data, ckpts = small_world
        empty = tmp_path / "empty.ooda"
        from oodbench.dataio import ActivationDump, write_dump

        write_dump(
            ActivationDump(logits=np.zeros((0, 0)), features=np.zeros((0, 6))), empty
        )
        assert run(
            "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--supervisor", "baseline",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"e={empty}", "--out", tmp_path / "x",
        ) == 3
        assert "both distributions" in capsys.readouterr().err

    def test_openmax_writes_model_artifact(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "om"
        assert run(
            "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--supervisor", "openmax",
            "--openmax-tail", "5", "--openmax-alpha", "2",
            "--train-dump", data / "blobs_train.ooda",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"n={data / 'noise.ooda'}", "--out", out,
        ) == 0
        from oodbench.supervisors import load_openmax_model

        model = load_openmax_model(out / "openmax_model.json")
        assert model.n_classes == 3
        assert model.config.tail == 5 and model.config.alpha == 2

    def test_larger_shift_separates_better_in_the_moderate_regime(self, small_world, tmp_path):
        """Growing the shift from noise scale to several noise scales raises
        downstream AUROC well past chance. (Extreme shifts eventually
        saturate softmax confidence again: far inputs fall deep inside one
        class's linear cone and score as confident inliers, so no monotone
        approach to 1.0 is asserted.)"""
        data, ckpts = small_world
        aurocs = {}
        for norm in ("3", "10"):
            far = tmp_path / f"far{norm}"
            assert run(
                "gen", "--kind", "shifted", "--n", "90", "--dim", "6", "--classes", "3",
                "--shift-norm", norm, "--seed", "8", "--out", far,
            ) == 0
            out = tmp_path / f"rep{norm}"
            assert run(
                "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
                "--supervisor", "baseline",
                "--inlier-dump", data / "blobs_test.ooda",
                "--ood", f"far={far / 'shifted.ooda'}", "--out", out,
            ) == 0
            aurocs[norm] = json.loads((out / "report_baseline_far.json").read_text())["auroc"]
        assert aurocs["10"] > aurocs["3"] > 0.5
        assert aurocs["10"] >= 0.7

    def test_out_colliding_with_file_exits_usage(self, small_world, tmp_path):
        data, _ = small_world
        blocker = tmp_path / "blocked"
        blocker.write_text("")
        assert run(
            "gen", "--kind", "noise", "--n", "5", "--dim", "2",
            "--seed", "0", "--out", blocker,
        ) == 2

    def test_odin_direct_flags(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "odin"
        assert run(
            "evaluate", "--checkpoint", ckpts / "ckpt_best.oodc",
            "--supervisor", "odin",
            "--odin-temperature", "1000", "--odin-epsilon", "0.002",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"n={data / 'noise.ooda'}", "--out", out,
        ) == 0
        report = json.loads((out / "report_odin_n.json").read_text())
        assert report["config"] == {"temperature": 1000.0, "epsilon": 0.002}


class TestSweep:
    def sweep_args(self, data, ckpts, out, *extra):
        return [
            "sweep", "--checkpoint-dir", ckpts,
            "--train-dump", data / "blobs_train.ooda",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"shifted={data / 'shifted.ooda'}",
            "--ood", f"noise={data / 'noise.ooda'}",
            "--supervisors", "all",
            "--odin-temperature", "1000", "--odin-epsilon", "0.002",
            "--openmax-tail", "5", "--openmax-alpha", "2",
            "--out", out, *extra,
        ]

    def test_row_count_and_header(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "sweep"
        assert run(*self.sweep_args(data, ckpts, out)) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "epoch,test_accuracy,supervisor,ood_set,auroc,fpr_at_95_tpr,cbpl,cov10"
        # 3 checkpoints x 3 supervisors x 2 OOD sets
        assert len(lines) == 1 + 18

    def test_figures_rendered(self, small_world, tmp_path):
        data, ckpts = small_world
        out = tmp_path / "sweep"
        assert run(*self.sweep_args(data, ckpts, out)) == 0
        for metric in ("auroc", "fpr_at_95_tpr", "cbpl", "cov10"):
            assert (out / f"sweep_{metric}.png").stat().st_size > 0
        no_plots = tmp_path / "noplots"
        assert run(*self.sweep_args(data, ckpts, no_plots, "--no-plots")) == 0
        assert not list(no_plots.glob("*.png"))

    def test_byte_identical_reruns(self, small_world, tmp_path):
        data, ckpts = small_world
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(*self.sweep_args(data, ckpts, a, "--no-plots")) == 0
        assert run(*self.sweep_args(data, ckpts, b, "--no-plots", "--threads", "4")) == 0
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()

    def test_rows_match_evaluate(self, small_world, tmp_path):
        """Each sweep cell reproduces a standalone evaluate run exactly."""
        data, ckpts = small_world
        out = tmp_path / "sweep"
        assert run(*self.sweep_args(data, ckpts, out)) == 0
        rows = (out / "sweep.csv").read_text().splitlines()[1:]
        best_epoch = max(int(r.split(",")[0]) for r in rows)
        # compare the baseline/noise cell of the final periodic checkpoint
        cell = next(
            r.split(",") for r in rows
            if r.split(",")[0] == str(best_epoch)
            and r.split(",")[2] == "baseline" and r.split(",")[3] == "noise"
        )
        ev = tmp_path / "ev"
        assert run(
            "evaluate", "--checkpoint", ckpts / f"ckpt_ep{best_epoch:04d}.oodc",
            "--supervisor", "baseline",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"noise={data / 'noise.ooda'}", "--out", ev,
        ) == 0
        report = json.loads((ev / "report_baseline_noise.json").read_text())
        assert float(cell[4]) == report["auroc"]
        assert float(cell[5]) == report["fpr_at_95_tpr"]
        assert float(cell[6]) == report["cbpl"]
        assert float(cell[7]) == report["cov10"]

    def test_partial_failure_writes_na_and_exits_nonzero(self, small_world, tmp_path, capsys):
        data, ckpts = small_world
        out = tmp_path / "sweep"
        # a tail longer than any class's correct count: openmax cannot fit
        rc = run(
            "sweep", "--checkpoint-dir", ckpts,
            "--train-dump", data / "blobs_train.ooda",
            "--inlier-dump", data / "blobs_test.ooda",
            "--ood", f"noise={data / 'noise.ooda'}",
            "--supervisors", "baseline,openmax",
            "--openmax-tail", "5000", "--openmax-alpha", "2",
            "--out", out, "--no-plots",
        )
        assert rc == 3
        lines = (out / "sweep.csv").read_text().splitlines()[1:]
        openmax_lines = [l for l in lines if ",openmax," in l]
        assert openmax_lines and all(l.endswith("NA,NA,NA,NA") for l in openmax_lines)
        baseline_lines = [l for l in lines if ",baseline," in l]
        assert baseline_lines and not any("NA" in l for l in baseline_lines)
        assert "failed" in capsys.readouterr().err
