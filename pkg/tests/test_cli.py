import json
import subprocess
import sys

import pytest

from ntlfresh.cli import main
from ntlfresh.extract import load_feature_matrix

SMALL = ["--n-iter", "2", "--folds", "3", "--classifiers", "dt,lsvm",
         "--combinations", "avg_all,gts_avg_dif_retained,dif_retained", "--seed", "7"]


def _pipeline(out, *extra):
    assert main(["pipeline", "--customers", "90", *SMALL, *extra, "--out-dir", str(out)]) == 0
    return json.loads((out / "manifest.json").read_text())


def test_pipeline_outputs_and_manifest(tmp_path):
    man = _pipeline(tmp_path / "a")
    out = tmp_path / "a"
    for name in ("report.md", "report.csv", "manifest.json", "pvalues_gts_avg_dif_retained.csv",
                 "features.csv", "target.csv", "dataset.csv"):
        assert (out / name).exists(), name
    assert man["ingest"]["rows"]["input"] == 90 * 24
    assert man["feature_counts"]["dif"]["features"] == 59
    assert set(man["feature_counts"]["gts"]) == {"features", "retained"}
    assert man["seed"] == 7 and man["version"]
    assert "**" in (out / "report.md").read_text()


def test_rerun_from_manifest_same_digest(tmp_path):
    first = _pipeline(tmp_path / "a")
    assert main(["pipeline", "--from-manifest", str(tmp_path / "a" / "manifest.json"),
                 "--out-dir", str(tmp_path / "b")]) == 0
    second = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert second["report_digest"] == first["report_digest"]
    assert (tmp_path / "a" / "report.md").read_bytes() == (tmp_path / "b" / "report.md").read_bytes()


def test_stages_compose_to_pipeline(tmp_path):
    _pipeline(tmp_path / "p")
    s = tmp_path / "s"
    assert main(["synth", "--customers", "90", "--seed", "7", "--out-dir", str(s)]) == 0
    assert main(["preprocess", "--consumptions", str(s / "consumptions.csv"),
                 "--inspections", str(s / "inspections.csv"), "--out-dir", str(s)]) == 0
    assert main(["extract", "--dataset", str(s / "dataset.csv"), "--out-dir", str(s)]) == 0
    assert main(["report", "--features", str(s / "features.csv"), "--target", str(s / "target.csv"),
                 *SMALL, "--out-dir", str(s)]) == 0
    for name in ("report.md", "report.csv", "features.csv"):
        assert (s / name).read_bytes() == (tmp_path / "p" / name).read_bytes(), name


def test_select_slice_train(tmp_path):
    _pipeline(tmp_path)
    f, t = str(tmp_path / "features.csv"), str(tmp_path / "target.csv")
    assert main(["select", "--features", f, "--target", t, "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "pvalues.csv").exists()
    assert main(["slice", "--features", f, "--target", t, "--families", "avg,dif",
                 "--out-dir", str(tmp_path)]) == 0
    assert load_feature_matrix(tmp_path / "features_avg_dif_all.csv").shape[1] == 82
    assert main(["train", "--features", f, "--target", t, "--model", "dt", "--n-iter", "2",
                 "--folds", "3", "--out-dir", str(tmp_path)]) == 0
    search = json.loads((tmp_path / "search_dt.json").read_text())
    assert search["n_fits"] == 6
    assert json.loads((tmp_path / "model_dt.json").read_text())["kind"] == "dt"


def test_extract_avg_dif_columns(tmp_path):
    _pipeline(tmp_path)
    assert main(["extract", "--dataset", str(tmp_path / "dataset.csv"), "--families", "avg,dif",
                 "--out-dir", str(tmp_path / "x")]) == 0
    assert load_feature_matrix(tmp_path / "x" / "features.csv").shape[1] == 82


def test_usage_error_exit_2():
    proc = subprocess.run([sys.executable, "-m", "ntlfresh.cli", "pipeline", "--no-such-flag"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "usage:" in proc.stderr


def test_data_error_exit_1(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    assert main(["preprocess", "--consumptions", missing, "--inspections", missing,
                 "--out-dir", str(tmp_path)]) == 1
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["error"] == "FileUnreadable"
    assert main(["pipeline", "--consumptions", missing, "--out-dir", str(tmp_path)]) == 1


def test_bad_grid_names(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["pipeline", "--column", "estimated"])
    assert exc.value.code == 2
    assert main(["pipeline", "--customers", "30", "--classifiers", "knn",
                 "--out-dir", str(tmp_path)]) == 1
