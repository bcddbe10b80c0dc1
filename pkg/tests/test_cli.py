import csv

import numpy as np
import pytest

from hdfnet.cli import main
from hdfnet.pgm import GrayImage, load_pgm, save_pgm


def write(directory, name, arr):
    directory.mkdir(exist_ok=True)
    save_pgm(directory / f"{name}.pgm", GrayImage.from_array(arr))


@pytest.fixture
def toy(tmp_path):
    rng = np.random.default_rng(3)
    for name in ("a", "b"):
        g = np.zeros((16, 16))
        g[4:11, 3:12] = 1.0
        write(tmp_path / "gt", name, g)
        write(tmp_path / "pred", name, np.clip(g + rng.normal(0, 0.2, g.shape), 0, 1))
    return tmp_path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_eval_writes_report_and_siblings(toy):
    out = toy / "report.csv"
    assert main(["eval", "--pred", str(toy / "pred"), "--gt", str(toy / "gt"), "--out", str(out)]) == 0
    [row] = rows(out)
    assert row["dataset"] == "gt" and row["n_images"] == "2"
    assert list(row)[2:] == ["f_max", "f_ada", "wfm", "mae", "s_measure", "e_measure"]
    assert len(rows(toy / "report.per_image.csv")) == 2
    assert len(rows(toy / "report.curves.csv")) == 256


def test_eval_metric_subset_and_markdown(toy):
    out = toy / "r.md"
    assert main(["eval", "--pred", str(toy / "pred"), "--gt", str(toy / "gt"), "--metrics", "mae,f_max",
                 "--format", "md", "--name", "Toy", "--out", str(out)]) == 0
    header, _, body = out.read_text().splitlines()
    # fixed column order regardless of the order requested
    assert header == "| Dataset | N | F_max ↑ | MAE ↓ |"
    assert body.startswith("| Toy | 2 |")


def test_eval_unknown_metric(toy):
    with pytest.raises(SystemExit):
        main(["eval", "--pred", str(toy / "pred"), "--gt", str(toy / "gt"), "--metrics", "iou", "--out", "x"])


def test_eval_empty_intersection_exit_code(toy, capsys):
    (toy / "other").mkdir()
    assert main(["eval", "--pred", str(toy / "other"), "--gt", str(toy / "gt"), "--out", str(toy / "r.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_aggregate_weighting(tmp_path):
    header = "dataset,n_images,f_max,f_ada,wfm,mae,s_measure,e_measure\n"
    (tmp_path / "a.csv").write_text(header + "A,1,0.9,0.8,0.7,0.04,0.9,0.9\n")
    (tmp_path / "b.csv").write_text(header + "B,1,0.5,0.4,0.3,0.08,0.5,0.5\n")
    out = tmp_path / "ave.csv"
    assert main(["aggregate", "--reports", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
                 "--sizes", "100,300", "--out", str(out)]) == 0
    result = rows(out)
    assert [r["dataset"] for r in result] == ["A", "B", "AveMetric"]
    assert float(result[-1]["mae"]) == pytest.approx(0.07, abs=1e-10)
    assert float(result[-1]["f_max"]) == pytest.approx(0.6, abs=1e-10)
    assert result[-1]["n_images"] == "400"


def test_aggregate_size_count_mismatch(tmp_path):
    header = "dataset,n_images,f_max,f_ada,wfm,mae,s_measure,e_measure\n"
    (tmp_path / "a.csv").write_text(header + "A,5,0.9,0.8,0.7,0.04,0.9,0.9\n")
    assert main(["aggregate", "--reports", str(tmp_path / "a.csv"), "--sizes", "1,2",
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_demo_forward(tmp_path, capsys):
    rng = np.random.default_rng(0)
    write(tmp_path, "rgb", rng.random((20, 30)))
    write(tmp_path, "depth", rng.random((20, 30)))
    out = tmp_path / "pred.pgm"
    assert main(["demo-forward", "--rgb", str(tmp_path / "rgb.pgm"), "--depth", str(tmp_path / "depth.pgm"),
                 "--out", str(out), "--seed", "1"]) == 0
    img = load_pgm(out)
    assert (img.width, img.height) == (30, 20)
    assert "wrote" in capsys.readouterr().out


def test_demo_forward_bad_file(tmp_path):
    (tmp_path / "x.pgm").write_bytes(b"P6 1 1 255\n\0\0\0")
    assert main(["demo-forward", "--rgb", str(tmp_path / "x.pgm"), "--depth", str(tmp_path / "x.pgm"),
                 "--out", str(tmp_path / "o.pgm")]) == 2


def test_gradcheck_subset(capsys):
    assert main(["gradcheck", "--suites", "bce", "rel"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and all(line.startswith("PASS") for line in lines)
