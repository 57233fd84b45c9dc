import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from kmorph import B2, BinaryGrid, KmsConfig, PointSet, census, kms_cluster
from kmorph.harness import io
from kmorph.harness.bench import read_records_csv
from kmorph.harness.cli import main


def write_points(path, pairs):
    io.write_points_csv(path, PointSet.from_pairs(pairs))
    return str(path)


def write_mask_png(path, mask):
    Image.fromarray(np.where(mask, 0, 255).astype(np.uint8)).save(path)
    return str(path)


def cluster_stats(capsys, *argv):
    assert main(["cluster", *argv]) == 0
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def scatter(tmp_path):
    rng = np.random.default_rng(4)
    pts = rng.integers(0, 40, size=(300, 2)).astype(float)
    return write_points(tmp_path / "pts.csv", [tuple(p) for p in pts]), pts


class TestCluster:
    def test_one_point_one_cluster(self, tmp_path, capsys):
        stats = cluster_stats(capsys, write_points(tmp_path / "p.csv", [(2.0, 3.0)]), "--k", "1")
        assert stats["cluster_count"] == 1 and stats["converged"] is True
        for key in ("passes", "delta_max_reached", "wall_time_s", "k", "gamma", "boundary", "engine"):
            assert key in stats

    def test_label_csv_keeps_every_instance(self, tmp_path, capsys, scatter):
        path, pts = scatter
        out = tmp_path / "labels.csv"
        stats = cluster_stats(capsys, path, "--k", "6", "--labels-csv", str(out))
        coords, clusters = io.read_label_csv(out)
        assert len(clusters) == len(pts)
        np.testing.assert_array_equal(coords, pts)
        assert np.unique(clusters).size == stats["cluster_count"]
        # Instances sharing a cell share a cluster.
        seen = {}
        for (x, y), c in zip(coords, clusters):
            assert seen.setdefault((x, y), c) == c

    def test_png_colours_match_cluster_count(self, tmp_path, capsys, scatter):
        path, _ = scatter
        png = tmp_path / "c.png"
        stats = cluster_stats(capsys, path, "--k", "40", "--png", str(png))
        rgb = io.read_png_rgb(png).reshape(-1, 3)
        colours = {tuple(c) for c in rgb} - {(255, 255, 255)}
        assert len(colours) == stats["cluster_count"]

    def test_se_b2_is_used(self, tmp_path, capsys):
        mask = np.zeros((30, 30), dtype=bool)
        mask[2:5, 2:5] = mask[14:17, 14:17] = mask[27, 27] = True
        img = write_mask_png(tmp_path / "m.png", mask)
        want = kms_cluster(BinaryGrid.from_array(mask), KmsConfig(k=450, se=B2))
        out = tmp_path / "g.pgm"
        stats = cluster_stats(capsys, img, "--k", "450", "--se", "b2", "--labels-pgm", str(out))
        assert stats["cluster_count"] == want.cluster_count
        np.testing.assert_array_equal(io.read_label_pgm(out).cells, want.labels.cells)
        b1 = cluster_stats(capsys, img, "--k", "450")
        assert b1["cluster_count"] != stats["cluster_count"]

    def test_se_file(self, tmp_path, capsys):
        se = tmp_path / "cross.txt"
        se.write_text("0 0 0\n0 1 0\n0 -1 0\n1 0 0\n-1 0 0\n")
        stats = cluster_stats(capsys, write_points(tmp_path / "p.csv", [(0, 0), (1, 1)]),
                              "--k", "5", "--se", str(se))
        assert stats["cluster_count"] == 2

    def test_options_reach_the_engine(self, tmp_path, capsys):
        path = write_points(tmp_path / "p.csv", [(0, 0), (3, 0)])
        stats_file = tmp_path / "s.json"
        assert main(["cluster", path, "--k", "1", "--boundary", "wrap", "--engine", "par",
                     "--stats", str(stats_file)]) == 0
        stats = json.loads(stats_file.read_text())
        assert stats["boundary"] == "wrap" and stats["engine"] == "parallel"
        assert stats["cluster_count"] == 1 and stats["delta_max_reached"] == 1

    def test_pad_blocks_wrap_merge(self, tmp_path, capsys):
        path = write_points(tmp_path / "p.csv", [(0, 0), (3, 0)])
        stats = cluster_stats(capsys, path, "--k", "1", "--boundary", "wrap", "--pad", "2",
                              "--delta-max", "1")
        assert stats["width"] == 8 and not stats["converged"]

    def test_gamma(self, tmp_path, capsys):
        path = write_points(tmp_path / "p.csv", [(0, 0), (10, 0)])
        stats = cluster_stats(capsys, path, "--k", "2", "--gamma", "0.1")
        assert stats["width"] == 2 and stats["gamma"] == 0.1


class TestOtherCommands:
    def test_denoise_tau(self, tmp_path, capsys):
        mask = np.zeros((40, 60), dtype=bool)
        mask[1:11, 1:21] = True      # 200 cells
        mask[14:24, 1:21] = True     # 200 cells
        mask[14, 21] = True          # joins the second block: 201 cells
        mask[30, 30] = True          # 1 cell
        mask[1:21, 40:51] = True     # 220 cells
        img = write_mask_png(tmp_path / "m.png", mask)
        grid = tmp_path / "g.pgm"
        cluster_stats(capsys, img, "--k", "100", "--labels-pgm", str(grid))
        sizes = sorted(census(io.read_label_pgm(grid)).entries.values())
        assert sizes == [1, 200, 201, 220]
        out = tmp_path / "d.pgm"
        assert main(["denoise", str(grid), "--tau", "200", "-o", str(out)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["erased"] == 2 and report["cluster_count"] == 2
        assert sorted(census(io.read_label_pgm(out)).entries.values()) == [201, 220]

    def test_render(self, tmp_path, capsys):
        mask = np.eye(6, dtype=bool)
        grid = tmp_path / "g.pgm"
        cluster_stats(capsys, write_mask_png(tmp_path / "m.png", mask), "--k", "9",
                      "--se", "cross", "--labels-pgm", str(grid))
        png = tmp_path / "r.png"
        assert main(["render", str(grid), "-o", str(png)]) == 0
        colours = {tuple(c) for c in io.read_png_rgb(png).reshape(-1, 3)} - {(255, 255, 255)}
        assert len(colours) == 6

    def test_kmeans(self, tmp_path, capsys):
        path = write_points(tmp_path / "p.csv", [(0, 0), (1, 0), (10, 0), (11, 0)])
        out = tmp_path / "l.csv"
        assert main(["kmeans", path, "--k", "2", "--seed", "3", "--labels-csv", str(out)]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["error"] == 1.0 and stats["cluster_count"] == 2
        _, clusters = io.read_label_csv(out)
        assert clusters[0] == clusters[1] != clusters[2] == clusters[3]

    def test_bench(self, tmp_path, capsys):
        spec = tmp_path / "s.json"
        spec.write_text(json.dumps({"sizes": [[24, 24]], "instances": [80], "ks": [2, 4],
                                    "repetitions": 1}))
        out = tmp_path / "r.csv"
        assert main(["bench", "--spec", str(spec), "-o", str(out)]) == 0
        assert len(read_records_csv(out)) == 4
        assert "median" in capsys.readouterr().out

    def test_components(self, tmp_path, capsys):
        mask = np.zeros((5, 5), dtype=bool)
        mask[0, 0] = mask[2, 2] = mask[4, 4] = True
        img = write_mask_png(tmp_path / "m.png", mask)
        assert main(["components", img]) == 0
        assert json.loads(capsys.readouterr().out)["intrinsic_max_clusters"] == 3
        assert main(["components", img, "--se", "b2"]) == 0
        assert json.loads(capsys.readouterr().out)["intrinsic_max_clusters"] == 3


class TestErrors:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["cluster", str(tmp_path / "nope.csv"), "--k", "1"]) != 0
        assert "error" in capsys.readouterr().err

    def test_bad_k(self, tmp_path, capsys):
        path = write_points(tmp_path / "p.csv", [(0, 0)])
        assert main(["cluster", path, "--k", "0"]) != 0
        assert "k must be" in capsys.readouterr().err

    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["cluster", "x.csv", "--k", "1", "--boundary", "mirror"])
        assert exc.value.code != 0
        assert "invalid choice" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "kmorph", "render", str(tmp_path / "x.pgm"),
                               "-o", str(tmp_path / "y.png")], capture_output=True, text=True)
        assert proc.returncode != 0 and "error" in proc.stderr
