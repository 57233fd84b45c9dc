import numpy as np
import pytest

from kmorph import B1, B2, GridSpec, InvalidInputError, LabelGrid, PointSet
from kmorph.harness import io


class TestPointsCsv:
    def test_round_trip(self, tmp_path):
        ps = PointSet.from_pairs([(0.1, 2.5), (-3.0, 1e6)])
        path = tmp_path / "p.csv"
        io.write_points_csv(path, ps)
        np.testing.assert_array_equal(io.read_points_csv(path).coords, ps.coords)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(InvalidInputError, match="header"):
            io.read_points_csv(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n1,2\n3,oops\n")
        with pytest.raises(InvalidInputError, match=":3:"):
            io.read_points_csv(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n1,2\n\n3,4\n")
        assert len(io.read_points_csv(path)) == 2

    def test_no_rows(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n")
        with pytest.raises(InvalidInputError):
            io.read_points_csv(path)


class TestLabelPgm:
    def test_bit_exact_round_trip(self, tmp_path):
        spec = GridSpec(3, 2, gamma=0.5, min_i=-1.0, min_j=4.0)
        g = LabelGrid(spec, np.array([[70000, -1, 5], [5, 70000, -1]], dtype=np.int32))
        path = tmp_path / "g.pgm"
        io.write_label_pgm(path, g)
        raw = path.read_bytes()
        assert raw.startswith(b"P5\n3 2\n65535\n")
        assert len(raw) == len(b"P5\n3 2\n65535\n") + 12
        np.testing.assert_array_equal(io.read_pgm(path), [[2, 0, 1], [1, 2, 0]])
        back = io.read_label_pgm(path)
        assert back.spec == spec
        np.testing.assert_array_equal(back.cells, g.cells)

    def test_without_sidecar_uses_compact_labels(self, tmp_path):
        g = LabelGrid(GridSpec(2, 1), np.array([[9, -1]], dtype=np.int32))
        path = tmp_path / "g.pgm"
        io.write_label_pgm(path, g)
        io.sidecar_path(path).unlink()
        assert io.read_label_pgm(path).cells.tolist() == [[0, -1]]

    def test_too_many_clusters(self, tmp_path):
        n = 65536
        g = LabelGrid(GridSpec(n, 1), np.arange(n, dtype=np.int32).reshape(1, n))
        with pytest.raises(InvalidInputError, match="16-bit"):
            io.write_label_pgm(tmp_path / "g.pgm", g)

    def test_reads_8bit_with_comment(self, tmp_path):
        path = tmp_path / "a.pgm"
        path.write_bytes(b"P5\n# note\n2 1\n255\n\x00\x07")
        assert io.read_pgm(path).tolist() == [[0, 7]]

    @pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\nx 1\n255\n"])
    def test_malformed(self, tmp_path, data):
        path = tmp_path / "bad.pgm"
        path.write_bytes(data)
        with pytest.raises(InvalidInputError):
            io.read_pgm(path)


class TestImages:
    def test_png_round_trip(self, tmp_path):
        rgb = np.random.default_rng(0).integers(0, 256, size=(4, 5, 3), dtype=np.uint8)
        io.write_png(tmp_path / "a.png", rgb)
        np.testing.assert_array_equal(io.read_png_rgb(tmp_path / "a.png"), rgb)

    def test_gray_from_rgb(self, tmp_path):
        io.write_png(tmp_path / "a.png", np.zeros((2, 3, 3), dtype=np.uint8))
        grey = io.read_gray_image(tmp_path / "a.png")
        assert grey.shape == (2, 3) and grey.dtype == np.uint8 and not grey.any()

    def test_unreadable_image(self, tmp_path):
        path = tmp_path / "x.png"
        path.write_text("not an image")
        with pytest.raises(InvalidInputError):
            io.read_gray_image(path)


class TestStructuringElementFiles:
    def test_load(self, tmp_path):
        path = tmp_path / "se.txt"
        path.write_text("# cross\n0 0 0\n0 1 0\n0 -1 0  # left\n1 0 0\n-1 0 0\n")
        se = io.load_se(path)
        assert se.offsets == ((0, 0), (0, 1), (0, -1), (1, 0), (-1, 0))
        se.validate_for_kms()

    @pytest.mark.parametrize("text", ["0 0\n", "0 a 0\n", "0 0 0\n0 0 1\n"])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "se.txt"
        path.write_text(text)
        with pytest.raises(InvalidInputError):
            io.load_se(path)

    def test_resolve(self, tmp_path):
        assert io.resolve_se("b1") is B1 and io.resolve_se("B2") is B2
        with pytest.raises(InvalidInputError):
            io.resolve_se(str(tmp_path / "missing.txt"))
