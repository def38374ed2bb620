import numpy as np
import pytest

from synfocus.core import Grid, KernelMatrix, ScalarField
from synfocus.io import (
    load_field_csv,
    load_kernel_csv,
    load_metrics,
    load_pgm,
    load_table_csv,
    save_field_csv,
    save_kernel_csv,
    save_metrics,
    save_pgm,
    save_table_csv,
)

from conftest import centered_grid


class TestFieldCsv:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        g = Grid(origin=(-0.3, 0.1), spacing=(0.017, 0.093), counts=(7, 5))
        f = ScalarField(grid=g, values=rng.standard_normal(35))
        p = tmp_path / "f.csv"
        save_field_csv(p, f)
        back = load_field_csv(p)
        assert np.array_equal(back.values, f.values)
        assert np.array_equal(back.grid.origin, g.origin)
        assert np.array_equal(back.grid.spacing, g.spacing)
        assert np.array_equal(back.grid.counts, g.counts)

    def test_irrational_values_survive(self, tmp_path):
        g = centered_grid(2, 2)
        f = ScalarField(grid=g, values=np.array([np.pi, 1.0 / 3.0, np.e, 2.0**-52]))
        p = tmp_path / "f.csv"
        save_field_csv(p, f)
        assert np.array_equal(load_field_csv(p).values, f.values)

    def test_deterministic_bytes(self, tmp_path, rng):
        g = centered_grid(4, 2)
        f = ScalarField(grid=g, values=rng.standard_normal(16))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_field_csv(p1, f)
        save_field_csv(p2, f)
        assert p1.read_bytes() == p2.read_bytes()


class TestKernelCsv:
    def test_roundtrip_and_header(self, tmp_path, rng):
        g = centered_grid(3, 2)
        k = KernelMatrix(grid=g, values=rng.standard_normal((4, 9)))
        p = tmp_path / "k.csv"
        save_kernel_csv(p, k)
        text = p.read_text()
        assert "# electrodes: 4" in text
        assert "# grid:" in text
        assert "# units:" in text
        back = load_kernel_csv(p)
        assert np.array_equal(back.values, k.values)
        assert np.array_equal(back.grid.counts, k.grid.counts)


class TestTableCsv:
    def test_real_roundtrip(self, tmp_path, rng):
        vals = rng.standard_normal((3, 5))
        axes = [("time", np.linspace(0.1, 0.5, 5))]
        p = tmp_path / "t.csv"
        save_table_csv(p, ["note line"], axes, vals)
        axes_back, vals_back = load_table_csv(p)
        assert np.array_equal(vals_back, vals)
        assert np.array_equal(axes_back["time"], axes[0][1])

    def test_complex_roundtrip(self, tmp_path, rng):
        vals = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        p = tmp_path / "c.csv"
        save_table_csv(p, [], [("freq", np.array([1.0, 2.0, 3.0, 4.0]))], vals)
        _, back = load_table_csv(p)
        assert back.dtype.kind == "c"
        assert np.array_equal(back, vals)

    def test_3d_shape_restored(self, tmp_path, rng):
        vals = rng.standard_normal((2, 3, 4))
        p = tmp_path / "t3.csv"
        save_table_csv(p, [], [], vals)
        _, back = load_table_csv(p)
        assert back.shape == (2, 3, 4)
        assert np.array_equal(back, vals)


class TestPgm:
    def test_header_and_orientation(self, tmp_path):
        g = Grid(origin=(0.0, 0.0), spacing=(1.0, 1.0), counts=(3, 2))
        # value grows with y: top row of the image must be the bright one
        vals = g.mesh()[1].reshape(-1)
        save_pgm(tmp_path / "img.pgm", ScalarField(grid=g, values=vals))
        pix, lo, hi = load_pgm(tmp_path / "img.pgm")
        assert pix.shape == (2, 3)
        assert lo == 0.0 and hi == 1.0
        assert np.all(pix[0] == 255) and np.all(pix[1] == 0)

    def test_3d_exports_middle_slice(self, tmp_path):
        g = centered_grid(4, 3)
        vals = np.full((4, 4, 4), 100.0)  # off-slice values must not leak in
        vals[2] = np.arange(16.0).reshape(4, 4)  # middle z slice (counts // 2)
        f = ScalarField(grid=g, values=vals.reshape(-1))
        save_pgm(tmp_path / "v.pgm", f)
        pix, lo, hi = load_pgm(tmp_path / "v.pgm")
        assert pix.shape == (4, 4)
        assert (lo, hi) == (0.0, 15.0)  # scale comes from the slice alone
        assert pix[-1, 0] == 0 and pix[0, -1] == 255  # y flipped, x kept

    def test_constant_field_is_finite(self, tmp_path):
        g = centered_grid(3, 2)
        save_pgm(tmp_path / "c.pgm", ScalarField(grid=g, values=np.full(9, 2.5)))
        pix, lo, hi = load_pgm(tmp_path / "c.pgm")
        assert lo == hi == 2.5
        assert np.all(pix == 0)


class TestMetrics:
    def test_roundtrip(self, tmp_path):
        m = {"kernel_error": 0.04837291017, "n_pixels": 1024, "status": "ok"}
        p = tmp_path / "metrics.txt"
        save_metrics(p, m)
        back = load_metrics(p)
        assert float(back["kernel_error"]) == m["kernel_error"]
        assert int(back["n_pixels"]) == 1024
        assert back["status"] == "ok"
