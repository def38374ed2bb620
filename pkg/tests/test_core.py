import numpy as np
import pytest

from synfocus.core import (
    Disk,
    Grid,
    KernelMatrix,
    ScalarField,
    TransducerArray,
    build_phantom_disks,
    interp_field,
    make_transducer_array,
    square_boundary_electrodes,
)
from synfocus.forward_eit import left_right_current_pattern

from conftest import centered_grid


class TestGrid:
    def test_axes_and_centers_layout(self):
        g = Grid(origin=(0.0, 10.0), spacing=(1.0, 2.0), counts=(3, 2))
        ax, ay = g.axes()
        assert np.allclose(ax, [0.0, 1.0, 2.0])
        assert np.allclose(ay, [10.0, 12.0])
        # flat order is x-fastest
        pts = g.centers()
        assert pts.shape == (6, 2)
        assert np.allclose(pts[0], [0.0, 10.0])
        assert np.allclose(pts[1], [1.0, 10.0])
        assert np.allclose(pts[3], [0.0, 12.0])

    def test_reshape_matches_flat_order(self):
        g = centered_grid(4, 3)
        vals = np.arange(g.n_pixels, dtype=float)
        f = ScalarField(grid=g, values=vals)
        cube = f.reshape()
        assert cube.shape == (4, 4, 4)
        # value at (ix, iy, iz) lives at flat ix + nx*(iy + ny*iz)
        assert cube[2, 1, 3] == 3 + 4 * (1 + 4 * 2)

    def test_bounds_pad_half_spacing(self):
        g = Grid(origin=(0.5,) * 2, spacing=(1.0,) * 2, counts=(4, 4))
        lo, hi = g.bounds()
        assert np.allclose(lo, [0.0, 0.0])
        assert np.allclose(hi, [4.0, 4.0])
        assert g.pixel_measure == 1.0

    def test_mesh_matches_centers(self):
        g = Grid(origin=(0.0, 0.0, 0.0), spacing=(1.0, 2.0, 3.0), counts=(2, 3, 4))
        X, Y, Z = g.mesh()
        pts = g.centers()
        assert np.allclose(X.ravel(), pts[:, 0])
        assert np.allclose(Y.ravel(), pts[:, 1])
        assert np.allclose(Z.ravel(), pts[:, 2])

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(origin=(0.0,), spacing=(1.0,), counts=(4,))  # 1d unsupported
        with pytest.raises(ValueError):
            Grid(origin=(0.0, 0.0), spacing=(1.0, -1.0), counts=(4, 4))
        with pytest.raises(ValueError):
            Grid(origin=(0.0, 0.0), spacing=(1.0, 1.0), counts=(4, 1))

    def test_arrays_are_read_only(self):
        g = centered_grid(4, 2)
        with pytest.raises(ValueError):
            g.origin[0] = 7.0


class TestScalarField:
    def test_size_mismatch_rejected(self):
        g = centered_grid(4, 2)
        with pytest.raises(ValueError):
            ScalarField(grid=g, values=np.zeros(5))

    def test_nonfinite_rejected(self):
        g = centered_grid(2, 2)
        with pytest.raises(ValueError):
            ScalarField(grid=g, values=np.array([0.0, np.nan, 0.0, 0.0]))


class TestPhantom:
    def test_disk_membership_and_overlap(self):
        g = centered_grid(8, 2)
        ph = build_phantom_disks(
            g,
            [
                Disk(center=(0.0, 0.0), radius=0.2, amplitude=0.5),
                Disk(center=(0.0, 0.0), radius=0.4, amplitude=0.25),
            ],
        )
        vals = ph.field.reshape()
        center = vals[4, 4]  # pixel center (0.0625, 0.0625), inside both
        assert center == pytest.approx(0.75)
        assert ph.conductivity().max() == pytest.approx(np.exp(0.75))

    def test_closed_disk_boundary_pixel(self):
        g = Grid(origin=(0.0, 0.0), spacing=(1.0, 1.0), counts=(3, 3))
        ph = build_phantom_disks(g, [Disk(center=(1.0, 1.0), radius=1.0, amplitude=1.0)])
        vals = ph.field.reshape()
        assert vals[1, 0] == 1.0  # center (0, 1) at distance exactly 1: closed disk
        assert vals[0, 0] == 0.0  # corner at distance sqrt(2)

    def test_disk_outside_domain_rejected(self):
        g = centered_grid(8, 2)
        with pytest.raises(ValueError, match="disk 0"):
            build_phantom_disks(g, [Disk(center=(0.45, 0.0), radius=0.2, amplitude=0.1)])

    def test_amplitude_bound(self):
        with pytest.raises(ValueError):
            Disk(center=(0.0, 0.0), radius=0.1, amplitude=1.5)


class TestTransducerArray:
    def test_fibonacci_on_sphere(self):
        arr = make_transducer_array(100, radius=2.0)
        assert arr.positions.shape == (100, 3)
        assert np.allclose(np.linalg.norm(arr.positions, axis=1), 2.0)
        assert np.allclose(np.linalg.norm(arr.normals, axis=1), 1.0)
        # outward radial normals and aperture-measure weights
        assert np.allclose(arr.normals, arr.positions / 2.0)
        assert np.sum(arr.weights) == pytest.approx(4.0 * np.pi * 4.0)

    def test_circle_2d(self):
        arr = make_transducer_array(8, radius=1.5, dim=2)
        assert arr.positions.shape == (8, 2)
        assert np.allclose(np.linalg.norm(arr.positions, axis=1), 1.5)
        assert np.sum(arr.weights) == pytest.approx(2.0 * np.pi * 1.5)

    def test_too_few_rejected(self):
        with pytest.raises(ValueError):
            make_transducer_array(3, radius=1.0)

    def test_off_sphere_rejected(self):
        arr = make_transducer_array(6, radius=1.0, dim=2)
        bad = arr.positions.copy()
        bad[0] *= 1.1
        with pytest.raises(ValueError):
            TransducerArray(positions=bad, normals=arr.normals,
                            weights=arr.weights, radius=1.0, sound_speed=1.0)


class TestBoundaryElectrodes:
    def test_ordering_and_counts(self):
        g = Grid(origin=(0.5, 0.5), spacing=(1.0, 1.0), counts=(3, 2))
        el = square_boundary_electrodes(g, left=1.0, right=-1.0)
        assert el.n == 2 * (3 + 2)
        # left edge first, increasing y, at x = 0
        assert np.allclose(el.points[0], [0.0, 0.5])
        assert np.allclose(el.points[1], [0.0, 1.5])
        # then right edge at x = 3
        assert np.allclose(el.points[2], [3.0, 0.5])
        # bottom edge at y = 0, increasing x
        assert np.allclose(el.points[4], [0.5, 0.0])
        assert el.current[0] == 1.0 and el.current[2] == -1.0

    def test_left_right_pattern_balances(self):
        g = centered_grid(6, 2)
        el = left_right_current_pattern(g)
        assert el.total_current() == pytest.approx(0.0, abs=1e-15)


class TestKernelMatrix:
    def test_shape_validation(self):
        g = centered_grid(4, 2)
        with pytest.raises(ValueError):
            KernelMatrix(grid=g, values=np.zeros((2, 15)))

    def test_column_field(self):
        g = centered_grid(4, 2)
        vals = np.arange(2 * 16, dtype=float).reshape(2, 16)
        k = KernelMatrix(grid=g, values=vals)
        f = k.column_field(1)
        assert np.allclose(f.values, vals[1])
        assert f.grid is k.grid


class TestInterpField:
    @pytest.mark.invariant
    def test_multilinear_reproduces_linear_functions(self):
        g = centered_grid(6, 2)
        pts = g.centers()
        f = ScalarField(grid=g, values=1.5 + 2.0 * pts[:, 0] - 0.5 * pts[:, 1])
        rng = np.random.default_rng(3)
        q = rng.uniform(-0.35, 0.35, size=(50, 2))  # inside the center hull
        expect = 1.5 + 2.0 * q[:, 0] - 0.5 * q[:, 1]
        assert np.allclose(interp_field(f, q), expect, atol=1e-13)

    def test_exact_at_centers(self):
        g = centered_grid(5, 3)
        vals = np.sin(np.arange(g.n_pixels, dtype=float))
        f = ScalarField(grid=g, values=vals)
        assert np.allclose(interp_field(f, g.centers()), vals, atol=1e-14)

    def test_zero_outside_support(self):
        g = centered_grid(4, 2)
        f = ScalarField(grid=g, values=np.ones(16))
        far = np.array([[2.0, 0.0], [0.0, -3.0]])
        assert np.allclose(interp_field(f, far), 0.0)
        # rolls off linearly: half a spacing beyond the last center -> 1/2
        edge = np.array([[0.375 + 0.125, 0.0]])
        assert interp_field(f, edge)[0] == pytest.approx(0.5)
