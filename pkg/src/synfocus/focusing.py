"""Synthetic focusing: reconstruct point-focused kernels from wave-family data.

Each inversion consumes the responses of one unfocused wave family and
produces, per electrode, the measurement kernel sampled on a requested
output grid.  Three routes are exact-inversion formulas (Fourier, x-ray)
or filtered backprojections (spherical means, monochromatic); all reduce
to linear post-processing of the measured data, so they commute with
noise and superposition.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .core import Grid, KernelMatrix, ScalarField, TransducerArray, _frozen_array
from .wavegen import (
    FourierData,
    MonochromaticData,
    Sinogram,
    SphericalMeanData,
    _kgrid_phase,
    conjugate_lattice,
)

PULSE_CONSTANT = 1.0 / (8.0 * np.pi**2)
MONO_CONSTANT = -1.0 / (2.0 * np.pi**2)


@dataclass(frozen=True)
class FilteredDetectorData:
    """Per-transducer filtered time profiles, ready for backprojection.

    values[i, k] is the filtered detector trace of transducer i at time
    t_samples[k]; the backprojection evaluates it at t = |z_i - x|.
    """

    array: TransducerArray
    t_samples: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.t_samples, ndim=1)
        v = _frozen_array(self.values, ndim=2)
        if t.size < 2:
            raise ValueError("need at least two time samples")
        if np.any(t <= 0.0):
            raise ValueError("time samples must be positive")
        d = np.diff(t)
        if np.any(d <= 0.0) or not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            raise ValueError("time samples must be uniformly increasing")
        if v.shape != (self.array.positions.shape[0], t.size):
            raise ValueError(
                f"values shape {v.shape} does not match "
                f"{self.array.positions.shape[0]} transducers x {t.size} times"
            )
        object.__setattr__(self, "t_samples", t)
        object.__setattr__(self, "values", v)


def _backproject_divergence(filtered, out, constant):
    """Backproject filtered profiles and take the divergence.

    Builds the vector field sum_i w_i n_i q_i(|z_i - x|) on the output
    grid (linear interpolation in t, zero outside the sampled interval),
    then returns constant * div of it, computed with central differences
    (one-sided at the grid faces).  Flat, x-fastest ordering.
    """
    if out.dim != 3:
        raise ValueError("backprojection output grid must be 3D")
    mesh = out.mesh()
    shape = mesh[0].shape
    pos = filtered.array.positions
    wn = filtered.array.weights[:, None] * filtered.array.normals
    field = np.zeros((3,) + shape)
    for i in range(pos.shape[0]):
        t = np.sqrt(
            (mesh[0] - pos[i, 0]) ** 2
            + (mesh[1] - pos[i, 1]) ** 2
            + (mesh[2] - pos[i, 2]) ** 2
        )
        q = np.interp(
            t.ravel(), filtered.t_samples, filtered.values[i], left=0.0, right=0.0
        ).reshape(shape)
        for c in range(3):
            field[c] += wn[i, c] * q
    div = np.zeros(shape)
    for c in range(3):
        # coordinate c varies along storage axis 2 - c (arrays are z,y,x)
        div += np.gradient(field[c], out.spacing[c], axis=2 - c, edge_order=2)
    return constant * div.ravel()


def _check_inside_sphere(out, array):
    """Reject output grids not strictly inside the transducer sphere."""
    lo, hi = out.bounds()
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(out.dim, -1).T
    reach = np.max(np.linalg.norm(corners, axis=1))
    radius = np.min(np.linalg.norm(array.positions, axis=1))
    if reach >= radius:
        raise ValueError(
            f"output grid reaches {reach:.6g} from the origin, outside the "
            f"transducer sphere of radius {radius:.6g}"
        )
    return reach, radius


def invert_spherical_means_3d(data, out):
    """Reconstruct kernel columns from spherical-pulse responses (3D).

    Filters each transducer trace with (1/t) d/dt (g/t), where g is the
    measured spherical integral as a function of radius, then evaluates
    the filtered backprojection divergence formula on the output grid.
    Returns one ScalarField per electrode.
    """
    if not isinstance(data, SphericalMeanData):
        raise TypeError("expected SphericalMeanData")
    if data.array.positions.shape[1] != 3 or out.dim != 3:
        raise ValueError("spherical-means inversion requires 3D data and grid")
    reach, radius = _check_inside_sphere(out, data.array)
    dt = data.radii[1] - data.radii[0]
    if radius - reach < 2.0 * dt:
        warnings.warn(
            "output grid comes within two radial steps of the transducer "
            "sphere; values in that shell are unreliable (filter stencil "
            "truncation)",
            RuntimeWarning,
            stacklevel=2,
        )
    t = data.radii
    fields = []
    for j in range(data.values.shape[2]):
        g = data.values[:, :, j]
        prof = np.gradient(g / t[None, :], t, axis=1, edge_order=2) / t[None, :]
        filtered = FilteredDetectorData(data.array, t, prof)
        rec = _backproject_divergence(filtered, out, PULSE_CONSTANT)
        fields.append(ScalarField(out, rec))
    return fields


def synthesize_detector_profiles(data, electrode, t_samples):
    """Convert monochromatic responses into filtered time profiles.

    Evaluates h(z, t) = -(1/t) * integral over the frequency band of
    [cos(lt) Im W - sin(lt) Re W] l dl by trapezoid quadrature on the
    data's frequency lattice, with a cosine taper over the top 10% of
    the band to suppress ringing from the hard cutoff.  The band is
    extended down to zero frequency where the integrand vanishes.
    """
    if not isinstance(data, MonochromaticData):
        raise TypeError("expected MonochromaticData")
    lam = data.frequencies
    if lam.size == 0:
        raise ValueError("empty frequency list")
    lam_max = lam[-1]
    taper = np.ones_like(lam)
    if lam.size > 1:
        edge = 0.9 * lam_max
        hi = lam > edge
        taper[hi] = 0.5 * (1.0 + np.cos(np.pi * (lam[hi] - edge) / (lam_max - edge)))
        # trapezoid on [0, lam_max]: the integrand vanishes at lam=0, so the
        # band below the first node contributes only through its half-panel
        dl = lam[1] - lam[0]
        wq = np.full(lam.size, dl)
        wq[0] = 0.5 * (dl + lam[0])
        wq[-1] *= 0.5
    else:
        wq = np.array([0.5 * lam[0]])
    w = data.values[:, :, electrode]  # (n_transducers, n_freq)
    t = np.asarray(t_samples, dtype=float)
    ct = np.cos(lam[None, :] * t[:, None])  # (n_t, n_freq)
    st = np.sin(lam[None, :] * t[:, None])
    coef = (wq * taper * lam)[None, :]
    prof = -(ct * coef) @ w.imag.T + (st * coef) @ w.real.T  # (n_t, n_trans)
    prof /= t[:, None]
    return FilteredDetectorData(data.array, t, np.ascontiguousarray(prof.T))


def invert_monochromatic_3d(data, out, n_times=None):
    """Reconstruct kernel columns from monochromatic responses (3D).

    Synthesizes filtered time profiles from the frequency sweep, then
    applies the same backprojection divergence as the pulse route, with
    its own normalization.  Returns one ScalarField per electrode.
    """
    if not isinstance(data, MonochromaticData):
        raise TypeError("expected MonochromaticData")
    if data.array.positions.shape[1] != 3 or out.dim != 3:
        raise ValueError("monochromatic inversion requires 3D data and grid")
    if data.frequencies.size == 0:
        raise ValueError("empty frequency list")
    _check_inside_sphere(out, data.array)
    radius = np.min(np.linalg.norm(data.array.positions, axis=1))
    t_max = radius + out.diameter
    if n_times is None:
        # sample the fastest oscillation cos(lam_max t) at 4 points/period
        n_times = max(int(np.ceil(t_max * data.frequencies[-1] * 2.0 / np.pi)), 64)
    t = np.linspace(0.0, t_max, n_times + 1)[1:]
    fields = []
    for j in range(data.values.shape[2]):
        filtered = synthesize_detector_profiles(data, j, t)
        rec = _backproject_divergence(filtered, out, MONO_CONSTANT)
        fields.append(ScalarField(out, rec))
    return fields


def invert_fourier(data, out, return_residue=False):
    """Invert plane-wave responses by inverse DFT back to the pixel grid.

    The data must live on the conjugate lattice of the output grid; any
    mismatch in counts, spacing, or reference origin is rejected.  The
    reconstruction is exact to roundoff for data produced by the forward
    transform; the imaginary part (zero for consistent data) is dropped,
    and its relative norm is available as a diagnostic.
    """
    if not isinstance(data, FourierData):
        raise TypeError("expected FourierData")
    ref = conjugate_lattice(out)
    same = (
        tuple(data.kgrid.counts) == tuple(ref.counts)
        and np.allclose(data.kgrid.spacing, ref.spacing, rtol=1e-9, atol=0.0)
        and np.allclose(data.kgrid.origin, ref.origin, rtol=1e-9, atol=1e-12)
        and np.allclose(data.origin, out.origin, rtol=1e-9, atol=1e-12)
    )
    if not same:
        raise ValueError(
            "frequency lattice does not match the conjugate lattice of the "
            "output grid (counts, spacing, or origin differ)"
        )
    phase = _kgrid_phase(data.kgrid, out.origin).ravel()
    n_total = out.n_pixels
    shape = tuple(out.counts[::-1])
    measure = out.pixel_measure
    fields = []
    residues = []
    for j in range(data.values.shape[1]):
        spectrum = (data.values[:, j] / (phase * measure)).reshape(shape)
        col = scipy.fft.fftn(scipy.fft.ifftshift(spectrum)) / n_total
        scale = np.linalg.norm(col)
        residues.append(np.linalg.norm(col.imag) / scale if scale > 0.0 else 0.0)
        fields.append(ScalarField(out, col.real.ravel()))
    if return_residue:
        return fields, np.array(residues)
    return fields


def invert_xray_2d(data, out):
    """Reconstruct kernel columns from line-integral data (2D FBP).

    Ramp-filters each projection in the offset variable (frequency-domain
    ramp, band-limited at the offset Nyquist frequency, zero-padded to
    avoid circular wrap), backprojects with linear interpolation, and
    weights by pi / n_angles.  Returns one ScalarField per electrode.
    """
    if not isinstance(data, Sinogram):
        raise TypeError("expected Sinogram")
    if out.dim != 2:
        raise ValueError("x-ray inversion requires a 2D output grid")
    n_angles = data.angles.size
    if n_angles < 8:
        warnings.warn(
            f"only {n_angles} projection angles; expect severe angular "
            "undersampling artifacts",
            RuntimeWarning,
            stacklevel=2,
        )
    lo, hi = out.bounds()
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(2, -1).T
    reach = np.max(np.linalg.norm(corners, axis=1))
    if data.offsets[0] > -reach or data.offsets[-1] < reach:
        raise ValueError(
            f"offset range [{data.offsets[0]:.6g}, {data.offsets[-1]:.6g}] does "
            f"not cover the output grid (circumradius {reach:.6g})"
        )
    ds = data.offsets[1] - data.offsets[0]
    n_off = data.offsets.size
    n_pad = scipy.fft.next_fast_len(2 * n_off)
    ramp = np.abs(scipy.fft.fftfreq(n_pad, d=ds))
    mesh = out.mesh()
    n_el = data.values.shape[2]
    recs = np.zeros((n_el,) + mesh[0].shape)
    for a in range(n_angles):
        omega = np.array([np.cos(data.angles[a]), np.sin(data.angles[a])])
        s = omega[0] * mesh[0] + omega[1] * mesh[1]
        for j in range(n_el):
            p = np.zeros(n_pad)
            p[:n_off] = data.values[a, :, j]
            q = scipy.fft.ifft(scipy.fft.fft(p) * ramp).real[:n_off]
            recs[j] += np.interp(s.ravel(), data.offsets, q, left=0.0, right=0.0).reshape(s.shape)
    recs *= np.pi / n_angles
    return [ScalarField(out, recs[j].ravel()) for j in range(n_el)]


_METHODS = {
    "spherical": (SphericalMeanData, invert_spherical_means_3d),
    "monochromatic": (MonochromaticData, invert_monochromatic_3d),
    "plane": (FourierData, invert_fourier),
    "xray": (Sinogram, invert_xray_2d),
}


def focus_kernel(data, method, out, electrodes=None):
    """Reconstruct a full kernel matrix on ``out`` from wave-family data.

    ``method`` is one of 'spherical', 'monochromatic', 'plane', 'xray'
    and must match the data type.  Rows of the result are electrodes in
    the data's column order.
    """
    if method not in _METHODS:
        raise ValueError(
            f"unknown method {method!r}; expected one of {sorted(_METHODS)}"
        )
    want, invert = _METHODS[method]
    if not isinstance(data, want):
        raise TypeError(
            f"method {method!r} requires {want.__name__}, got {type(data).__name__}"
        )
    fields = invert(data, out)
    values = np.stack([f.values for f in fields])
    return KernelMatrix(grid=out, values=values, electrodes=electrodes)
