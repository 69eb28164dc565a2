"""3D grid types, centered Fourier transforms, radial frequency geometry,
and deterministic RNG streams.

Conventions fixed here and relied on by every other module:

* The DC component of a centered spectrum sits at index ``n // 2`` per axis.
* The forward transform is unnormalized (plain double sum); the inverse
  carries the ``1 / (nx*ny*nz)`` factor. Parseval therefore reads
  ``sum |K|^2 == N * sum |x|^2``.
* Normalized frequency radius divides by sqrt(3), so the corner of the grid
  maps to radius 1 and every radial band is nonempty on cubic grids.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Volume",
    "ComplexVolume",
    "SegMask",
    "SeededRng",
    "RadialBandSpec",
    "fft3_centered",
    "ifft3_centered",
    "band_masks",
    "spectral_energy",
    "radius_grid",
]


def _identity_affine():
    return np.eye(4)


@dataclass(frozen=True, eq=False)
class Volume:
    """Real-valued 3D scalar grid with voxel spacing (mm) and an optional
    voxel-to-world affine. Immutable after construction."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray = field(default_factory=_identity_affine)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise InvalidInputError(f"volume must be 3D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("volume contains non-finite values")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise InvalidInputError(f"spacing must be 3 positive floats, got {self.spacing}")
        affine = np.asarray(self.affine, dtype=np.float64)
        if affine.shape != (4, 4):
            raise InvalidInputError("affine must be 4x4")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", affine)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class ComplexVolume:
    """Complex-valued 3D grid; carries degraded image-space signals and
    k-space arrays."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 3:
            raise InvalidInputError(f"complex volume must be 3D, got shape {data.shape}")
        if not (np.all(np.isfinite(data.real)) and np.all(np.isfinite(data.imag))):
            raise InvalidInputError("complex volume contains non-finite values")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class SegMask:
    """Labeled integer 3D grid with voxel spacing; input to the segmentation
    overlap and surface metrics."""

    labels: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray = field(default_factory=_identity_affine)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if not np.issubdtype(labels.dtype, np.integer):
            raise InvalidInputError(f"mask labels must be integers, got dtype {labels.dtype}")
        if labels.ndim != 3:
            raise InvalidInputError(f"mask must be 3D, got shape {labels.shape}")
        if labels.size and labels.min() < 0:
            raise InvalidInputError("mask labels must be nonnegative")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise InvalidInputError(f"spacing must be 3 positive floats, got {self.spacing}")
        affine = np.asarray(self.affine, dtype=np.float64)
        if affine.shape != (4, 4):
            raise InvalidInputError("affine must be 4x4")
        labels = labels.astype(np.int64, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", affine)

    @property
    def shape(self):
        return self.labels.shape


class SeededRng:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox-4x64 generator with the 128-bit key
    ``[seed, stream_id]``, so substreams are derived by key, never by drawing
    from a parent stream. Identical (seed, stream_id) pairs produce identical
    draw sequences across runs and platforms for a given numpy version.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high, size=None):
        """Uniform integers over the half-open range [low, high)."""
        return self._gen.integers(low, high, size)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)

    def permutation(self, n):
        return self._gen.permutation(n)

    def bits64(self):
        """One uniform draw over the full unsigned 64-bit range."""
        return int(self._gen.integers(0, 1 << 64, dtype=np.uint64))


@dataclass(frozen=True)
class RadialBandSpec:
    """Radial band geometry over the centered frequency grid.

    ``boundaries`` are normalized radii splitting [0, 1] into low / mid /
    high bands (more boundaries give more bands; the default is the
    three-band split at 1/3 and 2/3).
    """

    boundaries: tuple = (1.0 / 3.0, 2.0 / 3.0)

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.boundaries)
        if any(not (0.0 < b < 1.0) for b in bounds):
            raise InvalidInputError(f"band boundaries must lie in (0, 1): {bounds}")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise InvalidInputError(f"band boundaries must be strictly increasing: {bounds}")
        object.__setattr__(self, "boundaries", bounds)

    @property
    def n_bands(self):
        return len(self.boundaries) + 1


def _as_complex_array(v):
    if isinstance(v, ComplexVolume):
        return v.data
    if isinstance(v, Volume):
        return v.data.astype(np.complex128)
    arr = np.asarray(v)
    if arr.ndim != 3:
        raise InvalidInputError(f"expected a 3D array, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise InvalidInputError("input contains non-finite values")
    return arr


def fft3_centered(v):
    """Centered 3D Fourier transform; DC lands at index ``n // 2`` per axis.

    Unnormalized forward convention: a constant volume of value c maps to a
    single coefficient c*N at the DC index.
    """
    x = _as_complex_array(v)
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(x)))


def ifft3_centered(k):
    """Inverse of :func:`fft3_centered`; carries the 1/N normalization."""
    x = _as_complex_array(k)
    return np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(x)))


def radius_grid(shape):
    """Normalized frequency radius per grid index.

    r(k) = ||((kx-cx)/cx', (ky-cy)/cy', (kz-cz)/cz')|| / sqrt(3) with c the
    DC index and c' = max(c, 1), so r spans [0, 1] with corners at 1.
    """
    if len(shape) != 3:
        raise InvalidInputError(f"expected a 3D shape, got {shape}")
    axes = []
    for n in shape:
        n = int(n)
        if n < 1:
            raise InvalidInputError(f"invalid shape {shape}")
        c = n // 2
        axes.append(((np.arange(n) - c) / max(c, 1)) ** 2)
    ax, ay, az = np.ix_(axes[0], axes[1], axes[2])
    return np.sqrt((ax + ay + az) / 3.0)


def band_masks(shape, spec=RadialBandSpec()):
    """Binary masks partitioning the centered frequency grid into radial bands.

    Coefficient k belongs to band i when boundaries[i-1] <= r(k) < boundaries[i]
    (low band: r < boundaries[0]; top band: r >= boundaries[-1]). The masks are
    mutually exclusive and jointly exhaustive for any boundaries in (0, 1).
    """
    if len(shape) != 3 or any(int(n) < 2 for n in shape):
        raise InvalidInputError(f"band masks need a 3D shape with all dims >= 2, got {shape}")
    r = radius_grid(shape)
    edges = (0.0,) + spec.boundaries + (np.inf,)
    masks = tuple((r >= lo) & (r < hi) for lo, hi in zip(edges, edges[1:]))
    return masks


def spectral_energy(k, mask):
    """Sum of |K|^2 over mask-selected coefficients."""
    arr = _as_complex_array(k)
    m = np.asarray(mask)
    if m.shape != arr.shape:
        raise InvalidInputError(f"mask shape {m.shape} does not match spectrum shape {arr.shape}")
    m = m.astype(bool)
    return float(np.sum(np.abs(arr[m]) ** 2))


def band_energy_fractions(k, spec=RadialBandSpec()):
    """Per-band fraction of total spectral energy; zeros for an empty spectrum."""
    arr = _as_complex_array(k)
    power = np.abs(arr) ** 2
    total = float(power.sum())
    masks = band_masks(arr.shape, spec)
    if total == 0.0:
        return tuple(0.0 for _ in masks)
    return tuple(float(power[m].sum()) / total for m in masks)
