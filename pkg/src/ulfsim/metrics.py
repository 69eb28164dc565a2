"""Evaluation metrics: PSNR, 3D SSIM and MS-SSIM, radial power spectra,
segmentation overlap / surface distances, and reader-study rank statistics.

Image metrics operate on whole 3D volumes (not per slice). SSIM uses an
11-tap Gaussian window (sigma 1.5) truncated at the volume border by weight
renormalization; surface distances use 6-connectivity boundary voxels and
measure between voxel centers in physical millimeters.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, stats
from scipy.spatial import cKDTree

from .errors import InvalidInputError, UndefinedMetricError
from .grid import RadialBandSpec, SegMask, band_energy_fractions, fft3_centered, radius_grid

__all__ = [
    "psnr",
    "ssim",
    "ms_ssim",
    "MsSsimResult",
    "RadialSpectrum",
    "radial_power_spectrum",
    "dice",
    "hd95",
    "assd",
    "rve",
    "RankStats",
    "rank_stats",
    "SegMask",
]

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _as_volume_array(v, name):
    arr = np.asarray(getattr(v, "data", v), dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(f"{name} must be 3D, got shape {arr.shape}")
    return arr


def _volume_pair(pred, ref):
    p = _as_volume_array(pred, "pred")
    r = _as_volume_array(ref, "ref")
    if p.shape != r.shape:
        raise InvalidInputError(f"shape mismatch: pred {p.shape} vs ref {r.shape}")
    return p, r


def psnr(pred, ref, data_range):
    """Peak signal-to-noise ratio in dB; +inf when the volumes are equal."""
    p, r = _volume_pair(pred, ref)
    if data_range <= 0:
        raise InvalidInputError("data_range must be positive")
    mse = float(np.mean((p - r) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


def _gaussian_kernel(sigma, size):
    x = np.arange(size) - size // 2
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _separable_correlate(arr, kernel):
    out = arr
    for axis in range(3):
        out = ndimage.correlate1d(out, kernel, axis=axis, mode="constant", cval=0.0)
    return out


def _local_stats(p, r, kernel):
    """Window-weighted means / variances / covariance with border
    renormalization (kernel mass clipped outside the volume is dropped)."""
    weight = _separable_correlate(np.ones_like(p), kernel)
    mu_p = _separable_correlate(p, kernel) / weight
    mu_r = _separable_correlate(r, kernel) / weight
    var_p = _separable_correlate(p * p, kernel) / weight - mu_p**2
    var_r = _separable_correlate(r * r, kernel) / weight - mu_r**2
    cov = _separable_correlate(p * r, kernel) / weight - mu_p * mu_r
    return mu_p, mu_r, var_p, var_r, cov


def ssim(pred, ref, data_range, sigma=1.5, win_size=11, k1=0.01, k2=0.03):
    """Mean local structural similarity over the full volume."""
    p, r = _volume_pair(pred, ref)
    if min(p.shape) < win_size:
        raise InvalidInputError(f"volume {p.shape} smaller than the {win_size}-tap window")
    if data_range <= 0:
        raise InvalidInputError("data_range must be positive")
    kernel = _gaussian_kernel(sigma, win_size)
    mu_p, mu_r, var_p, var_r, cov = _local_stats(p, r, kernel)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    ssim_map = ((2 * mu_p * mu_r + c1) * (2 * cov + c2)) / (
        (mu_p**2 + mu_r**2 + c1) * (var_p + var_r + c2)
    )
    return float(np.mean(ssim_map))


@dataclass(frozen=True)
class MsSsimResult:
    """MS-SSIM value plus the scale count actually used (the count drops,
    with weights renormalized, when the volume is too small for 5 scales)."""

    value: float
    scales: int
    weights: tuple

    def __float__(self):
        return self.value


def _downsample2(a):
    """Dyadic average pooling; odd trailing samples are dropped."""
    trimmed = a[tuple(slice(0, (n // 2) * 2) for n in a.shape)]
    nx, ny, nz = trimmed.shape
    return trimmed.reshape(nx // 2, 2, ny // 2, 2, nz // 2, 2).mean(axis=(1, 3, 5))


def ms_ssim(pred, ref, data_range, scales=5, sigma=1.5, win_size=11, k1=0.01, k2=0.03):
    """Multi-scale SSIM with the standard 5-scale weighting.

    Contrast-structure terms are taken at every scale, the full SSIM at the
    coarsest; negative terms clamp to zero before exponentiation. Fewer than
    2 feasible scales is an error, never a silent fallback.
    """
    p, r = _volume_pair(pred, ref)
    if data_range <= 0:
        raise InvalidInputError("data_range must be positive")
    feasible = 0
    dim = min(p.shape)
    while feasible < scales and dim >= win_size:
        feasible += 1
        dim //= 2
    if feasible < 2:
        raise InvalidInputError(
            f"volume {p.shape} supports {feasible} scale(s); MS-SSIM needs at least 2"
        )
    base = np.array(MS_SSIM_WEIGHTS[:feasible])
    weights = base / base.sum()

    kernel = _gaussian_kernel(sigma, win_size)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    value = 1.0
    for level in range(feasible):
        mu_p, mu_r, var_p, var_r, cov = _local_stats(p, r, kernel)
        cs = float(np.mean((2 * cov + c2) / (var_p + var_r + c2)))
        if level == feasible - 1:
            lum = (2 * mu_p * mu_r + c1) / (mu_p**2 + mu_r**2 + c1)
            term = float(np.mean(lum * (2 * cov + c2) / (var_p + var_r + c2)))
        else:
            term = cs
        value *= max(term, 0.0) ** weights[level]
        if level < feasible - 1:
            p = _downsample2(p)
            r = _downsample2(r)
    return MsSsimResult(value=float(value), scales=feasible, weights=tuple(weights))


@dataclass(frozen=True)
class RadialSpectrum:
    """Spectral power accumulated into equal-width bins of normalized
    frequency radius; bin powers sum to the total spectral energy."""

    bin_centers: np.ndarray
    power: np.ndarray
    n_bins: int

    def to_dict(self):
        return {
            "n_bins": self.n_bins,
            "bin_centers": [float(c) for c in self.bin_centers],
            "power": [float(p) for p in self.power],
        }


def radial_power_spectrum(v, n_bins=32):
    """Bin |F{v}|^2 by normalized radius into n_bins equal-width bins.

    n_bins = 1 degenerates to a single bin holding the total energy."""
    arr = _as_volume_array(v, "volume")
    if n_bins < 1:
        raise InvalidInputError("n_bins must be at least 1")
    power = np.abs(fft3_centered(arr)) ** 2
    r = radius_grid(arr.shape)
    idx = np.minimum((r * n_bins).astype(int), n_bins - 1)
    binned = np.bincount(idx.ravel(), weights=power.ravel(), minlength=n_bins)
    centers = (np.arange(n_bins) + 0.5) / n_bins
    return RadialSpectrum(bin_centers=centers, power=binned, n_bins=n_bins)


def spectrum_band_fractions(v, spec=RadialBandSpec()):
    """Low/mid/high energy fractions of a volume's spectrum."""
    arr = _as_volume_array(v, "volume")
    return band_energy_fractions(fft3_centered(arr), spec)


def spectrum_report(v, n_bins=32, spec=RadialBandSpec()):
    """Radial spectrum plus band fractions as one JSON-shaped payload;
    the CLI `spectrum` subcommand and the tuning service share this."""
    spectrum = radial_power_spectrum(v, n_bins=n_bins)
    low, mid, high = spectrum_band_fractions(v, spec)
    payload = spectrum.to_dict()
    payload["band_fractions"] = {"low": low, "mid": mid, "high": high}
    return payload


def _label_set(mask, label, name):
    arr = np.asarray(getattr(mask, "labels", mask))
    if arr.ndim != 3:
        raise InvalidInputError(f"{name} must be 3D, got shape {arr.shape}")
    return arr == label


def _mask_pair(a, b, label):
    sa = _label_set(a, label, "a")
    sb = _label_set(b, label, "b")
    if sa.shape != sb.shape:
        raise InvalidInputError(f"shape mismatch: {sa.shape} vs {sb.shape}")
    return sa, sb


def dice(a, b, label=1):
    """Dice overlap 2|A∩B| / (|A|+|B|); defined as 1 when both sets are empty."""
    sa, sb = _mask_pair(a, b, label)
    na, nb = int(sa.sum()), int(sb.sum())
    if na + nb == 0:
        return 1.0
    return 2.0 * int((sa & sb).sum()) / (na + nb)


def _surface_points(binary, spacing):
    """Boundary voxel centers (6-connectivity; out-of-bounds is outside),
    in physical coordinates."""
    structure = ndimage.generate_binary_structure(3, 1)
    interior = ndimage.binary_erosion(binary, structure=structure, border_value=0)
    coords = np.argwhere(binary & ~interior).astype(np.float64)
    return coords * np.asarray(spacing)


def _surface_distances(a, b, label, spacing):
    sa, sb = _mask_pair(a, b, label)
    if not sa.any() or not sb.any():
        raise UndefinedMetricError(f"surface distance undefined: empty label {label} set")
    if spacing is None:
        spacing = getattr(a, "spacing", (1.0, 1.0, 1.0))
    pa = _surface_points(sa, spacing)
    pb = _surface_points(sb, spacing)
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    return np.concatenate([d_ab, d_ba])


def hd95(a, b, label=1, spacing=None):
    """95th percentile (linear interpolation) of the pooled symmetric
    surface-to-surface nearest distances, in mm.

    Spacing defaults to the first mask's when given SegMask inputs."""
    return float(np.percentile(_surface_distances(a, b, label, spacing), 95))


def assd(a, b, label=1, spacing=None):
    """Mean of the pooled symmetric surface-to-surface nearest distances."""
    return float(np.mean(_surface_distances(a, b, label, spacing)))


def rve(pred, ref, label=1):
    """Relative volume error in percent, signed: 100 * (|A| - |B|) / |B|
    with B the reference. Not symmetric."""
    sa, sb = _mask_pair(pred, ref, label)
    nb = int(sb.sum())
    if nb == 0:
        raise UndefinedMetricError(f"relative volume error undefined: empty reference label {label}")
    return 100.0 * (int(sa.sum()) - nb) / nb


@dataclass(frozen=True)
class RankStats:
    kendall_w: float
    friedman_chi2: float
    p_value: float
    mean_spearman_rho: float


def rank_stats(rank_matrix):
    """Concordance statistics over a readers x methods rank matrix.

    Rows must already be rankings (permutations of 1..n, midranks for
    ties). Returns Kendall's W with tie correction, the Friedman chi-square
    (= readers * (methods-1) * W) with its chi-square p-value, and the mean
    pairwise Spearman rho across readers.
    """
    ranks = np.asarray(rank_matrix, dtype=np.float64)
    if ranks.ndim != 2 or ranks.shape[0] < 2 or ranks.shape[1] < 2:
        raise InvalidInputError("rank matrix must be at least 2 readers x 2 methods")
    m, n = ranks.shape
    for row in ranks:
        if not np.allclose(stats.rankdata(row), row):
            raise InvalidInputError(f"row {row} is not a valid (mid)ranking of 1..{n}")
        if np.ptp(row) == 0:
            raise InvalidInputError("a fully tied row carries no ranking information")

    col_sums = ranks.sum(axis=0)
    s = float(np.sum((col_sums - m * (n + 1) / 2.0) ** 2))
    ties = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        ties += float(np.sum(counts**3 - counts))
    denom = m * m * (n**3 - n) - m * ties
    w = 12.0 * s / denom

    chi2 = m * (n - 1) * w
    p_value = float(stats.chi2.sf(chi2, df=n - 1))

    rhos = []
    for i in range(m):
        for j in range(i + 1, m):
            rhos.append(float(stats.spearmanr(ranks[i], ranks[j]).statistic))
    return RankStats(
        kendall_w=float(w),
        friedman_chi2=float(chi2),
        p_value=p_value,
        mean_spearman_rho=float(np.mean(rhos)),
    )
