"""k-space corruption operators and the end-to-end synthesis pipeline.

The pipeline composes, in order: image-space degradation, centered FFT,
complex Gaussian noise scaled to a target SNR, central bandwidth crop,
structured Cartesian undersampling, inverse FFT, magnitude. Everything is
deterministic given the parameter record: the record's seed keys fixed
per-stage substreams (field synthesis / noise / mask), so stages never
share or reorder draws.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleMaskError, InvalidInputError
from .grid import (
    RadialBandSpec,
    SeededRng,
    Volume,
    band_energy_fractions,
    fft3_centered,
    ifft3_centered,
)
from .physics import ImagePhysicsParams, apply_image_space_degradation

__all__ = [
    "KspaceParams",
    "DegradationParams",
    "SamplingConfig",
    "SamplingMask",
    "DegradationReport",
    "add_kspace_noise",
    "bandwidth_crop",
    "make_undersampling_mask",
    "apply_mask",
    "sample_params",
    "synthesize_ulf",
    "params_to_dict",
    "params_from_dict",
]

# Fixed per-stage substream ids, keyed together with the record seed.
STREAM_B0 = 1
STREAM_NOISE = 2
STREAM_MASK = 3


@dataclass(frozen=True)
class KspaceParams:
    """Acquisition-level corruption parameters.

    target_snr may be math.inf to disable the noise stage. rho is the
    retained central fraction per axis; center_fraction the fully sampled
    central fraction per phase-encode axis.
    """

    target_snr: float = 8.0
    rho: float = 0.5
    r_accel: int = 2
    center_fraction: float = 0.25
    readout_axis: int = 0

    def __post_init__(self):
        if not self.target_snr > 0:
            raise InvalidInputError("target_snr must be positive")
        if not 0.0 < self.rho <= 1.0:
            raise InvalidInputError("rho must lie in (0, 1]")
        if int(self.r_accel) != self.r_accel or self.r_accel < 1:
            raise InvalidInputError("r_accel must be an integer >= 1")
        if not 0.0 < self.center_fraction < 1.0:
            raise InvalidInputError("center_fraction must lie in (0, 1)")
        if self.readout_axis not in (0, 1, 2):
            raise InvalidInputError("readout_axis must be 0, 1, or 2")
        object.__setattr__(self, "r_accel", int(self.r_accel))


@dataclass(frozen=True)
class DegradationParams:
    """Full realized parameter record for one synthesis run."""

    image: ImagePhysicsParams = field(default_factory=ImagePhysicsParams)
    kspace: KspaceParams = field(default_factory=KspaceParams)
    seed: int = 0

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class SamplingConfig:
    """Per-volume sampling ranges plus the fixed (non-sampled) constants.

    Continuous parameters are drawn uniformly from closed intervals; the
    acceleration factor uniformly from `r_accel` choices. target_snr=None
    disables the noise stage entirely.
    """

    t2: tuple = (0.06, 0.10)
    te: tuple = (0.08, 0.15)
    b0_strength: tuple = (0.02, 0.05)
    rho: tuple = (0.45, 0.55)
    center_fraction: tuple = (0.20, 0.30)
    r_accel: tuple = (2, 3)
    target_snr: tuple | None = (4.0, 12.0)
    b0_correlation: float | None = None
    grad_coupling: float = 50.0
    phase_scale: float = 1.0
    coil_falloff: float = 0.7
    readout_axis: int = 0

    def to_dict(self):
        return {
            "t2": list(self.t2),
            "te": list(self.te),
            "b0_strength": list(self.b0_strength),
            "rho": list(self.rho),
            "center_fraction": list(self.center_fraction),
            "r_accel": list(self.r_accel),
            "target_snr": None if self.target_snr is None else list(self.target_snr),
            "b0_correlation": self.b0_correlation,
            "grad_coupling": self.grad_coupling,
            "phase_scale": self.phase_scale,
            "coil_falloff": self.coil_falloff,
            "readout_axis": self.readout_axis,
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = {}
        for name in ("t2", "te", "b0_strength", "rho", "center_fraction", "r_accel"):
            if name in d:
                kwargs[name] = tuple(d[name])
        if "target_snr" in d:
            kwargs["target_snr"] = None if d["target_snr"] is None else tuple(d["target_snr"])
        for name in ("b0_correlation", "grad_coupling", "phase_scale", "coil_falloff", "readout_axis"):
            if name in d:
                kwargs[name] = d[name]
        return cls(**kwargs)


@dataclass(frozen=True)
class SamplingMask:
    """Binary retention pattern over the phase-encode plane, constant along
    the readout axis."""

    plane: np.ndarray
    readout_axis: int
    achieved_fraction: float

    def __post_init__(self):
        plane = np.asarray(self.plane, dtype=bool).copy()
        plane.setflags(write=False)
        object.__setattr__(self, "plane", plane)


@dataclass(frozen=True)
class DegradationReport:
    """Everything an operator needs to audit one synthesis run."""

    params: DegradationParams
    achieved_fraction: float
    signal_power: float
    band_fractions_input: tuple
    band_fractions_output: tuple

    def to_dict(self):
        return {
            "params": params_to_dict(self.params),
            "achieved_fraction": self.achieved_fraction,
            "signal_power": self.signal_power,
            "band_fractions_input": list(self.band_fractions_input),
            "band_fractions_output": list(self.band_fractions_output),
        }


def _round_half_away(x):
    return int(math.floor(x + 0.5))


def _centered_window(n, width):
    """Half-open index window of `width` samples centered on the DC index."""
    width = min(max(width, 1), n)
    start = n // 2 - width // 2
    return start, start + width


def _as_array3(k):
    arr = np.asarray(getattr(k, "data", k))
    if arr.ndim != 3:
        raise InvalidInputError(f"expected a 3D spectrum, got shape {arr.shape}")
    return arr.astype(np.complex128, copy=False)


def add_kspace_noise(k, signal_power, target_snr, rng: SeededRng):
    """Add i.i.d. complex Gaussian noise with per-component standard
    deviation sqrt(N * signal_power) / target_snr.

    Under the package FFT convention this makes the image-domain noise
    standard deviation exactly sqrt(signal_power) / target_snr per
    component, giving Rician magnitudes after reconstruction. signal_power
    is the caller-computed mean of |x|^2 over image voxels. When the scale
    is zero (zero object or infinite SNR) the input is returned unchanged
    and no draws are consumed.
    """
    arr = _as_array3(k)
    if not target_snr > 0:
        raise InvalidInputError("target_snr must be positive")
    if signal_power < 0:
        raise InvalidInputError("signal_power must be nonnegative")
    n_total = arr.size
    sigma = math.sqrt(n_total * signal_power) / target_snr if math.isfinite(target_snr) else 0.0
    if sigma == 0.0:
        return arr.copy()
    noise = rng.standard_normal((2,) + arr.shape)
    return arr + sigma * (noise[0] + 1j * noise[1])


def bandwidth_crop(k, rho):
    """Zero every coefficient outside the per-axis central window of width
    round(rho * n), keeping the output shape. rho = 1 is the identity."""
    arr = _as_array3(k)
    if not 0.0 < rho <= 1.0:
        raise InvalidInputError("rho must lie in (0, 1]")
    out = np.zeros_like(arr)
    slices = []
    for n in arr.shape:
        lo, hi = _centered_window(n, _round_half_away(rho * n))
        slices.append(slice(lo, hi))
    sl = tuple(slices)
    out[sl] = arr[sl]
    return out


def make_undersampling_mask(shape, r_accel, center_fraction, rng: SeededRng, readout_axis=0):
    """Cartesian undersampling pattern: fully sampled central block over the
    phase-encode plane, remaining points drawn uniformly without
    replacement so the total retained fraction is 1/r_accel (nearest
    achievable count). The mask is constant along the readout axis.

    Raises InfeasibleMaskError when the central block alone exceeds the
    retention budget; the error reports the largest feasible acceleration.
    """
    if len(shape) != 3:
        raise InvalidInputError(f"expected a 3D shape, got {shape}")
    if int(r_accel) != r_accel or r_accel < 1:
        raise InvalidInputError("r_accel must be an integer >= 1")
    if not 0.0 < center_fraction < 1.0:
        raise InvalidInputError("center_fraction must lie in (0, 1)")
    if readout_axis not in (0, 1, 2):
        raise InvalidInputError("readout_axis must be 0, 1, or 2")
    r_accel = int(r_accel)

    phase_dims = tuple(n for axis, n in enumerate(shape) if axis != readout_axis)
    n_total = phase_dims[0] * phase_dims[1]
    n_keep = min(max(_round_half_away(n_total / r_accel), 1), n_total)

    windows = []
    block = 1
    for n in phase_dims:
        width = min(max(_round_half_away(center_fraction * n), 1), n)
        windows.append(_centered_window(n, width))
        block *= width
    if block > n_keep:
        max_accel = n_total // block
        raise InfeasibleMaskError(
            f"central block of {block} points exceeds the retention budget of {n_keep} "
            f"for acceleration {r_accel}; largest feasible acceleration is {max_accel}",
            max_feasible_accel=max_accel,
        )

    plane = np.zeros(phase_dims, dtype=bool)
    (y0, y1), (z0, z1) = windows
    plane[y0:y1, z0:z1] = True

    n_extra = n_keep - block
    if n_extra > 0:
        outside = np.flatnonzero(~plane.ravel())
        chosen = rng.choice(outside, size=n_extra, replace=False)
        flat = plane.ravel()
        flat[chosen] = True
        plane = flat.reshape(phase_dims)

    return SamplingMask(plane=plane, readout_axis=readout_axis, achieved_fraction=n_keep / n_total)


def apply_mask(k, mask: SamplingMask):
    """Elementwise product with the retention pattern, broadcast along the
    readout axis."""
    arr = _as_array3(k)
    phase_dims = tuple(n for axis, n in enumerate(arr.shape) if axis != mask.readout_axis)
    if mask.plane.shape != phase_dims:
        raise InvalidInputError(
            f"mask plane {mask.plane.shape} does not match phase-encode dims {phase_dims}"
        )
    return arr * np.expand_dims(mask.plane, axis=mask.readout_axis)


def sample_params(rng: SeededRng, config: SamplingConfig = SamplingConfig()):
    """Draw one full parameter record from the volume's private stream.

    The draw order is fixed and documented: t2, te, b0_strength, rho,
    center_fraction, r_accel, target_snr, then the 64-bit synthesis seed.
    """
    t2 = float(rng.uniform(*config.t2))
    te = float(rng.uniform(*config.te))
    b0_strength = float(rng.uniform(*config.b0_strength))
    rho = float(rng.uniform(*config.rho))
    center_fraction = float(rng.uniform(*config.center_fraction))
    r_accel = int(rng.choice(list(config.r_accel)))
    if config.target_snr is None:
        target_snr = math.inf
    else:
        target_snr = float(rng.uniform(*config.target_snr))
    seed = rng.bits64()

    image = ImagePhysicsParams(
        t2=t2,
        te=te,
        b0_strength=b0_strength,
        b0_correlation=config.b0_correlation,
        grad_coupling=config.grad_coupling,
        phase_scale=config.phase_scale,
        coil_falloff=config.coil_falloff,
    )
    kspace = KspaceParams(
        target_snr=target_snr,
        rho=rho,
        r_accel=r_accel,
        center_fraction=center_fraction,
        readout_axis=config.readout_axis,
    )
    return DegradationParams(image=image, kspace=kspace, seed=seed)


def synthesize_ulf(x_hf: Volume, params: DegradationParams, band_spec: RadialBandSpec = RadialBandSpec()):
    """Run the full degradation pipeline on a high-field volume.

    Operator order is fixed: image-space degradation, forward FFT, noise,
    bandwidth crop, undersampling, inverse FFT, magnitude. Returns the
    degraded volume (same shape, spacing, affine) and a DegradationReport
    with the realized parameters, the achieved retained fraction, and the
    pre/post radial band energy fractions.
    """
    degraded, _ = apply_image_space_degradation(x_hf, params.image, SeededRng(params.seed, STREAM_B0))
    spectrum = fft3_centered(degraded.data)
    signal_power = float(np.mean(np.abs(degraded.data) ** 2))
    spectrum = add_kspace_noise(
        spectrum, signal_power, params.kspace.target_snr, SeededRng(params.seed, STREAM_NOISE)
    )
    spectrum = bandwidth_crop(spectrum, params.kspace.rho)
    mask = make_undersampling_mask(
        x_hf.shape,
        params.kspace.r_accel,
        params.kspace.center_fraction,
        SeededRng(params.seed, STREAM_MASK),
        readout_axis=params.kspace.readout_axis,
    )
    spectrum = apply_mask(spectrum, mask)
    out = np.abs(ifft3_centered(spectrum))

    result = Volume(out, spacing=x_hf.spacing, affine=x_hf.affine)
    report = DegradationReport(
        params=params,
        achieved_fraction=mask.achieved_fraction,
        signal_power=signal_power,
        band_fractions_input=band_energy_fractions(fft3_centered(x_hf), band_spec),
        band_fractions_output=band_energy_fractions(fft3_centered(result), band_spec),
    )
    return result, report


def params_to_dict(params: DegradationParams):
    """Serialize a parameter record; infinite SNR maps to null."""
    img, ksp = params.image, params.kspace
    return {
        "image": {
            "t2": img.t2,
            "te": img.te,
            "b0_strength": img.b0_strength,
            "b0_correlation": img.b0_correlation,
            "grad_coupling": img.grad_coupling,
            "phase_scale": img.phase_scale,
            "coil_falloff": img.coil_falloff,
        },
        "kspace": {
            "target_snr": None if math.isinf(ksp.target_snr) else ksp.target_snr,
            "rho": ksp.rho,
            "r_accel": ksp.r_accel,
            "center_fraction": ksp.center_fraction,
            "readout_axis": ksp.readout_axis,
        },
        "seed": params.seed,
    }


def config_from_params(params: DegradationParams) -> SamplingConfig:
    """Degenerate sampling config whose draws always realize exactly these
    parameters; bridges a tuned preset into batch generation."""
    img, ksp = params.image, params.kspace
    return SamplingConfig(
        t2=(img.t2, img.t2),
        te=(img.te, img.te),
        b0_strength=(img.b0_strength, img.b0_strength),
        rho=(ksp.rho, ksp.rho),
        center_fraction=(ksp.center_fraction, ksp.center_fraction),
        r_accel=(ksp.r_accel,),
        target_snr=None if math.isinf(ksp.target_snr) else (ksp.target_snr, ksp.target_snr),
        b0_correlation=img.b0_correlation,
        grad_coupling=img.grad_coupling,
        phase_scale=img.phase_scale,
        coil_falloff=img.coil_falloff,
        readout_axis=ksp.readout_axis,
    )


def params_from_dict(d):
    img = dict(d.get("image", {}))
    ksp = dict(d.get("kspace", {}))
    if ksp.get("target_snr") is None:
        ksp["target_snr"] = math.inf
    return DegradationParams(
        image=ImagePhysicsParams(**img),
        kspace=KspaceParams(**ksp),
        seed=int(d.get("seed", 0)),
    )
