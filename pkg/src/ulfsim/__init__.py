"""Synthesis of ultra-low-field MRI volumes from high-field scans.

Core pieces: centered 3D FFT machinery and deterministic RNG streams
(:mod:`ulfsim.grid`), NIfTI-1 I/O (:mod:`ulfsim.nifti`), the image-space and
k-space degradation pipeline (:mod:`ulfsim.physics`, :mod:`ulfsim.kspace`),
spatial-frequency losses (:mod:`ulfsim.losses`), evaluation metrics
(:mod:`ulfsim.metrics`), dataset batch tooling (:mod:`ulfsim.dataset`), and
an interactive parameter-tuning HTTP service (:mod:`ulfsim.service`).
"""

from .errors import (
    CorruptFileError,
    InfeasibleMaskError,
    InvalidInputError,
    NiftiError,
    NiftiFormatError,
    UndefinedMetricError,
    UnsupportedDatatypeError,
)
from .grid import (
    ComplexVolume,
    RadialBandSpec,
    SeededRng,
    SegMask,
    Volume,
    band_energy_fractions,
    band_masks,
    fft3_centered,
    ifft3_centered,
    radius_grid,
    spectral_energy,
)
from .kspace import (
    DegradationParams,
    DegradationReport,
    KspaceParams,
    SamplingConfig,
    SamplingMask,
    add_kspace_noise,
    apply_mask,
    bandwidth_crop,
    make_undersampling_mask,
    sample_params,
    synthesize_ulf,
)
from .losses import LossBreakdown, LossConfig, loss_gradient, loss_kspace, loss_l1, loss_total, loss_total_grad
from .nifti import read_mask, read_volume, write_mask, write_volume
from .physics import (
    ImagePhysicsParams,
    apply_image_space_degradation,
    b0_field,
    coil_sensitivity_map,
    dephasing_field,
    t2_star_map,
)

__version__ = "0.1.0"
