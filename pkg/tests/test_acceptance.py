"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with the tolerances it enforced. Run with `pytest -s
tests/test_acceptance.py -v` to see the per-criterion lines.
"""

import hashlib
import math
import struct
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import stats

from ulfsim import (
    InfeasibleMaskError,
    SeededRng,
    Volume,
    band_masks,
    fft3_centered,
    ifft3_centered,
    spectral_energy,
)
from ulfsim.cli import main as cli_main
from ulfsim.dataset import Manifest, SplitSpec, split_manifest
from ulfsim.kspace import (
    DegradationParams,
    KspaceParams,
    SamplingConfig,
    add_kspace_noise,
    bandwidth_crop,
    make_undersampling_mask,
    sample_params,
    synthesize_ulf,
)
from ulfsim.losses import LossConfig, loss_gradient, loss_kspace, loss_l1, loss_total, loss_total_grad
from ulfsim.metrics import assd, dice, hd95, ms_ssim, psnr, rank_stats, rve, ssim
from ulfsim.nifti import read_volume, write_volume
from ulfsim.physics import ImagePhysicsParams, apply_image_space_degradation, coil_sensitivity_map

from test_kspace import gaussian_blob_phantom
from test_grid import naive_dft3_centered
from test_metrics import (
    ms_ssim_oracle,
    percentile_linear_oracle,
    random_blob,
    ssim_oracle,
    surface_distances_oracle,
)


def report(n, name, detail):
    print(f"[acceptance] criterion {n:02d} ({name}): PASS  {detail}")


def test_criterion_01_fft_correctness():
    start = time.monotonic()
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8))
    k = fft3_centered(x)
    k_ref = naive_dft3_centered(x)
    dft_rel = float(np.max(np.abs(k - k_ref) / np.maximum(np.abs(k_ref), 1e-300)))
    assert dft_rel <= 1e-10

    worst_rt = 0.0
    for n in (8, 16, 32, 64):
        v = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
        back = ifft3_centered(fft3_centered(v))
        worst_rt = max(worst_rt, float(np.max(np.abs(back - v)) / np.max(np.abs(v))))
    assert worst_rt <= 1e-12

    v = rng.standard_normal((16, 16, 16)) + 1j * rng.standard_normal((16, 16, 16))
    img_energy = float(np.sum(np.abs(v) ** 2))
    spec_energy = spectral_energy(fft3_centered(v), np.ones(v.shape, dtype=bool))
    parseval_rel = abs(spec_energy - v.size * img_energy) / (v.size * img_energy)
    assert parseval_rel <= 1e-9

    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(1, "fft correctness", f"dft_rel={dft_rel:.2e}<=1e-10 roundtrip={worst_rt:.2e}<=1e-12 "
                                 f"parseval={parseval_rel:.2e}<=1e-9 runtime={elapsed:.2f}s<10s")


def test_criterion_02_synth_determinism(tmp_path):
    start = time.monotonic()
    input_dir = tmp_path / "hf"
    input_dir.mkdir()
    rng = np.random.default_rng(2)
    for i in range(10):
        write_volume(Volume(rng.uniform(0, 1, (16, 16, 16))), input_dir / f"vol{i:02d}.nii")

    runner = CliRunner()
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        result = runner.invoke(
            cli_main, ["synth", "--input-dir", str(input_dir), "--output-dir", str(out), "--seed", "41"]
        )
        assert result.exit_code == 0, result.output
        digests.append(
            {
                p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(out.iterdir())
            }
        )
    assert digests[0] == digests[1]
    assert "manifest.json" in digests[0]
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    report(2, "synth determinism", f"10 volumes, outputs+manifest bit-identical, runtime={elapsed:.1f}s<120s")


def test_criterion_03_parameter_range_audit():
    cfg = SamplingConfig()
    rng = SeededRng(20_240)
    draws = {"t2": [], "te": [], "b0_strength": [], "rho": [], "center_fraction": [], "target_snr": []}
    for _ in range(10_000):
        p = sample_params(rng, cfg)
        draws["t2"].append(p.image.t2)
        draws["te"].append(p.image.te)
        draws["b0_strength"].append(p.image.b0_strength)
        draws["rho"].append(p.kspace.rho)
        draws["center_fraction"].append(p.kspace.center_fraction)
        draws["target_snr"].append(p.kspace.target_snr)
        assert p.kspace.r_accel in cfg.r_accel

    ranges = {
        "t2": cfg.t2, "te": cfg.te, "b0_strength": cfg.b0_strength,
        "rho": cfg.rho, "center_fraction": cfg.center_fraction, "target_snr": cfg.target_snr,
    }
    p_values = {}
    for name, values in draws.items():
        lo, hi = ranges[name]
        arr = np.asarray(values)
        assert arr.min() >= lo and arr.max() <= hi, f"{name} out of [{lo}, {hi}]"
        p_values[name] = stats.kstest(arr, "uniform", args=(lo, hi - lo)).pvalue
        assert p_values[name] > 0.01, f"KS uniformity failed for {name}: p={p_values[name]}"
    detail = " ".join(f"{k}:p={v:.3f}" for k, v in p_values.items())
    report(3, "parameter ranges", f"10^4 draws in range, KS alpha=0.01 passed ({detail})")


def test_criterion_04_coil_floor():
    rng = np.random.default_rng(4)
    worst_min = 1.0
    worst_face_err = 0.0
    for _ in range(10):
        shape = tuple(int(2 * rng.integers(2, 16) + 1) for _ in range(3))  # odd so face centers exist
        spacing = tuple(rng.uniform(0.5, 3.0, size=3))
        s = coil_sensitivity_map(shape, spacing)
        worst_min = min(worst_min, float(s.min()))
        cx, cy, cz = (n // 2 for n in shape)
        for face in (s[0, cy, cz], s[-1, cy, cz], s[cx, 0, cz], s[cx, -1, cz], s[cx, cy, 0], s[cx, cy, -1]):
            worst_face_err = max(worst_face_err, abs(face - 0.3))
    assert worst_min >= 0.3 - 1e-12
    assert worst_face_err <= 1e-9
    report(4, "coil floor", f"min={worst_min:.12f}>=0.3-1e-12, face-center err={worst_face_err:.2e}<=1e-9")


def test_criterion_05_rician_statistics():
    start = time.monotonic()
    shape = (64, 64, 64)  # 262144 voxels >= 1e5
    noisy = add_kspace_noise(np.zeros(shape, dtype=complex), 1.0, 5.0, SeededRng(31_415))
    mags = np.abs(ifft3_centered(noisy)).ravel()
    ks = stats.kstest(mags, "rayleigh", args=(0, math.sqrt(1.0) / 5.0)).statistic
    assert ks < 0.01
    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    report(5, "rician statistics", f"KS={ks:.4f}<0.01 over {mags.size} voxels, runtime={elapsed:.1f}s<30s")


def test_criterion_06_undersampling_contract():
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(200):
        ny, nz = (int(x) for x in rng.integers(16, 65, size=2))
        r = int(rng.choice([2, 3]))
        cf = float(rng.uniform(0.20, 0.30))
        mask = make_undersampling_mask((8, ny, nz), r, cf, SeededRng(600 + i))
        err = abs(mask.achieved_fraction - 1.0 / r)
        worst = max(worst, err)
        assert err <= 0.02
        wy = int(np.floor(cf * ny + 0.5))
        wz = int(np.floor(cf * nz + 0.5))
        y0, z0 = ny // 2 - wy // 2, nz // 2 - wz // 2
        assert np.all(mask.plane[y0 : y0 + wy, z0 : z0 + wz])
    with pytest.raises(InfeasibleMaskError):
        make_undersampling_mask((8, 16, 16), 3, 0.9, SeededRng(0))
    report(6, "undersampling contract", f"200 draws, worst |achieved-1/R|={worst:.4f}<=0.02, "
                                        "center always sampled, infeasible raises")


def test_criterion_07_loss_identities():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, (6, 6, 6))
    cfg = LossConfig()
    assert cfg.band_weights == (1.5, 1.0, 2.0)

    assert loss_l1(x, x) == 0.0
    k_val, k_bands = loss_kspace(x, x, cfg)
    assert k_val == 0.0 and all(b == 0.0 for b in k_bands)
    assert loss_gradient(x, x) == 0.0
    assert loss_total(x, x, cfg).total == 0.0

    y = rng.uniform(0, 1, (6, 6, 6))
    v1, _ = loss_kspace(x, y, LossConfig(band_weights=(1.5, 1.0, 2.0)))
    v2, _ = loss_kspace(x, y, LossConfig(band_weights=(7.5, 5.0, 10.0)))
    scale_gap = abs(v1 - v2)
    assert scale_gap <= 1e-12

    cfg2 = LossConfig(lambda_img=0.3, lambda_k=1.7, lambda_grad=0.9)
    br = loss_total(x, y, cfg2)
    gap = abs(br.total - (0.3 * br.l_img + 1.7 * br.l_k + 0.9 * br.l_grad))
    assert gap <= 1e-12
    report(7, "loss identities", f"zeros at equality, weight-scale gap={scale_gap:.1e}<=1e-12, "
                                 f"breakdown gap={gap:.1e}<=1e-12, default w=(1.5,1.0,2.0)")


def test_criterion_08_gradient_check():
    start = time.monotonic()
    cfg = LossConfig()
    h = 1e-5
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(800 + seed)
        p = rng.uniform(0, 1, (6, 6, 6))
        t = rng.uniform(0, 1, (6, 6, 6))
        analytic = loss_total_grad(p, t, cfg)
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            hi, lo = p.copy(), p.copy()
            hi[idx] += h
            lo[idx] -= h
            fd[idx] = (loss_total(hi, t, cfg).total - loss_total(lo, t, cfg).total) / (2 * h)
        sel = np.abs(analytic) > 1e-8
        rel = float(np.max(np.abs(analytic[sel] - fd[sel]) / np.abs(analytic[sel])))
        worst = max(worst, rel)
        assert rel <= 1e-4
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(8, "analytic gradients", f"20 pairs, worst rel err={worst:.2e}<=1e-4, runtime={elapsed:.1f}s<60s")


def test_criterion_09_spectral_degradation_direction():
    phantom = gaussian_blob_phantom(64)
    params = DegradationParams(
        image=ImagePhysicsParams(),
        kspace=KspaceParams(target_snr=math.inf, rho=0.5, r_accel=1, center_fraction=0.25),
        seed=9,
    )
    out, rep = synthesize_ulf(phantom, params)
    low_in, _, high_in = rep.band_fractions_input
    low_out, _, high_out = rep.band_fractions_output
    assert high_out < high_in
    assert low_out > low_in

    # crop-projection oracle: exact zero outside the retained window, exact
    # passthrough inside
    degraded, _ = apply_image_space_degradation(phantom, params.image, SeededRng(9, 1))
    k = fft3_centered(degraded.data)
    cropped = bandwidth_crop(k, 0.5)
    inside = np.zeros(k.shape, dtype=bool)
    inside[16:48, 16:48, 16:48] = True  # width round(0.5*64)=32 centered on DC index 32
    assert np.all(cropped[~inside] == 0)
    assert np.array_equal(cropped[inside], k[inside])
    report(9, "spectral degradation direction",
           f"high {high_in:.3e}->{high_out:.3e} (down), low {low_in:.6f}->{low_out:.6f} (up), "
           "crop projection exact")


def test_criterion_10_metric_oracles():
    rng = np.random.default_rng(10)

    p = rng.uniform(0, 1, (16, 16, 16))
    r = rng.uniform(0, 1, (16, 16, 16))
    ssim_gap = abs(ssim(p, r, 1.0) - ssim_oracle(p, r, 1.0))
    assert ssim_gap <= 1e-8

    mse = float(np.mean((p - r) ** 2))
    psnr_gap = abs(psnr(p, r, 1.0) - 10 * math.log10(1.0 / mse))
    assert psnr_gap <= 1e-8

    base = rng.uniform(0.2, 0.8, (48, 48, 48))
    mp = np.clip(base + rng.normal(0, 0.05, base.shape), 0, 1)
    mr = np.clip(base + rng.normal(0, 0.05, base.shape), 0, 1)
    res = ms_ssim(mp, mr, 1.0)
    ms_gap = abs(res.value - ms_ssim_oracle(mp, mr, 1.0, res.scales))
    assert ms_gap <= 1e-8

    a = np.zeros((8, 8, 8), dtype=int)
    b = np.zeros((8, 8, 8), dtype=int)
    a[2:4, 2:4, 2:4] = 1
    b[3:5, 2:4, 2:4] = 1
    assert dice(a, b) == pytest.approx(0.5, abs=1e-12)

    blob_a = random_blob((16, 16, 16), 1)
    blob_b = random_blob((16, 16, 16), 2)
    spacing = (1.0, 1.2, 0.7)
    d = surface_distances_oracle(blob_a, blob_b, spacing)
    hd_gap = abs(hd95(blob_a.astype(int), blob_b.astype(int), spacing=spacing) - percentile_linear_oracle(d, 95))
    assd_gap = abs(assd(blob_a.astype(int), blob_b.astype(int), spacing=spacing) - float(np.mean(d)))
    assert hd_gap <= 1e-9
    assert assd_gap <= 1e-9

    pred = np.zeros((8, 8, 8), dtype=int)
    ref = np.zeros((8, 8, 8), dtype=int)
    pred.ravel()[:150] = 1
    ref.ravel()[:120] = 1
    assert rve(pred, ref) == pytest.approx(25.0, abs=1e-12)

    report(10, "metric oracles", f"ssim gap={ssim_gap:.1e} msssim gap={ms_gap:.1e} (<=1e-8), "
                                 f"hd95 gap={hd_gap:.1e} assd gap={assd_gap:.1e} (<=1e-9), "
                                 "dice=0.5, rve=+25 exact")


def test_criterion_11_split_reproduction():
    cases = [{"case_id": f"case{i:04d}", "status": "ok"} for i in range(833)]
    manifest = Manifest(global_seed=0, config={}, cases=cases)
    splits = split_manifest(manifest, SplitSpec((0.8, 0.1, 0.1), split_seed=7))
    sizes = (len(splits["train"]), len(splits["val"]), len(splits["test"]))
    assert sizes == (666, 83, 84)
    report(11, "split reproduction", f"833 -> {sizes} == (666, 83, 84)")


def test_criterion_12_rank_statistics():
    identical = np.tile(np.arange(1, 6), (4, 1))
    res = rank_stats(identical)
    assert res.kendall_w == pytest.approx(1.0, abs=1e-12)
    assert res.mean_spearman_rho == pytest.approx(1.0, abs=1e-12)

    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(1200 + seed)
        ranks = np.array([rng.permutation(5) + 1 for _ in range(4)], dtype=float)
        got = rank_stats(ranks)
        m, n = ranks.shape
        col = ranks.sum(axis=0)
        w_ref = 12 * float(np.sum((col - m * (n + 1) / 2) ** 2)) / (m**2 * (n**3 - n))
        chi2_ref = stats.friedmanchisquare(*[ranks[:, j] for j in range(n)]).statistic
        worst = max(worst, abs(got.kendall_w - w_ref), abs(got.friedman_chi2 - chi2_ref))
    assert worst <= 1e-12

    base = np.arange(1, 5)
    p_values = []
    for n_reversed in range(4):
        rows = [base] * (8 - n_reversed) + [base[::-1]] * n_reversed
        p_values.append(rank_stats(np.array(rows)).p_value)
    assert all(a < b for a, b in zip(p_values, p_values[1:]))
    report(12, "rank statistics", f"W=rho=1 on identical ranks, oracle gap={worst:.1e}<=1e-12, "
                                  "p monotone in concordance")


def test_criterion_13_nifti_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    vol = Volume(rng.uniform(0, 1, (16, 16, 16)), spacing=(1.5, 1.5, 5.0))
    tolerances = {"float32": 1e-7, "float64": 0.0, "int16": 1e-4, "uint8": 1 / 255 / 2 + 1e-9}
    for datatype, tol in tolerances.items():
        path = tmp_path / f"v_{datatype}.nii"
        write_volume(vol, path, datatype=datatype)
        back = read_volume(path)
        gap = float(np.max(np.abs(back.data - vol.data)))
        assert gap <= tol, f"{datatype} round trip off by {gap}"
        assert back.spacing == pytest.approx(vol.spacing)

    golden_path = tmp_path / "golden.nii"
    write_volume(Volume(np.zeros((3, 4, 5)), spacing=(1.0, 2.0, 2.5)), golden_path, datatype="float32")
    blob = golden_path.read_bytes()
    golden = bytearray(348)
    struct.pack_into("<i", golden, 0, 348)
    struct.pack_into("<c", golden, 38, b"r")
    struct.pack_into("<8h", golden, 40, 3, 3, 4, 5, 1, 1, 1, 1)
    struct.pack_into("<h", golden, 70, 16)
    struct.pack_into("<h", golden, 72, 32)
    struct.pack_into("<8f", golden, 76, 1.0, 1.0, 2.0, 2.5, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", golden, 108, 352.0)
    struct.pack_into("<f", golden, 112, 1.0)
    struct.pack_into("<f", golden, 116, 0.0)
    struct.pack_into("<B", golden, 123, 2)
    struct.pack_into("<80s", golden, 148, b"ulfsim")
    struct.pack_into("<h", golden, 254, 1)
    struct.pack_into("<4f", golden, 280, 1.0, 0.0, 0.0, 0.0)
    struct.pack_into("<4f", golden, 296, 0.0, 1.0, 0.0, 0.0)
    struct.pack_into("<4f", golden, 312, 0.0, 0.0, 1.0, 0.0)
    struct.pack_into("<4s", golden, 344, b"n+1\x00")
    assert blob[:348] == bytes(golden)
    assert blob[348:352] == b"\x00\x00\x00\x00"
    report(13, "nifti round trip", "4 dtypes at stated precision; header matches byte-level golden")
