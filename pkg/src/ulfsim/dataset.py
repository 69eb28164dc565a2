"""Batch construction of paired degraded/original corpora, manifest
bookkeeping, dataset splitting, and batch metric evaluation.

Provenance over convenience: every run embeds the fully resolved
configuration in the manifest, every case record carries its realized
parameters and an output checksum, and nothing in the manifest depends on
wall-clock time, so reruns with equal seeds are byte-identical.
"""

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nifti
from .errors import InvalidInputError
from .grid import SeededRng
from .kspace import SamplingConfig, params_from_dict, params_to_dict, sample_params, synthesize_ulf
from .losses import LossConfig
from .metrics import assd, dice, hd95, ms_ssim, psnr, rve, ssim

__all__ = [
    "PipelineConfig",
    "SplitSpec",
    "Manifest",
    "generate_dataset",
    "split_manifest",
    "evaluate_pairs",
    "evaluate_manifest",
    "write_report",
]

MANIFEST_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
WORKERS_ENV = "ULFSIM_WORKERS"

UNDEFINED_MARKER = "NA"

IMAGE_METRICS = ("psnr", "ssim", "msssim")
MASK_METRICS = ("dice", "hd95", "assd", "rve")


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved batch configuration: sampling ranges, fixed constants,
    loss defaults, and the output storage dtype."""

    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    output_dtype: str = "float32"

    def to_dict(self):
        return {
            "sampling": self.sampling.to_dict(),
            "loss": self.loss.to_dict(),
            "output_dtype": self.output_dtype,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            sampling=SamplingConfig.from_dict(d.get("sampling", {})),
            loss=LossConfig.from_dict(d.get("loss", {})),
            output_dtype=d.get("output_dtype", "float32"),
        )

    @classmethod
    def from_json_file(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.8, 0.1, 0.1)
    split_seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != 3 or any(f < 0 for f in fr):
            raise InvalidInputError("fractions must be 3 nonnegative numbers")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise InvalidInputError(f"fractions must sum to 1, got {sum(fr)}")
        object.__setattr__(self, "fractions", fr)


@dataclass
class Manifest:
    """Machine-readable record of one generation run.

    Case output paths are stored relative to the manifest's directory so a
    rerun (or a relocated dataset) produces byte-identical manifests;
    base_dir tracks where the manifest lives and is never serialized.
    """

    global_seed: int
    config: dict
    cases: list
    schema_version: int = MANIFEST_SCHEMA_VERSION
    base_dir: str | None = None

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "global_seed": self.global_seed,
            "config": self.config,
            "cases": self.cases,
        }

    def save(self, path):
        """Atomic write: serialize to a sibling temp file, then rename."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            d = json.load(f)
        return cls(
            global_seed=d["global_seed"],
            config=d["config"],
            cases=d["cases"],
            schema_version=d.get("schema_version", MANIFEST_SCHEMA_VERSION),
            base_dir=str(Path(path).parent),
        )

    def case_ids(self):
        return [c["case_id"] for c in self.cases]

    def resolve_output(self, case):
        p = Path(case["output_path"])
        if not p.is_absolute() and self.base_dir:
            return str(Path(self.base_dir) / p)
        return str(p)


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _case_id(path):
    name = Path(path).name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def discover_cases(input_dir):
    """Sorted (case_id, path) pairs for every .nii / .nii.gz in a directory."""
    input_dir = Path(input_dir)
    cases = {}
    for path in input_dir.iterdir():
        if path.name.endswith(".nii") or path.name.endswith(".nii.gz"):
            cases[_case_id(path)] = path
    return sorted(cases.items())


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _synthesize_case(index, case_id, in_path, out_path, global_seed, config):
    """One independent work unit; parameters come from the case's private
    substream keyed by its sorted index, so adding or removing other cases
    never perturbs this one's draws."""
    params = sample_params(SeededRng(global_seed, index), config.sampling)
    volume = nifti.read_volume(in_path)
    result, report = synthesize_ulf(volume, params)
    nifti.write_volume(result, out_path, datatype=config.output_dtype)
    return {
        "case_id": case_id,
        "status": "ok",
        "input_path": str(in_path),
        "output_path": out_path.name,
        "params": params_to_dict(params),
        "achieved_fraction": report.achieved_fraction,
        "signal_power": report.signal_power,
        "band_fractions_input": list(report.band_fractions_input),
        "band_fractions_output": list(report.band_fractions_output),
        "checksum": _sha256_file(out_path),
    }


def generate_dataset(input_dir, output_dir, global_seed, config=None, workers=None):
    """Synthesize one degraded counterpart per input volume.

    Per-case parameters are sampled from substream (global_seed, case index
    ordered by sorted case_id). Failing cases are isolated, recorded in the
    manifest, and do not stop the batch. The manifest is written atomically
    to <output_dir>/manifest.json on completion.
    """
    config = config or PipelineConfig()
    cases = discover_cases(input_dir)
    if not cases:
        raise InvalidInputError(f"no .nii/.nii.gz volumes found in {input_dir}")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    def run_one(item):
        index, (case_id, in_path) = item
        suffix = ".nii.gz" if str(in_path).endswith(".gz") else ".nii"
        out_path = output_dir / f"{case_id}{suffix}"
        try:
            return _synthesize_case(index, case_id, in_path, out_path, global_seed, config)
        except Exception as exc:  # noqa: BLE001 - per-case isolation is the contract
            return {
                "case_id": case_id,
                "status": "error",
                "input_path": str(in_path),
                "error": f"{type(exc).__name__}: {exc}",
            }

    n_workers = _worker_count(workers)
    if n_workers == 1:
        records = [run_one(item) for item in enumerate(cases)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(run_one, enumerate(cases)))

    manifest = Manifest(
        global_seed=int(global_seed), config=config.to_dict(), cases=records, base_dir=str(output_dir)
    )
    manifest.save(output_dir / MANIFEST_NAME)
    return manifest


def split_manifest(manifest: Manifest, spec: SplitSpec):
    """Deterministic train/val/test partition of the manifest's case ids.

    Sizes are floor(fraction * N) for train and val with the remainder in
    test; 833 cases at (0.8, 0.1, 0.1) give exactly (666, 83, 84).
    """
    ids = sorted(manifest.case_ids())
    if not ids:
        raise InvalidInputError("manifest has no cases to split")
    order = SeededRng(spec.split_seed, 0).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_train = int(math.floor(spec.fractions[0] * n))
    n_val = int(math.floor(spec.fractions[1] * n))
    return {
        "train": shuffled[:n_train],
        "val": shuffled[n_train : n_train + n_val],
        "test": shuffled[n_train + n_val :],
    }


def _metric_value(metric, pred_path, ref_path, data_range, label):
    if metric in IMAGE_METRICS:
        pred = nifti.read_volume(pred_path)
        ref = nifti.read_volume(ref_path)
        rng_val = data_range if data_range is not None else float(ref.data.max() - ref.data.min())
        if rng_val <= 0:
            return UNDEFINED_MARKER
        if metric == "psnr":
            return psnr(pred, ref, rng_val)
        if metric == "ssim":
            return ssim(pred, ref, rng_val)
        return ms_ssim(pred, ref, rng_val).value
    pred = nifti.read_mask(pred_path)
    ref = nifti.read_mask(ref_path)
    if metric == "dice":
        return dice(pred, ref, label=label)
    if metric == "hd95":
        return hd95(pred, ref, label=label)
    if metric == "assd":
        return assd(pred, ref, label=label)
    return rve(pred, ref, label=label)


def _metric_rows(case_id, pred_path, ref_path, metrics, data_range, labels):
    rows = []
    for metric in metrics:
        if metric in MASK_METRICS:
            targets = [(f"{metric}:{label}", label) for label in labels]
        else:
            targets = [(metric, None)]
        for name, label in targets:
            if pred_path is None:
                rows.append({"case_id": case_id, "metric": name, "value": UNDEFINED_MARKER})
                continue
            try:
                value = _metric_value(metric, pred_path, ref_path, data_range, label)
            except Exception:  # undefined metric / unreadable pair -> marker, never a crash
                value = UNDEFINED_MARKER
            rows.append({"case_id": case_id, "metric": name, "value": value})
    return rows


def _aggregate_rows(rows):
    by_metric = {}
    for row in rows:
        by_metric.setdefault(row["metric"], []).append(row["value"])
    out = []
    for metric, values in by_metric.items():
        numeric = [v for v in values if not isinstance(v, str)]
        if not numeric:
            mean = std = UNDEFINED_MARKER
        elif all(math.isfinite(v) for v in numeric):
            mean = float(np.mean(numeric))
            std = float(np.std(numeric))
        else:
            mean = float(np.mean(numeric))  # inf propagates honestly
            std = UNDEFINED_MARKER
        out.append({"case_id": "mean", "metric": metric, "value": mean})
        out.append({"case_id": "std", "metric": metric, "value": std})
    return out


def evaluate_pairs(pred_dir, ref_dir, metrics, data_range=None, labels=(1,)):
    """Per-case and aggregate (mean, std) metric rows for directory pairs
    aligned by case_id. Missing predictions are recorded with the marker
    token and skipped from aggregates."""
    metrics = list(metrics)
    unknown = [m for m in metrics if m not in IMAGE_METRICS + MASK_METRICS]
    if unknown:
        raise InvalidInputError(f"unknown metrics {unknown}; choose from {IMAGE_METRICS + MASK_METRICS}")
    refs = dict(discover_cases(ref_dir))
    preds = dict(discover_cases(pred_dir))
    if not refs:
        raise InvalidInputError(f"no volumes found in reference dir {ref_dir}")
    rows = []
    for case_id in sorted(refs):
        pred_path = preds.get(case_id)
        rows.extend(_metric_rows(case_id, pred_path, refs[case_id], metrics, data_range, labels))
    rows.extend(_aggregate_rows(rows))
    return rows


def evaluate_manifest(manifest: Manifest, metrics, data_range=None, labels=(1,)):
    """Evaluate each manifest case's output against its input volume."""
    rows = []
    for case in manifest.cases:
        if case.get("status") != "ok":
            rows.extend(_metric_rows(case["case_id"], None, None, metrics, data_range, labels))
            continue
        rows.extend(
            _metric_rows(
                case["case_id"], manifest.resolve_output(case), case["input_path"], metrics, data_range, labels
            )
        )
    rows.extend(_aggregate_rows(rows))
    return rows


def _format_value(value):
    if isinstance(value, str):
        return value
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.10g}"


def write_report(rows, stream):
    """Tab-separated report with a fixed header; undefined metrics emit the
    explicit marker token, never an empty cell."""
    stream.write("case_id\tmetric\tvalue\n")
    for row in rows:
        stream.write(f"{row['case_id']}\t{row['metric']}\t{_format_value(row['value'])}\n")


def manifest_params(manifest: Manifest):
    """Realized DegradationParams per ok case (for audits and tests)."""
    return {
        c["case_id"]: params_from_dict(c["params"]) for c in manifest.cases if c.get("status") == "ok"
    }
