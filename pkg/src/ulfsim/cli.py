"""Operator-facing command line: batch synthesis, dataset splitting, batch
metric evaluation, spectrum inspection, and the tuning service launcher."""

import json
import sys

import click

from . import nifti
from .dataset import (
    WORKERS_ENV,
    Manifest,
    PipelineConfig,
    SplitSpec,
    evaluate_manifest,
    evaluate_pairs,
    generate_dataset,
    split_manifest,
    write_report,
)
from .metrics import spectrum_report


@click.group()
def main():
    """Synthesize low-field counterparts of high-field MRI volumes and
    evaluate them."""


@main.command()
@click.option("--input-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, type=int, show_default=True, help="Global seed; fully determines all outputs.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON pipeline config.")
@click.option("--workers", type=int, default=None, help=f"Worker threads (default: ${WORKERS_ENV} or CPU count).")
def synth(input_dir, output_dir, seed, config_path, workers):
    """Generate one degraded volume per input and write a manifest."""
    config = PipelineConfig.from_json_file(config_path) if config_path else PipelineConfig()
    manifest = generate_dataset(input_dir, output_dir, seed, config=config, workers=workers)
    ok = sum(1 for c in manifest.cases if c["status"] == "ok")
    failed = len(manifest.cases) - ok
    click.echo(f"synthesized {ok} case(s), {failed} failed; manifest at {output_dir}/manifest.json")
    if failed:
        sys.exit(1)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--fractions", default="0.8,0.1,0.1", show_default=True, help="train,val,test fractions.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
def split(manifest_path, fractions, seed, out_path):
    """Partition a manifest's cases into train/val/test lists."""
    parts = tuple(float(x) for x in fractions.split(","))
    result = split_manifest(Manifest.load(manifest_path), SplitSpec(fractions=parts, split_seed=seed))
    payload = json.dumps(result, indent=2)
    if out_path:
        with open(out_path, "w") as f:
            f.write(payload + "\n")
    else:
        click.echo(payload)


@main.command("eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--ref", "ref_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              help="Evaluate manifest outputs against their inputs instead of a dir pair.")
@click.option("--metrics", default="psnr,ssim", show_default=True)
@click.option("--data-range", type=float, default=None, help="Fixed intensity range (default: per-case ref range).")
@click.option("--labels", default="1", show_default=True, help="Labels for segmentation metrics.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write TSV here instead of stdout.")
def eval_cmd(pred_dir, ref_dir, manifest_path, metrics, data_range, labels, out_path):
    """Per-case and aggregate metric rows for paired volumes."""
    metric_list = [m.strip() for m in metrics.split(",") if m.strip()]
    label_list = tuple(int(x) for x in labels.split(","))
    if manifest_path:
        rows = evaluate_manifest(Manifest.load(manifest_path), metric_list, data_range, label_list)
    elif pred_dir and ref_dir:
        rows = evaluate_pairs(pred_dir, ref_dir, metric_list, data_range, label_list)
    else:
        raise click.UsageError("provide either --manifest or both --pred and --ref")
    if out_path:
        with open(out_path, "w") as f:
            write_report(rows, f)
    else:
        write_report(rows, sys.stdout)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bins", default=32, type=int, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
def spectrum(input_path, bins, out_path):
    """Radial power spectrum and band energy fractions of one volume."""
    payload = json.dumps(spectrum_report(nifti.read_volume(input_path), n_bins=bins), indent=2)
    if out_path:
        with open(out_path, "w") as f:
            f.write(payload + "\n")
    else:
        click.echo(payload)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
@click.option("--max-upload-bytes", default=256 * 1024 * 1024, type=int, show_default=True)
@click.option("--cache-bytes", default=512 * 1024 * 1024, type=int, show_default=True)
@click.option("--presets-file", default="presets.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Serve a static dashboard bundle from this directory at /.")
def serve(host, port, max_upload_bytes, cache_bytes, presets_file, ui_dir):
    """Run the interactive parameter-tuning HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(ServiceConfig(
        max_upload_bytes=max_upload_bytes,
        cache_bytes=cache_bytes,
        presets_path=presets_file,
        ui_dir=ui_dir,
    ))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
