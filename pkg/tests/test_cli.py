import json

import numpy as np
import pytest
from click.testing import CliRunner

from ulfsim import Volume
from ulfsim.cli import main
from ulfsim.nifti import write_volume


@pytest.fixture()
def corpus(tmp_path):
    input_dir = tmp_path / "hf"
    input_dir.mkdir()
    rng = np.random.default_rng(0)
    for i in range(4):
        write_volume(Volume(rng.uniform(0, 1, (12, 12, 12))), input_dir / f"s{i}.nii")
    return input_dir


@pytest.fixture()
def runner():
    return CliRunner()


class TestSynth:
    def test_end_to_end(self, runner, corpus, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main, ["synth", "--input-dir", str(corpus), "--output-dir", str(out), "--seed", "3"]
        )
        assert result.exit_code == 0, result.output
        assert "synthesized 4 case(s)" in result.output
        assert (out / "manifest.json").exists()
        assert len(list(out.glob("s*.nii"))) == 4

    def test_failure_sets_exit_code(self, runner, corpus, tmp_path):
        (corpus / "bad.nii").write_bytes(b"junk")
        result = runner.invoke(
            main, ["synth", "--input-dir", str(corpus), "--output-dir", str(tmp_path / "out")]
        )
        assert result.exit_code == 1
        assert "1 failed" in result.output

    def test_config_flag(self, runner, corpus, tmp_path):
        config = {"sampling": {"rho": [0.5, 0.5], "r_accel": [3]}}
        config_path = tmp_path / "cfg.json"
        config_path.write_text(json.dumps(config))
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["synth", "--input-dir", str(corpus), "--output-dir", str(out), "--config", str(config_path)],
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert all(c["params"]["kspace"]["rho"] == 0.5 for c in manifest["cases"])
        assert all(c["params"]["kspace"]["r_accel"] == 3 for c in manifest["cases"])


class TestSplit:
    def test_split_sizes(self, runner, corpus, tmp_path):
        out = tmp_path / "out"
        runner.invoke(main, ["synth", "--input-dir", str(corpus), "--output-dir", str(out)])
        result = runner.invoke(
            main,
            ["split", "--manifest", str(out / "manifest.json"), "--fractions", "0.5,0.25,0.25", "--seed", "1"],
        )
        assert result.exit_code == 0, result.output
        splits = json.loads(result.output)
        assert (len(splits["train"]), len(splits["val"]), len(splits["test"])) == (2, 1, 1)


class TestEval:
    def test_dir_pair(self, runner, corpus, tmp_path):
        result = runner.invoke(
            main, ["eval", "--pred", str(corpus), "--ref", str(corpus), "--metrics", "ssim,psnr"]
        )
        assert result.exit_code == 0, result.output
        lines = result.output.strip().split("\n")
        assert lines[0] == "case_id\tmetric\tvalue"
        assert any("\tpsnr\tinf" in line for line in lines)

    def test_manifest_mode(self, runner, corpus, tmp_path):
        out = tmp_path / "out"
        runner.invoke(main, ["synth", "--input-dir", str(corpus), "--output-dir", str(out)])
        report_path = tmp_path / "report.tsv"
        result = runner.invoke(
            main,
            ["eval", "--manifest", str(out / "manifest.json"), "--metrics", "psnr", "--out", str(report_path)],
        )
        assert result.exit_code == 0, result.output
        assert report_path.read_text().startswith("case_id\tmetric\tvalue")

    def test_requires_inputs(self, runner):
        result = runner.invoke(main, ["eval", "--metrics", "psnr"])
        assert result.exit_code != 0


class TestSpectrum:
    def test_json_payload(self, runner, corpus):
        path = next(iter(sorted(corpus.glob("*.nii"))))
        result = runner.invoke(main, ["spectrum", "--input", str(path), "--bins", "8"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["n_bins"] == 8
        assert len(payload["power"]) == 8
        assert set(payload["band_fractions"]) == {"low", "mid", "high"}
