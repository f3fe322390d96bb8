import json
import subprocess
import sys

import numpy as np
import pytest

from ntnet import cli
from ntnet.checkpoint import ModelCheckpoint, from_model
from ntnet.imageio import load_image
from ntnet.nets import Denoiser, Translator
from ntnet.rand import Prng

SMALL = ["--synth-image-size", "32", "--crop-size", "16", "--denoiser-width", "4", "--denoiser-depth", "2",
         "--translator-width", "4", "--translator-depth", "1", "--synth-train-images", "4",
         "--synth-test-images", "3", "--log-every", "0"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_error_is_json_on_stderr(capsys, tmp_path):
    code, out, err = run(capsys, "denoise", "--input", str(tmp_path / "missing.pgm"),
                         "--denoiser", str(tmp_path / "none.ntnt"), "--out", str(tmp_path))
    assert code != 0 and out == ""
    payload = json.loads(err)
    assert payload["error"] == "FileNotFoundError" and "none.ntnt" in payload["message"]


def test_usage_error_is_json(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["pretrain", "--seed", "abc"])
    assert exc.value.code != 0
    assert json.loads(capsys.readouterr().err)["error"] == "UsageError"


def test_invalid_override_reported(capsys, tmp_path):
    code, _, err = run(capsys, "pretrain", "--aug-lo", "9", "--aug-hi", "1", "--out", str(tmp_path))
    assert code == 1 and "aug_lo" in json.loads(err)["message"]


def test_every_config_field_has_a_flag():
    import dataclasses
    from ntnet.config import TrainConfig
    parser = cli.build_parser()
    sub = parser._subparsers._group_actions[0].choices["eval"]
    dests = {a.dest for a in sub._actions}
    assert {f.name for f in dataclasses.fields(TrainConfig)} <= dests
    assert {"config", "out"} <= dests


def test_config_file_and_override(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"seed": 5, "synth_image_size": 32}))
    code, out, _ = run(capsys, "synth", "--config", str(tmp_path / "c.json"), "--seed", "6", "--count", "2",
                       "--out", str(tmp_path / "s"))
    assert code == 0
    manifest = json.loads((tmp_path / "s" / "synth.json").read_text())
    assert manifest["config"]["seed"] == 6 and manifest["config"]["synth_image_size"] == 32
    assert load_image(tmp_path / "s" / "noisy" / "0000.ppm").shape == (3, 32, 32)


def test_end_to_end_commands(tmp_path, capsys):
    out = tmp_path / "run"
    code, o, e = run(capsys, "pretrain", "--denoiser-iters", "3", "--out", str(out), *SMALL)
    assert code == 0, e
    den = json.loads(o)["checkpoint"]
    code, o, e = run(capsys, "train-translator", "--denoiser", den, "--translator-iters", "3",
                     "--out", str(out), *SMALL)
    assert code == 0, e
    tr = json.loads(o)["checkpoint"]
    assert ModelCheckpoint.load(tr).kind == "translator"

    code, _, e = run(capsys, "synth", "--count", "2", "--noise", "correlated", "--level", "15",
                     "--out", str(tmp_path / "corp"), *SMALL)
    assert code == 0, e
    code, o, e = run(capsys, "eval", "--denoiser", den, "--translator", tr, "--clean-dir",
                     str(tmp_path / "corp" / "clean"), "--noisy-dir", str(tmp_path / "corp" / "noisy"),
                     "--out", str(out))
    assert code == 0, e
    assert set(json.loads(o)) == {"noisy", "denoiser", "translated"}
    code, o, e = run(capsys, "ablate-addition", "--denoiser", den, "--levels", "0,5", "--out", str(out), *SMALL)
    assert code == 0, e
    assert set(json.loads((out / "ablation.json").read_text())) == {"noise0", "noise5"}
    code, o, e = run(capsys, "analyze", "--noisy", str(tmp_path / "corp" / "noisy" / "0000.ppm"),
                     "--clean", str(tmp_path / "corp" / "clean" / "0000.ppm"), "--translator", tr,
                     "--out", str(out / "an"))
    assert code == 0, e
    assert (out / "an" / "input_spatial_hist.csv").exists() and (out / "an" / "translated_freq_hist.csv").exists()
    code, o, e = run(capsys, "denoise", "--input", str(tmp_path / "corp" / "noisy"), "--denoiser", den,
                     "--translator", tr, "--out", str(out / "den"))
    assert code == 0, e
    assert len(json.loads(o)["written"]) == 2
    # wrong checkpoint kind
    code, _, e = run(capsys, "denoise", "--input", str(tmp_path / "corp" / "noisy"), "--denoiser", tr,
                     "--out", str(out / "den"))
    assert code == 1 and "expected denoiser" in json.loads(e)["message"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ntnet.cli", "eval"], capture_output=True, text=True)
    assert proc.returncode != 0 and json.loads(proc.stderr.strip().splitlines()[-1])["error"] == "UsageError"
