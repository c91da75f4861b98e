import json

import numpy as np
import pytest

from pif.cli import cli_main, params_from_sets, parse_set_flag
from pif.concepts import adjust
from pif.image import load_image, save_image
from pif.params import ConceptId, Scalar, StrengthHue
from pif.pcturb import decode_preset, perturb_masked
from pif.synth import calibration_image, textured_image


def test_parse_set_scalar():
    concept, value = parse_set_flag("exposure=0.3")
    assert concept is ConceptId.EXPOSURE
    assert value == Scalar(0.3)


def test_parse_set_pair():
    concept, value = parse_set_flag("tint=0.5:0.66")
    assert concept is ConceptId.TINT
    assert value == StrengthHue(0.5, 0.66)


def test_parse_set_errors():
    from pif.cli import UsageError

    for bad in ("exposure", "glow=1", "exposure=2.0", "tint=0.5", "exposure=0.1:0.2"):
        with pytest.raises(UsageError):
            parse_set_flag(bad)


def test_params_from_sets():
    params = params_from_sets(["exposure=0.3", "tint=0.5:0.66"])
    assert params.exposure == 0.3
    assert params.tint == StrengthHue(0.5, 0.66)


def test_perturb_command(tmp_path, texture):
    src = tmp_path / "in.png"
    dst = tmp_path / "out.png"
    save_image(texture, src, 16)
    code = cli_main([
        "perturb", "--in", str(src), "--out", str(dst),
        "--set", "exposure=0.3", "--bit-depth", "16",
    ])
    assert code == 0
    loaded = load_image(src)
    expected = adjust(ConceptId.EXPOSURE, loaded, Scalar(0.3))
    assert np.abs(load_image(dst) - expected).max() <= 1 / 65535


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    assert cli_main(["perturb", "--whatever"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err.lower() or "error" in err.lower()


def test_unknown_subcommand_is_usage_error():
    assert cli_main(["transmogrify"]) == 1


def test_missing_input_is_processing_error(tmp_path):
    code = cli_main([
        "perturb", "--in", str(tmp_path / "nope.png"),
        "--out", str(tmp_path / "out.png"), "--set", "exposure=0.1",
    ])
    assert code == 2


def test_eval_identical_files(tmp_path, texture, capsys):
    path = tmp_path / "img.png"
    save_image(texture, path)
    json_out = tmp_path / "report.json"
    code = cli_main(["eval", "--a", str(path), "--b", str(path), "--json", str(json_out)])
    assert code == 0
    out = capsys.readouterr().out
    assert "99.00" in out and "1.0000" in out and "0.0000" in out
    report = json.loads(json_out.read_text())
    assert report["psnr"] == 99.0
    assert report["ssim"] == 1.0
    assert report["emd"] == 0.0


def test_fit_deterministic_bytes(tmp_path):
    refs = tmp_path / "refs"
    refs.mkdir()
    img = calibration_image(96, 96, seed=6)
    save_image(img, refs / "a.png", 16)

    out1 = tmp_path / "style1.json"
    out2 = tmp_path / "style2.json"
    flags = ["--refs", str(refs), "--seed", "7", "--iters", "8",
             "--long-edge", "96", "--quiet"]
    assert cli_main(["fit", "--out", str(out1), *flags]) == 0
    assert cli_main(["fit", "--out", str(out2), *flags]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_fit_then_apply_matches_library(tmp_path):
    refs = tmp_path / "refs"
    refs.mkdir()
    anchor = calibration_image(96, 96, seed=6)
    save_image(anchor, refs / "a.png", 16)
    preset_path = tmp_path / "style.json"
    assert cli_main([
        "fit", "--refs", str(refs), "--out", str(preset_path),
        "--seed", "3", "--iters", "5", "--long-edge", "96", "--quiet",
    ]) == 0

    content_path = tmp_path / "content.png"
    content = textured_image(64, 64, seed=2)
    save_image(content, content_path, 16)
    rendered_path = tmp_path / "rendered.png"
    assert cli_main([
        "apply", "--preset", str(preset_path), "--in", str(content_path),
        "--out", str(rendered_path), "--concepts", "tint,contrast",
        "--mode", "relative", "--bit-depth", "16",
    ]) == 0

    preset = decode_preset(preset_path.read_bytes())
    expected = perturb_masked(
        load_image(content_path),
        preset.params,
        frozenset({ConceptId.TINT, ConceptId.CONTRAST}),
        preset.thresholds,
    )
    assert np.abs(load_image(rendered_path) - expected).max() <= 1 / 65535


def test_fit_empty_dir_is_processing_error(tmp_path):
    refs = tmp_path / "empty"
    refs.mkdir()
    assert cli_main(["fit", "--refs", str(refs), "--out", str(tmp_path / "s.json")]) == 2


def test_apply_bad_preset_is_processing_error(tmp_path, texture):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    src = tmp_path / "in.png"
    save_image(texture, src)
    assert cli_main([
        "apply", "--preset", str(bad), "--in", str(src),
        "--out", str(tmp_path / "out.png"),
    ]) == 2


def test_serve_config_precedence(monkeypatch):
    from pif.cli import resolve_serve_config

    monkeypatch.delenv("PIF_PORT", raising=False)
    monkeypatch.delenv("PIF_DATA_DIR", raising=False)
    monkeypatch.delenv("PIF_WORKERS", raising=False)
    port, data_dir, workers = resolve_serve_config(None, None, None)
    assert port == 8080
    assert data_dir == "./pif-data"
    assert workers >= 1

    monkeypatch.setenv("PIF_PORT", "9001")
    monkeypatch.setenv("PIF_DATA_DIR", "/tmp/pif-env")
    monkeypatch.setenv("PIF_WORKERS", "5")
    assert resolve_serve_config(None, None, None) == (9001, "/tmp/pif-env", 5)
    # flags beat the environment
    assert resolve_serve_config(7000, "/tmp/flag", 3) == (7000, "/tmp/flag", 3)
