"""Acceptance gate: every release criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. The synthetic recovery
battery dominates the runtime (fits at 512 px); everything else finishes in
seconds.
"""

import itertools
import json
import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from pif.concepts import adjust, weight_map, weight_map_raw
from pif.fit import FitConfig, fit_style
from pif.image import decode_image, encode_png, gaussian_kernel, luminance, save_image
from pif.metrics import Histogram, emd, emd_image, histogram, psnr, ssim
from pif.params import (
    ALL_CONCEPTS,
    CONCEPT_ORDER,
    ConceptId,
    ConceptParams,
    Scalar,
    StrengthHue,
    neutral_params,
)
from pif.pcturb import apply_style, neutralize, perturb, perturb_masked
from pif.synth import calibration_image, textured_image, two_tone

HERE = Path(__file__).parent

SCALAR_NAMES = ("SHARPNESS", "VIGNETTING", "SATURATION", "EXPOSURE", "CONTRAST")


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


# --------------------------------------------------------------------------
# Criterion: formula oracle suite (< 10 s)
# --------------------------------------------------------------------------

def test_formula_oracle_suite():
    start = time.perf_counter()
    ok = True

    # Exposure (hand-evaluated scaling and clamping)
    ok &= np.allclose(adjust(ConceptId.EXPOSURE, np.full((4, 4, 3), 0.4), Scalar(0.5)), 0.6, atol=1e-6)
    ok &= np.allclose(adjust(ConceptId.EXPOSURE, np.full((4, 4, 3), 0.8), Scalar(0.5)), 1.0, atol=1e-4)

    # Sharpness identity on constants
    const = np.full((16, 16, 3), 0.35)
    ok &= np.allclose(adjust(ConceptId.SHARPNESS, const, Scalar(0.7)), const, atol=1e-6)

    # Contrast two-tone hand case
    out = adjust(ConceptId.CONTRAST, two_tone(low=0.2, high=0.8), Scalar(1.0))
    ok &= np.allclose(out[:, :16], 0.0, atol=1e-4) and np.allclose(out[:, 16:], 1.0, atol=1e-4)

    # Saturation grayscale fixpoint
    gray = np.repeat(np.linspace(0.1, 0.9, 8)[:, None, None], 3, axis=2)[None].repeat(4, 0)[0]
    gray = np.repeat(gray[:, :, :1], 3, axis=2)
    ok &= np.allclose(adjust(ConceptId.SATURATION, gray, Scalar(0.8)), gray, atol=1e-6)

    # Tint: full strength hits the target hue; wrap crosses 1.0
    from pif.image import to_hsv, to_rgb

    img = np.random.default_rng(0).random((8, 8, 3)) * 0.8 + 0.1
    tinted = adjust(ConceptId.TINT, img, StrengthHue(1.0, 0.37))
    hsv = to_hsv(tinted)
    chroma = hsv[..., 1] > 1e-6
    dh = np.abs(hsv[..., 0][chroma] - 0.37)
    ok &= float(np.minimum(dh, 1 - dh).max()) < 1e-6
    wrap = adjust(ConceptId.TINT, to_rgb(np.array([[[0.9, 0.8, 0.7]]])), StrengthHue(0.5, 0.1))
    ok &= abs(to_hsv(wrap)[0, 0, 0]) < 1e-6

    # Highlight gating and full replacement
    mid = np.full((4, 4, 3), 0.5)
    ok &= np.array_equal(adjust(ConceptId.HIGHLIGHT, mid, StrengthHue(1.0, 0.3)), mid)
    import colorsys

    white = np.ones((4, 4, 3))
    ok &= np.allclose(
        adjust(ConceptId.HIGHLIGHT, white, StrengthHue(1.0, 0.08))[0, 0],
        colorsys.hsv_to_rgb(0.08, 0.6, 0.9),
        atol=1e-6,
    )

    # Weight maps: W2 corner raw 1, W7 raw 0.5 at luminance 0.85, W5 zeros
    tex = textured_image(24, 36, seed=1)
    ok &= weight_map_raw(ConceptId.VIGNETTING, tex)[0, 0] == 1.0
    ok &= np.allclose(weight_map_raw(ConceptId.HIGHLIGHT, np.full((4, 4, 3), 0.85)), 0.5, atol=1e-6)
    ok &= np.all(weight_map(ConceptId.EXPOSURE, np.full((4, 4, 3), 0.3)) == 0.0)

    # Color conversion: red primary and hand luminance
    ok &= np.allclose(to_hsv(np.array([[[1.0, 0.0, 0.0]]]))[0, 0], [0, 1, 1], atol=1e-6)
    ok &= abs(luminance(np.array([[[1.0, 0.0, 0.0]]]))[0, 0] - 0.2126) < 1e-6

    # Blur impulse equals the center tap
    impulse = np.zeros((5, 5, 3))
    impulse[2, 2] = 1.0
    from pif.image import gaussian_blur

    ok &= abs(gaussian_blur(impulse, 3)[2, 2, 0] - gaussian_kernel(3)[1] ** 2) < 1e-6

    # Gradient of a ramp
    from pif.image import gradient_magnitude
    from pif.synth import horizontal_ramp

    grad = gradient_magnitude(horizontal_ramp(6, 24, 0.01))
    ok &= np.allclose(grad[:, 1:-1], 0.01, atol=1e-6)

    # Composition order oracle
    combo = perturb(
        two_tone(low=0.2, high=0.8),
        neutral_params()
        .with_value(ConceptId.EXPOSURE, Scalar(0.5))
        .with_value(ConceptId.CONTRAST, Scalar(1.0)),
    )
    ok &= np.allclose(combo[:, :16], 0.0, atol=1e-4) and np.allclose(combo[:, 16:], 1.0, atol=1e-4)

    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < 10.0
    report("formula-oracle-suite", ok, f"({elapsed:.1f}s)")
    assert ok


# --------------------------------------------------------------------------
# Criterion: identity & composition (< 30 s)
# --------------------------------------------------------------------------

def test_identity_and_composition():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    identity_ok = True
    for _ in range(20):
        h = int(rng.integers(8, 64))
        w = int(rng.integers(8, 64))
        img = rng.random((h, w, 3))
        out = perturb(img, neutral_params())
        identity_ok &= np.array_equal(out, img)

    img = textured_image(64, 64, seed=4)
    params = ConceptParams(
        sharpness=0.35,
        vignetting=-0.25,
        saturation=0.3,
        exposure=0.2,
        contrast=-0.15,
        tint=StrengthHue(0.45, 0.62),
        highlight=StrengthHue(0.35, 0.12),
        shadow=StrengthHue(0.3, 0.7),
    )
    mask_ok = True
    for size in range(9):
        for combo in itertools.combinations(CONCEPT_ORDER, size):
            mask = frozenset(combo)
            expected = perturb(img, params.restricted(mask))
            if not np.array_equal(perturb_masked(img, params, mask), expected):
                mask_ok = False
    elapsed = time.perf_counter() - start
    ok = identity_ok and mask_ok and elapsed < 30.0
    report("identity-and-composition", ok, f"({elapsed:.1f}s, 256 masks)")
    assert ok


# --------------------------------------------------------------------------
# Criterion: weight-map contract
# --------------------------------------------------------------------------

def test_weight_map_contract():
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(10):
        h = int(rng.integers(6, 90))
        w = int(rng.integers(6, 90))
        img = rng.random((h, w, 3))
        for concept in CONCEPT_ORDER:
            field = weight_map(concept, img)
            ok &= field.min() >= 0.0 and field.max() <= 1.0
        raw = weight_map_raw(ConceptId.VIGNETTING, img)
        ok &= raw[0, 0] == 1.0
        if h % 2 == 0 and w % 2 == 0:
            ok &= raw[h // 2, w // 2] == 0.0
        ok &= np.all(weight_map(ConceptId.TINT, img) == 1.0)
    report("weight-map-contract", bool(ok))
    assert ok


# --------------------------------------------------------------------------
# Criterion: synthetic style recovery (< 15 min at 512 px)
# --------------------------------------------------------------------------

def _run_recovery_cases(cases: list[dict], workers: int = 2) -> list[dict]:
    chunks = [cases[i::workers] for i in range(workers)]
    procs = []
    for chunk in chunks:
        if not chunk:
            continue
        args = [sys.executable, str(HERE / "recovery_helper.py")]
        args.extend(json.dumps(c) for c in chunk)
        procs.append(subprocess.Popen(args, stdout=subprocess.PIPE, text=True))
    results = []
    for proc in procs:
        out, _ = proc.communicate()
        assert proc.returncode == 0, f"worker failed: {out}"
        results.extend(json.loads(line) for line in out.splitlines() if line.strip())
    return results


def test_synthetic_style_recovery():
    start = time.perf_counter()
    cases = [
        {"kind": "scalar", "concept": name, "xi": xi}
        for name in SCALAR_NAMES
        for xi in (0.2, -0.2, 0.4, -0.4)
    ]
    cases.append({"kind": "tint", "strength": 0.5, "hue": 0.66})
    results = _run_recovery_cases(cases)

    failures = []
    for res in results:
        p = res["params"]
        case = res["case"]
        if case["kind"] == "scalar":
            active_name = case["concept"].lower()
            active = p[active_name]
            if abs(active - case["xi"]) > 0.05:
                failures.append(f"{case['concept']} {case['xi']:+}: active {active:+.3f}")
            for name in SCALAR_NAMES:
                if name.lower() == active_name:
                    continue
                if abs(p[name.lower()]) > 0.05:
                    failures.append(
                        f"{case['concept']} {case['xi']:+}: passive {name} {p[name.lower()]:+.3f}"
                    )
        else:
            strength, hue = p["tint"]
            dh = min(abs(hue - case["hue"]) % 1.0, 1.0 - abs(hue - case["hue"]) % 1.0)
            if abs(strength - case["strength"]) > 0.08:
                failures.append(f"tint strength {strength:.3f}")
            if dh > 0.05:
                failures.append(f"tint hue off by {dh:.3f}")

    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 900.0
    detail = f"({elapsed:.0f}s, {len(results)} fits)"
    if failures:
        detail += " " + "; ".join(failures)
    report("synthetic-style-recovery", ok, detail)
    assert ok, failures


# --------------------------------------------------------------------------
# Criterion: conflict cancellation
# --------------------------------------------------------------------------

def test_conflict_cancellation():
    cases = [
        {"kind": "conflict_exposure", "xi": 0.3},
        {"kind": "conflict_tint", "pairs": [[0.6, 0.1], [0.6, 0.6]]},
    ]
    results = _run_recovery_cases(cases)
    by_kind = {res["case"]["kind"]: res for res in results}
    exposure = by_kind["conflict_exposure"]["params"]["exposure"]
    tint_strength = by_kind["conflict_tint"]["params"]["tint"][0]
    ok = abs(exposure) <= 0.05 and tint_strength <= 0.15
    report(
        "conflict-cancellation",
        ok,
        f"(exposure {exposure:+.3f}, tint strength {tint_strength:.3f})",
    )
    assert ok


# --------------------------------------------------------------------------
# Criterion: metric oracles
# --------------------------------------------------------------------------

def test_metric_oracles():
    rng = np.random.default_rng(0)
    a = rng.random((32, 32, 3)) * 0.85
    ok = abs(psnr(a, a + 0.1) - 20.0) < 1e-6
    ok &= ssim(a, a) == 1.0

    d1 = np.zeros(256)
    d2 = np.zeros(256)
    d1[10] = 1.0
    d2[20] = 1.0
    ok &= abs(emd(Histogram(d1, "luminance"), Histogram(d2, "luminance")) - 10 / 256) < 1e-9

    from transport_oracle import brute_force_transport

    transport_ok = True
    for _ in range(3):
        support = rng.choice(256, size=8, replace=False)
        b1 = np.zeros(256)
        b2 = np.zeros(256)
        b1[support[:4]] = rng.random(4)
        b2[support[4:]] = rng.random(4)
        b1 /= b1.sum()
        b2 /= b2.sum()
        ours = emd(Histogram(b1, "luminance"), Histogram(b2, "luminance"))
        transport_ok &= abs(ours - brute_force_transport(b1, b2)) < 1e-9
    ok &= transport_ok
    report("metric-oracles", bool(ok))
    assert ok


# --------------------------------------------------------------------------
# Criterion: transfer improves style distance (>= 9/10)
# --------------------------------------------------------------------------

def test_transfer_improves_style_distance():
    start = time.perf_counter()
    styles = [
        neutral_params().with_value(ConceptId.EXPOSURE, Scalar(0.3)),
        neutral_params().with_value(ConceptId.EXPOSURE, Scalar(-0.3)),
        neutral_params().with_value(ConceptId.CONTRAST, Scalar(0.35)),
        neutral_params().with_value(ConceptId.SATURATION, Scalar(0.4)),
        neutral_params().with_value(ConceptId.SATURATION, Scalar(-0.4)),
        neutral_params().with_value(ConceptId.TINT, StrengthHue(0.5, 0.6)),
        neutral_params().with_value(ConceptId.VIGNETTING, Scalar(-0.4)),
        neutral_params()
        .with_value(ConceptId.EXPOSURE, Scalar(0.2))
        .with_value(ConceptId.CONTRAST, Scalar(-0.25)),
        neutral_params()
        .with_value(ConceptId.TINT, StrengthHue(0.35, 0.08))
        .with_value(ConceptId.EXPOSURE, Scalar(-0.2)),
        neutral_params()
        .with_value(ConceptId.SATURATION, Scalar(0.3))
        .with_value(ConceptId.SHADOW, StrengthHue(0.4, 0.65)),
    ]
    config = FitConfig(seed=5, max_outer_iterations=80, downsample_long_edge=192)
    improved = 0
    for i, style in enumerate(styles):
        anchor = calibration_image(192, 192, seed=30 + i)
        reference = perturb(anchor, style)
        preset, _ = fit_style([reference], config)
        content = textured_image(160, 192, seed=60 + i)
        styled = apply_style(content, preset, mode="absolute")
        if emd_image(styled, reference) < emd_image(content, reference):
            improved += 1
    elapsed = time.perf_counter() - start
    ok = improved >= 9
    report("transfer-improves-style-distance", ok, f"({improved}/10, {elapsed:.0f}s)")
    assert ok


# --------------------------------------------------------------------------
# Criterion: CLI fit determinism (byte-identical)
# --------------------------------------------------------------------------

def test_cli_fit_determinism(tmp_path):
    from pif.cli import cli_main

    refs = tmp_path / "refs"
    refs.mkdir()
    save_image(calibration_image(128, 128, seed=9), refs / "ref.png", 16)
    flags = ["--refs", str(refs), "--seed", "7", "--iters", "12",
             "--long-edge", "128", "--quiet"]
    out1 = tmp_path / "one.json"
    out2 = tmp_path / "two.json"
    assert cli_main(["fit", "--out", str(out1), *flags]) == 0
    assert cli_main(["fit", "--out", str(out2), *flags]) == 0
    ok = out1.read_bytes() == out2.read_bytes()
    report("cli-fit-determinism", ok)
    assert ok


# --------------------------------------------------------------------------
# Criterion: service contract against a live instance
# --------------------------------------------------------------------------

def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_service_contract(tmp_path):
    import httpx
    import uvicorn

    from pif.service import create_app

    port = _free_port()
    config = uvicorn.Config(
        create_app(tmp_path / "data", worker_count=2),
        host="127.0.0.1",
        port=port,
        log_level="error",
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(f"{base}/healthz", timeout=1.0).status_code == 200:
                    break
            except httpx.TransportError:
                time.sleep(0.1)
        else:
            pytest.fail("service did not come up")

        anchor = calibration_image(96, 96, seed=14)
        reference = adjust(ConceptId.EXPOSURE, anchor, Scalar(0.3))
        upload = httpx.post(
            f"{base}/api/references",
            files={"file": ("ref.png", encode_png(reference, 16), "image/png")},
            timeout=30.0,
        )
        assert upload.status_code == 200
        rid = upload.json()["reference_id"]

        job = httpx.post(
            f"{base}/api/fit",
            json={
                "reference_ids": [rid],
                "config": {
                    "max_outer_iterations": 20,
                    "seed": 3,
                    "downsample_long_edge": 96,
                },
                "name": "smoke",
            },
            timeout=30.0,
        )
        assert job.status_code == 200
        job_id = job.json()["job_id"]
        view = None
        for _ in range(1200):
            view = httpx.get(f"{base}/api/fit/{job_id}", timeout=10.0).json()
            if view["state"] in ("done", "failed"):
                break
            time.sleep(0.1)
        assert view and view["state"] == "done", view

        put = httpx.put(
            f"{base}/api/presets/smoke",
            content=json.dumps(view["result"]).encode(),
            timeout=10.0,
        )
        assert put.status_code == 201

        content = textured_image(80, 96, seed=15)
        render = httpx.post(
            f"{base}/api/render",
            files={"file": ("c.png", encode_png(content, 8), "image/png")},
            data={"preset_name": "smoke", "mode": "absolute"},
            timeout=60.0,
        )
        assert render.status_code == 200
        rendered = decode_image(render.content)
        assert rendered.shape == content.shape

        # fitted exposure should land near +0.3, so the render is brighter
        # than the neutralized content
        assert luminance(rendered).mean() > luminance(neutralize(content)).mean() + 0.05
        ok = True
    finally:
        server.should_exit = True
        thread.join(timeout=10)
    report("service-contract", ok)
    assert ok
