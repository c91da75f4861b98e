"""Worker for the acceptance recovery battery: one fit case per JSON line.

Run as: python3 recovery_helper.py '<case-json>' ...
Each case fits one synthetic reference at 512 px and prints the recovered
parameters; the parent asserts tolerances. Separate processes keep the
battery parallel without sharing numba threading state.
"""

import json
import sys
import time
import warnings

warnings.filterwarnings("ignore")


def run_case(case: dict) -> dict:
    import numpy as np  # noqa: F401

    from pif.fit import FitConfig, fit_style
    from pif.params import ConceptId, Scalar, StrengthHue, neutral_params
    from pif.pcturb import perturb
    from pif.synth import calibration_image

    anchor = calibration_image(512, 512, seed=11)
    config = FitConfig(seed=7)
    start = time.perf_counter()

    if case["kind"] == "scalar":
        concept = ConceptId[case["concept"]]
        target = case["xi"]
        ref = perturb(anchor, neutral_params().with_value(concept, Scalar(target)))
        preset, report = fit_style([ref], config)
    elif case["kind"] == "tint":
        ref = perturb(
            anchor,
            neutral_params().with_value(
                ConceptId.TINT, StrengthHue(case["strength"], case["hue"])
            ),
        )
        preset, report = fit_style([ref], config)
    elif case["kind"] == "conflict_exposure":
        refs = [
            perturb(anchor, neutral_params().with_value(ConceptId.EXPOSURE, Scalar(x)))
            for x in (case["xi"], -case["xi"])
        ]
        preset, report = fit_style(refs, config)
    elif case["kind"] == "conflict_tint":
        refs = [
            perturb(
                anchor,
                neutral_params().with_value(ConceptId.TINT, StrengthHue(s, h)),
            )
            for s, h in case["pairs"]
        ]
        preset, report = fit_style(refs, config)
    else:
        raise ValueError(case["kind"])

    p = preset.params
    return {
        "case": case,
        "seconds": time.perf_counter() - start,
        "iterations": report.loss_history[-1][0],
        "final_loss": report.final_loss,
        "params": {
            "sharpness": p.sharpness,
            "vignetting": p.vignetting,
            "saturation": p.saturation,
            "exposure": p.exposure,
            "contrast": p.contrast,
            "tint": [p.tint.strength, p.tint.hue],
            "highlight": [p.highlight.strength, p.highlight.hue],
            "shadow": [p.shadow.strength, p.shadow.hue],
        },
    }


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        print(json.dumps(run_case(json.loads(arg))), flush=True)
