"""Command-line interface: perturb, fit, apply, eval, serve.

Exit codes: 0 success, 1 usage error, 2 processing error. Fits are
deterministic for a fixed --seed, so repeated runs write identical preset
files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .fit import FitConfig, fit_style
from .image import ImageError, load_image, save_image
from .metrics import comparison_report, report_json, report_table
from .params import (
    ALL_CONCEPTS,
    ConceptId,
    ConceptParams,
    ConceptThresholds,
    Scalar,
    StrengthHue,
    neutral_params,
)
from .pcturb import (
    DegenerateImageError,
    PresetError,
    apply_style,
    decode_preset,
    encode_preset,
    perturb,
)

_CONCEPT_BY_NAME = {c.name.lower(): c for c in ConceptId}
_SCALAR_NAMES = {"sharpness", "vignetting", "saturation", "exposure", "contrast"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise UsageError(message)


def parse_set_flag(raw: str) -> tuple[ConceptId, object]:
    """Parse `name=value` or `name=strength:hue` into a concept value."""
    if "=" not in raw:
        raise UsageError(f"--set expects name=value, got {raw!r}")
    name, _, payload = raw.partition("=")
    name = name.strip().lower()
    if name not in _CONCEPT_BY_NAME:
        raise UsageError(f"unknown concept {name!r}")
    concept = _CONCEPT_BY_NAME[name]
    try:
        if name in _SCALAR_NAMES:
            if ":" in payload:
                raise ValueError("scalar concepts take a single number")
            value: object = Scalar(float(payload))
        else:
            strength, _, hue = payload.partition(":")
            if not hue:
                raise ValueError("tint/highlight/shadow take strength:hue")
            value = StrengthHue(float(strength), float(hue))
        value.validate()
    except ValueError as exc:
        raise UsageError(f"bad value for {name}: {exc}") from exc
    return concept, value


def params_from_sets(flags: Sequence[str]) -> ConceptParams:
    params = neutral_params()
    for raw in flags:
        concept, value = parse_set_flag(raw)
        params = params.with_value(concept, value)
    return params


def parse_mask(raw: Optional[str]) -> frozenset:
    if raw is None:
        return ALL_CONCEPTS
    concepts = set()
    for token in raw.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token not in _CONCEPT_BY_NAME:
            raise UsageError(f"unknown concept {token!r} in --concepts")
        concepts.add(_CONCEPT_BY_NAME[token])
    return frozenset(concepts)


def _thresholds_from_args(args: argparse.Namespace) -> ConceptThresholds:
    try:
        return ConceptThresholds(
            tau_highlight=args.tau_highlight,
            tau_shadow=args.tau_shadow,
            sharpness_kernel=args.sharpness_kernel,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau-highlight", type=float, default=0.7)
    parser.add_argument("--tau-shadow", type=float, default=0.3)
    parser.add_argument("--sharpness-kernel", type=int, default=11)


def build_parser() -> _Parser:
    parser = _Parser(prog="pif", description="Parametric image filters")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="apply concept adjustments to an image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--set", dest="sets", action="append", default=[],
                   metavar="NAME=VALUE", help="e.g. exposure=0.3 or tint=0.5:0.66")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    _add_threshold_flags(p)

    p = sub.add_parser("fit", help="learn a style preset from reference images")
    p.add_argument("--refs", required=True, help="reference image file or directory")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--name", default="fitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--subset-size", type=int, default=2)
    p.add_argument("--evals", type=int, default=16)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--long-edge", type=int, default=512)
    p.add_argument("--edge-weight", type=float, default=0.1)
    p.add_argument("--quiet", action="store_true")
    _add_threshold_flags(p)

    p = sub.add_parser("apply", help="render a stored preset onto an image")
    p.add_argument("--preset", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--mode", choices=("absolute", "relative"), default="absolute")
    p.add_argument("--concepts", default=None, help="comma-separated concept mask")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)

    p = sub.add_parser("eval", help="compare two images (psnr, ssim, emd)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--json", dest="json_out", default=None,
                   help="also write the report as JSON to this path")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--workers", type=int, default=None)

    return parser


def _collect_references(refs: str) -> list:
    path = Path(refs)
    if path.is_dir():
        files = sorted(
            f for f in path.iterdir()
            if f.suffix.lower() in (".png", ".jpg", ".jpeg")
        )
        if not files:
            raise FileNotFoundError(f"no PNG/JPEG files in {path}")
    elif path.is_file():
        files = [path]
    else:
        raise FileNotFoundError(f"no such file or directory: {path}")
    return [load_image(f) for f in files]


def _cmd_perturb(args: argparse.Namespace) -> int:
    params = params_from_sets(args.sets)
    thresholds = _thresholds_from_args(args)
    img = load_image(args.input)
    out = perturb(img, params, thresholds)
    save_image(out, args.output, args.bit_depth)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    references = _collect_references(args.refs)
    config = FitConfig(
        max_outer_iterations=args.iters,
        subset_size=args.subset_size,
        line_search_evals=args.evals,
        convergence_tol=args.tol,
        seed=args.seed,
        downsample_long_edge=args.long_edge,
        loss_edge_weight=args.edge_weight,
    )
    thresholds = _thresholds_from_args(args)

    progress = None
    if not args.quiet:
        def progress(iteration: int, loss: float, _params) -> None:
            print(f"iteration {iteration:4d}  loss {loss:.6f}", file=sys.stderr)

    preset, report = fit_style(
        references, config, thresholds, progress=progress, name=args.name
    )
    Path(args.output).write_bytes(encode_preset(preset))
    if not args.quiet:
        status = "converged" if report.converged else "iteration cap reached"
        print(
            f"final loss {report.final_loss:.6f} after "
            f"{report.loss_history[-1][0]} iterations ({status}); "
            f"{report.evaluations} evaluations",
            file=sys.stderr,
        )
    return 0


def _cmd_apply(args: argparse.Namespace) -> int:
    preset = decode_preset(Path(args.preset).read_bytes())
    mask = parse_mask(args.concepts)
    content = load_image(args.input)
    out = apply_style(content, preset, mode=args.mode, mask=mask)
    save_image(out, args.output, args.bit_depth)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    a = load_image(args.a)
    b = load_image(args.b)
    report = comparison_report(a, b)
    print(report_table(report))
    if args.json_out:
        Path(args.json_out).write_text(report_json(report))
    return 0


def resolve_serve_config(
    port: Optional[int], data_dir: Optional[str], workers: Optional[int]
) -> tuple[int, str, int]:
    """Precedence: flags > PIF_* environment > defaults."""
    resolved_port = port if port is not None else int(os.environ.get("PIF_PORT", "8080"))
    resolved_dir = data_dir or os.environ.get("PIF_DATA_DIR", "./pif-data")
    resolved_workers = (
        workers
        if workers is not None
        else int(os.environ.get("PIF_WORKERS", str(os.cpu_count() or 2)))
    )
    return resolved_port, resolved_dir, resolved_workers


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    port, data_dir, workers = resolve_serve_config(args.port, args.data_dir, args.workers)
    serve(port, data_dir, workers)
    return 0


_COMMANDS = {
    "perturb": _cmd_perturb,
    "fit": _cmd_fit,
    "apply": _cmd_apply,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ImageError, PresetError, DegenerateImageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
