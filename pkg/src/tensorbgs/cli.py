"""Command line pipeline: synth -> sense -> solve -> evaluate, plus a
bench command that sweeps sampling ratios and models into one table."""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .io import (load_mask, load_measurements, load_volume, save_mask,
                 save_measurements, save_volume)
from .metrics import evaluate_volumes
from .patches import PatchGeometry
from .sensing import MODES, make_operator
from .solver import (DIAGNOSTIC_FIELDS, SolverDiverged, SolverParams,
                     solve_h, solve_pg)
from .synth import SynthSpec, synth_generate

MODELS = ("h", "pg")


def parse_ratio(text):
    """Sampling ratio given as a decimal ("0.2") or a fraction ("1/5")."""
    try:
        if "/" in text:
            num, den = text.split("/")
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad ratio {text!r}") from exc
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"ratio {text!r} not in (0, 1]")
    return value


def params_from_dict(doc):
    """SolverParams from a JSON-style dict; lists become tuples and a
    geometry sub-dict becomes a PatchGeometry."""
    known = SolverParams.__dataclass_fields__
    unknown = set(doc) - set(known)
    if unknown:
        raise ValueError(f"unknown solver config fields: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key == "geometry":
            value = PatchGeometry(**value)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return SolverParams(**kwargs)


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _cmd_synth(args):
    spec = SynthSpec(height=args.height, width=args.width, frames=args.frames,
                     seed=args.seed)
    volume, background, mask = synth_generate(spec)
    extra = {"seed": spec.seed}
    _ensure_parent(args.out)
    save_volume(args.out, volume, extra=extra)
    if args.gt_bg:
        _ensure_parent(args.gt_bg)
        save_volume(args.gt_bg, background, extra=extra)
    if args.gt_mask:
        _ensure_parent(args.gt_mask)
        save_mask(args.gt_mask, mask, extra=extra)
    return 0


def _cmd_sense(args):
    volume, _ = load_volume(args.inp)
    op = make_operator(volume.shape, args.ratio, args.seed, args.mode)
    y = op.apply(volume)
    _ensure_parent(args.out)
    save_measurements(args.out, y, op)
    return 0


def _load_params(args):
    if args.config:
        with open(args.config) as fh:
            params = params_from_dict(json.load(fh))
    else:
        params = SolverParams()
    if args.lam is not None:
        params.lam = args.lam
    if args.r3 is not None:
        params.r3 = args.r3
    return params


def _write_diagnostics(path, diagnostics):
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(DIAGNOSTIC_FIELDS)
        for row in diagnostics:
            out.writerow([repr(row[k]) if isinstance(row[k], float) else row[k]
                          for k in DIAGNOSTIC_FIELDS])


def _cmd_solve(args):
    ms = load_measurements(args.meas)
    op = make_operator(ms.dims, ms.ratio, ms.seed, ms.mode)
    params = _load_params(args)
    solve = solve_h if args.model == "h" else solve_pg
    result = solve(ms.y, op, params)
    prefix = args.out_prefix
    _ensure_parent(prefix + "x0.tvol")
    for name in ("x0", "x1", "x2", "e"):
        save_volume(prefix + name + ".tvol", getattr(result, name))
    if args.diagnostics:
        _write_diagnostics(args.diagnostics, result.diagnostics)
    return 0


def _cmd_evaluate(args):
    recon, _ = load_volume(args.recon)
    fg, _ = load_volume(args.fg)
    truth, _ = load_volume(args.truth)
    gt_mask, _ = load_mask(args.gt_mask)
    kwargs = {}
    if args.gt_bg:
        gt_bg, _ = load_volume(args.gt_bg)
        # background estimate: recovered volume minus its foreground
        kwargs = {"gt_bg": gt_bg, "recon_bg": recon - fg}
    report = evaluate_volumes(recon, truth, fg=fg, gt_mask=gt_mask, **kwargs)
    _ensure_parent(args.out)
    if args.out.endswith(".json"):
        report.to_json(args.out)
    else:
        report.to_csv(args.out)
    return 0


def _cmd_bench(args):
    with open(args.spec) as fh:
        spec = SynthSpec.from_dict(json.load(fh))
    volume, _, mask = synth_generate(spec)
    ratios = [(tok, parse_ratio(tok)) for tok in args.ratios.split(",")]
    models = args.models.split(",")
    for model in models:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
    rows = []
    for token, ratio in ratios:
        op = make_operator(volume.shape, ratio, spec.seed, "frame")
        y = op.apply(volume)
        for model in models:
            solve = solve_h if model == "h" else solve_pg
            result = solve(y, op, SolverParams())
            report = evaluate_volumes(result.x0, volume, fg=result.x2,
                                      gt_mask=mask)
            rows.append([token, model, repr(report.means["psnr"]),
                         repr(report.means["ssim"]),
                         repr(report.means["f_measure"])])
    _ensure_parent(args.out)
    with open(args.out, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["ratio", "model", "psnr", "ssim", "f_measure"])
        out.writerows(rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tensorbgs",
        description="Background subtraction from compressive video measurements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="composite volume (.tvol)")
    p.add_argument("--gt-bg", help="optional background volume output")
    p.add_argument("--gt-mask", help="optional foreground mask output")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("sense", help="take compressive measurements")
    p.add_argument("--in", dest="inp", required=True, help="input volume")
    p.add_argument("--ratio", type=parse_ratio, required=True)
    p.add_argument("--mode", choices=MODES, default="frame")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="measurement file (.tcm)")
    p.set_defaults(func=_cmd_sense)

    p = sub.add_parser("solve", help="recover and separate the volume")
    p.add_argument("--meas", required=True, help="measurement file (.tcm)")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--r3", type=int, default=None)
    p.add_argument("--config", help="solver parameter overrides (JSON)")
    p.add_argument("--out-prefix", required=True,
                   help="prefix for x0/x1/x2/e .tvol outputs")
    p.add_argument("--diagnostics", help="per-iteration diagnostics CSV")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("evaluate", help="score a reconstruction")
    p.add_argument("--recon", required=True, help="recovered volume x0")
    p.add_argument("--fg", required=True, help="recovered foreground x2")
    p.add_argument("--truth", required=True, help="ground-truth volume")
    p.add_argument("--gt-mask", required=True, help="ground-truth mask")
    p.add_argument("--gt-bg", help="optional ground-truth background")
    p.add_argument("--out", required=True, help="report (.csv or .json)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bench", help="sweep ratios x models into a table")
    p.add_argument("--spec", required=True, help="synthetic spec (JSON)")
    p.add_argument("--ratios", required=True, help="comma list, e.g. 1/5,1/10")
    p.add_argument("--models", required=True, help="comma list from h,pg")
    p.add_argument("--out", required=True, help="summary table (.csv)")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverDiverged as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
