"""Command-line front end.

Subcommands: design (build a filter, dump coefficient JSON, print its
moment table), apply (run a saved filter over an image), detect (blob
detection on a PGM), respond (frequency/impulse response CSVs), bench
(FIR vs IIR timing table), scene (render a synthetic ellipse image).

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import FREQ_HEADER_1D, FREQ_HEADER_2D, freq_grid, moment_table, write_csv
from .bench import run_bench, trend_report, write_bench_csv
from .blob import (calibrate_t1, detect, ellipse_grid_scene, overlay,
                   render_scene, scene_from_json)
from .design import DesignSpec, FirKernel, build
from .engine import (apply_cols, apply_rows, crop_border, impulse_response,
                     max_threads, set_threads)
from .errors import FilterError
from .pgmio import read_f32, read_pgm, write_f32, write_pgm
from .polyz import RationalTF, ThreePartIIR, load_filter, rational_to_json, save_filter


def _read_image(path: str) -> np.ndarray:
    if path.endswith(".f32"):
        return read_f32(path)
    return read_pgm(path)


def _write_image(path: str, img: np.ndarray) -> None:
    if path.endswith(".f32"):
        write_f32(path, img)
    else:
        write_pgm(path, img)


def _fir_from_rational(tf: RationalTF) -> FirKernel:
    """Reconstruct a convolution kernel from saved FIR coefficients.

    The derivative label is only metadata for moment reports; infer the
    conventional one from symmetry and dc gain.
    """
    if not tf.is_fir():
        raise ValueError("filter is not FIR")
    num = tf.num.trimmed()
    taps = tuple(float(c) for c in reversed(num.coeffs))
    if num.is_antisymmetric():
        return FirKernel(taps, "anti", 1)
    d = 0 if abs(sum(taps) - 1.0) <= 1e-9 else 2
    return FirKernel(taps, "sym", d)


def _stage_from(f):
    if isinstance(f, ThreePartIIR):
        return f
    return _fir_from_rational(f)


def _parse_threads(text: str) -> int:
    if text == "max":
        return max_threads()
    n = int(text)
    if n < 1:
        raise ValueError("threads must be >= 1 or 'max'")
    return n


def _print_moment_summary(f, order: int) -> None:
    rep = moment_table(f, order)
    cols = " ".join(f"d={d}" for d in rep.orders)
    print(f"moment table, rows l=0..{order - 1}, columns {cols}, "
          f"extent |m| <= {rep.extent}")
    for l in range(order):
        row = " ".join(f"{rep.table[l, c]: 12.6f}"
                       for c in range(rep.table.shape[1]))
        print(f"  l={l}  {row}")
    print(f"max deviation from identity: {rep.max_dev:.3e}")


def _cmd_design(args) -> int:
    spec = DesignSpec(family=args.family, sigma=args.sigma, d=args.d,
                      D=args.D, l_pi_bar=args.l_pi_bar, k=args.k,
                      cascade_mode=args.cascade_mode)
    f = build(spec)
    if isinstance(f, (list, tuple)):
        obj = {"bank": [rational_to_json(k.to_rational()) for k in f]}
        with open(args.out, "w") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")
        order = args.order or spec.D
    else:
        save_filter(args.out, f)
        order = args.order or 5
    _print_moment_summary(f, order)
    return 0


def _cmd_apply(args) -> int:
    set_threads(_parse_threads(args.threads))
    img = _read_image(args.input)
    stage = _stage_from(load_filter(args.coeff))
    if args.axis in ("x", "both"):
        img = apply_rows(img, stage)
    if args.axis in ("y", "both"):
        img = apply_cols(img, stage)
    if args.crop_border:
        img = crop_border(img, args.crop_border)
    _write_image(args.out, img)
    return 0


def _cmd_detect(args) -> int:
    set_threads(_parse_threads(args.threads))
    img = _read_image(args.input)
    t1 = args.t1
    if t1 is None:
        t1 = calibrate_t1(args.lam, args.family, args.ecc, args.polarity)
    dets = detect(img, args.lam, args.family, t1, args.t2, args.polarity)
    for det in dets:
        print(det.to_json())
    print(f"{len(dets)} detections (t1={t1:.6g})", file=sys.stderr)
    if args.overlay:
        _write_image(args.overlay, overlay(img, dets))
    return 0


def _cmd_respond(args) -> int:
    f = load_filter(args.coeff)
    header = FREQ_HEADER_1D if args.dims == 1 else FREQ_HEADER_2D
    write_csv(args.out, header, freq_grid(f, args.points, args.dims))
    if args.ir_out:
        if isinstance(f, ThreePartIIR):
            h = impulse_response(f, args.ir_half_len)
        else:
            h = np.asarray(_fir_from_rational(f).taps, dtype=np.float64)
        k = (h.size - 1) // 2
        rows = [(m, h[m + k]) for m in range(-k, k + 1)]
        write_csv(args.ir_out, ("m", "h"), rows)
    return 0


def _cmd_bench(args) -> int:
    sigmas = tuple(float(s) for s in args.sigmas.split(","))
    families = tuple(args.families.split(","))
    threads = tuple(_parse_threads(t) for t in args.threads.split(","))
    records = run_bench((args.dims, args.dims), sigmas, families,
                        threads, args.reps)
    write_bench_csv(args.out, records)
    rep = trend_report(records)
    print(f"iir time flat across sigma: {rep['iir_flat']}")
    print(f"fir time strictly increasing: {rep['fir_increasing']}")
    for nt, s in sorted(rep["speedup"].items()):
        print(f"speedup at sigma={sigmas[-1]:g}, {nt} thread(s): {s:.2f}x")
    if rep["margin_shrinks"] is not None:
        print(f"margin shrinks with threads: {rep['margin_shrinks']}")
    return 0


def _cmd_scene(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            scene = scene_from_json(json.load(fh))
    else:
        scene = ellipse_grid_scene({"ecc2": 2.0, "ecc4": 4.0}[args.preset])
    _write_image(args.out, render_scene(scene, args.supersample))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vmfilt", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build a filter and save coefficients")
    p.add_argument("--family", required=True, choices=DesignSpec.FAMILIES)
    p.add_argument("--sigma", type=float, default=0.0,
                   help="scale in pixels (blur families)")
    p.add_argument("--d", type=int, default=0, help="derivative order")
    p.add_argument("--D", type=int, default=3, help="model order (odd)")
    p.add_argument("--l-pi-bar", type=int, default=2,
                   help="Nyquist constraint count")
    p.add_argument("--k", type=int, default=None, help="FIR half-width")
    p.add_argument("--cascade-mode", default="behind_blur",
                   choices=("behind_blur", "standalone"))
    p.add_argument("--order", type=int, default=None,
                   help="moment summary depth")
    p.add_argument("--out", required=True, help="coefficient JSON path")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("apply", help="filter an image with saved coefficients")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--coeff", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--axis", default="both", choices=("x", "y", "both"))
    p.add_argument("--crop-border", type=int, default=0)
    p.add_argument("--threads", default="max")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("detect", help="scale-selective blob detection")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="blob diameter in pixels (sigma = lambda/2)")
    p.add_argument("--family", default="gaussian_fir")
    p.add_argument("--t1", type=float, default=None,
                   help="Hessian threshold (default: calibrated)")
    p.add_argument("--t2", type=float, default=None,
                   help="max sub-pixel displacement in pixels")
    p.add_argument("--ecc", type=float, default=2.0,
                   help="eccentricity of the calibration blob")
    p.add_argument("--polarity", default="dark", choices=("dark", "bright"))
    p.add_argument("--overlay", default=None, help="overlay image path")
    p.add_argument("--threads", default="max")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("respond", help="frequency/impulse response CSVs")
    p.add_argument("--coeff", required=True)
    p.add_argument("--out", required=True, help="frequency CSV path")
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--dims", type=int, default=1, choices=(1, 2))
    p.add_argument("--ir-out", default=None, help="impulse response CSV path")
    p.add_argument("--ir-half-len", type=int, default=None)
    p.set_defaults(func=_cmd_respond)

    p = sub.add_parser("bench", help="FIR vs IIR timing table")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--dims", type=int, default=2048, help="square image side")
    p.add_argument("--sigmas", default="3,6,12,24")
    p.add_argument("--families", default="gaussian_fir,repeated_pole")
    p.add_argument("--threads", default="1,max")
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("scene", help="render a synthetic ellipse image")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default="ecc2", choices=("ecc2", "ecc4"))
    p.add_argument("--spec", default=None, help="scene JSON path")
    p.add_argument("--supersample", type=int, default=4)
    p.set_defaults(func=_cmd_scene)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FilterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
