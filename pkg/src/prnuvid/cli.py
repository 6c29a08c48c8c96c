"""Command-line front end: mask extraction, fingerprinting, matching,
synthetic corpus generation, and scenario evaluation.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 unsupported
stream feature, 4 internal error. Every run echoes its effective
configuration so results are replayable from the log alone.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import evalharness
from .codecsim import SensorModel, SimCodecParams, simulate_device
from .errors import (
    FormatError,
    ParseError,
    PrnuVidError,
    RejectedInputError,
    UnsupportedEntropyError,
    UnsupportedFeatureError,
)
from .fingerprint import load_fingerprint, save_fingerprint
from .formats import atomic_write
from .h264.masks import build_masks, mask_stats, save_masks
from .h264.parser import analyze_file
from .h264.trace import emit_trace, ingest_trace
from .matcher import PceParams, link_videos
from .noise import DenoiseParams
from .y4m import write_y4m

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UNSUPPORTED = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(value):
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return v


def _positive_float(value):
    v = float(value)
    if not math.isfinite(v) or v <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not a positive number")
    return v


def _finite_float(value):
    v = float(value)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{value} is not finite")
    return v


def build_parser():
    parser = _Parser(
        prog="prnuvid",
        description="PRNU-based source device attribution for H.264 video",
    )
    parser.add_argument(
        "--config",
        help="key=value file supplying defaults for the chosen command",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", parents=[], help="extract residual masks")
    p.add_argument("input", help="H.264 elementary stream or MP4 file")
    p.add_argument("--trace", help="residual trace file (bypasses parsing)")
    p.add_argument("-o", "--output", required=True, help="mask file to write")

    p = sub.add_parser("fingerprint", help="estimate a video fingerprint")
    p.add_argument("frames", help="YUV4MPEG2 decoded-frame file")
    p.add_argument("--method", choices=evalharness.METHODS, default="c2")
    p.add_argument("--masks", default="",
                   help="mask file (required for c1 and block methods)")
    p.add_argument("--sigma0-sq", type=_positive_float, default=9.0,
                   help="denoiser noise-variance parameter")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("match", help="match two fingerprints")
    p.add_argument("fingerprint_a")
    p.add_argument("fingerprint_b")
    p.add_argument("--tau", type=_finite_float, default=50.0)
    p.add_argument("--half-width", type=_positive_int, default=5,
                   help="half width of the peak exclusion region")
    p.add_argument("--free-search", action="store_true",
                   help="search all shifts instead of the aligned peak")

    p = sub.add_parser("evaluate", help="run a scenario over a corpus manifest")
    p.add_argument("manifest")
    p.add_argument("--scenario", type=int, choices=sorted(evalharness.SCENARIOS),
                   required=True)
    p.add_argument("--method", action="append", choices=evalharness.METHODS,
                   help="repeatable; default evaluates c1, c2, and block")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("-o", "--output", required=True, help="report directory")

    p = sub.add_parser("synth", help="generate a synthetic evaluation corpus")
    p.add_argument("--devices", type=_positive_int, default=2)
    p.add_argument("--videos-per-device", type=_positive_int, default=2)
    p.add_argument("--frames", type=_positive_int, default=50)
    p.add_argument("--qp", type=_positive_float, default=16.0)
    p.add_argument("--size", type=_positive_int, default=64,
                   help="square frame side in pixels (multiple of 4)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    return parser


def _load_config(path, parser, command):
    """Read key=value defaults; keys must be valid options of the command."""
    sub_actions = next(
        a for a in parser._actions
        if isinstance(a, argparse._SubParsersAction)
    )
    cmd_parser = sub_actions.choices[command]
    valid = {a.dest for a in cmd_parser._actions if a.dest != "help"}
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            dest = key.replace("-", "_")
            if dest not in valid:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            config[dest] = value
    # route values back through each option's type check
    for action in cmd_parser._actions:
        if action.dest in config:
            value = config[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                config[action.dest] = value.lower() in ("1", "true", "yes")
            elif action.type is not None:
                try:
                    config[action.dest] = action.type(value)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"{path}: key {action.dest}: {exc}")
            if action.choices and config[action.dest] not in action.choices:
                raise UsageError(
                    f"{path}: key {action.dest}: {value!r} not in "
                    f"{sorted(action.choices)}"
                )
    cmd_parser.set_defaults(**config)


def _echo_config(args, out):
    items = sorted(
        (k, v) for k, v in vars(args).items() if k != "config"
    )
    lines = [f"{k}={v}" for k, v in items]
    for line in lines:
        print(f"config {line}", file=out)
    return "\n".join(lines) + "\n"


def _write_config_echo(text, target):
    """Persist the effective configuration next to the command's output."""
    if os.path.isdir(target):
        path = os.path.join(target, "effective-config.txt")
    else:
        path = target + ".cfg"
    atomic_write(path, text.encode("utf-8"))


def cmd_mask(args):
    if args.trace:
        # the stream itself may be CABAC-coded; trust the trace alone
        maps = ingest_trace(args.trace)
    else:
        _, maps = analyze_file(args.input)
    masks = build_masks(maps)
    save_masks(masks, args.output)
    per_frame, agg = mask_stats(masks)
    print(f"frames={len(masks)} coverage_mean={agg['mean']:.4f} "
          f"coverage_min={agg['min']:.4f} coverage_max={agg['max']:.4f}")
    return EXIT_OK


def cmd_fingerprint(args):
    params = DenoiseParams(sigma0_sq=args.sigma0_sq)
    fp = evalharness.estimate_video_fingerprint(
        args.frames, args.method, mask_path=args.masks, denoise_params=params
    )
    save_fingerprint(fp, args.output)
    print(f"frames_used={fp.frames_used}")
    if not np.any(fp.plane):
        print("warning: fingerprint is identically zero "
              "(no mask coverage?)", file=sys.stderr)
    return EXIT_OK


def cmd_match(args):
    fp_a = load_fingerprint(args.fingerprint_a)
    fp_b = load_fingerprint(args.fingerprint_b)
    params = PceParams(
        exclusion_half_width=args.half_width,
        aligned_mode=not args.free_search,
    )
    result = link_videos(fp_a, fp_b, params=params, tau=args.tau)
    print(f"pce={result.pce:.12g} decision={result.decision}")
    return EXIT_OK


def cmd_evaluate(args):
    manifest = evalharness.load_manifest(args.manifest)
    methods = args.method or list(evalharness.METHODS)
    reports, rows, failures = evalharness.evaluate(
        manifest, args.scenario, methods, args.output,
        cache_dir=args.cache_dir,
    )
    for r in reports:
        print(f"scenario={r.scenario_id} method={r.method} "
              f"resolution={r.resolution_class} auc={r.auc:.4f} "
              f"matching={r.n_matching} nonmatching={r.n_nonmatching}")
    if failures:
        print(f"failures={len(failures)}", file=sys.stderr)
        for ref, query, message in failures:
            print(f"failed pair {ref} vs {query}: {message}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args):
    if args.size % 4:
        raise RejectedInputError("--size must be a multiple of 4")
    os.makedirs(args.output, exist_ok=True)
    res_class = f"{args.size}p"
    manifest_rows = []
    for dev in range(args.devices):
        model = SensorModel(
            height=args.size, width=args.size,
            seed=args.seed * 1000 + dev,
        )
        for vid in range(args.videos_per_device):
            params = SimCodecParams(qp=args.qp, seed=args.seed)
            stream = simulate_device(
                model, params, args.frames,
                scene_seed=(args.seed, dev, vid),
            )
            stem = os.path.join(args.output, f"dev{dev}_vid{vid}")
            write_y4m(stem + ".y4m", stream.decoded_frames)
            save_masks(stream.ground_truth_masks, stem + ".prnumk")
            emit_trace(stream.residual_maps, stem + ".trace")
            manifest_rows.append(
                [stem + ".y4m", stem + ".prnumk", f"device{dev}",
                 "natural", "youtube", "still", res_class]
            )
    manifest_path = os.path.join(args.output, "manifest.csv")
    atomic_write(
        manifest_path,
        evalharness._csv_bytes(evalharness.MANIFEST_HEADER, manifest_rows),
    )
    print(f"manifest={manifest_path} devices={args.devices} "
          f"videos={len(manifest_rows)}")
    return EXIT_OK


_COMMANDS = {
    "mask": cmd_mask,
    "fingerprint": cmd_fingerprint,
    "match": cmd_match,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _load_config(args.config, parser, args.command)
            args = parser.parse_args(argv)
        echo = _echo_config(args, sys.stdout)
        code = _COMMANDS[args.command](args)
        target = getattr(args, "output", None)
        if target:
            _write_config_echo(echo, target)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedEntropyError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        print("remedy: produce a PRNUTRACE residual trace with an "
              "instrumented decoder and pass it via --trace", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except UnsupportedFeatureError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (FormatError, ParseError, RejectedInputError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PrnuVidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit-code mapping
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
