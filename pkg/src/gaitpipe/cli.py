"""Command-line entry point: ``gaitpipe {analyze,batch,synth,eval}``.

Exit codes: 0 success (clips without steps included), 1 usage or
configuration error, 2 every input failed.
"""
from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, GaitError
from .evaluation import Clip, evaluate
from .ingestion import serialize_kinect_skeleton, serialize_pose_jsonl
from .model import vertical_axis
from .reporting import FORMATS, RunConfig, analyze, batch, dumps_report, report_to_dict
from .synth import GaitScenario, generate, stick_figure

EXIT_OK, EXIT_USAGE, EXIT_ALL_FAILED = 0, 1, 2

log = logging.getLogger("gaitpipe")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p):
    p.add_argument("--config", help="JSON run configuration; flags override its values")
    p.add_argument("--format", dest="input_format", choices=FORMATS)
    p.add_argument("--alpha", type=float, help="false-extrema threshold fraction (default 0.2)")
    p.add_argument("--kernel-width", type=int, help="smoothing window in frames, odd (default 5)")
    p.add_argument("--plane", help="ground-plane axes, e.g. xy or xz (default xy)")
    p.add_argument("--min-steps", type=int, help="fewer steps means a non-walking clip (default 2)")
    p.add_argument("--camera", help="camera JSON; input x/y/z are then pixel u/v and depth")
    p.add_argument("--frame-rate", type=float, dest="frame_rate_hz")
    p.add_argument("--track", help="track id to analyze (default: longest)")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--plots", dest="emit_plots", action="store_true", default=None,
                   help="also write <name>.distance.svg")


def build_parser():
    parser = _Parser(prog="gaitpipe", description="Step detection and gait parameters "
                     "from 3D skeleton sequences.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="analyze one skeleton file")
    p.add_argument("input")
    _add_run_options(p)

    p = sub.add_parser("batch", help="analyze many files and aggregate by day")
    p.add_argument("inputs", nargs="+", help="files or glob patterns")
    _add_run_options(p)
    p.add_argument("--period", choices=("day", "week"))
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("synth", help="generate synthetic walking clips with ground truth")
    p.add_argument("scenario", help="JSON object or list of scenario objects")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default="pose-jsonl")

    p = sub.add_parser("eval", help="score predicted steps against ground truth")
    p.add_argument("pairs", nargs="+", help="PRED.json,TRUTH.json")
    p.add_argument("--out")
    p.add_argument("--frame-rate", type=float, default=None,
                   help="used when the truth file has no frame_rate_hz (default 30)")
    return parser


def _run_config(args, inputs) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    det = cfg.detector
    overrides = {k: getattr(args, a) for k, a in (
        ("alpha", "alpha"), ("kernel_width", "kernel_width"), ("plane", "plane"),
        ("min_steps", "min_steps")) if getattr(args, a) is not None}
    try:
        det = replace(det, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    filters = cfg.filters
    if args.plane is not None:
        filters = replace(filters, vertical_axis="xyz"[vertical_axis(args.plane)])
    changes = {"detector": det, "filters": filters, "inputs": tuple(inputs) or cfg.inputs}
    for name in ("input_format", "camera", "frame_rate_hz", "track", "out_dir", "emit_plots",
                 "period", "jobs"):
        v = getattr(args, name, None)
        if v is not None:
            changes[name] = v
    return replace(cfg, **changes)


def _expand(patterns):
    paths = []
    for pat in patterns:
        hits = sorted(glob.glob(pat, recursive=True))
        if hits:
            paths.extend(hits)
        elif Path(pat).exists():
            paths.append(pat)
    return [p for p in paths if Path(p).is_file()]


def cmd_analyze(args):
    cfg = _run_config(args, [args.input])
    try:
        clip = analyze(cfg, args.input)
    except (GaitError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ALL_FAILED
    doc = report_to_dict(clip.report, clip.detection, Path(clip.source).name,
                         clip.sequence.frame_indices)
    sys.stdout.write(dumps_report(doc))
    return EXIT_OK


def cmd_batch(args):
    cfg = _run_config(args, _expand(args.inputs))
    if not cfg.inputs:
        log.error("no input files match %s", " ".join(args.inputs))
        return EXIT_USAGE
    summary = batch(cfg)
    sys.stdout.write(json.dumps({"periods": len(summary.periods),
                                 "clips": len(summary.clips),
                                 "failures": len(summary.failures),
                                 "trend_slope_mps_per_day": summary.trend_slope_mps_per_day}) + "\n")
    if not summary.clips:
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_synth(args):
    try:
        doc = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from None
    docs = doc if isinstance(doc, list) else [doc]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for d in docs:
        sc = GaitScenario.from_dict(d)
        seq, truth = generate(sc)
        if args.format == "kinect-skeleton":
            path = out / f"{sc.name}.txt"
            serialize_kinect_skeleton(stick_figure(seq, sc.heading_deg), path)
        else:
            path = out / f"{sc.name}.jsonl"
            serialize_pose_jsonl(seq, path)
        truth_doc = truth.to_dict()
        truth_doc["scenario"] = sc.to_dict()
        (out / f"{sc.name}.truth.json").write_text(json.dumps(truth_doc, indent=2) + "\n",
                                                   encoding="utf-8")
        sys.stdout.write(f"{path}\n")
    return EXIT_OK


def _predicted_frames(doc):
    if "steps" in doc:
        return [s["frame"] for s in doc["steps"]]
    if "step_frames" in doc:
        return list(doc["step_frames"])
    raise ConfigError("prediction JSON needs 'steps' (report) or 'step_frames'")


def cmd_eval(args):
    clips = []
    for pair in args.pairs:
        try:
            pred_path, truth_path = pair.split(",")
        except ValueError:
            raise ConfigError(f"expected PRED,TRUTH but got {pair!r}") from None
        try:
            pred = json.loads(Path(pred_path).read_text(encoding="utf-8"))
            truth = json.loads(Path(truth_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(str(exc)) from None
        fps = truth.get("frame_rate_hz") or args.frame_rate or 30.0
        clips.append(Clip(Path(pred_path).stem, _predicted_frames(pred), truth["step_frames"], fps))
    result = evaluate(clips)
    doc = result.to_dict()
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(text, encoding="utf-8")
        (out / "eval.csv").write_text(eval_csv(result), encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def eval_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["clip_id", "predicted_count", "true_count", "count_correct",
                "mean_frame_error", "unmatched"])
    for c in result.per_clip:
        mean = sum(c.frame_errors) / len(c.frame_errors) if c.frame_errors else ""
        w.writerow([c.clip_id, c.predicted_count, c.true_count, int(c.count_correct), mean,
                    len(c.unmatched_predicted) + len(c.unmatched_truth)])
    return buf.getvalue()


COMMANDS = {"analyze": cmd_analyze, "batch": cmd_batch, "synth": cmd_synth, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
