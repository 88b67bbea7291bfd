"""End-to-end clip analysis, report files and long-term aggregation."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, timezone
from pathlib import Path
from statistics import median
from typing import Optional, Sequence

import numpy as np

from .detection import DetectorParams, ExtremumKind, StepDetectionResult, detect_steps
from .errors import ConfigError, GaitError, NoStepsDetected, TooFewFrames
from .filtering import (FilterParams, filter_dimensions, filter_temporal, repair_gaps,
                        select_track)
from .ingestion import back_project_sequence, load_camera_config, load_sequences
from .metrics import GaitReport, gait_report_from_detection
from .model import PoseSequence, foot_positions, points_to_array

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ("kinect-skeleton", "pose-jsonl")
STEP_COLUMNS = ("event_index", "frame", "time_s", "foot", "stride_m", "swing_time_s")


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple = ()
    input_format: Optional[str] = None
    detector: DetectorParams = DetectorParams()
    filters: FilterParams = FilterParams()
    camera: Optional[str] = None
    out_dir: Optional[str] = None
    emit_plots: bool = False
    frame_rate_hz: Optional[float] = None
    track: Optional[str] = None
    width_source: str = "raw"
    period: str = "day"
    jobs: int = 1

    def __post_init__(self):
        if self.input_format is not None and self.input_format not in FORMATS:
            raise ConfigError(f"input format must be one of {FORMATS}, got {self.input_format!r}")
        if self.period not in ("day", "week"):
            raise ConfigError(f"period must be 'day' or 'week', got {self.period!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        """Build from a JSON document; ``detector`` and ``filter`` are nested objects."""
        doc = dict(doc)
        try:
            det = DetectorParams(**doc.pop("detector", {}))
            filt = FilterParams(**doc.pop("filter", {}))
            if "inputs" in doc:
                doc["inputs"] = tuple(doc["inputs"])
            return cls(detector=det, filters=filt, **doc)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["inputs"] = list(self.inputs)
        d["detector"] = asdict(self.detector)
        d["filter"] = asdict(d.pop("filters"))
        return d


@dataclass
class ClipAnalysis:
    source: str
    report: GaitReport
    detection: Optional[StepDetectionResult]
    sequence: PoseSequence
    outputs: list = field(default_factory=list)

    @property
    def start_time(self) -> Optional[float]:
        return self.sequence.frames[0].timestamp if len(self.sequence) else None


# -- report serialization ------------------------------------------------------

def _num(x):
    return None if x is None else float(x)


def report_to_dict(report: GaitReport, detection: Optional[StepDetectionResult], source: str,
                   frame_indices=None) -> dict:
    """Report JSON document (schema 1); absent parameters become null."""
    steps = []
    prev_time = None
    for k, e in enumerate(report.events):
        frame = int(frame_indices[e.frame]) if frame_indices is not None else e.frame
        steps.append({
            "event_index": k,
            "frame": frame,
            "time_s": e.time,
            "foot": str(e.foot),
            "stride_m": e.separation,
            "swing_time_s": None if prev_time is None else e.time - prev_time,
            "flagged": e.flagged,
        })
        prev_time = e.time
    doc = {"schema": SCHEMA_VERSION, "source": source, "n_steps": report.n_steps}
    doc.update({k: _num(v) for k, v in report.parameters().items()})
    doc["steps"] = steps
    doc["detector"] = {
        "alpha": None if detection is None else detection.alpha,
        "kernel_width": None if detection is None else detection.kernel_width,
        "range_r": None if detection is None else detection.range_r,
        "threshold_theta": None if detection is None else detection.threshold_theta,
    }
    return doc


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_report(path) -> dict:
    """Read and sanity-check a report JSON file written by :func:`write_outputs`."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported report schema {doc.get('schema')!r}")
    missing = {"source", "n_steps", "steps", "detector", *GaitReport.FIELDS} - set(doc)
    if missing:
        raise ValueError(f"{path}: report lacks {sorted(missing)}")
    return doc


def steps_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_COLUMNS)
    for s in doc["steps"]:
        w.writerow(["" if s[c] is None else s[c] for c in STEP_COLUMNS])
    return buf.getvalue()


def read_steps_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({
            "event_index": int(r["event_index"]),
            "frame": int(r["frame"]),
            "time_s": float(r["time_s"]),
            "foot": r["foot"],
            "stride_m": float(r["stride_m"]),
            "swing_time_s": float(r["swing_time_s"]) if r["swing_time_s"] else None,
        })
    return out


# -- plots -----------------------------------------------------------------------

def distance_svg(detection: StepDetectionResult, title: str = "", width: int = 800,
                 height: int = 300) -> str:
    """SVG of the raw and smoothed feet distance with the detected extrema marked."""
    sig = detection.signal
    if sig is None:
        raise ValueError("detection result carries no signal to plot")
    t, raw, sm = sig.timestamps, sig.raw, sig.smoothed
    pad_l, pad_r, pad_t, pad_b = 50, 10, 25, 30
    t0, t1 = float(t[0]), float(t[-1])
    top = float(max(raw.max(), sm.max())) or 1.0
    span_t = (t1 - t0) or 1.0

    def px(i, v):
        x = pad_l + (float(t[i]) - t0) / span_t * (width - pad_l - pad_r)
        y = height - pad_b - float(v) / top * (height - pad_t - pad_b)
        return f"{x:.2f},{y:.2f}"

    def line(values, colour, w):
        pts = " ".join(px(i, v) for i, v in enumerate(values))
        return f'<polyline fill="none" stroke="{colour}" stroke-width="{w}" points="{pts}"/>'

    def marker(e, colour, fill):
        x, y = px(e.frame, sm[e.frame]).split(",")
        return f'<circle cx="{x}" cy="{y}" r="4" stroke="{colour}" fill="{fill}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{_escape(title)}</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" y2="{height - pad_b}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>',
        f'<text x="{pad_l}" y="15" font-size="12">{_escape(title)} feet distance (m) vs time (s)</text>',
        f'<text x="5" y="{pad_t + 10}" font-size="10">{top:.3f}</text>',
        f'<text x="{pad_l}" y="{height - 10}" font-size="10">{t0:.2f}</text>',
        f'<text x="{width - pad_r - 40}" y="{height - 10}" font-size="10">{t1:.2f}</text>',
        line(raw, "#999999", 1),
        line(sm, "#1f5fbf", 2),
    ]
    for e in detection.extrema:
        colour = "#c0392b" if e.kind is ExtremumKind.MAX else "#27ae60"
        parts.append(marker(e, colour, colour))
    if detection.dropped_first is not None:
        parts.append(marker(detection.dropped_first, "#555555", "none"))
    for a, b in detection.removed_pairs:
        parts.append(marker(a, "#e67e22", "none"))
        parts.append(marker(b, "#e67e22", "none"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# -- analysis ----------------------------------------------------------------------

def _prepare(config: RunConfig, path) -> PoseSequence:
    seqs = load_sequences(path, config.input_format, config.frame_rate_hz)
    if config.camera:
        intr, extr = load_camera_config(config.camera)
        seqs = [back_project_sequence(s, intr, extr) for s in seqs]
    p = config.filters
    if p.use_dimension:
        seqs = [filter_dimensions(s, p) for s in seqs]
    if p.use_temporal:
        tracks = filter_temporal(seqs, p)
    else:
        tracks = [s for s in seqs if len(s)]
    if not tracks:
        raise TooFewFrames(f"{path}: no skeleton frames survived filtering")
    seq = select_track(tracks, config.track)
    return repair_gaps(seq, p).sequence


def analyze(config: RunConfig, path) -> ClipAnalysis:
    """Filter, detect and measure one input file; write outputs when ``out_dir`` is set.

    Clips without enough steps are a normal outcome and produce a report with
    ``n_steps`` 0 and null parameters. Parse and detector errors propagate
    with the input path in the message.
    """
    path = str(path)
    try:
        seq = _prepare(config, path)
        params = config.detector
        try:
            detection = detect_steps(seq, params, config.filters.min_confidence)
        except NoStepsDetected as exc:
            detection = exc.result
            report = GaitReport()
        else:
            left, right = foot_positions(seq, min_confidence=config.filters.min_confidence)
            report = gait_report_from_detection(
                detection, points_to_array(left), points_to_array(right),
                plane=params.plane, width_source=config.width_source)
    except GaitError as exc:
        if path not in str(exc):
            exc.args = (f"{path}: {exc}",) + exc.args[1:]
        raise
    clip = ClipAnalysis(path, report, detection, seq)
    if config.out_dir:
        write_outputs(clip, config.out_dir, config.emit_plots)
    return clip


def write_outputs(clip: ClipAnalysis, out_dir, emit_plots: bool = False) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = Path(clip.source).stem
    doc = report_to_dict(clip.report, clip.detection, Path(clip.source).name,
                         clip.sequence.frame_indices)
    written = [out / f"{name}.report.json", out / f"{name}.steps.csv"]
    written[0].write_text(dumps_report(doc), encoding="utf-8")
    written[1].write_text(steps_csv(doc), encoding="utf-8")
    if emit_plots and clip.detection is not None and clip.detection.signal is not None:
        svg = out / f"{name}.distance.svg"
        svg.write_text(distance_svg(clip.detection, name), encoding="utf-8")
        written.append(svg)
    clip.outputs = [str(p) for p in written]
    return clip.outputs


# -- long-term aggregation ------------------------------------------------------------

@dataclass(frozen=True)
class PeriodStats:
    period: str
    clip_count: int
    step_count: int
    median_speed_mps: Optional[float]
    mean_speed_mps: Optional[float]
    mean_asymmetry_index: Optional[float]


@dataclass(frozen=True)
class LongTermSummary:
    periods: tuple
    trend_slope_mps_per_day: Optional[float]
    clips: tuple = ()
    failures: tuple = ()

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "periods": [asdict(p) for p in self.periods],
            "trend_slope_mps_per_day": self.trend_slope_mps_per_day,
            "clips": list(self.clips),
            "failures": list(self.failures),
        }


def period_key(timestamp: float, period: str = "day") -> str:
    """Calendar bucket of an epoch timestamp (UTC)."""
    d = datetime.fromtimestamp(timestamp, tz=timezone.utc).date()
    if period == "week":
        y, w, _ = d.isocalendar()
        return f"{y}-W{w:02d}"
    return d.isoformat()


def _period_start(key: str) -> date:
    if "-W" in key:
        y, w = key.split("-W")
        return date.fromisocalendar(int(y), int(w), 1)
    return date.fromisoformat(key)


def speed_trend(day_offsets: Sequence[float], speeds: Sequence[float]) -> Optional[float]:
    """Least-squares slope of speed against day; None with fewer than two distinct days."""
    x = np.asarray(day_offsets, dtype=float)
    y = np.asarray(speeds, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0:
        return None
    xc = x - x.mean()
    return float((xc * (y - y.mean())).sum() / (xc * xc).sum())


def _mean(xs):
    return math.fsum(xs) / len(xs) if xs else None


def summarize(rows: Sequence[dict], period: str = "day", failures=()) -> LongTermSummary:
    """Aggregate per-clip rows (keys: source, start_time, n_steps, speed_mps, asymmetry_index)."""
    rows = sorted(rows, key=lambda r: r["source"])
    buckets = {}
    for r in rows:
        buckets.setdefault(period_key(r["start_time"], period), []).append(r)
    periods = []
    for key in sorted(buckets):
        rs = buckets[key]
        speeds = [r["speed_mps"] for r in rs if r["speed_mps"] is not None]
        asym = [r["asymmetry_index"] for r in rs if r["asymmetry_index"] is not None]
        periods.append(PeriodStats(
            period=key,
            clip_count=len(rs),
            step_count=sum(r["n_steps"] for r in rs),
            median_speed_mps=float(median(speeds)) if speeds else None,
            mean_speed_mps=_mean(speeds),
            mean_asymmetry_index=_mean(asym),
        ))
    with_speed = [p for p in periods if p.mean_speed_mps is not None]
    slope = None
    if with_speed:
        origin = _period_start(with_speed[0].period)
        x = [(_period_start(p.period) - origin).days for p in with_speed]
        slope = speed_trend(x, [p.mean_speed_mps for p in with_speed])
    return LongTermSummary(tuple(periods), slope, tuple(rows), tuple(failures))


def summary_csv(summary: LongTermSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = [f.name for f in fields(PeriodStats)]
    w.writerow(cols)
    for p in summary.periods:
        w.writerow(["" if getattr(p, c) is None else getattr(p, c) for c in cols])
    return buf.getvalue()


def _clip_row(clip: ClipAnalysis) -> dict:
    rep = clip.report
    return {
        "source": clip.source,
        "start_time": clip.start_time,
        "n_steps": rep.n_steps,
        "speed_mps": rep.speed_mps,
        "asymmetry_index": rep.asymmetry_index,
    }


def _analyze_row(args):
    config, path = args
    try:
        return _clip_row(analyze(config, path)), None
    except (GaitError, OSError) as exc:
        return None, {"source": str(path), "error": type(exc).__name__, "message": str(exc)}


def batch(config: RunConfig) -> LongTermSummary:
    """Analyze every input and aggregate by calendar period.

    Per-clip failures are collected, not raised. Writes ``summary.json`` and
    ``summary.csv`` to ``out_dir`` when set. The result does not depend on
    input order or on ``jobs``.
    """
    paths = sorted({str(p) for p in config.inputs})
    work = [(config, p) for p in paths]
    if config.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_analyze_row, work))
    else:
        results = [_analyze_row(w) for w in work]
    rows = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    for f in failures:
        log.warning("%s failed: %s", f["source"], f["message"])
    summary = summarize(rows, config.period, failures)
    if config.out_dir:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n",
                                          encoding="utf-8")
        (out / "summary.csv").write_text(summary_csv(summary), encoding="utf-8")
    return summary
