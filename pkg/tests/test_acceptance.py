"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` (or plain ``python
tests/test_acceptance.py``) to see the summary lines. Criterion 7 needs the
public UTKinect-Action3D skeletons; point ``GAITPIPE_UTKINECT`` at the
dataset root (the folder holding ``joints/`` and ``actionLabel.txt``) plus a
``step_annotations.json`` mapping clip id to the hand-counted number of steps.
"""
import contextlib
import io
import json
import math
import os
import re
import sys
import tempfile
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from gaitpipe.cli import main as cli_main  # noqa: E402
from gaitpipe.detection import (DetectorParams, detect_steps, detect_steps_from_feet,  # noqa: E402
                                smooth_uniform)
from gaitpipe.errors import NoStepsDetected  # noqa: E402
from gaitpipe.evaluation import Clip, evaluate, match_events  # noqa: E402
from gaitpipe.filtering import FilterParams  # noqa: E402
from gaitpipe.ingestion import (parse_kinect_skeleton_file, parse_pose_jsonl,  # noqa: E402
                                serialize_kinect_skeleton, serialize_pose_jsonl)
from gaitpipe.metrics import gait_report_from_detection  # noqa: E402
from gaitpipe.reporting import RunConfig, batch, report_to_dict  # noqa: E402
from gaitpipe.synth import GaitScenario, generate, scenario_grid, stick_figure  # noqa: E402

N_INVARIANCE = 100
RESULTS = {}


def verdict(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS[number] = line
    return line


def announce(line, capsys=None):
    if capsys is None:
        print(line)
        return
    with capsys.disabled():
        print("\n" + line)


def feet(seq):
    a = seq.to_array(["LeftFoot", "RightFoot"])
    return a[:, 0], a[:, 1]


def run_grid(noise):
    clips, reports = [], []
    for sc in scenario_grid(50, seed=0, noise_sigma_m=noise):
        seq, truth = generate(sc)
        try:
            res = detect_steps(seq)
            pred = res.step_frames
            left, right = feet(seq)
            reports.append((sc, truth, gait_report_from_detection(res, left, right)))
        except NoStepsDetected:
            pred = ()
        clips.append(Clip(sc.name, pred, truth.step_frames, sc.frame_rate_hz))
    return clips, reports


# -- 1 ----------------------------------------------------------------------------

def check_exactness():
    t0 = time.perf_counter()
    clips, _ = run_grid(0.0)
    elapsed = time.perf_counter() - t0
    ev = evaluate(clips)
    worst = max((max(c.frame_errors, default=0) for c in ev.per_clip), default=0)
    ok = ev.count_accuracy == 1.0 and worst <= 1 and elapsed < 5.0
    return verdict(1, "zero-noise exactness", ok,
                   f"count accuracy {ev.count_accuracy:.2f}, worst frame error {worst}, "
                   f"{elapsed:.2f} s for 50 clips")


# -- 2 ----------------------------------------------------------------------------

def check_noise():
    clips, _ = run_grid(0.01)
    ev = evaluate(clips)
    ok = ev.count_accuracy >= 0.85 and ev.mean_frame_error is not None \
        and ev.mean_frame_error <= 4.4
    return verdict(2, "noise robustness at 0.01 m", ok,
                   f"count accuracy {ev.count_accuracy:.2f} (need 0.85), mean frame error "
                   f"{ev.mean_frame_error:.3f} (need 4.4)")


# -- 3 and 4 --------------------------------------------------------------------------

def check_additivity():
    _, reports = run_grid(0.0)
    worst = 0.0
    missing = 0
    for _, _, rep in reports:
        if None in (rep.step_length_m, rep.stride_left_m, rep.stride_right_m):
            missing += 1
            continue
        total = rep.stride_left_m + rep.stride_right_m
        worst = max(worst, abs(rep.step_length_m - total) / total)
    ok = worst <= 0.02 and missing == 0 and len(reports) == 50
    return verdict(3, "step length equals left plus right stride", ok,
                   f"worst relative gap {worst:.4%} over {len(reports) - missing} clips")


def check_speed():
    _, reports = run_grid(0.0)
    worst = 0.0
    for sc, truth, rep in reports:
        commanded = sc.step_lengths[0] * sc.cadence_hz
        worst = max(worst, abs(rep.speed_mps - commanded) / commanded)
    ok = worst <= 0.05 and len(reports) == 50
    return verdict(4, "speed recovery", ok, f"worst relative error {worst:.4%}")


# -- 5 ----------------------------------------------------------------------------

def random_cases(seed):
    rng = np.random.default_rng(seed)
    for i in range(N_INVARIANCE):
        sc = GaitScenario(
            step_length_m=(float(rng.uniform(0.1, 0.8)), float(rng.uniform(0.1, 0.8))),
            cadence_hz=float(rng.uniform(0.8, 3.0)), duration_s=float(rng.uniform(3, 10)),
            stance_width_m=float(rng.uniform(0, 0.2)), noise_sigma_m=float(rng.uniform(0, 0.02)),
            heading_deg=float(rng.uniform(0, 360)), seed=seed * 1000 + i)
        yield rng, sc


LOOSE = DetectorParams(min_steps=1)


def detect_arrays(left, right, ts):
    return detect_steps_from_feet(left, right, ts, LOOSE)


def full_report(left, right, ts):
    res = detect_arrays(left, right, ts)
    return res, gait_report_from_detection(res, left, right)


def inv_scale():
    bad = 0
    for rng, sc in random_cases(501):
        seq, _ = generate(sc)
        left, right = feet(seq)
        c = float(10 ** rng.uniform(-1, 1))
        a = detect_arrays(left, right, seq.timestamps)
        b = detect_arrays(c * left, c * right, seq.timestamps)
        same = (np.allclose(b.signal.raw, c * a.signal.raw, rtol=1e-9, atol=0)
                and np.allclose(b.signal.smoothed, c * a.signal.smoothed, rtol=1e-9, atol=0)
                and math.isclose(b.range_r, c * a.range_r, rel_tol=1e-9)
                and math.isclose(b.threshold_theta, c * a.threshold_theta, rel_tol=1e-9)
                and a.step_frames == b.step_frames)
        bad += not same
    return bad


def rotate_z(points, angle, shift):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return points @ rot.T + shift


def inv_rigid():
    bad = 0
    for rng, sc in random_cases(502):
        seq, _ = generate(sc)
        left, right = feet(seq)
        angle = float(rng.uniform(0, 2 * math.pi))
        shift = np.array([*rng.uniform(-10, 10, 2), float(rng.uniform(-1, 1))])
        _, ra = full_report(left, right, seq.timestamps)
        _, rb = full_report(rotate_z(left, angle, shift), rotate_z(right, angle, shift),
                            seq.timestamps)
        pa, pb = ra.parameters(), rb.parameters()
        same = ra.n_steps == rb.n_steps and all(
            (pa[k] is None and pb[k] is None) or
            (pa[k] is not None and pb[k] is not None and abs(pa[k] - pb[k]) <= 1e-9) for k in pa)
        bad += not same
    return bad


def inv_time_shift():
    bad = 0
    for rng, sc in random_cases(503):
        seq, _ = generate(sc)
        left, right = feet(seq)
        k = int(rng.integers(1, 31))
        pad = lambda x: np.vstack([np.repeat(x[:1], k, axis=0), x])  # noqa: E731
        ts = np.arange(len(left) + k) / sc.frame_rate_hz
        a = detect_arrays(left, right, ts[k:])
        b = detect_arrays(pad(left), pad(right), ts)
        bad += tuple(f - k for f in b.step_frames) != a.step_frames
    return bad


def inv_time_scale():
    bad = 0
    length_fields = ("stride_left_m", "stride_right_m", "step_length_m", "step_width_m",
                     "asymmetry_index")
    for _, sc in random_cases(504):
        seq, _ = generate(sc)
        left, right = feet(seq)
        _, ra = full_report(left, right, seq.timestamps)
        _, rb = full_report(left, right, 2.0 * seq.timestamps)
        same = (ra.speed_mps is not None and rb.speed_mps == ra.speed_mps / 2
                and rb.swing_time_s == 2 * ra.swing_time_s
                and all(getattr(ra, f) == getattr(rb, f) for f in length_fields))
        bad += not same
    return bad


def inv_linearity():
    rng = np.random.default_rng(505)
    bad = 0
    for _ in range(N_INVARIANCE):
        n = int(rng.integers(5, 300))
        w = int(rng.choice([1, 3, 5, 7, 9, 11]))
        if w > n:
            w = 1
        f, g = rng.normal(size=n), rng.normal(size=n)
        a, b = rng.uniform(-3, 3, 2)
        lhs = smooth_uniform(a * f + b * g, w)
        rhs = a * smooth_uniform(f, w) + b * smooth_uniform(g, w)
        bad += not np.allclose(lhs, rhs, rtol=0, atol=1e-12)
    return bad


def serialized(sc):
    seq, _ = generate(sc)
    left, right = feet(seq)
    res, rep = full_report(left, right, seq.timestamps)
    return json.dumps([res.to_dict(), report_to_dict(rep, res, sc.name)], sort_keys=True)


def inv_determinism():
    return sum(serialized(sc) != serialized(sc) for _, sc in random_cases(506))


INVARIANTS = [("scale", inv_scale), ("rigid motion", inv_rigid), ("time shift", inv_time_shift),
              ("time scale", inv_time_scale), ("smoothing linearity", inv_linearity),
              ("determinism", inv_determinism)]


def check_invariance():
    failures = {name: fn() for name, fn in INVARIANTS}
    ok = not any(failures.values())
    detail = ", ".join(f"{name} {N_INVARIANCE - n}/{N_INVARIANCE}" for name, n in failures.items())
    return verdict(5, "invariance suite", ok, detail)


# -- 6 ----------------------------------------------------------------------------

def brute_force_cost(pred, truth):
    short, long_ = (pred, truth) if len(pred) <= len(truth) else (truth, pred)
    if not short:
        return 0
    return min(sum(abs(a - b) for a, b in zip(short, c)) for c in combinations(long_, len(short)))


def check_matching_oracle():
    rng = np.random.default_rng(606)
    cases = bad = 0
    for m in range(9):
        for n in range(9):
            for _ in range(25):
                p = sorted(rng.choice(120, m, replace=False).tolist())
                t = sorted(rng.choice(120, n, replace=False).tolist())
                pairs = match_events(p, t)
                cost = sum(abs(a - b) for a, b in pairs)
                monotone = all(a1 < a2 and b1 < b2 for (a1, b1), (a2, b2) in zip(pairs, pairs[1:]))
                bad += not (monotone and len(pairs) == min(m, n) and cost == brute_force_cost(p, t))
                cases += 1
    return verdict(6, "monotone matching equals brute force", bad == 0,
                   f"{cases - bad}/{cases} list pairs up to length 8")


# -- 7 ----------------------------------------------------------------------------

def utkinect_root():
    env = os.environ.get("GAITPIPE_UTKINECT")
    for cand in ([Path(env)] if env else []) + [HERE / "data" / "utkinect"]:
        if (cand / "actionLabel.txt").exists():
            return cand
    return None


def utkinect_walks(root):
    """Yield ``(clip_id, start_frame, end_frame)`` for every walk segment in actionLabel.txt."""
    clip = None
    for line in (root / "actionLabel.txt").read_text().splitlines():
        line = line.strip()
        if re.fullmatch(r"s\d+_e\d+", line):
            clip = line
        elif line.startswith("walk:") and clip:
            start, end = (int(v) for v in line.split(":")[1].split())
            yield clip, start, end


def write_walk_segment(root, clip, start, end, out_dir):
    src = root / "joints" / f"joints_{clip}.txt"
    seen, kept = set(), []
    for line in src.read_text().splitlines():
        parts = line.split()
        if len(parts) < 2:
            continue
        idx = int(parts[0])
        # the files repeat a few frame numbers; keep the first skeleton
        if start <= idx <= end and idx not in seen:
            seen.add(idx)
            kept.append(" ".join(parts[:61]))
    path = Path(out_dir) / f"{clip}.txt"
    path.write_text("\n".join(kept) + "\n")
    return path


def check_utkinect():
    root = utkinect_root()
    if root is None:
        return None
    notes = root / "step_annotations.json"
    annotations = json.loads(notes.read_text()) if notes.exists() else {}
    fps = float(os.environ.get("GAITPIPE_UTKINECT_FPS", "15"))
    with tempfile.TemporaryDirectory() as tmp:
        paths = [str(write_walk_segment(root, *w, tmp)) for w in utkinect_walks(root)]
        cfg = RunConfig(inputs=tuple(paths), input_format="kinect-skeleton", frame_rate_hz=fps,
                        detector=DetectorParams(plane="xz"),
                        filters=FilterParams(vertical_axis="y", min_track_frames=5),
                        out_dir=str(Path(tmp) / "out"))
        summary = batch(cfg)
        reports = {Path(p).stem: json.loads((Path(tmp) / "out" / f"{Path(p).stem}.report.json")
                                            .read_text())
                   for p in paths if (Path(tmp) / "out" / f"{Path(p).stem}.report.json").exists()}
    agree = [reports[c]["n_steps"] == n for c, n in annotations.items() if c in reports]
    plausible = all(
        (d["speed_mps"] is None or 0.1 <= d["speed_mps"] <= 2.0)
        and all(d[k] is None or 0.05 <= d[k] <= 1.2
                for k in ("stride_left_m", "stride_right_m", "step_length_m"))
        for d in reports.values() if d["n_steps"] > 0)
    rate = sum(agree) / len(agree) if agree else float("nan")
    ok = bool(agree) and rate >= 0.75 and plausible
    return verdict(7, "UTKinect replication (non-gating)", ok,
                   f"{len(reports)} walk clips, {len(summary.failures)} failures, step-count "
                   f"agreement {rate:.2f} on {len(agree)} annotated clips, plausible ranges "
                   f"{plausible}")


# -- 8 ----------------------------------------------------------------------------

def check_round_trip_and_golden():
    problems = []
    for seed in range(5):
        sc = GaitScenario(step_length_m=0.4, noise_sigma_m=0.01, heading_deg=40 * seed, seed=seed)
        seq, _ = generate(sc)
        kin = stick_figure(seq, sc.heading_deg)
        a = parse_kinect_skeleton_file(serialize_kinect_skeleton(kin).encode())
        b = parse_kinect_skeleton_file(serialize_kinect_skeleton(a).encode())
        if a != b or serialize_kinect_skeleton(a) != serialize_kinect_skeleton(b):
            problems.append(f"kinect seed {seed}")
        dropped, _ = generate(GaitScenario(step_length_m=0.4, dropout_prob=0.1, seed=seed))
        (c,) = parse_pose_jsonl(serialize_pose_jsonl(dropped).encode())
        (d,) = parse_pose_jsonl(serialize_pose_jsonl(c).encode())
        if c != d or c.frames != dropped.frames:
            problems.append(f"jsonl seed {seed}")
    data = HERE / "data"
    with tempfile.TemporaryDirectory() as tmp:
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli_main(["analyze", str(data / "golden_walk.jsonl"), "--out", tmp, "--plots"])
        if code != 0:
            problems.append(f"analyze exit {code}")
        for suffix in (".report.json", ".steps.csv", ".distance.svg"):
            out = Path(tmp) / f"golden_walk{suffix}"
            if not out.exists() or out.read_bytes() != (data / f"golden_walk{suffix}").read_bytes():
                problems.append(f"golden{suffix}")
    return verdict(8, "parser round trips and golden files", not problems,
                   "all byte-identical" if not problems else "mismatch: " + ", ".join(problems))


# -- pytest entry points -------------------------------------------------------------

def _run(check, capsys):
    line = check()
    announce(line, capsys)
    assert " PASS:" in line, line


def test_criterion_1_exactness(capsys):
    _run(check_exactness, capsys)


def test_criterion_2_noise(capsys):
    _run(check_noise, capsys)


def test_criterion_3_additivity(capsys):
    _run(check_additivity, capsys)


def test_criterion_4_speed(capsys):
    _run(check_speed, capsys)


def test_criterion_5_invariance(capsys):
    _run(check_invariance, capsys)


def test_criterion_6_matching_oracle(capsys):
    _run(check_matching_oracle, capsys)


def test_criterion_7_utkinect(capsys):
    line = check_utkinect()
    if line is None:
        announce("criterion 7 SKIP: UTKinect replication (dataset not present; set "
                 "GAITPIPE_UTKINECT)", capsys)
        pytest.skip("UTKinect-Action3D skeletons not available")
    announce(line, capsys)
    if " FAIL:" in line:
        pytest.xfail("non-gating data-dependent criterion: " + line)


def test_criterion_8_round_trip_golden(capsys):
    _run(check_round_trip_and_golden, capsys)


if __name__ == "__main__":
    checks = [check_exactness, check_noise, check_additivity, check_speed, check_invariance,
              check_matching_oracle, check_utkinect, check_round_trip_and_golden]
    failed = False
    for check in checks:
        line = check()
        if line is None:
            line = "criterion 7 SKIP: UTKinect replication (dataset not present)"
        print(line)
        failed |= " FAIL:" in line and not line.startswith("criterion 7")
    sys.exit(1 if failed else 0)
