"""Sensitivity of the detector to kernel width and alpha on the synthetic grid.

    python benchmarks/sweep.py [--noise 0.01 0.02] [--clips 50]

Prints one markdown table per noise level: count accuracy / mean frame error.
"""
import argparse

from gaitpipe.detection import DetectorParams, detect_steps
from gaitpipe.errors import NoStepsDetected, TooFewFrames
from gaitpipe.evaluation import Clip, evaluate
from gaitpipe.synth import generate, scenario_grid

WIDTHS = (1, 3, 5, 7, 9, 11)
ALPHAS = (0.05, 0.1, 0.2, 0.3, 0.4)


def score(clips, params):
    out = []
    for seq, truth, name in clips:
        try:
            pred = detect_steps(seq, params).step_frames
        except (NoStepsDetected, TooFewFrames):
            pred = ()
        out.append(Clip(name, pred, truth.step_frames))
    return evaluate(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.01, 0.02])
    ap.add_argument("--clips", type=int, default=50)
    args = ap.parse_args()
    for noise in args.noise:
        clips = [(*generate(sc), sc.name) for sc in scenario_grid(args.clips, seed=0,
                                                                   noise_sigma_m=noise)]
        print(f"\nnoise sigma {noise} m ({args.clips} clips): count accuracy / mean frame error\n")
        print("| kernel \\ alpha | " + " | ".join(str(a) for a in ALPHAS) + " |")
        print("|---" * (len(ALPHAS) + 1) + "|")
        for w in WIDTHS:
            cells = []
            for a in ALPHAS:
                ev = score(clips, DetectorParams(kernel_width=w, alpha=a))
                err = "n/a" if ev.mean_frame_error is None else f"{ev.mean_frame_error:.2f}"
                cells.append(f"{ev.count_accuracy:.2f} / {err}")
            print(f"| {w} | " + " | ".join(cells) + " |")


if __name__ == "__main__":
    main()
