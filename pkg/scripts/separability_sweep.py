#!/usr/bin/env python3
"""Separability sweep: classifier accuracy vs. constructed class offset.

For each offset on the ACC dominant frequency (bipolar class shifted up),
generates a cohort, extracts features, and reports kNN LOOCV accuracy on
the ACC feature group. Zero offset should hover near chance; large offsets
should approach 100%. This is the leakage check for the whole pipeline: if
accuracy at offset 0 sits well above chance, something is leaking labels.

Example:

    python scripts/separability_sweep.py --offsets 0,0.5,1.0,2.0 --seeds 5
"""
import argparse
import statistics
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wearbench import mlbench, pipeline, synth  # noqa: E402
from wearbench.models import ModelKind  # noqa: E402


def accuracy_for(offset: float, seed: int, duration: float) -> float:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cohort = synth.CohortSpec(
            seed=seed, duration_s=duration,
            offsets=synth.CohortOffsets(acc_dominant_freq_hz=offset))
        manifest = synth.generate_cohort(tmp / "data", cohort)
        features_path, _, _ = pipeline.run_extract(
            tmp / "data", manifest, tmp / "out")
        matrix = mlbench.assemble_matrix(
            pipeline.read_features_csv(features_path), "acc")
        report = mlbench.loocv_grid_search(
            matrix, ModelKind.KNN, [{"k": 5}], seed=seed, selector="acc")
        return report.metrics.accuracy


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--offsets", default="0,0.5,1.0,2.0",
                        help="comma-separated ACC-frequency offsets (Hz)")
    parser.add_argument("--seeds", type=int, default=5,
                        help="cohorts per offset")
    parser.add_argument("--duration", type=float, default=70.0)
    args = parser.parse_args()

    offsets = [float(v) for v in args.offsets.split(",")]
    print(f"{'offset (Hz)':>12} {'mean acc %':>11} {'min':>7} {'max':>7}")
    for offset in offsets:
        accs = [accuracy_for(offset, 100 + s, args.duration)
                for s in range(args.seeds)]
        print(f"{offset:>12.2f} {statistics.mean(accs):>11.1f} "
              f"{min(accs):>7.1f} {max(accs):>7.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
