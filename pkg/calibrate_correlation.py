# Calibrate correlation lengths against top-k energy-fraction targets
import argparse
import logging

import numpy as np

from mcsense.api.services.grid_field import diagnose, energy_fraction, generate_field
from mcsense.config import CALIBRATION_TARGETS, CORRELATION_LENGTHS

logger = logging.getLogger(__name__)


def mean_energy(length_scale: float, n: int, k: int, seeds: int) -> float:
    """Mean top-k energy fraction of n x n fields over seeds 0..seeds-1."""
    fractions = [
        energy_fraction(diagnose(generate_field(n, length_scale, seed=seed)), k)
        for seed in range(seeds)
    ]
    return float(np.mean(fractions))


def calibrate(target: float, n: int = 64, k: int = 6, seeds: int = 20,
              low: float = 1.0, high: float = 400.0, steps: int = 12) -> float:
    """Bisect on a log scale for the shortest length scale whose mean energy reaches target."""
    if mean_energy(high, n, k, seeds) < target:
        raise ValueError(f"target {target} not reached even at length scale {high}")
    for _ in range(steps):
        middle = float(np.sqrt(low * high))
        if mean_energy(middle, n, k, seeds) >= target:
            high = middle
        else:
            low = middle
    return high


def main():
    parser = argparse.ArgumentParser(description="Calibrate correlation-length presets")
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--top-k", type=int, default=6)
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING)
    print(f"🎯 Calibrating on {args.n}x{args.n} fields, top-{args.top_k} energy, {args.seeds} seeds")
    for level, target in CALIBRATION_TARGETS.items():
        length = calibrate(target, n=args.n, k=args.top_k, seeds=args.seeds)
        current = CORRELATION_LENGTHS[level]
        achieved = mean_energy(current, args.n, args.top_k, args.seeds)
        print(f"   - {level}: target {target} -> length scale {length:.1f} "
              f"(configured {current}, mean energy {achieved:.4f})")


if __name__ == "__main__":
    main()
