# Create sample experiment plans for the bench command
import json
from pathlib import Path

RATIOS = [0.1, 0.2, 0.3, 0.4, 0.5]
NOISE_LEVELS = [0.0, 0.05, 0.10]
CORRELATION_LEVELS = ["low", "medium", "high"]


def create_sample_plans(out_dir: str = "plans", trials: int = 100):
    """Write the sampling-scheme comparison and the algorithm comparison plans."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # Every scheme, reconstructed with shrinkage
    schemes_plan = {
        "n": 64,
        "correlation_levels": CORRELATION_LEVELS,
        "schemes": ["random", "quasi-random", "quasi-crystal", "farthest-point"],
        "ratios": RATIOS,
        "noise_levels": NOISE_LEVELS,
        "algorithms": [{"name": "shrinkage", "p": 1.0}],
        "trials": trials,
        "base_seed": 0,
    }

    # Quasi-crystal masks, three reconstruction algorithms
    algorithms_plan = {
        "n": 64,
        "correlation_levels": CORRELATION_LEVELS,
        "schemes": ["quasi-crystal"],
        "ratios": RATIOS,
        "noise_levels": NOISE_LEVELS,
        "algorithms": [
            {"name": "shrinkage", "p": 1.0},
            {"name": "hard-thresholding", "p": 0.0, "hard_rule": "paper"},
            {"name": "nonconvex", "p": 0.8},
        ],
        "trials": trials,
        "base_seed": 0,
    }

    # Small plan for a quick look
    smoke_plan = {
        "n": 32,
        "correlation_levels": ["high"],
        "schemes": ["random", "quasi-crystal"],
        "ratios": [0.2, 0.4],
        "noise_levels": [0.0],
        "algorithms": [{"name": "shrinkage", "p": 1.0}, {"name": "nonconvex", "p": 0.8}],
        "trials": 3,
        "base_seed": 0,
    }

    plans = {
        "scheme_comparison.json": schemes_plan,
        "algorithm_comparison.json": algorithms_plan,
        "smoke.json": smoke_plan,
    }
    for name, plan in plans.items():
        (out / name).write_text(json.dumps(plan, indent=2) + "\n")

    print(f"✅ Sample plans written to '{out}/'")
    print("📊 Plans:")
    print(f"   - scheme_comparison.json: 4 schemes x 5 ratios x 3 noise levels x 3 correlations, {trials} trials")
    print(f"   - algorithm_comparison.json: 3 algorithms on quasi-crystal masks, {trials} trials")
    print("   - smoke.json: 8 cells x 3 trials on a 32x32 grid")
    print("\n🎯 Try:")
    print(f"   python -m mcsense.main bench --plan {out}/smoke.json --out results/smoke")


if __name__ == "__main__":
    create_sample_plans()
