"""
Example script demonstrating basic usage of SkewBench.

This script shows how to:
1. Generate a synthetic dataset and implant a long-tailed imbalance
2. Train a baseline MLP classifier
3. Inspect how the classifier norms follow the class counts
4. Re-scale the classifier and compare balanced errors
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from skewbench import ImbalanceSpec, LossSpec, Model, RescaleSpec, TrainConfig, generate_synthetic, rescale, train
from skewbench.analysis import gamma_sweep
from skewbench.analysis.diagnostics import evaluate, frequency_correlation
from skewbench.data import implant
from skewbench.models import norm_profile


def main():
    """Run a simple imbalance and re-scaling workflow."""

    print("=" * 60)
    print("SkewBench - Weight Norms and Re-Scaling Example")
    print("=" * 60)

    # Step 1: Build the data
    print("\n1. Generating a long-tailed synthetic dataset...")
    train_set, test_set = generate_synthetic(10, 500, 32, 3.0, 1.0, seed=0, test_per_class_count=200)
    train_set = implant(train_set, ImbalanceSpec('long_tailed', 100.0, seed=1))
    print(f"   Training counts: {train_set.class_counts.tolist()}")
    print(f"   Test samples: {len(test_set)}")

    # Step 2: Train the baseline
    print("\n2. Training the baseline...")
    model = Model.init(train_set.input_dim, [64], 32, train_set.num_classes, seed=2)
    config = TrainConfig(lr=0.05, epochs=40, batch_size=64, decay_epochs=(30,))
    model, trace = train(model, train_set, LossSpec(), config, progress=True)
    print(f"   Final training loss: {trace.rows[-1]['train_loss']:.4f}")

    # Step 3: Norms against counts
    print("\n3. Relative classifier norms (most to least frequent class):")
    profile = norm_profile(model.classifier)
    print("   " + " ".join(f"{v:.2f}" for v in profile))
    rho = frequency_correlation(train_set.class_counts, profile)
    print(f"   Spearman(count, norm) = {rho:.3f}")

    # Step 4: Re-scaling
    print("\n4. Re-scaling the classifier:")
    baseline = evaluate(model, test_set)
    rescaled = rescale(model.classifier, RescaleSpec(0.3, train_set.class_counts))
    after = evaluate(model, test_set, rescaled)
    print(f"   Balanced error baseline:     {baseline['balanced_error']:.4f}")
    print(f"   Balanced error gamma=0.3:    {after['balanced_error']:.4f}")

    sweep = gamma_sweep(model, train_set.class_counts, test_set, [0.1 * i for i in range(11)])
    print(f"   Best gamma on the grid: {sweep.best_gamma():.1f}")

    print("\n" + "=" * 60)
    print("Example completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
