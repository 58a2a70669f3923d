"""Command-line experiment runner

Subcommands: generate | train | rescale | evaluate | diagnose | sweep | oracle.
Every output is written atomically; exit code 0 means every requested file
was written, 1 is a config problem, 2 an input/parse problem and 3 a numeric
or argument problem.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analysis.diagnostics import evaluate, gamma_sweep, oracle_finetune
from .analysis.reports import write_report
from .config import ExperimentConfig, load_config, parse_config, parse_gamma_grid
from .data.dataset import Dataset, align_labels, generate_synthetic, implant, oversample, undersample
from .data.loaders import load_csv, load_idx, save_csv
from .errors import (ConfigError, InfeasibleImbalanceError, InvalidArgumentError,
                     NumericDegeneracyError, ParseError)
from .models.boundary import RescaleSpec, rescale
from .models.mlp import Checkpoint, Model, load_checkpoint, save_checkpoint
from .models.optim import TrainTrace, train
from .utils.io import write_frame, write_json
from .utils.log import configure_logging
from .utils.metrics import evaluate_predictions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

CHECKPOINT_FILE = 'checkpoint.json'
TRACE_FILE = 'trace.csv'
METRICS_FILE = 'metrics.json'
PREDICTIONS_FILE = 'predictions.csv'
SWEEP_FILE = 'sweep.csv'
ORACLE_FILE = 'oracle.json'


@dataclass
class ExperimentResult:
    checkpoint: Checkpoint
    trace: TrainTrace
    train_set: Dataset
    test_set: Dataset


def load_datasets(config: ExperimentConfig) -> Tuple[Dataset, Dataset]:
    """
    Build the (imbalanced train, aligned test) pair an experiment runs on.

    Returns:
        Training split after implantation and the test split relabelled to match it
    """
    data = config.data
    if data.source == 'synthetic':
        s = data.synthetic
        train_set, test_set = generate_synthetic(s.num_classes, s.per_class_count, s.input_dim,
                                                 s.class_separation, s.noise_scale,
                                                 config.seed_for('data'), s.test_per_class_count)
    elif data.source == 'idx':
        train_set = load_idx(data.paths['train_images'], data.paths['train_labels'], 'train')
        test_set = load_idx(data.paths['test_images'], data.paths['test_labels'], 'test')
    else:
        train_set = load_csv(data.paths['train'], 'train')
        test_set = load_csv(data.paths['test'], 'test')

    if test_set.input_dim != train_set.input_dim:
        raise InvalidArgumentError(
            f"train and test inputs differ in length ({train_set.input_dim} vs {test_set.input_dim})")
    train_set = implant(train_set, config.imbalance)
    test_set = align_labels(test_set, train_set)
    logger.info("Training counts %s, %d test samples", train_set.class_counts.tolist(), len(test_set))
    return train_set, test_set


def resample(config: ExperimentConfig, train_set: Dataset) -> Dataset:
    """The set the optimizer actually sees for the configured method."""
    if config.method == 'oversample':
        return oversample(train_set, config.seed_for('resample'))
    if config.method == 'undersample':
        return undersample(train_set, config.seed_for('resample'))
    return train_set


def run_experiment(config: ExperimentConfig, progress: bool = False) -> ExperimentResult:
    """
    Train one method end to end in process.

    The checkpoint keeps the trained classifier as ``classifier_base``; for
    re-scaling methods the current classifier is the re-scaled one.
    """
    train_set, test_set = load_datasets(config)
    fit_set = resample(config, train_set)
    model = Model.init(train_set.input_dim, config.model.hidden, config.model.feature_dim,
                       train_set.num_classes, config.seed_for('init'))
    model, trace = train(model, fit_set, config.loss, config.train, progress=progress)

    counts = train_set.class_counts
    checkpoint = Checkpoint(model, counts, config.seed, config.raw, method=config.method)
    if config.is_rescaled:
        checkpoint.model.classifier = rescale(checkpoint.classifier_base, RescaleSpec(config.gamma, counts))
        checkpoint.gamma = config.gamma
    return ExperimentResult(checkpoint, trace, train_set, test_set)


def _resolve_config(args: argparse.Namespace, checkpoint: Optional[Checkpoint] = None) -> ExperimentConfig:
    if args.config or args.preset or checkpoint is None:
        return load_config(args.config, args.preset, args.seed)
    document = dict(checkpoint.config)
    if args.seed is not None:
        document['seed'] = args.seed
    return parse_config(document)


def _require_checkpoint(args: argparse.Namespace) -> Checkpoint:
    if not args.checkpoint:
        raise InvalidArgumentError("--checkpoint is required for this command")
    return load_checkpoint(args.checkpoint)


def _out_dir(args: argparse.Namespace, config: Optional[ExperimentConfig] = None) -> Path:
    if args.out:
        return Path(args.out)
    if config is not None:
        return config.out_dir
    raise InvalidArgumentError("--out is required for this command")


def _base_model(checkpoint: Checkpoint) -> Model:
    model = checkpoint.model.copy()
    model.classifier = checkpoint.classifier_base.copy()
    return model


def cmd_generate(args: argparse.Namespace) -> List[Path]:
    config = _resolve_config(args)
    train_set, test_set = load_datasets(config)
    out = _out_dir(args, config)
    return [save_csv(train_set, out / 'train.csv'), save_csv(test_set, out / 'test.csv')]


def cmd_train(args: argparse.Namespace) -> List[Path]:
    config = _resolve_config(args)
    result = run_experiment(config, progress=args.progress)
    out = _out_dir(args, config)
    return [save_checkpoint(out / CHECKPOINT_FILE, result.checkpoint),
            result.trace.to_csv(out / TRACE_FILE)]


def cmd_rescale(args: argparse.Namespace) -> List[Path]:
    """
    Re-scale the checkpoint's current classifier.

    Factors compose by adding exponents, so the recorded gamma accumulates
    and stays relative to ``classifier_base``; gamma 0 rewrites the input unchanged.
    """
    checkpoint = _require_checkpoint(args)
    if args.gamma is None:
        raise InvalidArgumentError("--gamma is required for rescale")
    spec = RescaleSpec(args.gamma, checkpoint.class_counts)
    checkpoint.model.classifier = rescale(checkpoint.model.classifier, spec)
    checkpoint.gamma = checkpoint.gamma + float(args.gamma)
    out = _out_dir(args) if args.out else Path(args.checkpoint).parent
    return [save_checkpoint(out / CHECKPOINT_FILE, checkpoint)]


def cmd_evaluate(args: argparse.Namespace) -> List[Path]:
    checkpoint = _require_checkpoint(args)
    config = _resolve_config(args, checkpoint)
    if args.data:
        dataset = load_csv(args.data, 'test')
    else:
        _, dataset = load_datasets(config)
    if dataset.num_classes != checkpoint.model.num_classes:
        raise InvalidArgumentError(
            f"dataset has {dataset.num_classes} classes, checkpoint {checkpoint.model.num_classes}")
    metrics = evaluate(checkpoint.model, dataset)
    metrics.update({'method': checkpoint.method, 'gamma': checkpoint.gamma, 'seed': checkpoint.seed})
    out = _out_dir(args, config)
    predictions = evaluate_predictions(dataset.y, checkpoint.model.logits(dataset.X))
    return [write_json(out / METRICS_FILE, metrics), write_frame(out / PREDICTIONS_FILE, predictions)]


def cmd_diagnose(args: argparse.Namespace) -> List[Path]:
    checkpoint = _require_checkpoint(args)
    config = _resolve_config(args, checkpoint)
    train_set, test_set = load_datasets(config)
    grid = parse_gamma_grid(args.gamma_grid) if args.gamma_grid else config.sweep_grid
    paths = write_report(_out_dir(args, config), _base_model(checkpoint), train_set, test_set,
                         checkpoint.class_counts, grid, config.estimator, config.sweep_workers,
                         extra={'method': checkpoint.method, 'gamma': checkpoint.gamma, 'seed': checkpoint.seed})
    return list(paths.values())


def cmd_sweep(args: argparse.Namespace) -> List[Path]:
    checkpoint = _require_checkpoint(args)
    config = _resolve_config(args, checkpoint)
    _, test_set = load_datasets(config)
    grid = parse_gamma_grid(args.gamma_grid) if args.gamma_grid else config.sweep_grid
    result = gamma_sweep(_base_model(checkpoint), checkpoint.class_counts, test_set, grid, config.sweep_workers)
    logger.info("Best gamma %.4g (balanced error %.4f)", result.best_gamma(), np.nanmin(result.balanced_error))
    return [write_frame(_out_dir(args, config) / SWEEP_FILE, result.to_frame())]


def cmd_oracle(args: argparse.Namespace) -> List[Path]:
    checkpoint = _require_checkpoint(args)
    config = _resolve_config(args, checkpoint)
    _, test_set = load_datasets(config)
    result = oracle_finetune(checkpoint.model, test_set, config.oracle)
    payload = result.to_dict()
    payload.update({'method': checkpoint.method, 'gamma': checkpoint.gamma, 'seed': checkpoint.seed})
    return [write_json(_out_dir(args, config) / ORACLE_FILE, payload)]


COMMANDS = {
    'generate': cmd_generate,
    'train': cmd_train,
    'rescale': cmd_rescale,
    'evaluate': cmd_evaluate,
    'diagnose': cmd_diagnose,
    'sweep': cmd_sweep,
    'oracle': cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='skewbench',
                                     description="Class-imbalance experiments with weight normalization and re-scaling")
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument('--config', help="Experiment config JSON")
        sub.add_argument('--preset', help="Named preset (synthetic-lt100, synthetic-step10, paper-cifar-schedule)")
        sub.add_argument('--checkpoint', help="Checkpoint JSON")
        sub.add_argument('--gamma', type=float, help="Re-scaling exponent")
        sub.add_argument('--gamma-grid', help="Sweep grid 'a:b:step'")
        sub.add_argument('--data', help="CSV file to evaluate on instead of the config's test split")
        sub.add_argument('--out', help="Output directory")
        sub.add_argument('--seed', type=int, help="Overrides the config seed")
        sub.add_argument('--progress', action='store_true', help="Show a progress bar while training")
    return parser


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, (ConfigError, InfeasibleImbalanceError)):
        return EXIT_CONFIG
    if isinstance(error, (ParseError, FileNotFoundError, OSError)):
        return EXIT_IO
    if isinstance(error, (NumericDegeneracyError, InvalidArgumentError, FloatingPointError)):
        return EXIT_NUMERIC
    raise error


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        written = COMMANDS[args.command](args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return code
    for path in written:
        logger.info("Wrote %s", path)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
