"""Experiment configuration

Configs are JSON documents with ``"version": 1``. A config may name a
``"preset"`` shipped in ``skewbench/presets``; the preset is loaded first and
the document's keys are deep-merged over it. Parsing yields frozen
dataclasses; every validation failure raises :class:`ConfigError` naming the
offending key.
"""

import copy
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .data.dataset import IMBALANCE_KINDS, ImbalanceSpec
from .errors import ConfigError, InvalidArgumentError
from .models.losses import LOSS_KINDS, LossSpec
from .models.optim import TrainConfig
from .analysis.diagnostics import SPREAD_ESTIMATORS, OracleConfig
from .utils.io import read_json

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
PRESET_DIR = Path(__file__).parent / 'presets'
DATA_SOURCES = ('synthetic', 'idx', 'csv')
METHODS = ('baseline', 'baseline_rs', 'wvn_rs', 'oversample', 'undersample', 'reweight', 'focal', 'cb')
METHOD_LOSS = {'reweight': 'reweighted_ce', 'focal': 'focal', 'cb': 'class_balanced_ce'}
SEED_CONSUMERS = ('data', 'imbalance', 'resample', 'init', 'shuffle')

DEFAULTS: Dict[str, Any] = {
    'version': CONFIG_VERSION,
    'seed': 0,
    'method': 'baseline',
    'out_dir': 'runs/default',
    'data': {
        'source': 'synthetic',
        'synthetic': {
            'num_classes': 10,
            'per_class_count': 500,
            'test_per_class_count': 200,
            'input_dim': 32,
            'class_separation': 3.0,
            'noise_scale': 1.0,
        },
        'idx': {},
        'csv': {},
    },
    'imbalance': {'kind': 'none', 'ratio': 1.0},
    'model': {'hidden': [64], 'feature_dim': 32},
    'loss': {'focal_gamma': 2.0, 'beta': 0.999},
    'train': {
        'lr': 0.1,
        'momentum': 0.9,
        'weight_decay': 5e-4,
        'epochs': 30,
        'batch_size': 128,
        'decay_epochs': [],
        'decay_factor': 0.1,
        'wvn': False,
    },
    'rescale': {},
    'sweep': {'grid': '0:1:0.05', 'workers': 1},
    'oracle': {'epochs': 100, 'lr': 0.01, 'momentum': 0.9, 'weight_decay': 0.0, 'batch_size': None},
    'diagnostics': {'estimator': 'rms'},
}


def derive_seed(seed: int, name: str) -> int:
    """Independent seed for one consumer of randomness, derived from the top-level seed."""
    sequence = np.random.SeedSequence([int(seed), zlib.crc32(name.encode('utf-8'))])
    return int(sequence.generate_state(1)[0])


def parse_gamma_grid(text: str) -> Tuple[float, ...]:
    """
    Parse ``"a:b:step"`` into the inclusive grid a, a+step, ..., b.

    A single number is a one-point grid.
    """
    parts = str(text).split(':')
    try:
        values = [float(p) for p in parts]
    except ValueError as e:
        raise InvalidArgumentError(f"invalid gamma grid {text!r}") from e
    if len(values) == 1:
        return (values[0],)
    if len(values) != 3:
        raise InvalidArgumentError(f"gamma grid must be 'a:b:step', got {text!r}")
    start, stop, step = values
    if step <= 0 or stop < start:
        raise InvalidArgumentError(f"gamma grid needs step > 0 and a <= b, got {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(round(start + i * step, 12)) for i in range(count))


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_preset(name: str) -> Dict[str, Any]:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in PRESET_DIR.glob('*.json'))
        raise ConfigError('preset', f"unknown preset {name!r}; available: {available}")
    return read_json(path)


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 10
    per_class_count: int = 500
    test_per_class_count: Optional[int] = 200
    input_dim: int = 32
    class_separation: float = 3.0
    noise_scale: float = 1.0


@dataclass(frozen=True)
class DataSpec:
    """Where the data comes from: a synthetic mixture, IDX files or CSV files"""

    source: str = 'synthetic'
    synthetic: SyntheticSpec = SyntheticSpec()
    paths: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ModelSpec:
    hidden: Tuple[int, ...] = (64,)
    feature_dim: int = 32


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment"""

    seed: int
    method: str
    out_dir: Path
    data: DataSpec
    imbalance: ImbalanceSpec
    model: ModelSpec
    loss: LossSpec
    train: TrainConfig
    gamma: Optional[float]
    sweep_grid: Tuple[float, ...]
    sweep_workers: int
    oracle: OracleConfig
    estimator: str
    raw: Dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_rescaled(self) -> bool:
        return self.method.endswith('_rs')

    def seed_for(self, consumer: str) -> int:
        if consumer not in SEED_CONSUMERS:
            raise InvalidArgumentError(f"unknown seed consumer {consumer!r}")
        return derive_seed(self.seed, consumer)

    def with_seed(self, seed: int) -> 'ExperimentConfig':
        return parse_config(dict(self.raw, seed=int(seed)))


def _section(raw: Dict[str, Any], key: str, allowed) -> Dict[str, Any]:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(key, "must be an object")
    for name in value:
        if name not in allowed:
            raise ConfigError(f"{key}.{name}", "unknown key")
    return value


def _typed(section: Dict[str, Any], prefix: str, name: str, kind, minimum=None):
    key = f"{prefix}.{name}" if prefix else name
    value = section[name]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(key, f"must be an integer, got {value!r}")
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            raise ConfigError(key, f"must be a finite number, got {value!r}")
        value = float(value)
    if kind is bool and not isinstance(value, bool):
        raise ConfigError(key, f"must be true or false, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value!r}")
    return value


def _build(key: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidArgumentError as e:
        raise ConfigError(key, str(e)) from e


def parse_config(document: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate a config document (preset already merged) into an ExperimentConfig.

    Raises:
        ConfigError: naming the first offending key
    """
    if not isinstance(document, dict):
        raise ConfigError('<root>', "config must be a JSON object")
    for key in document:
        if key not in DEFAULTS and key != 'preset':
            raise ConfigError(key, "unknown key")
    if document.get('version') != CONFIG_VERSION:
        raise ConfigError('version', f"must be {CONFIG_VERSION}, got {document.get('version')!r}")
    raw = deep_merge(DEFAULTS, {k: v for k, v in document.items() if k != 'preset'})

    seed = _typed(raw, '', 'seed', int, 0)
    method = raw['method']
    if method not in METHODS:
        raise ConfigError('method', f"must be one of {METHODS}, got {method!r}")

    data_raw = _section(raw, 'data', DEFAULTS['data'])
    source = data_raw['source']
    if source not in DATA_SOURCES:
        raise ConfigError('data.source', f"must be one of {DATA_SOURCES}, got {source!r}")
    synth_raw = _section(data_raw, 'synthetic', DEFAULTS['data']['synthetic'])
    synthetic = SyntheticSpec(
        num_classes=_typed(synth_raw, 'data.synthetic', 'num_classes', int, 2),
        per_class_count=_typed(synth_raw, 'data.synthetic', 'per_class_count', int, 1),
        test_per_class_count=(None if synth_raw['test_per_class_count'] is None else
                              _typed(synth_raw, 'data.synthetic', 'test_per_class_count', int, 1)),
        input_dim=_typed(synth_raw, 'data.synthetic', 'input_dim', int, 2),
        class_separation=_typed(synth_raw, 'data.synthetic', 'class_separation', float, 0.0),
        noise_scale=_typed(synth_raw, 'data.synthetic', 'noise_scale', float, 0.0),
    )
    required = {'idx': ('train_images', 'train_labels', 'test_images', 'test_labels'), 'csv': ('train', 'test')}
    paths: Dict[str, str] = {}
    if source in required:
        given = data_raw.get(source) or {}
        for name in required[source]:
            if not isinstance(given.get(name), str):
                raise ConfigError(f"data.{source}.{name}", "path is required")
            paths[name] = given[name]
    data = DataSpec(source, synthetic, paths)

    imb_raw = _section(raw, 'imbalance', DEFAULTS['imbalance'])
    if imb_raw['kind'] not in IMBALANCE_KINDS:
        raise ConfigError('imbalance.kind', f"must be one of {IMBALANCE_KINDS}, got {imb_raw['kind']!r}")
    imbalance = _build('imbalance.ratio', ImbalanceSpec, kind=imb_raw['kind'],
                       ratio=_typed(imb_raw, 'imbalance', 'ratio', float, 1.0),
                       seed=derive_seed(seed, 'imbalance'))

    model_raw = _section(raw, 'model', DEFAULTS['model'])
    hidden = model_raw['hidden']
    if not isinstance(hidden, list) or any(isinstance(h, bool) or not isinstance(h, int) or h < 1 for h in hidden):
        raise ConfigError('model.hidden', f"must be a list of positive integers, got {hidden!r}")
    model = ModelSpec(tuple(hidden), _typed(model_raw, 'model', 'feature_dim', int, 1))

    loss_raw = _section(raw, 'loss', ('kind', 'focal_gamma', 'beta'))
    kind = METHOD_LOSS.get(method, 'plain_ce')
    if 'kind' in loss_raw and loss_raw['kind'] != kind:
        if loss_raw['kind'] not in LOSS_KINDS:
            raise ConfigError('loss.kind', f"must be one of {LOSS_KINDS}, got {loss_raw['kind']!r}")
        raise ConfigError('loss.kind', f"method {method!r} trains with {kind!r}, not {loss_raw['kind']!r}")
    loss = _build('loss', LossSpec, kind=kind,
                  focal_gamma=_typed(loss_raw, 'loss', 'focal_gamma', float, 0.0),
                  beta=_typed(loss_raw, 'loss', 'beta', float, 0.0))

    train_raw = _section(raw, 'train', DEFAULTS['train'])
    wvn = _typed(train_raw, 'train', 'wvn', bool)
    if method == 'wvn_rs':
        wvn = True
    elif wvn:
        raise ConfigError('train.wvn', f"weight vector normalization belongs to method 'wvn_rs', not {method!r}")
    decay = train_raw['decay_epochs']
    if not isinstance(decay, list) or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in decay):
        raise ConfigError('train.decay_epochs', f"must be a list of epoch indices, got {decay!r}")
    train = _build('train', TrainConfig,
                   lr=_typed(train_raw, 'train', 'lr', float, 0.0),
                   momentum=_typed(train_raw, 'train', 'momentum', float, 0.0),
                   weight_decay=_typed(train_raw, 'train', 'weight_decay', float, 0.0),
                   epochs=_typed(train_raw, 'train', 'epochs', int, 1),
                   batch_size=_typed(train_raw, 'train', 'batch_size', int, 1),
                   decay_epochs=tuple(sorted(decay)),
                   decay_factor=_typed(train_raw, 'train', 'decay_factor', float),
                   wvn=wvn,
                   seed=derive_seed(seed, 'shuffle'))

    rescale_raw = _section(raw, 'rescale', ('gamma',))
    gamma = None
    if 'gamma' in rescale_raw and rescale_raw['gamma'] is not None:
        gamma = _typed(rescale_raw, 'rescale', 'gamma', float, 0.0)
    if method.endswith('_rs') and gamma is None:
        raise ConfigError('rescale.gamma', f"method {method!r} requires a gamma")

    sweep_raw = _section(raw, 'sweep', DEFAULTS['sweep'])
    try:
        grid = parse_gamma_grid(sweep_raw['grid'])
    except InvalidArgumentError as e:
        raise ConfigError('sweep.grid', str(e)) from e
    workers = _typed(sweep_raw, 'sweep', 'workers', int, 1)

    oracle_raw = _section(raw, 'oracle', DEFAULTS['oracle'])
    oracle_batch = oracle_raw['batch_size']
    if oracle_batch is not None:
        oracle_batch = _typed(oracle_raw, 'oracle', 'batch_size', int, 1)
    oracle = _build('oracle', OracleConfig,
                    epochs=_typed(oracle_raw, 'oracle', 'epochs', int, 0),
                    lr=_typed(oracle_raw, 'oracle', 'lr', float, 0.0),
                    momentum=_typed(oracle_raw, 'oracle', 'momentum', float, 0.0),
                    weight_decay=_typed(oracle_raw, 'oracle', 'weight_decay', float, 0.0),
                    batch_size=oracle_batch,
                    seed=derive_seed(seed, 'shuffle'))

    diag_raw = _section(raw, 'diagnostics', DEFAULTS['diagnostics'])
    if diag_raw['estimator'] not in SPREAD_ESTIMATORS:
        raise ConfigError('diagnostics.estimator', f"must be one of {SPREAD_ESTIMATORS}")

    return ExperimentConfig(
        seed=seed, method=method, out_dir=Path(raw['out_dir']), data=data, imbalance=imbalance,
        model=model, loss=loss, train=train, gamma=gamma, sweep_grid=grid,
        sweep_workers=workers, oracle=oracle, estimator=diag_raw['estimator'], raw=raw)


def load_config(path=None, preset: Optional[str] = None, seed: Optional[int] = None,
                overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a file, a preset name, or both.

    Args:
        path: JSON config file
        preset: Preset name (the file's own ``preset`` key wins over defaults,
                this argument wins over the file)
        seed: Overrides the config seed
        overrides: Keys deep-merged last

    Returns:
        Validated ExperimentConfig
    """
    document: Dict[str, Any] = {'version': CONFIG_VERSION}
    if path is not None:
        try:
            document = read_json(path)
        except ValueError as e:
            raise ConfigError('<file>', f"{path} is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise ConfigError('<root>', "config must be a JSON object")
    name = preset or document.get('preset')
    if name is not None:
        document = deep_merge(load_preset(name), {k: v for k, v in document.items() if k != 'preset'})
    if overrides:
        document = deep_merge(document, overrides)
    if seed is not None:
        document['seed'] = int(seed)
    config = parse_config(document)
    logger.info("Loaded config: method=%s seed=%d preset=%s", config.method, config.seed, name)
    return config
