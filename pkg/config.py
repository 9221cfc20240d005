# Severity Curriculum - Arabic medical QA generation

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv

from utils.errors import ParseError
from utils.helpers import derive_seed

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent


class Config:
    """Application defaults, overridable from the environment or a .env file"""

    ENV_PREFIX = 'SEVCUR_'

    SEED = int(os.environ.get('SEVCUR_SEED', '0'))
    LOG_LEVEL = os.environ.get('SEVCUR_LOG_LEVEL', 'INFO')
    LEXICON_PATH = os.environ.get('SEVCUR_LEXICON_PATH', str(BASE_DIR / 'data' / 'default_lexicon.json'))
    TRAIN_FRACTION = float(os.environ.get('SEVCUR_TRAIN_FRACTION', '0.8'))

    # File names inside a run directory
    BASE_CHECKPOINT = 'base.ckpt'
    ADAPTER_CHECKPOINT = 'adapter.ckpt'
    MANIFEST = 'manifest.json'
    LEDGER = 'ledger.db'

    # Column order of the comparison table
    MODES = ['baseline', 'standard', 'curriculum']
    MODE_DISPLAY = {
        'baseline': 'Baseline',
        'standard': 'Standard Fine-Tuning',
        'curriculum': 'Curriculum Learning',
    }


@dataclass
class ModelConfig:
    vocab_size: int = 0
    embed_dim: int = 64
    n_layers: int = 2
    n_heads: int = 2
    context_len: int = 128
    mlp_ratio: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n_heads < 1 or self.embed_dim % self.n_heads != 0:
            raise ValueError(f'embed_dim {self.embed_dim} is not divisible by n_heads {self.n_heads}')
        if self.context_len < 8:
            raise ValueError('context_len must be at least 8')
        if self.n_layers < 1 or self.mlp_ratio < 1:
            raise ValueError('n_layers and mlp_ratio must be positive')

    @property
    def head_dim(self):
        return self.embed_dim // self.n_heads


@dataclass
class LoraConfig:
    rank: int = 4
    alpha: float = 8.0
    targets: Tuple[str, ...] = ('q', 'v')
    seed: int = 0

    def __post_init__(self):
        self.targets = tuple(self.targets)
        if self.rank < 1:
            raise ValueError('LoRA rank must be >= 1')
        if self.alpha <= 0:
            raise ValueError('LoRA alpha must be > 0')

    @property
    def scaling(self):
        return self.alpha / self.rank


@dataclass
class TrainConfig:
    mode: str = 'curriculum'
    base_lr: float = 3e-4
    stage_decay: float = 0.5
    epochs_per_stage: int = 3
    batch_size: int = 16
    clip_norm: float = 1.0
    pretrain_epochs: int = 2
    pretrain_lr: float = 1e-3
    pretrain_corpus: str = 'questions'
    skip_empty_stages: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in Config.MODES:
            raise ValueError(f'unknown training mode "{self.mode}"')
        if self.base_lr <= 0 or self.pretrain_lr <= 0:
            raise ValueError('learning rates must be > 0')
        if not 0 < self.stage_decay <= 1:
            raise ValueError('stage_decay must be in (0, 1]')
        if self.epochs_per_stage < 1:
            raise ValueError('epochs_per_stage must be >= 1')
        if self.batch_size < 1:
            raise ValueError('batch_size must be >= 1')
        if self.pretrain_epochs < 0:
            raise ValueError('pretrain_epochs must be >= 0')
        if self.pretrain_corpus not in ('questions', 'questions_and_answers'):
            raise ValueError(f'unknown pretrain corpus "{self.pretrain_corpus}"')


@dataclass
class DecodeConfig:
    mode: str = 'greedy'
    max_new_tokens: int = 64
    top_k: int = 5
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ('greedy', 'top_k'):
            raise ValueError(f'unknown decode mode "{self.mode}"')
        if self.max_new_tokens < 1:
            raise ValueError('max_new_tokens must be >= 1')
        if self.top_k < 1 or self.temperature <= 0:
            raise ValueError('top_k must be >= 1 and temperature > 0')


SECTIONS = {
    'model': ModelConfig,
    'lora': LoraConfig,
    'train': TrainConfig,
    'decode': DecodeConfig,
}


@dataclass
class CliConfig:
    """Fully resolved settings for one command invocation"""

    seed: int = 0
    lexicon_path: str = Config.LEXICON_PATH
    train_fraction: float = Config.TRAIN_FRACTION
    log_level: str = Config.LOG_LEVEL
    model: ModelConfig = field(default_factory=ModelConfig)
    lora: LoraConfig = field(default_factory=LoraConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError('train_fraction must be in (0, 1)')

    def to_dict(self):
        data = asdict(self)
        data['lora']['targets'] = list(self.lora.targets)
        return data


def _coerce(value, default):
    """Convert a string setting to the type of the field default"""
    if not isinstance(value, str):
        if isinstance(default, tuple):
            return tuple(value)
        return value
    if isinstance(default, bool):
        return value.strip().lower() in ('1', 'true', 'yes', 'on')
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        return tuple(item.strip() for item in value.split(',') if item.strip())
    return value


def _merge(target, source, origin):
    for key, value in source.items():
        if value is None:
            continue
        if key in SECTIONS:
            if not isinstance(value, dict):
                raise ParseError(f'section "{key}" must be an object', path=origin)
            target.setdefault(key, {}).update(value)
        else:
            target[key] = value


def env_overrides(environ=None):
    """Collect SEVCUR_* settings; section fields use SEVCUR_<SECTION>__<FIELD>"""
    environ = os.environ if environ is None else environ
    overrides = {}
    for name, value in environ.items():
        if not name.startswith(Config.ENV_PREFIX):
            continue
        key = name[len(Config.ENV_PREFIX):].lower()
        if '__' in key:
            section, option = key.split('__', 1)
            if section in SECTIONS:
                overrides.setdefault(section, {})[option] = value
        elif key in ('seed', 'lexicon_path', 'train_fraction', 'log_level'):
            overrides[key] = value
    return overrides


def load_config_file(path):
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ParseError(f'invalid JSON: {e.msg}', path=path, line=e.lineno)
    if not isinstance(data, dict):
        raise ParseError('config file must contain a JSON object', path=path)
    return data


def _build(cls, values):
    defaults = cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ValueError(f'unknown {cls.__name__} option "{key}"')
        kwargs[key] = _coerce(value, getattr(defaults, key))
    return cls(**kwargs)


def resolve_config(config_path=None, flags=None, environ=None):
    """Merge defaults < config file < environment < flags into a CliConfig"""
    merged = {}
    if config_path:
        _merge(merged, load_config_file(config_path), config_path)
    _merge(merged, env_overrides(environ), 'environment')
    _merge(merged, flags or {}, 'flags')

    sections = {name: _build(cls, merged.pop(name, {})) for name, cls in SECTIONS.items()}
    config = _build(CliConfig, merged)

    # Every stochastic component draws from the single run seed
    seed = config.seed
    return replace(
        config,
        model=replace(sections['model'], seed=derive_seed(seed, 'model_init')),
        lora=replace(sections['lora'], seed=derive_seed(seed, 'lora_init')),
        train=replace(sections['train'], seed=derive_seed(seed, 'shuffle')),
        decode=replace(sections['decode'], seed=derive_seed(seed, 'decode')),
    )


def config_from_dict(data):
    """Rebuild a CliConfig from the dictionary echoed into a manifest"""
    data = dict(data)
    sections = {name: _build(cls, data.pop(name, {})) for name, cls in SECTIONS.items()}
    return replace(_build(CliConfig, data), **sections)
