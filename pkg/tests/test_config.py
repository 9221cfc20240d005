# Severity Curriculum - Arabic medical QA generation

import json

import pytest

from config import config_from_dict, env_overrides, resolve_config
from utils.errors import ParseError
from utils.helpers import derive_seed


def test_defaults():
    config = resolve_config(environ={})
    assert config.seed == 0
    assert config.train.base_lr == pytest.approx(3e-4)
    assert config.train.stage_decay == pytest.approx(0.5)
    assert config.lora.targets == ('q', 'v')
    assert config.model.embed_dim == 64


def test_precedence_file_env_flags(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({'seed': 1, 'train': {'batch_size': 4, 'base_lr': 0.1}}), encoding='utf-8')
    environ = {'SEVCUR_SEED': '2', 'SEVCUR_TRAIN__BATCH_SIZE': '8'}

    config = resolve_config(path, flags={'train': {'base_lr': 0.5}}, environ=environ)
    assert config.seed == 2
    assert config.train.batch_size == 8
    assert config.train.base_lr == pytest.approx(0.5)

    config = resolve_config(path, flags={'seed': 3}, environ=environ)
    assert config.seed == 3
    assert config.train.base_lr == pytest.approx(0.1)


def test_env_overrides_parse_sections():
    overrides = env_overrides({
        'SEVCUR_LORA__TARGETS': 'q, k ,v',
        'SEVCUR_TRAIN__SKIP_EMPTY_STAGES': 'yes',
        'SEVCUR_UNKNOWN__X': '1',
        'HOME': '/root',
    })
    assert overrides == {'lora': {'targets': 'q, k ,v'}, 'train': {'skip_empty_stages': 'yes'}}
    config = resolve_config(environ={'SEVCUR_LORA__TARGETS': 'q, k ,v', 'SEVCUR_TRAIN__SKIP_EMPTY_STAGES': 'yes'})
    assert config.lora.targets == ('q', 'k', 'v')
    assert config.train.skip_empty_stages is True


def test_component_seeds_derive_from_run_seed():
    config = resolve_config(flags={'seed': 5}, environ={})
    assert config.model.seed == derive_seed(5, 'model_init')
    assert config.lora.seed == derive_seed(5, 'lora_init')
    assert config.train.seed == derive_seed(5, 'shuffle')
    assert config.decode.seed == derive_seed(5, 'decode')
    assert len({config.model.seed, config.lora.seed, config.train.seed, config.decode.seed}) == 4
    assert derive_seed(5, 'model_init') != derive_seed(6, 'model_init')


@pytest.mark.parametrize('flags', [
    {'train': {'mode': 'distilled'}},
    {'train': {'stage_decay': 0.0}},
    {'model': {'embed_dim': 10, 'n_heads': 3}},
    {'lora': {'rank': 0}},
    {'decode': {'mode': 'beam'}},
    {'train': {'learning_rate': 1.0}},
    {'train_fraction': 1.5},
])
def test_invalid_values(flags):
    with pytest.raises(ValueError):
        resolve_config(flags=flags, environ={})


def test_bad_config_file(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"seed": ', encoding='utf-8')
    with pytest.raises(ParseError):
        resolve_config(path, environ={})
    path.write_text('[1, 2]', encoding='utf-8')
    with pytest.raises(ParseError):
        resolve_config(path, environ={})


def test_config_round_trips_through_manifest_dict(tiny_config):
    rebuilt = config_from_dict(json.loads(json.dumps(tiny_config.to_dict())))
    assert rebuilt == tiny_config
