# Severity Curriculum - Arabic medical QA generation

import json
import struct

import numpy as np
import pytest

from config import LoraConfig, ModelConfig
from models.checkpoint import (
    load_adapters, load_any, load_model, read_container, save_adapters, save_model, write_container,
)
from models.lora import AdaptedModel, attach
from models.tiny_lm import Model, build_vocab
from utils.errors import CorruptFile, MissingBase, VersionMismatch


@pytest.fixture
def vocab(short_records):
    return build_vocab(short_records)


@pytest.fixture
def model(vocab):
    return Model.initialize(ModelConfig(vocab_size=vocab.size, embed_dim=16, n_layers=1, n_heads=2,
                                        context_len=16, seed=2))


def trained_adapter(model):
    adapted = attach(model, LoraConfig(rank=2, seed=3))
    for pair in adapted.adapters.values():
        pair.b.data = np.full(pair.b.shape, 0.01)
    return adapted


def test_model_round_trip(tmp_path, model, vocab):
    path = tmp_path / 'base.ckpt'
    save_model(model, vocab, path, provenance={'mode': 'baseline'})
    loaded, loaded_vocab, header = load_model(path)
    assert loaded.digest() == model.digest()
    assert loaded.config == model.config
    assert loaded_vocab == vocab
    assert header['provenance'] == {'mode': 'baseline'}
    assert not (tmp_path / 'base.ckpt.tmp').exists()


def test_adapter_round_trip_with_base_path(tmp_path, model, vocab):
    save_model(model, vocab, tmp_path / 'base.ckpt')
    adapted = trained_adapter(model)
    run_dir = tmp_path / 'run'
    save_adapters(adapted, vocab, run_dir / 'adapter.ckpt', tmp_path / 'base.ckpt')

    loaded, _, header = load_adapters(run_dir / 'adapter.ckpt')
    assert header['base_checkpoint'] == '../base.ckpt'
    assert loaded.digest() == adapted.digest()
    ids = np.array([[1, 5, 6, 2]])
    np.testing.assert_array_equal(loaded.forward(ids).data, adapted.forward(ids).data)
    assert isinstance(load_any(run_dir / 'adapter.ckpt')[0], AdaptedModel)
    assert isinstance(load_any(tmp_path / 'base.ckpt')[0], Model)


def test_adapter_requires_matching_base(tmp_path, model, vocab):
    save_model(model, vocab, tmp_path / 'base.ckpt')
    save_adapters(trained_adapter(model), vocab, tmp_path / 'adapter.ckpt', tmp_path / 'base.ckpt')

    with pytest.raises(MissingBase):
        load_model(tmp_path / 'adapter.ckpt')

    other = Model.initialize(ModelConfig(vocab_size=vocab.size, embed_dim=16, n_layers=1, n_heads=2,
                                         context_len=16, seed=9))
    with pytest.raises(MissingBase):
        load_adapters(tmp_path / 'adapter.ckpt', base=other)

    (tmp_path / 'base.ckpt').unlink()
    with pytest.raises(MissingBase):
        load_adapters(tmp_path / 'adapter.ckpt')


def test_container_arrays_preserved(tmp_path):
    path = tmp_path / 'x.ckpt'
    arrays = [('a', np.arange(6.0).reshape(2, 3)), ('b', np.array([np.pi]))]
    write_container(path, {'kind': 'model'}, arrays)
    header, loaded = read_container(path)
    assert [entry['name'] for entry in header['tensors']] == ['a', 'b']
    np.testing.assert_array_equal(loaded['a'], arrays[0][1])
    assert loaded['b'][0] == np.pi


def test_flipped_payload_byte_is_corrupt(tmp_path, model, vocab):
    path = tmp_path / 'base.ckpt'
    save_model(model, vocab, path)
    blob = bytearray(path.read_bytes())
    blob[-3] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CorruptFile):
        load_model(path)


def test_truncated_files_are_corrupt(tmp_path, model, vocab):
    path = tmp_path / 'base.ckpt'
    save_model(model, vocab, path)
    blob = path.read_bytes()
    for size in (4, 20, len(blob) - 8):
        path.write_bytes(blob[:size])
        with pytest.raises(CorruptFile):
            read_container(path)


def test_unknown_version(tmp_path):
    header = json.dumps({'format_version': 99, 'kind': 'model', 'tensors': []}).encode('utf-8')
    path = tmp_path / 'future.ckpt'
    path.write_bytes(struct.pack('<Q', len(header)) + header)
    with pytest.raises(VersionMismatch):
        read_container(path)
