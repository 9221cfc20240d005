# Severity Curriculum - Arabic medical QA generation

"""
Checkpoint container.

Layout: an 8-byte little-endian header length, the UTF-8 JSON header, then
every tensor as raw little-endian float64 in header order. The header holds
format_version, kind ("model", "adapter" or "run_state"), the tensor list
[{name, shape}], the sha256 of the tensor payload and kind-specific fields.
Adapter and run-state files reference their base model by parameter digest.
"""

import json
import logging
import os
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from config import LoraConfig, ModelConfig
from engine.autodiff import Tensor
from models.lora import AdaptedModel, LoraPair
from models.tiny_lm import Model, Vocab, parameter_shapes
from utils.errors import CorruptFile, MissingBase, VersionMismatch
from utils.helpers import sha256_bytes

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_LENGTH = struct.Struct('<Q')


def write_container(path, header, tensors):
    """tensors: list of (name, ndarray) in canonical order"""
    chunks = [np.ascontiguousarray(array, dtype='<f8').tobytes() for _, array in tensors]
    payload = b''.join(chunks)
    header = dict(header)
    header['format_version'] = FORMAT_VERSION
    header['tensors'] = [{'name': name, 'shape': list(np.shape(array))} for name, array in tensors]
    header['checksum'] = sha256_bytes(payload)
    encoded = json.dumps(header, ensure_ascii=False, sort_keys=True).encode('utf-8')

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + '.tmp')
    with open(temp_path, 'wb') as handle:
        handle.write(_LENGTH.pack(len(encoded)))
        handle.write(encoded)
        handle.write(payload)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(temp_path, path)


def read_container(path):
    """Returns (header, {name: ndarray}) after version and checksum checks"""
    with open(path, 'rb') as handle:
        blob = handle.read()

    if len(blob) < _LENGTH.size:
        raise CorruptFile(f'{path}: truncated header length')
    (length,) = _LENGTH.unpack_from(blob)
    if _LENGTH.size + length > len(blob):
        raise CorruptFile(f'{path}: truncated header')
    try:
        header = json.loads(blob[_LENGTH.size:_LENGTH.size + length].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CorruptFile(f'{path}: unreadable header')
    if not isinstance(header, dict):
        raise CorruptFile(f'{path}: unreadable header')

    version = header.get('format_version')
    if version != FORMAT_VERSION:
        raise VersionMismatch(f'{path}: format version {version}, expected {FORMAT_VERSION}')

    payload = blob[_LENGTH.size + length:]
    if sha256_bytes(payload) != header.get('checksum'):
        raise CorruptFile(f'{path}: payload checksum mismatch')

    arrays = {}
    offset = 0
    for entry in header.get('tensors', []):
        shape = tuple(entry['shape'])
        count = int(np.prod(shape, dtype=np.int64))
        if offset + count * 8 > len(payload):
            raise CorruptFile(f'{path}: payload shorter than declared tensors')
        array = np.frombuffer(payload, dtype='<f8', count=count, offset=offset)
        arrays[entry['name']] = array.astype(np.float64).reshape(shape)
        offset += count * 8
    if offset != len(payload):
        raise CorruptFile(f'{path}: payload longer than declared tensors')
    return header, arrays


def model_config_from(header):
    return ModelConfig(**header['model_config'])


def lora_config_from(header):
    return LoraConfig(**header['lora_config'])


def save_model(model, vocab, path, provenance=None):
    header = {
        'kind': 'model',
        'model_config': asdict(model.config),
        'vocab': vocab.to_dict(),
        'digest': model.digest(),
        'provenance': provenance or {},
    }
    write_container(path, header, [(name, tensor.data) for name, tensor in model.params.items()])
    logger.info('Saved model checkpoint %s', path)


def model_from_arrays(config, arrays, trainable=True):
    params = {}
    for name, shape in parameter_shapes(config).items():
        if name not in arrays or arrays[name].shape != shape:
            raise CorruptFile(f'checkpoint tensor "{name}" is missing or has the wrong shape')
        params[name] = Tensor(arrays[name], requires_grad=trainable, name=name)
    return Model(config, params)


def load_model(path):
    """Returns (Model, Vocab, header)"""
    header, arrays = read_container(path)
    if header.get('kind') == 'adapter':
        raise MissingBase(f'{path} holds adapters only; load it with its base checkpoint')
    if header.get('kind') != 'model':
        raise CorruptFile(f'{path}: not a model checkpoint')
    model = model_from_arrays(model_config_from(header), arrays)
    return model, Vocab.from_dict(header['vocab']), header


def adapters_from_arrays(lora_config, arrays, targets):
    adapters = {}
    for target in targets:
        names = (f'{target}.lora_a', f'{target}.lora_b')
        if any(name not in arrays for name in names):
            raise CorruptFile(f'adapter checkpoint is missing tensors for "{target}"')
        a = Tensor(arrays[names[0]], requires_grad=True, name=names[0])
        b = Tensor(arrays[names[1]], requires_grad=True, name=names[1])
        adapters[target] = LoraPair(target, a, b, lora_config.scaling)
    return adapters


def save_adapters(adapted, vocab, path, base_path, provenance=None):
    path = Path(path)
    header = {
        'kind': 'adapter',
        'model_config': asdict(adapted.config),
        'lora_config': dict(asdict(adapted.lora_config), targets=list(adapted.lora_config.targets)),
        'targets': list(adapted.adapters),
        'vocab': vocab.to_dict(),
        'base_checkpoint': os.path.relpath(Path(base_path).resolve(), path.resolve().parent),
        'base_digest': adapted.base.digest(),
        'provenance': provenance or {},
    }
    tensors = []
    for pair in adapted.adapters.values():
        tensors.append((pair.a.name, pair.a.data))
        tensors.append((pair.b.name, pair.b.data))
    write_container(path, header, tensors)
    logger.info('Saved adapter checkpoint %s', path)


def check_base(base, header, path):
    if base is None:
        raise MissingBase(f'{path} needs its base model')
    if base.digest() != header.get('base_digest'):
        raise MissingBase(f'{path}: base model parameters do not match the recorded digest')


def load_adapters(path, base=None):
    """Returns (AdaptedModel, Vocab, header); the base comes from the header path when not given"""
    path = Path(path)
    header, arrays = read_container(path)
    if header.get('kind') != 'adapter':
        raise CorruptFile(f'{path}: not an adapter checkpoint')

    if base is None:
        base_path = path.resolve().parent / header.get('base_checkpoint', '')
        if not base_path.is_file():
            raise MissingBase(f'{path}: base checkpoint {base_path} not found')
        base, _, _ = load_model(base_path)
    check_base(base, header, path)

    lora_config = lora_config_from(header)
    adapted = AdaptedModel(base.copy(trainable=False), lora_config,
                           adapters_from_arrays(lora_config, arrays, header['targets']))
    return adapted, Vocab.from_dict(header['vocab']), header


def load_any(path):
    """Model or AdaptedModel, whichever the file holds"""
    header, _ = read_container(path)
    if header.get('kind') == 'adapter':
        return load_adapters(path)
    return load_model(path)
