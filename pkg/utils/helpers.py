# Severity Curriculum - Arabic medical QA generation

import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path


def derive_seed(seed, component):
    """Fan a run seed out to an independent per-component seed"""
    digest = hashlib.sha256(f'{int(seed)}:{component}'.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little') & 0x7FFFFFFFFFFFFFFF


def sha256_bytes(payload):
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path):
    """Hash a file in chunks"""
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def utc_timestamp():
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


def atomic_write_json(path, data):
    """Write JSON through a temp file so readers never see a partial document"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + '.tmp')
    with open(temp_path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write('\n')
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(temp_path, path)


def read_json(path):
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def format_delta(new, old):
    """Signed difference of two percentage values, e.g. +9.17"""
    return f'{new - old:+.2f}'
