"""
binary checkpoint container

    struct '<8sII': magic b'HDFCKPT\\0', format version, header length
    header: canonical JSON with the model config echo, seed, epoch, metrics, the run
            config (optional), the ordered [name, shape] parameter list and the
            optimizer step / lr (or null)
    payload: every parameter as little-endian float32 in header order, followed by the
             optimizer's first moments and then its second moments in the same order
"""
import json
import os
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Union

import numpy as np

from ..exceptions import CheckpointError, ConfigError, HDenseFormerError
from ..model import HDenseFormer, ModelConfig
from .optim import Adam

__all__ = ('Checkpoint', 'CHECKPOINT_MAGIC', 'CHECKPOINT_VERSION', 'encode_checkpoint', 'decode_checkpoint',
           'save_checkpoint', 'load_checkpoint', 'restore_model')

CHECKPOINT_MAGIC = b'HDFCKPT\0'
CHECKPOINT_VERSION = 1
_PREAMBLE = struct.Struct('<8sII')
_FLOAT = np.dtype('<f4')

PathLike = Union[str, Path]


class Checkpoint(NamedTuple):
    model_config: ModelConfig
    seed: int
    epoch: int
    metrics: Dict[str, float]
    state: 'OrderedDict[str, np.ndarray]'
    optimizer: Optional[Dict]
    run: Optional[Dict]


def encode_checkpoint(model: HDenseFormer, optimizer: Optional[Adam] = None, epoch: int = 0,
                      metrics: Optional[Dict[str, float]] = None, run: Optional[Dict] = None) -> bytes:
    params = model.named_parameters()
    header = {
        'model': model.cfg.to_dict(),
        'seed': int(model.seed),
        'epoch': int(epoch),
        'metrics': {k: float(v) for k, v in (metrics or {}).items()},
        'run': run,
        'params': [[name, list(p.shape)] for name, p in params.items()],
        'optimizer': None if optimizer is None else {'step': optimizer.step_count, 'lr': float(optimizer.lr)},
    }
    raw_header = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')

    chunks = [_PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(raw_header)), raw_header]
    chunks.extend(np.ascontiguousarray(p.data, dtype=_FLOAT).tobytes() for p in params.values())
    if optimizer is not None:
        chunks.extend(np.ascontiguousarray(m, dtype=_FLOAT).tobytes() for m in optimizer.m)
        chunks.extend(np.ascontiguousarray(v, dtype=_FLOAT).tobytes() for v in optimizer.v)
    return b''.join(chunks)


def decode_checkpoint(raw: bytes, path: PathLike = '<memory>') -> Checkpoint:
    if len(raw) < _PREAMBLE.size:
        raise CheckpointError(path, 'file is shorter than the preamble')
    magic, version, header_length = _PREAMBLE.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(path, 'bad magic, not a checkpoint file')
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(path, f'unsupported version {version}, expected {CHECKPOINT_VERSION}')
    start = _PREAMBLE.size
    if start + header_length > len(raw):
        raise CheckpointError(path, f'header length {header_length} exceeds the file size {len(raw)}')

    try:
        header = json.loads(raw[start:start + header_length].decode('utf-8'))
        model_config = ModelConfig.from_dict(header['model'])
        names_shapes = [(str(name), tuple(int(n) for n in shape)) for name, shape in header['params']]
        opt = header['optimizer']
    except (UnicodeDecodeError, ValueError, KeyError, TypeError, ConfigError) as e:
        raise CheckpointError(path, f'malformed header: {e}') from None

    sizes = [int(np.prod(shape)) for _, shape in names_shapes]
    total = sum(sizes) * (3 if opt is not None else 1)
    payload = raw[start + header_length:]
    if len(payload) != total * _FLOAT.itemsize:
        raise CheckpointError(path, f'payload holds {len(payload)} bytes, expected {total * _FLOAT.itemsize}')

    values = np.frombuffer(payload, dtype=_FLOAT).astype(np.float32)
    arrays, offset = [], 0
    for _ in range(3 if opt is not None else 1):
        for (_, shape), size in zip(names_shapes, sizes):
            arrays.append(values[offset:offset + size].reshape(shape))
            offset += size

    n = len(names_shapes)
    state = OrderedDict((name, arrays[i]) for i, (name, _) in enumerate(names_shapes))
    optimizer = None
    if opt is not None:
        optimizer = {'step': int(opt['step']), 'lr': float(opt['lr']), 'm': arrays[n:2 * n], 'v': arrays[2 * n:]}
    return Checkpoint(model_config, int(header.get('seed', 0)), int(header.get('epoch', 0)),
                      dict(header.get('metrics') or {}), state, optimizer, header.get('run'))


def save_checkpoint(path: PathLike, model: HDenseFormer, optimizer: Optional[Adam] = None, epoch: int = 0,
                    metrics: Optional[Dict[str, float]] = None, run: Optional[Dict] = None) -> Path:
    """atomic: the bytes go to a temp file in the same folder which is then renamed over `path`"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = encode_checkpoint(model, optimizer, epoch, metrics, run)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as file:
        file.write(raw)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(path, 'file does not exist')
    with open(path, 'rb') as file:
        return decode_checkpoint(file.read(), path)


def restore_model(checkpoint: Checkpoint, path: PathLike = '<memory>') -> HDenseFormer:
    model = HDenseFormer(checkpoint.model_config, checkpoint.seed)
    try:
        model.load_state_dict(checkpoint.state)
    except HDenseFormerError as e:
        raise CheckpointError(path, f'parameters do not fit the configured model: {e}') from None
    return model
