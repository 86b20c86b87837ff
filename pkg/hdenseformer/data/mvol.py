"""
MVol, a minimal multimodal volume container

layout:
    b'MVOL <version> <header_length>\\n'
    header: canonical JSON (sorted keys, compact separators, utf-8) with
        dims        spatial extents, 2 or 3 positive ints
        modalities  channel count C >= 1
        spacing     voxel size in mm per spatial axis
        dtype       'float32' for images, 'uint8' for masks
    payload: little-endian values in C order over (C, *dims), modality-major

readers validate the whole file before returning anything, writers always emit the
canonical header so write(read(f)) reproduces a file this module wrote byte for byte
"""
import json
import os
from pathlib import Path
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from ..exceptions import MVolFormatError

__all__ = ('MVolume', 'MVOL_MAGIC', 'MVOL_VERSION', 'encode_mvol', 'decode_mvol', 'write_mvol', 'read_mvol',
           'save_image', 'save_mask', 'load_image', 'load_mask')

MVOL_MAGIC = 'MVOL'
MVOL_VERSION = 1
_DTYPES = {'float32': np.dtype('<f4'), 'uint8': np.dtype('u1')}
_MAX_PREAMBLE = 64

PathLike = Union[str, Path]


class MVolume(NamedTuple):
    data: np.ndarray
    spacing: Tuple[float, ...]

    @property
    def modalities(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.data.shape[1:]


def _header(volume: MVolume) -> dict:
    dtype = next((name for name, dt in _DTYPES.items() if dt == volume.data.dtype.newbyteorder('<')), None)
    if dtype is None:
        raise MVolFormatError('<memory>', f'unsupported dtype {volume.data.dtype}, use float32 or uint8')
    return {
        'dims': [int(n) for n in volume.dims],
        'modalities': int(volume.modalities),
        'spacing': [float(s) for s in volume.spacing],
        'dtype': dtype,
    }


def encode_mvol(volume: MVolume) -> bytes:
    if volume.data.ndim not in (3, 4) or len(volume.spacing) != volume.data.ndim - 1:
        raise MVolFormatError('<memory>', f'expected (C, *dims) data with one spacing per axis, got '
                                          f'{volume.data.shape} and {volume.spacing}')
    header = json.dumps(_header(volume), sort_keys=True, separators=(',', ':')).encode('utf-8')
    preamble = f'{MVOL_MAGIC} {MVOL_VERSION} {len(header)}\n'.encode('ascii')
    payload = np.ascontiguousarray(volume.data, dtype=_DTYPES[_header(volume)['dtype']]).tobytes(order='C')
    return preamble + header + payload


def _parse_preamble(raw: bytes, path) -> Tuple[int, int]:
    end = raw.find(b'\n', 0, _MAX_PREAMBLE)
    if end < 0:
        raise MVolFormatError(path, 'missing or oversized preamble line')
    parts = raw[:end].split(b' ')
    if len(parts) != 3 or parts[0] != MVOL_MAGIC.encode('ascii'):
        raise MVolFormatError(path, 'bad magic, not an MVol file')
    try:
        version, header_length = int(parts[1]), int(parts[2])
    except ValueError:
        raise MVolFormatError(path, 'preamble version and header length must be integers') from None
    if version != MVOL_VERSION:
        raise MVolFormatError(path, f'unsupported version {version}, expected {MVOL_VERSION}')
    if header_length <= 0 or end + 1 + header_length > len(raw):
        raise MVolFormatError(path, f'header length {header_length} exceeds the file size {len(raw)}')
    return end + 1, header_length


def _validate_header(header, path) -> Tuple[Tuple[int, ...], int, Tuple[float, ...], np.dtype]:
    if not isinstance(header, dict) or set(header) != {'dims', 'modalities', 'spacing', 'dtype'}:
        raise MVolFormatError(path, 'header must hold exactly dims, modalities, spacing and dtype')
    dims, modalities, spacing, dtype = header['dims'], header['modalities'], header['spacing'], header['dtype']
    if (not isinstance(dims, list) or len(dims) not in (2, 3)
            or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in dims)):
        raise MVolFormatError(path, f'dims must be 2 or 3 positive integers, got {dims!r}')
    if not isinstance(modalities, int) or isinstance(modalities, bool) or modalities < 1:
        raise MVolFormatError(path, f'modalities must be a positive integer, got {modalities!r}')
    if (not isinstance(spacing, list) or len(spacing) != len(dims)
            or not all(isinstance(s, (int, float)) and not isinstance(s, bool) and s > 0 for s in spacing)):
        raise MVolFormatError(path, f'spacing must hold {len(dims)} positive numbers, got {spacing!r}')
    if dtype not in _DTYPES:
        raise MVolFormatError(path, f'dtype must be one of {sorted(_DTYPES)}, got {dtype!r}')
    return tuple(dims), modalities, tuple(float(s) for s in spacing), _DTYPES[dtype]


def decode_mvol(raw: bytes, path: PathLike = '<memory>') -> MVolume:
    start, header_length = _parse_preamble(raw, path)
    try:
        header = json.loads(raw[start:start + header_length].decode('utf-8'))
    except (UnicodeDecodeError, ValueError) as e:
        raise MVolFormatError(path, f'header is not valid JSON: {e}') from None
    dims, modalities, spacing, dtype = _validate_header(header, path)

    payload = raw[start + header_length:]
    expected = int(np.prod(dims)) * modalities * dtype.itemsize
    if len(payload) != expected:
        raise MVolFormatError(path, f'payload holds {len(payload)} bytes, expected {expected}')
    data = np.frombuffer(payload, dtype=dtype).reshape((modalities,) + dims).astype(dtype.newbyteorder('='))
    return MVolume(data, spacing)


def write_mvol(path: PathLike, volume: MVolume):
    """writes to a sibling temp file first, then renames over the target"""
    path = Path(path)
    raw = encode_mvol(volume)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as file:
        file.write(raw)
    os.replace(tmp, path)


def read_mvol(path: PathLike) -> MVolume:
    with open(path, 'rb') as file:
        return decode_mvol(file.read(), path)


def save_image(path: PathLike, image: np.ndarray, spacing: Sequence[float]):
    write_mvol(path, MVolume(np.asarray(image, dtype=np.float32), tuple(spacing)))


def save_mask(path: PathLike, mask: np.ndarray, spacing: Sequence[float]):
    write_mvol(path, MVolume(np.asarray(mask, dtype=np.uint8)[np.newaxis], tuple(spacing)))


def load_image(path: PathLike) -> MVolume:
    volume = read_mvol(path)
    if volume.data.dtype != np.float32:
        raise MVolFormatError(path, f'expected a float32 image, got {volume.data.dtype}')
    return volume


def load_mask(path: PathLike) -> MVolume:
    """mask volumes come back with the modality axis dropped"""
    volume = read_mvol(path)
    if volume.data.dtype != np.uint8 or volume.modalities != 1:
        raise MVolFormatError(path, 'expected a single-channel uint8 mask')
    return MVolume(volume.data[0], volume.spacing)
