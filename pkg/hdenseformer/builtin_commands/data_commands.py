from pathlib import Path

import numpy as np

from ..command import Command
from ..config import cfg, get_data_dir
from ..data import synth_dataset, save_image, save_mask
from ..enums import Mode
from ..exceptions import InvalidArgumentsError
from ..loss import validate_target
from ..util import CommandArgumentParser, parse_extents, parse_floats


@Command('synth', syntax='(--out DIR) (--cases N) (--mode 2d|3d) (--extents 32x32x32) (--modalities C) (--seed S) '
                         '(--spacing 1,1,1)',
         help='writes a synthetic multimodal dataset of MVol image/mask pairs')
def cmd_synth(*args):
    parser = CommandArgumentParser(cmd_synth)
    parser.add_argument('--out', default=None)
    parser.add_argument('--cases', type=int, default=4)
    parser.add_argument('--mode', choices=[m.value for m in Mode], default=Mode.THREE_D.value)
    parser.add_argument('--extents', type=parse_extents, default=None)
    parser.add_argument('--modalities', type=int, default=2)
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--spacing', type=parse_floats, default=None)
    ns = parser.parse_args(args)

    mode = Mode(ns.mode)
    extents = ns.extents or (32,) * mode.ndim
    if len(extents) != mode.ndim:
        raise InvalidArgumentsError(f'{mode.value} mode needs {mode.ndim} extents, got {len(extents)}', cmd_synth)
    if ns.spacing is not None and len(ns.spacing) != mode.ndim:
        raise InvalidArgumentsError(f'--spacing needs {mode.ndim} values', cmd_synth)

    out = Path(ns.out) if ns.out else get_data_dir()
    seed = ns.seed if ns.seed is not None else cfg.seed
    cases = synth_dataset(out, ns.cases, extents, ns.modalities, seed, ns.spacing, verbose=True)
    print(f'[SYNTH] wrote {len(cases)} cases to {out}')


@Command('convert', syntax='<input.npy> <output.mvol> (--spacing 1,1,1) (--mask)',
         help='wraps a numpy array, (C, *dims) image or (*dims) binary mask, into an MVol file')
def cmd_convert(*args):
    parser = CommandArgumentParser(cmd_convert)
    parser.add_argument('input')
    parser.add_argument('output')
    parser.add_argument('--spacing', type=parse_floats, default=None)
    parser.add_argument('--mask', action='store_true')
    ns = parser.parse_args(args)

    try:
        array = np.load(ns.input, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise InvalidArgumentsError(f'could not read {ns.input}: {e}', cmd_convert)

    spatial_ndim = array.ndim if ns.mask else array.ndim - 1
    if spatial_ndim not in (2, 3):
        raise InvalidArgumentsError(f'array of shape {array.shape} has no 2 or 3 spatial axes', cmd_convert)
    spacing = ns.spacing or (1.0,) * spatial_ndim
    if len(spacing) != spatial_ndim:
        raise InvalidArgumentsError(f'--spacing needs {spatial_ndim} values', cmd_convert)

    if ns.mask:
        save_mask(ns.output, validate_target(array).astype(np.uint8), spacing)
    else:
        save_image(ns.output, array.astype(np.float32), spacing)
    print(f'[CONVERT] {ns.input} {array.shape} -> {ns.output}')
