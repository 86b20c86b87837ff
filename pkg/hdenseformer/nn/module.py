from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from ..exceptions import HDenseFormerError, ShapeError
from ..tensor import Tensor

__all__ = ('Parameter', 'Module', 'ModuleList')


class Parameter(Tensor):
    """trainable leaf tensor, always part of the gradient tape"""

    def __init__(self, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)

    def __repr__(self):
        return f'<Parameter shape={self.shape} dtype={self.dtype}>'


class Module:
    """
    base for every network component

    parameters and sub-modules assigned as attributes are registered in assignment order,
    that order defines the dotted names used by `named_parameters` and checkpoints
    """

    def __init__(self):
        object.__setattr__(self, '_parameters', OrderedDict())
        object.__setattr__(self, '_modules', OrderedDict())

    def __setattr__(self, key, value):
        if '_parameters' not in self.__dict__:
            raise HDenseFormerError(f'{type(self).__name__}.__init__ must call Module.__init__ before assigning {key}')
        self._parameters.pop(key, None)
        self._modules.pop(key, None)
        if isinstance(value, Parameter):
            self._parameters[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def children(self) -> Iterator[Tuple[str, 'Module']]:
        yield from self._modules.items()

    def named_parameters(self, prefix: str = '') -> 'OrderedDict[str, Parameter]':
        out = OrderedDict()
        for name, param in self._parameters.items():
            out[prefix + name] = param
        for name, module in self._modules.items():
            out.update(module.named_parameters(prefix=f'{prefix}{name}.'))
        return out

    def parameters(self) -> List[Parameter]:
        return list(self.named_parameters().values())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self):
        for param in self.parameters():
            param.zero_grad()

    def astype(self, dtype) -> 'Module':
        """casts every parameter in place, used to move a float32 model into float64 for gradient checks"""
        for param in self.parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, param.data.copy()) for name, param in self.named_parameters().items())

    def load_state_dict(self, state: Mapping[str, np.ndarray]):
        params = self.named_parameters()
        missing = [name for name in params if name not in state]
        unexpected = [name for name in state if name not in params]
        if missing or unexpected:
            raise HDenseFormerError(f'state does not match the module, missing: {missing}, unexpected: {unexpected}')

        for name, param in params.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ShapeError('load_state_dict', param.shape, value.shape, hint=f'parameter {name}')
            param.data = value.astype(param.dtype, copy=True)
            param.grad = None

    def __repr__(self):
        return f'<{type(self).__name__} params={self.num_parameters()}>'


class ModuleList(Module):
    """ordered container, children are named by their index"""

    def __init__(self, modules=()):
        super().__init__()
        object.__setattr__(self, '_items', [])
        for module in modules:
            self.append(module)

    def append(self, module: Module):
        self._modules[str(len(self._items))] = module
        self._items.append(module)

    def __getitem__(self, index) -> Module:
        return self._items[index]

    def __len__(self):
        return len(self._items)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)
