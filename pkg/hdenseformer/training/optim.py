from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..exceptions import HDenseFormerError
from ..nn import Parameter

__all__ = ('Adam',)


class Adam:
    """
    Adam with coupled L2 weight decay: the decay term is added to the gradient before
    the moment updates

        g = grad + weight_decay * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g^2
        w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    """

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3, betas: Tuple[float, float] = (0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.step_count += 1
        b1, b2 = self.betas
        correction1 = 1.0 - b1 ** self.step_count
        correction2 = 1.0 - b2 ** self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad + self.weight_decay * p.data if self.weight_decay else p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            p.data -= update.astype(p.dtype, copy=False)

    def state_dict(self) -> Dict:
        return {'step': self.step_count, 'lr': self.lr, 'm': [m.copy() for m in self.m],
                'v': [v.copy() for v in self.v]}

    def load_state_dict(self, state: Dict):
        if len(state['m']) != len(self.params) or len(state['v']) != len(self.params):
            raise HDenseFormerError('optimizer state does not match the parameter list')
        for p, m, v in zip(self.params, state['m'], state['v']):
            if m.shape != p.shape or v.shape != p.shape:
                raise HDenseFormerError(f'optimizer moment shape {m.shape} does not match parameter {p.shape}')
        self.step_count = int(state['step'])
        self.lr = float(state['lr'])
        self.m = [np.array(m, dtype=p.dtype) for p, m in zip(self.params, state['m'])]
        self.v = [np.array(v, dtype=p.dtype) for p, v in zip(self.params, state['v'])]
