__all__ = ('poly_lr', 'POLY_EXPONENT')

POLY_EXPONENT = 0.9


def poly_lr(epoch: int, max_epochs: int, lr0: float, exponent: float = POLY_EXPONENT) -> float:
    """lr0 * (1 - epoch / max_epochs) ** exponent, for 0 <= epoch < max_epochs"""
    if max_epochs < 1:
        raise ValueError(f'max_epochs must be >= 1, got {max_epochs}')
    if not 0 <= epoch < max_epochs:
        raise ValueError(f'epoch {epoch} outside [0, {max_epochs})')
    return lr0 * (1.0 - epoch / max_epochs) ** exponent
