"""
Seeded train/validation/test partitioning.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple, TypeVar

import numpy as np

Item = TypeVar('Item')

FRACTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SplitSpec:
    """Train, validation and test fractions summing to one."""
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1

    def __post_init__(self):
        fractions = (self.train, self.val, self.test)
        if any(f < 0 for f in fractions):
            raise ValueError(f"Split fractions must be nonnegative, got {fractions}")
        if abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
            raise ValueError(f"Split fractions must sum to 1, got {fractions} (sum {sum(fractions)})")

    @classmethod
    def parse(cls, text: str) -> 'SplitSpec':
        """Read '80/10/10' or '0.8,0.1,0.1'."""
        parts = [p for p in text.replace(',', '/').split('/') if p.strip()]
        if len(parts) != 3:
            raise ValueError(f"A split needs three fractions, got {text!r}")
        values = [float(p) for p in parts]
        total = sum(values)
        if total > 1.0 + FRACTION_TOLERANCE:
            values = [v / total for v in values]
        return cls(*values)

    def sizes(self, count: int) -> Tuple[int, int, int]:
        """Partition sizes; rounding leftovers go to the training part."""
        n_val = int(round(self.val * count))
        n_test = int(round(self.test * count))
        n_val = min(n_val, count)
        n_test = min(n_test, count - n_val)
        return count - n_val - n_test, n_val, n_test


def split(items: Sequence[Item], spec: SplitSpec = SplitSpec(), seed: int = 0) -> Tuple[List[Item], List[Item], List[Item]]:
    """
    Shuffle with a seed, then cut into (train, val, test).

    The parts are disjoint and together hold every item exactly once.
    """
    order = np.random.default_rng(seed).permutation(len(items))
    n_train, n_val, _ = spec.sizes(len(items))
    shuffled = [items[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:n_train + n_val], shuffled[n_train + n_val:]
