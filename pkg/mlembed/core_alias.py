from __future__ import annotations

from typing import Sequence

import numpy as np


class AliasTable:
    """Walker/Vose alias table: O(n) build, O(1) per draw."""

    def __init__(self, weights: Sequence[float]) -> None:
        probs = np.asarray(weights, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("AliasTable necesita al menos un peso")
        total = float(probs.sum())
        if not np.isfinite(total) or total <= 0 or np.any(probs < 0):
            raise ValueError("AliasTable necesita pesos no negativos con suma positiva")
        n = probs.size
        scaled = probs * (n / total)
        prob = np.ones(n, dtype=np.float64)
        alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            small_index = small.pop()
            large_index = large.pop()
            prob[small_index] = scaled[small_index]
            alias[small_index] = large_index
            scaled[large_index] = scaled[large_index] - (1.0 - scaled[small_index])
            if scaled[large_index] < 1.0:
                small.append(large_index)
            else:
                large.append(large_index)
        # Leftovers are 1 up to rounding.
        self.prob = prob
        self.alias = alias

    def __len__(self) -> int:
        return int(self.prob.size)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size <= 0:
            return np.empty(0, dtype=np.int64)
        idx = rng.integers(0, self.prob.size, size=size)
        coin = rng.random(size)
        return np.where(coin < self.prob[idx], idx, self.alias[idx])

    def probabilities(self) -> np.ndarray:
        n = self.prob.size
        out = self.prob / n
        np.add.at(out, self.alias, (1.0 - self.prob) / n)
        return out
