"""Fitted parameters of the static feature transforms."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np


class BinningMode(str, Enum):
    PER_UNIQUE_VALUE = "per-unique-value"
    EQUAL_FREQUENCY = "equal-frequency"


class TransformMethod(str, Enum):
    AWOE = "awoe"
    ZSCORE = "zscore"
    NONE = "none"


@dataclass(frozen=True)
class AwoeBinning:
    """aWOE bins of one feature fitted against one binary target."""
    feature: str
    mode: BinningMode
    # per-unique-value: the sorted distinct training values, one bin each
    # equal-frequency: quantile edges including the training min and max
    edges: Tuple[float, ...]
    bin_awoe: Tuple[float, ...]
    pos_counts: Tuple[int, ...]
    neg_counts: Tuple[int, ...]
    epsilon: float = 1e-4
    unique_threshold: int = 100
    q: int = 20

    @property
    def n_bins(self) -> int:
        return len(self.bin_awoe)

    def bin_indices(self, values: np.ndarray) -> np.ndarray:
        """Bin of each value; values outside the training range clamp to the end bins."""
        values = np.asarray(values, dtype=np.float64)
        edges = np.asarray(self.edges, dtype=np.float64)

        if self.mode is BinningMode.EQUAL_FREQUENCY:
            return np.searchsorted(edges[1:-1], values, side="right")

        # nearest training value, lower one on ties
        upper = np.clip(np.searchsorted(edges, values, side="left"), 0, edges.size - 1)
        lower = np.clip(upper - 1, 0, edges.size - 1)
        take_lower = np.abs(values - edges[lower]) <= np.abs(edges[upper] - values)
        return np.where(take_lower & (values != edges[upper]), lower, upper)

    def bin_index(self, value: float) -> int:
        return int(self.bin_indices(np.array([value]))[0])

    def to_dict(self) -> Dict[str, Any]:
        occupancy = [p + n for p, n in zip(self.pos_counts, self.neg_counts)]
        occupied = [size for size in occupancy if size > 0]
        return {
            "feature": self.feature,
            "mode": self.mode.value,
            "edges": list(self.edges),
            "bin_awoe": list(self.bin_awoe),
            "pos_counts": list(self.pos_counts),
            "neg_counts": list(self.neg_counts),
            "occupancy": occupancy,
            "min_bin_size": min(occupied) if occupied else 0,
            "epsilon": self.epsilon,
            "unique_threshold": self.unique_threshold,
            "q": self.q,
        }


@dataclass(frozen=True)
class ZScoreParams:
    feature: str
    mean: float
    std: float

    @property
    def degenerate(self) -> bool:
        return self.std == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"feature": self.feature, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class FittedTransform:
    """Everything fitted on the training split for one (method, target) pair."""
    method: TransformMethod
    target: str
    features: Tuple[str, ...]  # output schema, target excluded
    awoe: Dict[str, AwoeBinning] = field(default_factory=dict)
    zscore: Dict[str, ZScoreParams] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "method": self.method.value,
            "target": self.target,
            "features": list(self.features),
        }
        if self.method is TransformMethod.AWOE:
            payload["binnings"] = {name: b.to_dict() for name, b in self.awoe.items()}
        elif self.method is TransformMethod.ZSCORE:
            payload["params"] = {name: p.to_dict() for name, p in self.zscore.items()}
        return payload

    def param_file_name(self) -> Optional[str]:
        if self.method is TransformMethod.AWOE:
            return "binning.json"
        if self.method is TransformMethod.ZSCORE:
            return "zscore.json"
        return None
