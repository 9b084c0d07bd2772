"""Dynamic time warping distance.

The accumulated cost follows D(i, j) = (t_i - s_j)^2 + min(D(i-1, j), D(i, j-1),
D(i-1, j-1)) with D(0, 0) = 0 and every other border cell at infinity. Only two
rows of length min(n, m) + 1 are kept. The compiled loops release the GIL so a
thread pool scales across cores.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numba as nb
import numpy as np

from ..cohort.models import TimeSeries
from ..errors import EmptySeries, InfeasibleBand, InvalidParameter, SeriesTooLong

logger = logging.getLogger(__name__)

SeriesLike = Union[TimeSeries, Sequence[float], np.ndarray]

BRUTEFORCE_MAX_LEN = 8
INFEASIBLE = -1.0


@dataclass(frozen=True)
class DtwConfig:
    """DTW settings shared by every pair of a job."""
    band: Optional[int] = None  # Sakoe-Chiba radius, None for unconstrained
    final_sqrt: bool = True
    local_cost: str = "squared-difference"

    def __post_init__(self):
        if self.band is not None and self.band < 0:
            raise InvalidParameter(f"band must be >= 0, got {self.band}")
        if self.local_cost != "squared-difference":
            raise InvalidParameter(f"unsupported local cost '{self.local_cost}'")

    @property
    def radius(self) -> int:
        return -1 if self.band is None else int(self.band)

    def to_dict(self) -> Dict[str, Any]:
        return {"band": self.band, "final_sqrt": self.final_sqrt, "local_cost": self.local_cost}


@nb.njit(nogil=True, cache=True)
def _two_row_cost(x, y, radius):
    # x is the longer series; rows run over x, columns over y
    n = x.shape[0]
    m = y.shape[0]
    if radius < 0:
        radius = n
    prev = np.full(m + 1, np.inf)
    curr = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[:] = np.inf
        lo = max(1, i - radius)
        hi = min(m, i + radius)
        xi = x[i - 1]
        for j in range(lo, hi + 1):
            d = xi - y[j - 1]
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = d * d + best
        prev, curr = curr, prev
    return prev[m]


@nb.njit(nogil=True, cache=True)
def _accumulated_cost(x, y, radius):
    if y.shape[0] > x.shape[0]:
        return _two_row_cost(y, x, radius)
    return _two_row_cost(x, y, radius)


@nb.njit(nogil=True, cache=True)
def _one_to_many(query, flat, offsets, radius, out):
    n = query.shape[0]
    for c in range(offsets.shape[0] - 1):
        candidate = flat[offsets[c]:offsets[c + 1]]
        if radius >= 0 and abs(n - candidate.shape[0]) > radius:
            out[c] = INFEASIBLE
        else:
            out[c] = _accumulated_cost(query, candidate, radius)


def _values(series: SeriesLike) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return np.ascontiguousarray(series.values)
    return np.ascontiguousarray(np.asarray(series, dtype=np.float64))


def dtw_distance(t: SeriesLike, s: SeriesLike, cfg: Optional[DtwConfig] = None) -> float:
    """DTW distance between two series.

    Args:
        t: First series (values, or a TimeSeries).
        s: Second series.
        cfg: DTW settings; unconstrained with a final square root by default.

    Returns:
        sqrt of the minimum accumulated squared-difference cost (the raw cost
        when cfg.final_sqrt is false).

    Raises:
        EmptySeries: If either series has no samples.
        InfeasibleBand: If the band radius is smaller than the length difference.
    """
    cfg = cfg or DtwConfig()
    x, y = _values(t), _values(s)
    if x.size == 0 or y.size == 0:
        raise EmptySeries("DTW needs two non-empty series")
    if cfg.band is not None and abs(x.size - y.size) > cfg.band:
        raise InfeasibleBand(f"band {cfg.band} cannot align lengths {x.size} and {y.size}")
    cost = float(_accumulated_cost(x, y, cfg.radius))
    return math.sqrt(cost) if cfg.final_sqrt else cost


def dtw_one_to_many(
    query: SeriesLike, candidates: Sequence[SeriesLike], cfg: Optional[DtwConfig] = None
) -> np.ndarray:
    """Distances from one series to many in a single compiled call.

    Pairs the band cannot align come back as NaN. Empty series are rejected.
    """
    cfg = cfg or DtwConfig()
    x = _values(query)
    arrays = [_values(c) for c in candidates]
    if x.size == 0 or any(a.size == 0 for a in arrays):
        raise EmptySeries("DTW needs non-empty series")
    out = np.empty(len(arrays), dtype=np.float64)
    if not arrays:
        return out

    offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([a.size for a in arrays])
    _one_to_many(x, np.concatenate(arrays), offsets, cfg.radius, out)

    infeasible = out == INFEASIBLE
    if cfg.final_sqrt:
        out = np.sqrt(np.where(infeasible, 0.0, out))
    out[infeasible] = np.nan
    return out


def dtw_distance_bruteforce(t: SeriesLike, s: SeriesLike) -> float:
    """Minimum over every monotone warping path, by exhaustive enumeration.

    Raises:
        EmptySeries: If either series is empty.
        SeriesTooLong: If either series is longer than 8 samples.
    """
    x, y = _values(t).tolist(), _values(s).tolist()
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise EmptySeries("DTW needs two non-empty series")
    if n > BRUTEFORCE_MAX_LEN or m > BRUTEFORCE_MAX_LEN:
        raise SeriesTooLong(f"path enumeration is limited to {BRUTEFORCE_MAX_LEN} samples")

    best = math.inf

    def walk(i: int, j: int, acc: float) -> None:
        nonlocal best
        acc += (x[i] - y[j]) ** 2
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            return
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return math.sqrt(best)


def warm_up() -> None:
    """Compile the kernels so timings exclude JIT work."""
    probe = np.array([0.0, 1.0, 2.0])
    dtw_distance(probe, probe[:2])
    dtw_one_to_many(probe, [probe, probe[:1]])
    dtw_one_to_many(probe, [probe], DtwConfig(band=1))
