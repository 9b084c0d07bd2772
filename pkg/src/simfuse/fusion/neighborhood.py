"""Per-variate nearest neighborhoods, their fusion and the majority vote."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from ..dtw.blocks import VariateDistanceBlock
from ..errors import InvalidParameter

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1

Neighbor = Tuple[str, float]


@dataclass(frozen=True)
class NeighborhoodFusion:
    """Union, with multiplicity, of a target's per-variate neighborhoods."""
    target_id: str
    per_variate_nn: Dict[str, List[Neighbor]]  # variate -> (neighbor, distance), nearest first
    fused_votes: Counter = field(default_factory=Counter)  # label -> count
    lam: int = DEFAULT_LAMBDA

    @property
    def votes_pos(self) -> int:
        return self.fused_votes.get(1, 0)

    @property
    def votes_neg(self) -> int:
        return self.fused_votes.get(0, 0)

    @property
    def total_votes(self) -> int:
        return self.votes_pos + self.votes_neg

    def nearest_overall(self) -> Optional[Neighbor]:
        """The single closest neighbor across variates; ties go to the lower id."""
        candidates = [nn for neighbors in self.per_variate_nn.values() for nn in neighbors]
        if not candidates:
            return None
        return min(candidates, key=lambda nn: (nn[1], nn[0]))

    def neighbor_set(self) -> Tuple[Tuple[str, str], ...]:
        """(variate, neighbor) occurrences, which determine the votes."""
        return tuple(
            (variate, neighbor)
            for variate, neighbors in self.per_variate_nn.items()
            for neighbor, _ in neighbors
        )


def _check_lambda(lam: int) -> None:
    if lam < 1:
        raise InvalidParameter(f"lambda must be >= 1, got {lam}")


def nearest_neighbors(block: VariateDistanceBlock, target_id: str, lam: int = DEFAULT_LAMBDA) -> List[Neighbor]:
    """The lam closest candidates of target_id in one variate.

    Missing pairs are skipped, so the list is shorter than lam when candidates
    are scarce and empty when the whole row is missing.

    Raises:
        UnknownTarget: If target_id is not a row of the block.
    """
    _check_lambda(lam)
    candidates, distances = block.row(target_id)
    finite = np.flatnonzero(~np.isnan(distances))
    if finite.size == 0:
        return []
    # candidates are in ascending id order, so a stable sort breaks ties by id
    order = finite[np.argsort(distances[finite], kind="stable")][:lam]
    return [(candidates[i], float(distances[i])) for i in order]


def fuse(
    blocks: Iterable[VariateDistanceBlock],
    target_id: str,
    lam: int,
    labels: Mapping[str, int],
) -> NeighborhoodFusion:
    """Collect the neighborhoods of target_id over all variates.

    Args:
        blocks: One block per configured variate.
        target_id: Target patient.
        lam: Neighbors kept per variate.
        labels: Training label of every possible neighbor.

    Returns:
        The fusion; a neighbor found under several variates votes once per variate.
    """
    _check_lambda(lam)
    per_variate: Dict[str, List[Neighbor]] = {}
    for block in sorted(blocks, key=lambda b: b.variate_id):
        neighbors = nearest_neighbors(block, target_id, lam)
        if neighbors:
            per_variate[block.variate_id] = neighbors

    votes: Counter = Counter()
    for neighbors in per_variate.values():
        for neighbor_id, _ in neighbors:
            votes[int(labels[neighbor_id])] += 1
    return NeighborhoodFusion(target_id, per_variate, votes, lam)


def training_positive_rate(train_labels: Mapping[str, int]) -> float:
    if not train_labels:
        return 0.0
    return sum(int(v) for v in train_labels.values()) / len(train_labels)


def predict(fusion: NeighborhoodFusion, train_labels: Mapping[str, int]) -> Tuple[int, float]:
    """Majority label of the fused votes and the positive-vote fraction.

    An even split takes the label of the globally nearest neighbor. A target
    without any vote gets the training majority and the training positive rate.
    """
    pos, neg = fusion.votes_pos, fusion.votes_neg
    if pos + neg == 0:
        rate = training_positive_rate(train_labels)
        logger.debug(f"Target {fusion.target_id} has no votes, falling back to prior {rate:.3f}")
        return (1 if rate > 0.5 else 0), rate

    score = pos / (pos + neg)
    if pos > neg:
        return 1, score
    if neg > pos:
        return 0, score
    nearest = fusion.nearest_overall()
    return int(train_labels[nearest[0]]), score
