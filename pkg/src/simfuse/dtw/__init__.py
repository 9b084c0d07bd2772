"""DTW kernel and per-variate distance blocks."""

from .kernel import (
    DtwConfig,
    dtw_distance,
    dtw_distance_bruteforce,
    dtw_one_to_many,
    warm_up,
)
from .blocks import (
    MISSING,
    VariateDistanceBlock,
    blocks_frame,
    compute_block,
    distance_block,
    is_missing,
    write_blocks_csv,
)

__all__ = [
    # Kernel
    'DtwConfig',
    'dtw_distance',
    'dtw_distance_bruteforce',
    'dtw_one_to_many',
    'warm_up',

    # Blocks
    'MISSING',
    'VariateDistanceBlock',
    'blocks_frame',
    'compute_block',
    'distance_block',
    'is_missing',
    'write_blocks_csv',
]
