"""ccskit: coded compressed sensing toolkit for the unsourced MAC.

Fragmented tree encoding and stitching, exact survivor analysis via
pattern-class generating functions, lazy Gaussian sensing matrices with
dynamic column pruning, and a reproducible Monte Carlo harness.
"""

__version__ = "0.1.0"

from .dyadic import Dyadic
from .gf2 import BinaryMatrix, BitBlock, collision_prob_fixed_G, mul_vec_mat, random_matrix, rank
from .treecode import (
    CodeProfile,
    Codeword,
    DecodeOutcome,
    ParityGenerator,
    SlotList,
    TreeStitcher,
    admissible_patterns,
    compute_parity,
    encode,
    prune_column_index_set,
    tree_decode,
)
from .analyzer import (
    GuardError,
    PatternSequence,
    SparsePgf,
    bell,
    class_size,
    enumerate_patterns,
    expected_survivors_approx,
    expected_survivors_exact,
    mc_survivor_oracle,
    pattern_of,
    pgf,
    prob_A,
    prob_E,
    reduction_ratio,
    stirling2,
)
from .slotcs import ChannelParams, SensingMatrix, SlotObservation, recover_support, transmit_slot
from .simharness import ExperimentConfig, TrialReport, measure_reduction, run_experiment
