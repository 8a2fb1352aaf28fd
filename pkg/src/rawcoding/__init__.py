"""Raw coding of chaotic interval maps and coinciding code windows."""

__version__ = "0.1.0"

from .baselines import (
    BernoulliSpec,
    MarkovChainSpec,
    StochasticMatrix,
    is_primitive,
    run_waiting,
    window_match_probability,
)
from .coding import (
    Partition,
    SymbolStream,
    binary_partition,
    bridge_partition,
    dyadic_partition,
    encode_point,
    encode_trajectory,
    preimage,
    refine,
)
from .coincidence import (
    CoincidenceQuery,
    agreement_stream,
    bridge_scenario,
    find_window,
    hitting_experiment,
    max_run,
    quadrant_of,
)
from .diagnostics import (
    correlation_exact,
    correlation_mc,
    ergodic_block_report,
    ulam_matrix,
    weak_mixing_series,
)
from .dynamics import (
    IntervalMap,
    TrajectorySource,
    eval_map,
    iterate,
    make_bridge_map,
    make_doubling,
    make_rotation,
    sample_initial,
)
from .intervals import IntervalSet
from .rng import SeedSpec
