"""Information utility of generalized token bucket regulators."""

from .entropy import (
    EntropySolution,
    StagePmf,
    information_utility,
    optimal_pmf,
    oracle_utility,
    per_schedule_information,
    sample_schedule,
    solve,
)
from .errors import (
    EnumerationTooLarge,
    GtbrError,
    HorizonMismatch,
    NonConforming,
    PayloadExhausted,
    ResourceLimit,
    StateOutOfRange,
)
from .optimizer import SearchOutcome, SearchProblem, search
from .regulator import (
    RegulatorSpec,
    ReachabilityProfile,
    Schedule,
    StbrSpec,
    evolve,
    reachability,
    validate_comparison,
)

__version__ = "0.1.0"
