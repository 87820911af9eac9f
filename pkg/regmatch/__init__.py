"""regmatch - perfect matchings in regular bipartite graphs by random walks."""

__version__ = "0.1.0"

from regmatch.adversary import (
    Adversary,
    GameResult,
    GreedyAugmentingProber,
    SequentialScanProber,
    replay_transcript,
    run_game,
)
from regmatch.baselines import (
    euler_coloring,
    euler_matching,
    euler_split,
    hopcroft_karp,
)
from regmatch.bvn import (
    StochasticSupportMatrix,
    decompose,
    extract_matching,
    find_support_matching,
    load_matrix,
)
from regmatch.config import (
    Settings,
    configure,
    get_config,
    get_settings,
    reset_settings,
)
from regmatch.decorators import verified
from regmatch.exceptions import (
    AdversaryError,
    BoundCheckError,
    GraphFormatError,
    InvalidGraphError,
    NotDoublyStochasticError,
    ProberContractError,
    RegmatchError,
    SamplerError,
    SupportError,
    VerificationError,
    WalkCapExceededError,
)
from regmatch.graph import (
    BipartiteRegularGraph,
    CanonicalGraph,
    Matching,
    gen_canonical,
    gen_union_permutations,
    validate,
    verify_matching,
)
from regmatch.models import (
    BenchRecord,
    BvnDecomposition,
    BvnTerm,
    PhaseStats,
    ValidationReport,
    WalkStats,
)
from regmatch.sampler import PrefixWeightIndex
from regmatch.walk import (
    HVertex,
    WalkOutcome,
    augment,
    budget,
    find_perfect_matching,
    loop_erase,
    sample_out_edge,
    truncated_walk,
)

__all__ = [
    "BipartiteRegularGraph",
    "Matching",
    "CanonicalGraph",
    "validate",
    "verify_matching",
    "gen_union_permutations",
    "gen_canonical",
    "HVertex",
    "WalkOutcome",
    "budget",
    "sample_out_edge",
    "truncated_walk",
    "loop_erase",
    "augment",
    "find_perfect_matching",
    "PrefixWeightIndex",
    "StochasticSupportMatrix",
    "load_matrix",
    "find_support_matching",
    "extract_matching",
    "decompose",
    "hopcroft_karp",
    "euler_split",
    "euler_matching",
    "euler_coloring",
    "Adversary",
    "GameResult",
    "SequentialScanProber",
    "GreedyAugmentingProber",
    "run_game",
    "replay_transcript",
    "verified",
    "Settings",
    "configure",
    "get_config",
    "get_settings",
    "reset_settings",
    "RegmatchError",
    "InvalidGraphError",
    "GraphFormatError",
    "VerificationError",
    "SamplerError",
    "NotDoublyStochasticError",
    "SupportError",
    "WalkCapExceededError",
    "AdversaryError",
    "ProberContractError",
    "BoundCheckError",
    "ValidationReport",
    "PhaseStats",
    "WalkStats",
    "BvnTerm",
    "BvnDecomposition",
    "BenchRecord",
]
