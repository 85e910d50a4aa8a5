"""Rate regions and finite-blocklength simulation for Gaussian broadcast channels with receiver side information."""

from .caps import Caps, ResourceCapError
from .channel import ChannelConfig, capacity_c, sample_noise_degraded_chain, sample_noise_independent
from .codec import MessageConfig, SchemeId, build_codebooks, encode, gen_codebook
from .decode import DecodeStrategy, candidate_set, decode_receiver, ml_decode
from .montecarlo import Scenario, TrialStats, compare_schemes, run_trials, sweep_blocklength
from .regions import RateTriple, StrategyRegion, boundary_point, gap_witness, in_capacity_region, in_multiplex_region

__version__ = "0.1.0"

__all__ = [
    "Caps",
    "ChannelConfig",
    "DecodeStrategy",
    "MessageConfig",
    "RateTriple",
    "ResourceCapError",
    "Scenario",
    "SchemeId",
    "StrategyRegion",
    "TrialStats",
    "boundary_point",
    "build_codebooks",
    "candidate_set",
    "capacity_c",
    "compare_schemes",
    "decode_receiver",
    "encode",
    "gap_witness",
    "gen_codebook",
    "in_capacity_region",
    "in_multiplex_region",
    "ml_decode",
    "run_trials",
    "sample_noise_degraded_chain",
    "sample_noise_independent",
    "sweep_blocklength",
]
