"""Trace-driven cache simulator with a reinforcement-learning prefetcher.

The package simulates a single set-associative cache fed by a demand-access
trace, lets a pluggable prefetcher inject prefetch requests, and reports
coverage / accuracy / overprediction against a no-prefetch baseline run.
The centerpiece is an online RL prefetcher that learns cacheline offsets
from program features; PC-stride and next-N-line prefetchers are included
as reference points, along with sweep tools for exploring the design space.
"""

from .trace import (
    MemoryRequest,
    TraceSpec,
    ConstantStride,
    PagePair,
    RandomInPage,
    Interleaved,
    read_trace,
    write_trace,
    generate_trace,
    FormatError,
    SpecError,
)
from .memsim import CacheConfig, BandwidthConfig, Cache, BandwidthMonitor, PrefetchStats
from .features import FeatureSpec, FeatureExtractor, StateVector, parse_feature, enumerate_feature_space
from .qvstore import QVStore, storage_report
from .evalqueue import RewardLevel, RewardConfig, EQEntry, EvaluationQueue
from .agent import AgentConfig, RLPrefetcher, Simulation, RunResult, run_trace
from .baselines import StridePrefetcher, NextLinePrefetcher

__all__ = [
    "MemoryRequest",
    "TraceSpec",
    "ConstantStride",
    "PagePair",
    "RandomInPage",
    "Interleaved",
    "read_trace",
    "write_trace",
    "generate_trace",
    "FormatError",
    "SpecError",
    "CacheConfig",
    "BandwidthConfig",
    "Cache",
    "BandwidthMonitor",
    "PrefetchStats",
    "FeatureSpec",
    "FeatureExtractor",
    "StateVector",
    "parse_feature",
    "enumerate_feature_space",
    "QVStore",
    "storage_report",
    "RewardLevel",
    "RewardConfig",
    "EQEntry",
    "EvaluationQueue",
    "AgentConfig",
    "RLPrefetcher",
    "Simulation",
    "RunResult",
    "run_trace",
    "StridePrefetcher",
    "NextLinePrefetcher",
]
