"""Counter braids: graph ensembles, message-passing decoders and density evolution."""

from . import codec, csbridge, de, decode, graphs, harness, layers, scde
from .codec import FlowSizeDist, LayerConfig, encode, encode_layers, ingest_trace, sample_flow_sizes
from .de import area_threshold, beta_bp, eps_bp, potential_threshold
from .decode import bp_decode, bp_decode_equiv, maxwell_decode, ml_oracle, peel_decode
from .errors import (BraidlabError, BracketError, ConvergenceError, NothingResidualError, ParameterError,
                     ResourceError, SingularPointError, StructuralError, TruncationError)
from .graphs import CbGraph, EnsembleParams, ScParams, build_equivalent_graph, sample_coupled_graph, sample_graph
from .scde import beta_bp_coupled, design_rate, eps_bp_coupled

__version__ = "0.1.0"
