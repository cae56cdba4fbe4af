"""Degree-corrected exponential random graph models: exact small-n oracles,
MCMC samplers and detectors for planted degree heterogeneity."""
from .graph import Encoding, Graph, degrees
from .model import AlternativeSpec, Model, Regime, classify_regime
from .motifs import K2, K3, K12, SubgraphSpec, count_subgraph

__all__ = ["Encoding", "Graph", "degrees", "AlternativeSpec", "Model", "Regime",
           "classify_regime", "K2", "K3", "K12", "SubgraphSpec", "count_subgraph"]
__version__ = "0.1.0"
