"""Decentralized federated learning on a grid with mobile clients."""

from .config import DatasetConfig, SimulationConfig, TrainerConfig
from .consensus import consensus_contraction_metric, consensus_update, mixing_matrix
from .data import load_idx, synth_blobs
from .errors import ConfigError, ContractViolation, DatasetError, MobiDFLError, NumericalError
from .learning import ModelSpec, OptimizerState, evaluate, init_model, local_update, loss_and_gradient
from .metrics import read_metrics, write_metrics
from .mobility import (
    ClusterCenters,
    LocationDistributionMap,
    MobilityPlanner,
    MobilityState,
    Pattern,
    StaticInfo,
    advance_round,
    cluster_centers,
    dam_probabilities,
    dcm_probabilities,
    distribution_distance,
    distribution_map,
    location_distribution,
    step_random,
    step_toward,
)
from .partition import LabelDistribution, LabeledDataset, dirichlet_partition, label_histogram, normalize
from .simulation import MetricsRecord, run_round, run_simulation, sweep
from .topology import (
    CommGraph,
    GridLocation,
    build_comm_graph,
    connected_components,
    euclidean_distance,
    neighbors,
)

__version__ = "0.1.0"
