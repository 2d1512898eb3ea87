"""Peer-to-peer federated learning simulator with agreement-based update selection."""
from .nn import ModelSpec, OptimHyper, OptimizerState, ParamVector, init_params, loss_and_grad, predict_proba, train_local
from .data import LabeledDataset, PartitionConfig
from .agreement import AgreementConfig, AgreementReport, agreement_score, select_aggregation_set
from .aggregate import BaselineConfig, LightyearConfig
from .attacks import AttackSpec
from .sim import ConfigError, ExperimentConfig, RoundLog, run_experiment, run_round, simulate
from .config import parse_config

__version__ = "0.1.0"
