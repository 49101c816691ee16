"""Bayesian classification with local probabilistic models."""

from .classifier import ClassifierConfig, LossMatrix, Prediction, predict, predict_batch, predict_named, score
from .core import Dataset, InfeasibleError, InvalidInputError, LPMError, Rng, apply_scaler, fit_scaler
from .evaluation import EvalReport, cross_test, select_hyperparams, sweep
from .lpm import LCA, LGA, LUA, Assumption
from .neighborhood import Metric, Mode, NeighborhoodMode

__version__ = "0.1.0"
