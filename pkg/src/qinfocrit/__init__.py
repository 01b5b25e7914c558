"""Information criteria for quantum Hamiltonian-based models fitted to random-Pauli shot data."""
from .criteria import CriterionReport, select_model
from .fit import FitResult, fit_ll, fit_shadow
from .kernels import BACKEND
from .povm import MeasurementOutcome, OutcomeSet, sample_outcomes
from .qhbm import FrozenModel, QhbmModel, builtin_model, make_model

__version__ = "0.1.0"

__all__ = ["BACKEND", "CriterionReport", "FitResult", "FrozenModel", "MeasurementOutcome",
           "OutcomeSet", "QhbmModel", "builtin_model", "fit_ll", "fit_shadow", "make_model",
           "sample_outcomes", "select_model"]
