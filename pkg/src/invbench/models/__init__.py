from .autoregressive import MaskedARModel
from .base import Model, NotTrainedError, Standardizer, load_checkpoint, save_checkpoint
from .coupling import ConditionError, CouplingHalf, FlowModel
from .feedforward import CVAE, Autoencoder
from .invauto import InvAuto
from .iresnet import IResNet, NonConvergenceError
from .mdn import GMM, MDN, gmm_log_prob, gmm_sample
from .registry import MODEL_KINDS, MODEL_TRAITS, build_model, loss_spec_for, width_for_budget
from .training import TrainResult, TrainSchedule, TrainingDivergedError, make_optimizer, train

__all__ = [
    "MaskedARModel", "Model", "NotTrainedError", "Standardizer",
    "load_checkpoint", "save_checkpoint",
    "ConditionError", "CouplingHalf", "FlowModel",
    "CVAE", "Autoencoder", "InvAuto", "IResNet", "NonConvergenceError",
    "GMM", "MDN", "gmm_log_prob", "gmm_sample",
    "MODEL_KINDS", "MODEL_TRAITS", "build_model", "loss_spec_for", "width_for_budget",
    "TrainResult", "TrainSchedule", "TrainingDivergedError", "make_optimizer", "train",
]
