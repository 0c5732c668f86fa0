from .checkpoint import load_checkpoint, save_checkpoint
from .params import MODEL_KINDS, PARAM_ORDER, ModelParams, SparseGrad, init_params
from .sequence import (concat_loss_and_grad, concat_proba, rnn_loss_and_grad, rnn_proba,
                       skipgram_loss_and_grad)
from .trainer import (LossBreakdown, TrainConfig, TrainingError, TrainResult, joint_step, train,
                      transe_step)
from .transe import (batch_distances, corrupt_batch, kg_loss_and_grad, negative_sample,
                     transe_distance)

__all__ = [
    "MODEL_KINDS", "PARAM_ORDER", "ModelParams", "SparseGrad", "init_params",
    "TrainConfig", "TrainResult", "TrainingError", "LossBreakdown", "joint_step", "train",
    "transe_step", "transe_distance", "batch_distances", "kg_loss_and_grad",
    "negative_sample", "corrupt_batch", "skipgram_loss_and_grad", "concat_loss_and_grad",
    "concat_proba", "rnn_loss_and_grad", "rnn_proba", "save_checkpoint", "load_checkpoint",
]
