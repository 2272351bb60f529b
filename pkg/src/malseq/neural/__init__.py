"""Sequence classifiers trained with hand-written backprop and Adam."""

from .adam import AdamState, adam_step
from .models import CnnModel, RnnModel, SequenceModel, bce_from_logits, forward, loss_and_grad
from .train import TrainConfig, gradient_check, numeric_gradient, train_neural

__all__ = [
    "AdamState",
    "CnnModel",
    "RnnModel",
    "SequenceModel",
    "TrainConfig",
    "adam_step",
    "bce_from_logits",
    "forward",
    "gradient_check",
    "loss_and_grad",
    "numeric_gradient",
    "train_neural",
]
