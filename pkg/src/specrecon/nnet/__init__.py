"""Numpy implementation of ReSpecNN: layers, model, Adam, training and checkpoints."""

from .adam import AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .model import ReSpecNN, RespecArch
from .preprocess import log_min_max, log_min_max_rows
from .train import ModelCheckpoint, TrainConfig, reconstruct, reconstruct_batch, train
