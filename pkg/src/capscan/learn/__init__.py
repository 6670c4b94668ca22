from .mlp import Mlp, flatten_params, unflatten_like
from .optim import Adam, linear_lr
from .gae import gae
from .policy import GaussianPolicy, gaussian_logprob, squashed_logprob
from .ppo import PpoConfig, PpoTrainer
from .sac import ReplayBuffer, SacConfig, SacTrainer
from .checkpoint import load_checkpoint, save_checkpoint
from .train import TrainStats, train

__all__ = [
    "Mlp",
    "flatten_params",
    "unflatten_like",
    "Adam",
    "linear_lr",
    "gae",
    "GaussianPolicy",
    "gaussian_logprob",
    "squashed_logprob",
    "PpoConfig",
    "PpoTrainer",
    "SacConfig",
    "SacTrainer",
    "ReplayBuffer",
    "save_checkpoint",
    "load_checkpoint",
    "TrainStats",
    "train",
]
