"""Distribution parameter estimation with a small transformer trained on simulated samples."""
from .distributions import Family, Rng, SizeSpec, Task, draw_task, get_prior
from .encode import EncodingScheme, GridShape, decode_single, encode, locate
from .normalize import NormMode, NormRecord, normalize, recover_params
from .model import ModelConfig, init_model, forward, predict, preset_config
from .baselines import BaselineEstimator, make_baseline, mle_exponential, mle_normal, mom_beta
from .evaluation import EvalReport, evaluate, summarize, two_sample_t
from .pipeline import TransformerEstimator
from .trainer import TrainConfig, train

__version__ = "0.1.0"
