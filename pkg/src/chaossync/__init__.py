"""Recovery of a chaotic drive signal from noisy observations.

A Lorenz transmitter broadcasts its x component over an AWGN channel; the
receiver denoises the observation with an untrained convolutional generator,
estimates the unknown initial condition with a genetic algorithm, and rebuilds
the remaining attractor components through the driven response subsystem.  A
trainable GRU denoiser and the conventional coupled-receiver serve as
baselines.
"""

__version__ = "1.0.0"

from .channel import ChannelConfig, RngStream, awgn
from .dip import DipResult, GeneratorConfig, GeneratorNet, dip_optimize
from .dynamics import (
    HenonParams,
    LorenzParams,
    RosslerParams,
    henon_trajectory,
    integrate_response,
    lorenz_trajectory,
    rossler_trajectory,
)
from .ga import FitnessContext, GaConfig, GaResult, ga_run
from .pipeline import (
    MetricsReport,
    ReceiverOutput,
    avg_amplitude_error,
    avg_sync_error,
    conventional_receive,
    dcs_receive,
    ga_only_receive,
    rnn_receive,
    segment_experiment,
)
from .rnn import GruSeq2Seq, RnnConfig, load_weights, rnn_denoise, save_weights, train_rnn
from .signals import Signal, Trajectory3

__all__ = [
    "ChannelConfig",
    "DipResult",
    "FitnessContext",
    "GaConfig",
    "GaResult",
    "GeneratorConfig",
    "GeneratorNet",
    "GruSeq2Seq",
    "HenonParams",
    "LorenzParams",
    "MetricsReport",
    "ReceiverOutput",
    "RnnConfig",
    "RngStream",
    "RosslerParams",
    "Signal",
    "Trajectory3",
    "avg_amplitude_error",
    "avg_sync_error",
    "awgn",
    "conventional_receive",
    "dcs_receive",
    "dip_optimize",
    "ga_only_receive",
    "ga_run",
    "henon_trajectory",
    "integrate_response",
    "load_weights",
    "lorenz_trajectory",
    "rnn_denoise",
    "rnn_receive",
    "rossler_trajectory",
    "save_weights",
    "segment_experiment",
    "train_rnn",
]
