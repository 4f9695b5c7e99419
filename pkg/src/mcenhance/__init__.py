"""Multichannel speech enhancement with a latent-variable speech prior.

The observed multichannel STFT is modeled per bin as a zero-mean proper
complex Gaussian whose covariance is the sum of a gained speech term, a
decoder network driving the spectral variances and a per-frequency spatial
covariance, and an NMF-shaped noise term.  Inference alternates a
Metropolis-Hastings E-step over the latent vectors with closed-form
monotone M-step updates; estimates come from probabilistic multichannel
Wiener filtering averaged over posterior samples.
"""

from .audio_io import read_wav, write_wav
from .baseline import (BaselineParams, SpeechDictionary, baseline_wiener,
                       is_nmf, load_dictionary, pretrain_dictionary,
                       run_baseline, save_dictionary)
from .estimators import NmfEnhancer, SpeechDictionaryLearner, VaeNmfEnhancer
from .linalg import SingularMatrixError
from .mcem import (LatentChain, McemConfig, e_step, m_step, m_step_updates,
                   mh_step, q_tilde, run)
from .metrics import (EvalReport, aggregate, evaluate_enhancement,
                      per_channel_si_sdr, si_sdr, write_report_json,
                      write_reports_csv)
from .model import (UnsupervisedParams, init_params, load_params,
                    log_likelihood, noise_psd, normalize, save_params, sigma_x)
from .nn import (CorruptWeightsError, NetworkWeights, WeightFormatError,
                 decoder_forward, encoder_forward, load_weights, save_weights)
from .simulate import MixSpec, generate_from_model, mix, spatialize
from .stft import MultichannelSTFT, StftConfig, analyze, sine_window, synthesize
from .wiener import EnhancementResult, ReconstructionConfig, wiener_estimate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "read_wav", "write_wav",
    "BaselineParams", "SpeechDictionary", "baseline_wiener", "is_nmf",
    "load_dictionary", "pretrain_dictionary", "run_baseline",
    "save_dictionary",
    "NmfEnhancer", "SpeechDictionaryLearner", "VaeNmfEnhancer",
    "SingularMatrixError",
    "LatentChain", "McemConfig", "e_step", "m_step", "m_step_updates",
    "mh_step", "q_tilde", "run",
    "EvalReport", "aggregate", "evaluate_enhancement", "per_channel_si_sdr",
    "si_sdr", "write_report_json", "write_reports_csv",
    "UnsupervisedParams", "init_params", "load_params", "log_likelihood",
    "noise_psd", "normalize", "save_params", "sigma_x",
    "CorruptWeightsError", "NetworkWeights", "WeightFormatError",
    "decoder_forward", "encoder_forward", "load_weights", "save_weights",
    "MixSpec", "generate_from_model", "mix", "spatialize",
    "MultichannelSTFT", "StftConfig", "analyze", "sine_window", "synthesize",
    "EnhancementResult", "ReconstructionConfig", "wiener_estimate",
]
