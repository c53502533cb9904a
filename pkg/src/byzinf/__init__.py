"""Byzantine data-falsification attacks on distributed inference with M-ary quantized data."""

from .attack import (
    AttackSolution,
    ChannelMatrix,
    FlippingMatrix,
    apply_attack,
    apply_channel,
    blind_fraction,
    min_feasible_alpha,
    noisy_channel_attack,
    optimal_attack,
    symmetric_attack,
    worst_case_symmetric_p,
)
from .metrics import DetectionScenario, EstimationScenario, detection_kld, estimation_fisher, fisher, kld
from .model import (
    GaussianObservationModel,
    SymbolPmf,
    SymbolPmfGradient,
    UniformQuantizer,
    dequantize,
    gaussian_tail,
    gaussian_tail_inv,
    make_uniform_quantizer,
    quantize,
    symbol_pmf,
    symbol_pmf_gradient,
)

__version__ = "0.1.0"
