from .backbones import BackboneConfig, DIDNLite, UNet, build_backbone, count_params
from .conditioning import (
    ADAIN_EPS,
    CascadeHypernet,
    ConditioningParams,
    HypernetConfig,
    adain,
)
from .dc import dc_step, mask_tensor
from .ops import channels_to_complex, complex_to_channels, fft2c_t, ifft2c_t
from .unrolled import (
    CheckpointError,
    EnhancementModel,
    UnrolledConfig,
    UnrolledModel,
    ZeroFilledModel,
    build_model,
    load_checkpoint,
    model_config_to_dict,
    model_from_dict,
    save_checkpoint,
)

__all__ = [
    "ADAIN_EPS",
    "BackboneConfig",
    "CascadeHypernet",
    "CheckpointError",
    "ConditioningParams",
    "DIDNLite",
    "EnhancementModel",
    "HypernetConfig",
    "UNet",
    "UnrolledConfig",
    "UnrolledModel",
    "ZeroFilledModel",
    "adain",
    "build_backbone",
    "build_model",
    "channels_to_complex",
    "complex_to_channels",
    "count_params",
    "dc_step",
    "fft2c_t",
    "ifft2c_t",
    "load_checkpoint",
    "mask_tensor",
    "model_config_to_dict",
    "model_from_dict",
    "save_checkpoint",
]
