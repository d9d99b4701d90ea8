"""
Instance-optimization registration of binary skulls and the cross-case
augmentation built on it.
"""

from registration.affine import AffineResult, fit_affine, recovered_scale, register_affine
from registration.augment import augment_by_registration, sample_pairs, warp_case
from registration.deformable import DeformableResult, invertibility, register_deformable, register_pair
from registration.presets import IMPERFECT, PRESETS, SMOOTH, RegistrationPreset, get_preset
from registration.transforms import (
    AffineTransform, affine_to_field, compose, diffusion_regularization, image_mse,
    jacobian_determinant, positive_jacobian_fraction, scaling_and_squaring, warp, zero_field,
)

__all__ = [
    "AffineResult", "fit_affine", "recovered_scale", "register_affine",
    "augment_by_registration", "sample_pairs", "warp_case",
    "DeformableResult", "invertibility", "register_deformable", "register_pair",
    "IMPERFECT", "PRESETS", "SMOOTH", "RegistrationPreset", "get_preset",
    "AffineTransform", "affine_to_field", "compose", "diffusion_regularization", "image_mse",
    "jacobian_determinant", "positive_jacobian_fraction", "scaling_and_squaring", "warp", "zero_field",
]
