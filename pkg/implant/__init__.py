"""
Iterative thinning of reconstructed defects into implant models.
"""

from implant.modeling import ImplantConfig, ImplantResult, implant_candidate, model_implant, thinning_direction

__all__ = ["ImplantConfig", "ImplantResult", "implant_candidate", "model_implant", "thinning_direction"]
