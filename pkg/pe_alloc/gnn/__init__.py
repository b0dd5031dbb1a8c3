"""
GNNs assembled from set descriptors, trained without labels on MU-MISO
precoding and evaluated against WMMSE.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .descriptors import PRESETS, SetDescriptor, StructurePlan, plan_structure, preset_descriptors
from .evaluation import compare_arms, eval_se_ratio, eval_size_generalization
from .flops import all_attention_variant, count_flops, fit_loglog_slope, flop_scaling
from .layers import attention_processor, attention_update, gcn_template, gcn_update
from .model import MODEL_ARMS, GnnModel, ModelSpec, build_gnn_from_problem
from .training import TrainConfig, sample_user_counts, train_unsupervised

__all__ = [
    "GnnModel",
    "MODEL_ARMS",
    "ModelSpec",
    "PRESETS",
    "SetDescriptor",
    "StructurePlan",
    "TrainConfig",
    "all_attention_variant",
    "attention_processor",
    "attention_update",
    "build_gnn_from_problem",
    "compare_arms",
    "count_flops",
    "eval_se_ratio",
    "eval_size_generalization",
    "fit_loglog_slope",
    "flop_scaling",
    "gcn_template",
    "gcn_update",
    "load_checkpoint",
    "plan_structure",
    "preset_descriptors",
    "sample_user_counts",
    "save_checkpoint",
    "train_unsupervised",
]
