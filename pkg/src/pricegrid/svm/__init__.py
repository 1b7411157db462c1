from .kernels import KERNEL_KINDS, GramPool, KernelSpec, kernel_eval, kernel_matrix
from .multiclass import (
    BALANCED,
    MulticlassSvm,
    OvrEnsemble,
    TrainConfig,
    class_weights,
    pool_decision_values,
    pool_predict,
    train_multiclass,
    train_ovr,
)
from .persist import load_model, model_from_json, model_to_json, save_model
from .smo import BinarySvm, KktReport, decision_value, recheck_kkt, smo_train

__all__ = [
    "BALANCED",
    "BinarySvm",
    "GramPool",
    "KERNEL_KINDS",
    "KernelSpec",
    "KktReport",
    "MulticlassSvm",
    "OvrEnsemble",
    "TrainConfig",
    "class_weights",
    "decision_value",
    "kernel_eval",
    "kernel_matrix",
    "load_model",
    "model_from_json",
    "model_to_json",
    "pool_decision_values",
    "pool_predict",
    "recheck_kkt",
    "save_model",
    "smo_train",
    "train_multiclass",
    "train_ovr",
]
