"""Order-blind classifiers implemented on numpy."""

from .features import featurize
from .forest import RandomForestModel, rf_score, rf_train
from .gbt import GbtModel, gbt_score, gbt_train
from .knn import KnnModel, knn_classify
from .svm import LinearSvmModel, svm_score, svm_train
from .tree import DecisionTree, best_split, grow_tree

__all__ = [
    "DecisionTree",
    "GbtModel",
    "KnnModel",
    "LinearSvmModel",
    "RandomForestModel",
    "best_split",
    "featurize",
    "gbt_score",
    "gbt_train",
    "grow_tree",
    "knn_classify",
    "rf_score",
    "rf_train",
    "svm_score",
    "svm_train",
]
