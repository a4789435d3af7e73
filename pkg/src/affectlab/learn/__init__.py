from .elm import ElmClassifier, select_hidden, HIDDEN_GRID
from .lstm import LstmClassifier
from .metrics import EvalReport, confusion_matrix, evaluate, \
    macro_f1_from_confusion
from .pca import PrincipalComponents
from .scaling import SymmetricMinMaxScaler
from .serialize import load_model, save_loss_curve, save_model

__all__ = [
    "ElmClassifier", "EvalReport", "HIDDEN_GRID", "LstmClassifier",
    "PrincipalComponents", "SymmetricMinMaxScaler", "confusion_matrix",
    "evaluate", "load_model", "macro_f1_from_confusion", "save_loss_curve",
    "save_model", "select_hidden",
]
