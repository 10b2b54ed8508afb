"""Ridge-regression classifier on representation coefficients."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, ParameterError
from .linalg import as_matrix


@dataclass(frozen=True)
class LabelMatrix:
    """One-hot ``c x n`` label matrix with the class names for its rows."""

    h: np.ndarray
    class_names: tuple

    @classmethod
    def from_labels(cls, labels, class_names=None):
        """Build the one-hot matrix for a sequence of labels.

        Rows follow `class_names` when given, otherwise the sorted unique labels.
        """
        labels = list(labels)
        if class_names is None:
            class_names = sorted(set(labels), key=str)
        class_names = tuple(class_names)
        index = {name: i for i, name in enumerate(class_names)}
        missing = sorted({str(lab) for lab in labels if lab not in index})
        if missing:
            raise ParameterError(f"labels not among the class names: {missing}")
        h = np.zeros((len(class_names), len(labels)))
        h[[index[lab] for lab in labels], np.arange(len(labels))] = 1.0
        return cls(h, class_names)

    @property
    def indices(self):
        return np.argmax(self.h, axis=0)


@dataclass(frozen=True)
class ClassifierWeights:
    w: np.ndarray
    eta: float
    class_names: tuple = ()


def ridge_weights(z_tr, h_tr, eta):
    """Unnormalized ridge solution ``H Z^T (Z Z^T + eta I)^{-1}``."""
    z_tr = as_matrix(z_tr, "z_tr")
    h_tr = as_matrix(h_tr, "h_tr")
    if z_tr.shape[1] != h_tr.shape[1]:
        raise DimensionError(
            f"z_tr has {z_tr.shape[1]} samples but the label matrix has {h_tr.shape[1]}"
        )
    eta = float(eta)
    if not (np.isfinite(eta) and eta > 0):
        raise ParameterError(f"eta must be positive, got {eta}")
    gram = z_tr @ z_tr.T
    gram[np.diag_indices_from(gram)] += eta
    # W G = H Z^T with G symmetric  <=>  G W^T = Z H^T
    return scipy.linalg.solve(gram, z_tr @ h_tr.T, assume_a="pos").T


def normalize_columns(w):
    """Scale columns of `w` to unit l2 norm, leaving zero columns at zero."""
    norms = np.linalg.norm(w, axis=0)
    out = w.copy()
    nz = norms > 0
    out[:, nz] /= norms[nz]
    return out


def fit(z_tr, labels, eta=1.0):
    """Fit the column-normalized ridge classifier.

    Parameters
    ----------
    z_tr : array_like, shape (n, n_tr)
        Coefficients of the training samples.
    labels : LabelMatrix or sequence
        Either a prepared :class:`LabelMatrix` or one label per column.
    eta : float
        Ridge weight.
    """
    if not isinstance(labels, LabelMatrix):
        labels = LabelMatrix.from_labels(labels)
    w = ridge_weights(z_tr, labels.h, eta)
    return ClassifierWeights(normalize_columns(w), float(eta), labels.class_names)


def scores(weights, z_tt):
    w = weights.w if isinstance(weights, ClassifierWeights) else np.asarray(weights)
    z_tt = as_matrix(z_tt, "z_tt")
    if w.shape[1] != z_tt.shape[0]:
        raise DimensionError(f"weights expect {w.shape[1]} coefficients, got {z_tt.shape[0]}")
    return w @ z_tt


def predict_indices(weights, z_tt):
    """Row index of the largest score per column; ties go to the lowest index."""
    return np.argmax(scores(weights, z_tt), axis=0)


def predict(weights, z_tt):
    """Predicted class names (or indices when the weights carry no names)."""
    idx = predict_indices(weights, z_tt)
    names = getattr(weights, "class_names", ())
    if names:
        return [names[i] for i in idx]
    return idx.tolist()


def recognition_rate(predicted, truth):
    """Percentage of matching labels."""
    predicted, truth = list(predicted), list(truth)
    if len(predicted) != len(truth):
        raise DimensionError("prediction and ground-truth lengths differ")
    if not truth:
        return 0.0
    return 100.0 * sum(p == t for p, t in zip(predicted, truth)) / len(truth)
