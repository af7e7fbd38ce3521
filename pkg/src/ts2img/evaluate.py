"""Hold-out and leave-one-participant-out evaluation, accuracy, macro F1.

Splits are index-based so they compose with any dataset representation.
The hold-out split is a seeded unstratified permutation (subject-dependent:
windows from one participant may land on both sides). Leave-one-out folds
are per participant. Scoring builds a confusion matrix with rows indexing
the actual class and reports accuracy plus macro-averaged F1, where a class
with an undefined F1 (never predicted and never actual) contributes 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass
class Split:
    """Disjoint, exhaustive train/test index sets over one dataset."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    fraction: float
    seed: int | None = None
    fold_id: int | None = None


def holdout_split(dataset, fraction: float = 0.2, seed: int = 0) -> Split:
    """Seeded random split; the test side gets round(n * fraction) samples.

    dataset may be a sized sequence or the sample count itself.
    """
    n = dataset if isinstance(dataset, (int, np.integer)) else len(dataset)
    n = int(n)
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"hold-out fraction must lie in (0, 1), got {fraction}")
    if n < 5:
        raise DomainError(f"need at least 5 samples to split, got {n}")
    n_test = int(round(n * fraction))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    test = np.sort(perm[:n_test])
    train = np.sort(perm[n_test:])
    return Split(train, test, fraction, seed=seed)


def loocv_folds(participant_ids) -> list[Split]:
    """One fold per participant: that participant tests, the rest train."""
    ids = np.asarray(participant_ids)
    if ids.ndim != 1 or ids.size == 0:
        raise DomainError(f"participant ids must be a non-empty 1-D array, got shape {ids.shape}")
    unique = np.unique(ids)
    if unique.size < 2:
        raise DomainError(
            f"leave-one-participant-out needs at least 2 participants, got {unique.size}"
        )
    folds = []
    for participant in unique:
        test = np.flatnonzero(ids == participant)
        train = np.flatnonzero(ids != participant)
        folds.append(
            Split(train, test, fraction=test.size / ids.size, fold_id=int(participant))
        )
    return folds


@dataclass
class EvalReport:
    """Confusion matrix (rows = actual), accuracy, and macro F1."""

    confusion: np.ndarray
    accuracy: float
    macro_f1: float
    per_class_f1: list[float]
    fold_id: int | None = None

    def as_dict(self) -> dict:
        return {
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class_f1": list(self.per_class_f1),
            "fold_id": self.fold_id,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent, sort_keys=True)


def score(predictions, truths, n_classes: int, fold_id: int | None = None) -> EvalReport:
    """Score integer predictions against truths over a fixed class count."""
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape or p.ndim != 1:
        raise DomainError(f"predictions {p.shape} and truths {t.shape} must be equal 1-D")
    if p.size == 0:
        raise DomainError("cannot score an empty prediction set")
    if n_classes < 2:
        raise DomainError(f"n_classes must be >= 2, got {n_classes}")
    for name, a in (("predictions", p), ("truths", t)):
        if a.min() < 0 or a.max() >= n_classes:
            raise DomainError(
                f"{name} must lie in [0, {n_classes - 1}], got [{a.min()}, {a.max()}]"
            )
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)
    return score_confusion(confusion, fold_id=fold_id)


def score_confusion(confusion, fold_id: int | None = None) -> EvalReport:
    """Accuracy and macro F1 straight from a confusion matrix."""
    c = np.asarray(confusion, dtype=np.int64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DomainError(f"confusion matrix must be square, got shape {c.shape}")
    total = int(c.sum())
    if total == 0:
        raise DomainError("confusion matrix is empty")
    tp = np.diag(c).astype(np.float64)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    denom = 2.0 * tp + fp + fn
    per_class = np.where(denom > 0, 2.0 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    return EvalReport(
        confusion=c,
        accuracy=float(tp.sum() / total),
        macro_f1=float(per_class.mean()),
        per_class_f1=[float(v) for v in per_class],
        fold_id=fold_id,
    )
