"""Binary classification metrics with Signal as the positive class."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..events import Label


class LengthMismatch(ValueError):
    pass


class UnlabeledEvent(ValueError):
    pass


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)

    @property
    def undefined(self) -> list[str]:
        """Metrics whose denominator was zero (reported as 0)."""
        out = []
        if self.tp + self.fp == 0:
            out.append("precision")
        if self.tp + self.fn == 0:
            out.append("recall")
        if self.total == 0:
            out.append("accuracy")
        return out

    def to_dict(self) -> dict:
        return {**asdict(self), "precision": self.precision, "recall": self.recall,
                "accuracy": self.accuracy, "undefined": self.undefined}


def compute_metrics(decisions, labels) -> MetricsReport:
    """Confusion counts of ``decisions`` (bools or a ``Decisions``) against labels."""
    pred = np.asarray(getattr(decisions, "is_signal", decisions), dtype=bool)
    lab = np.asarray(labels)
    if pred.shape != lab.shape:
        raise LengthMismatch(f"{len(pred)} decisions vs {len(lab)} labels")
    bad = np.flatnonzero((lab != Label.SIGNAL) & (lab != Label.NOISE))
    if bad.size:
        raise UnlabeledEvent(f"event {bad[0]} has no Signal/Noise label ({int(lab[bad[0]])})")
    pos = lab == Label.SIGNAL
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    return MetricsReport(tp, fp, len(lab) - tp - fp - fn, fn)
