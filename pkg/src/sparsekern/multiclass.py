"""One-vs-one multiclass wrapper over any binary model trainer.

A trainer is any callable mapping a SampleSet with labels in {+1, -1} to a
DiscreteModel.  For each unordered class pair (a, b) with a < b, the lower
label maps to +1; a positive prediction therefore votes for the lower
label.  Ties in the final vote break toward the lowest label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datasets import SampleSet
from .errors import ConfigError
from .models import DiscreteModel


@dataclass(frozen=True, eq=False)
class OvoEnsemble:
    classes: tuple
    pairwise: dict  # (a, b) -> DiscreteModel, a < b

    def __post_init__(self):
        k = len(self.classes)
        if len(self.pairwise) != k * (k - 1) // 2:
            raise ConfigError("need one model per unordered class pair")

    def to_dict(self) -> dict:
        return {
            "classes": [float(c) for c in self.classes],
            "pairwise": {
                f"{a:g},{b:g}": m.to_dict() for (a, b), m in sorted(self.pairwise.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OvoEnsemble":
        pairwise = {}
        for key, md in d["pairwise"].items():
            a, b = (float(v) for v in key.split(","))
            pairwise[(a, b)] = DiscreteModel.from_dict(md)
        return cls(tuple(float(c) for c in d["classes"]), pairwise)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "OvoEnsemble":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def ovo_train(samples: SampleSet, trainer) -> OvoEnsemble:
    """Train one binary model per class pair on that pair's samples."""
    classes = tuple(sorted(float(c) for c in np.unique(samples.y)))
    if len(classes) < 2:
        raise ConfigError("one-vs-one needs at least two classes")
    pairwise = {}
    for i, a in enumerate(classes):
        for b in classes[i + 1 :]:
            mask = (samples.y == a) | (samples.y == b)
            signed = np.where(samples.y[mask] == a, 1.0, -1.0)
            pair_set = SampleSet(samples.X[mask], signed, samples.box)
            pairwise[(a, b)] = trainer(pair_set)
    return OvoEnsemble(classes, pairwise)


def ovo_predict(ensemble: OvoEnsemble, x) -> float:
    """Majority vote over pairwise models; ties go to the lowest label."""
    votes = {c: 0 for c in ensemble.classes}
    for (a, b), model in ensemble.pairwise.items():
        votes[a if model.predict(x) >= 0 else b] += 1
    best = max(votes.values())
    for c in ensemble.classes:  # classes sorted ascending
        if votes[c] == best:
            return c
    raise AssertionError("unreachable")


def ovo_predict_batch(ensemble: OvoEnsemble, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray([ovo_predict(ensemble, x) for x in X])
