"""Verification-style scoring: FAR/FRR threshold sweeps, EER, seeded splits."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .prng import SplitMix64


@dataclass(frozen=True)
class ScoreSet:
    """Genuine (true-class) and impostor (other-class) decision scores."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "genuine", np.asarray(self.genuine, dtype=np.float64))
        object.__setattr__(self, "impostor", np.asarray(self.impostor, dtype=np.float64))
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise ValueError("both genuine and impostor score sets must be non-empty")


class FarFrrCurve(NamedTuple):
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray


def far_frr_curve(scores: ScoreSet) -> FarFrrCurve:
    """Sweep thresholds over all distinct scores plus -inf/+inf sentinels.

    FAR(t) is the fraction of impostor scores >= t (non-increasing in t);
    FRR(t) the fraction of genuine scores < t (non-decreasing).
    """
    thresholds = np.concatenate(
        ([-np.inf], np.unique(np.concatenate([scores.genuine, scores.impostor])), [np.inf])
    )
    genuine = np.sort(scores.genuine)
    impostor = np.sort(scores.impostor)
    far = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return FarFrrCurve(thresholds, far, frr)


def eer(curve: FarFrrCurve) -> float:
    """Rate at the FAR = FRR crossing, interpolated between sweep points."""
    diff = curve.far - curve.frr
    # diff starts at +1 (all impostors accepted) and ends at -1; it is
    # non-increasing, so the first non-positive entry brackets the crossing
    idx = int(np.argmax(diff <= 0.0))
    if diff[idx] == 0.0:
        return float(curve.far[idx])
    d_before, d_after = diff[idx - 1], diff[idx]
    s = d_before / (d_before - d_after)
    return float(curve.frr[idx - 1] + s * (curve.frr[idx] - curve.frr[idx - 1]))


def eer_from_scores(genuine, impostor) -> float:
    return eer(far_frr_curve(ScoreSet(genuine, impostor)))


def split_dataset(labels, seed: int, per_class_train_count: int) -> tuple[list[int], list[int]]:
    """Seeded per-class split; returns (train, test) indices into ``labels``.

    Classes are processed in sorted order, each shuffled with the shared
    SplitMix64 stream, and the first ``per_class_train_count`` items go
    to the training side.  Deterministic in ``seed``.
    """
    labels = list(labels)
    by_class: dict = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    rng = SplitMix64(seed)
    train: list[int] = []
    test: list[int] = []
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < per_class_train_count + 1:
            raise ValueError(
                f"class {label!r} has {len(members)} items; needs at least {per_class_train_count + 1}"
            )
        order = list(range(len(members)))
        rng.shuffle(order)
        train.extend(members[k] for k in order[:per_class_train_count])
        test.extend(members[k] for k in order[per_class_train_count:])
    return train, test
