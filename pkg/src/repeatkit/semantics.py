"""Per-semantic-class repeatability: bin common-region points by ground-truth label.

A match is attributed to the class of its image-1 keypoint (labels can
disagree across views for dynamic objects). Reports merge by summing counts,
so aggregation across pairs is a micro-average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .frames import UNLABELLED, LabelMap
from .keypoints import Keypoint, KeypointSet
from .matching import PairResult


def class_of(kp: Keypoint, labels: LabelMap) -> int:
    """Label id at the nearest pixel (round half up, clamped to bounds)."""
    ix = int(math.floor(kp.x + 0.5))
    iy = int(math.floor(kp.y + 0.5))
    ix = min(max(ix, 0), labels.width - 1)
    iy = min(max(iy, 0), labels.height - 1)
    return int(labels.values[iy, ix])


@dataclass(frozen=True)
class ClassReport:
    """Class-conditional counts for one or more evaluated pairs.

    n_d2_total is carried so the overall rate matches / min(d1, d2) is
    recoverable exactly from a merged report.
    """

    n_d1_by_class: Mapping[int, int]
    n_matches_by_class: Mapping[int, int]
    n_d2_total: int
    class_names: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n_d1_by_class", dict(self.n_d1_by_class))
        object.__setattr__(self, "n_matches_by_class", dict(self.n_matches_by_class))
        object.__setattr__(self, "class_names", dict(self.class_names))
        for cid, n in self.n_matches_by_class.items():
            if n > self.n_d1_by_class.get(cid, 0):
                raise ValueError(f"class {cid} has more matches than d1 points")

    @property
    def total_d1(self) -> int:
        return sum(self.n_d1_by_class.values())

    @property
    def total_matches(self) -> int:
        return sum(self.n_matches_by_class.values())

    def overall_repeatability(self) -> float | None:
        denom = min(self.total_d1, self.n_d2_total)
        if denom == 0:
            return None
        return self.total_matches / denom

    def repeatability_by_class(self) -> dict[int, float]:
        """Class id -> matches / n_d1; classes with n_d1 = 0 are absent."""
        out = {}
        for cid, n in sorted(self.n_d1_by_class.items()):
            if n > 0:
                out[cid] = self.n_matches_by_class.get(cid, 0) / n
        return out

    def name_of(self, class_id: int) -> str:
        return self.class_names.get(int(class_id), UNLABELLED)

    def ranked(self, descending: bool = True) -> list[tuple[int, float]]:
        """(class id, repeatability) sorted by rate; ties break by class id."""
        items = self.repeatability_by_class().items()
        return sorted(items, key=lambda kv: (-kv[1] if descending else kv[1], kv[0]))

    def top(self, k: int) -> list[tuple[int, float]]:
        return self.ranked(descending=True)[:k]

    def bottom(self, k: int) -> list[tuple[int, float]]:
        return self.ranked(descending=False)[:k]

    def merge(self, other: "ClassReport") -> "ClassReport":
        """Sum counts with another report (associative, order-independent)."""
        d1 = dict(self.n_d1_by_class)
        for cid, n in other.n_d1_by_class.items():
            d1[cid] = d1.get(cid, 0) + n
        matches = dict(self.n_matches_by_class)
        for cid, n in other.n_matches_by_class.items():
            matches[cid] = matches.get(cid, 0) + n
        names = dict(self.class_names)
        names.update(other.class_names)
        return ClassReport(d1, matches, self.n_d2_total + other.n_d2_total, names)

    @classmethod
    def empty(cls) -> "ClassReport":
        return cls({}, {}, 0, {})


def per_class_repeatability(
    pair: PairResult, kps1: KeypointSet, labels1: LabelMap
) -> ClassReport:
    """Bin a pair's common-region points and matches by image-1 class."""
    n_d1_by_class: dict[int, int] = {}
    for i in pair.d1_indices:
        cid = class_of(kps1[i], labels1)
        n_d1_by_class[cid] = n_d1_by_class.get(cid, 0) + 1
    n_matches_by_class: dict[int, int] = {}
    for i, _j, _dist in pair.matches:
        cid = class_of(kps1[i], labels1)
        n_matches_by_class[cid] = n_matches_by_class.get(cid, 0) + 1
    return ClassReport(n_d1_by_class, n_matches_by_class, pair.n_d2, dict(labels1.class_names))
