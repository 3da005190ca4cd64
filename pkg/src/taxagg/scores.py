"""Per-instance classifier score sheets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import InvalidScore, UnknownClass
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class ScoreSheet:
    """Scores one instance received from every classifier.

    ``entries[classifier_id][class_id]`` is a probability in ``[0, 1]``.
    A class missing from a classifier's map means that classifier abstained
    on it, which is not the same as a zero score.
    """

    instance_id: str
    entries: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def classifiers(self) -> list:
        return sorted(self.entries)

    def classes(self) -> set:
        out = set()
        for scores in self.entries.values():
            out.update(scores)
        return out

    def hooks(self):
        """Yield ``(classifier_id, class_id, score)`` in sorted order."""
        for j in sorted(self.entries):
            scores = self.entries[j]
            for c in sorted(scores):
                yield j, c, scores[c]

    def validate(self, t: Taxonomy) -> "ScoreSheet":
        for j, c, y in self.hooks():
            if c not in t:
                raise UnknownClass(c)
            if not isinstance(y, (int, float)) or math.isnan(y) or not 0.0 <= y <= 1.0:
                raise InvalidScore(
                    f"instance {self.instance_id!r}, classifier {j!r}, class {c!r}: "
                    f"score {y!r} outside [0, 1]"
                )
        return self


def add_sheets(a: ScoreSheet, b: ScoreSheet, instance_id=None) -> ScoreSheet:
    """Classifier-wise sum of two sheets (used to state linearity of propagation)."""
    entries: dict = {}
    for sheet in (a, b):
        for j, c, y in sheet.hooks():
            entries.setdefault(j, {})
            entries[j][c] = entries[j].get(c, 0.0) + y
    return ScoreSheet(instance_id or a.instance_id, entries)
