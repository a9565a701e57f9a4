"""
Contour records produced by boundary key-point generation.
"""

from pydantic import BaseModel, ConfigDict, model_validator


def _is_8_neighbour(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a != b and abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


class Contour(BaseModel):
    """
    Ordered (row, col) pixel coordinates of one traced border.
    """

    model_config = ConfigDict(frozen=True)

    points: list[tuple[int, int]]
    closed: bool = True

    @model_validator(mode="after")
    def validate_chain(self):
        pts = self.points
        for a, b in zip(pts[:-1], pts[1:]):
            if not _is_8_neighbour(a, b):
                raise ValueError(f"Contour points {a} and {b} are not 8-neighbours")
        if self.closed and len(pts) > 1 and not _is_8_neighbour(pts[-1], pts[0]):
            raise ValueError("Closed contour's last point is not adjacent to its first")
        return self

    def __len__(self) -> int:
        return len(self.points)


class ScoredContour(Contour):
    """
    Contour with one boundary-deviation score |p - 0.5| per point.
    """

    scores: list[float]

    @model_validator(mode="after")
    def validate_scores(self):
        if len(self.scores) != len(self.points):
            raise ValueError(
                f"{len(self.scores)} scores given for {len(self.points)} points"
            )
        if any(not 0.0 <= s <= 0.5 for s in self.scores):
            raise ValueError("Scores must lie in [0, 0.5]")
        return self
