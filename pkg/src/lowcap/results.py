"""Small value types shared by the bound calculators and the CLI."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

ACHIEVABILITY = "achievability"
CONVERSE = "converse"


@dataclass(frozen=True)
class BoundResult:
    """A bound on log2 of the code size at a fixed blocklength."""

    log2_m: float
    direction: str
    method: str
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.direction not in (ACHIEVABILITY, CONVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class BlocklengthInterval:
    """Bracket [n_lower, n_upper] on the optimal blocklength."""

    n_lower: int
    n_upper: int
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
