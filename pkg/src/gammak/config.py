"""Run configuration: caps, budgets, seeds, output format.

Defaults follow the documented desk-scale limits: carriers up to 16 elements
for validation, 8 for user-supplied K-pipeline bases, rank cap 2, iso-search
carrier cap 64.  Every cap overrun raises loudly; nothing truncates silently.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass(frozen=True)
class Caps:
    carrier: int = 16  # structure construction / validation
    k_carrier: int = 8  # user-supplied bases entering K pipelines
    rank: int = 2  # idempotent size cap for classification
    iso: int = 64  # module carrier cap for iso search and sums
    k1_levels: int = 2
    budget: int = 1_000_000  # enumeration space guard
    seed: int = 0
    strict_bimodule: bool = False

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name in ("seed", "strict_bimodule"):
                continue
            if getattr(self, f.name) <= 0:
                raise ValueError(f"cap {f.name!r} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "Caps":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> dict:
        return {
            "carrier": self.carrier,
            "k_carrier": self.k_carrier,
            "rank": self.rank,
            "iso": self.iso,
            "k1_levels": self.k1_levels,
            "budget": self.budget,
            "seed": self.seed,
            "strict_bimodule": self.strict_bimodule,
        }


DEFAULT_CAPS = Caps()
