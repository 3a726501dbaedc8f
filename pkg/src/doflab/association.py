"""Cell associations under a per-terminal backhaul budget.

A ``CellAssociation`` stores, for each mobile terminal ``i``, the set
``C_i`` of base stations allowed to use its message: deliver it in the
downlink, or decode / cancel it in the uplink. One association serves
both sessions; session-specific usage lives in the plan objects. The
budget ``Nc`` bounds ``|C_i|`` for every terminal.

For schemes that keep the uplink at full coverage, the extra
associations the downlink needs are tracked separately as ``C_i^D``,
with the invariant ``C_i = C_i^D ∪ connected_bs(i)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import StructuralError
from .topology import Topology

__all__ = [
    "CellAssociation",
    "ValidationResult",
    "association_to_json_dict",
    "association_from_json_dict",
    "dump_association",
    "load_association",
]


def _freeze(cells: Mapping[int, Iterable[int]]) -> dict[int, frozenset[int]]:
    return {int(mt): frozenset(int(b) for b in bss) for mt, bss in cells.items()}


@dataclass(frozen=True)
class CellAssociation:
    """Per-terminal association sets under budget ``nc``.

    Attributes:
        nc: maximum number of base stations per terminal.
        cells: mapping MT index -> set of associated BS indices. Missing
            terminals have an empty association.
        downlink_extra: optional mapping MT index -> the downlink-only
            part ``C_i^D`` of the association (a subset of ``cells[i]``).
    """

    nc: int
    cells: dict[int, frozenset[int]] = field(default_factory=dict)
    downlink_extra: dict[int, frozenset[int]] | None = None

    def __post_init__(self) -> None:
        if self.nc < 1:
            raise StructuralError(f"Nc must be positive, got {self.nc}")
        object.__setattr__(self, "cells", _freeze(self.cells))
        if self.downlink_extra is not None:
            extra = _freeze(self.downlink_extra)
            for mt, bss in extra.items():
                if not bss <= self.cells.get(mt, frozenset()):
                    raise StructuralError(
                        f"downlink-extra set of MT {mt} is not contained in C_{mt}"
                    )
            object.__setattr__(self, "downlink_extra", extra)

    def cell(self, mt: int) -> frozenset[int]:
        """The set ``C_i`` for terminal ``mt`` (empty if unassociated)."""
        return self.cells.get(mt, frozenset())

    def check_indices(self, topology: Topology) -> None:
        """Raise ``StructuralError`` on any index outside ``[1, K]``."""
        for mt, bss in self.cells.items():
            if not 1 <= mt <= topology.K:
                raise StructuralError(f"MT index {mt} out of range [1, {topology.K}]")
            for bs in bss:
                if not 1 <= bs <= topology.K:
                    raise StructuralError(
                        f"BS index {bs} in C_{mt} out of range [1, {topology.K}]"
                    )

    def validate(self, topology: Topology) -> "ValidationResult":
        """Check the budget constraint ``|C_i| <= Nc`` for every terminal.

        Returns a verdict listing every violating terminal with its
        association size. Out-of-range indices raise ``StructuralError``
        instead; they are malformed input, not a budget violation.
        """
        self.check_indices(topology)
        budget = [(mt, len(bss)) for mt, bss in sorted(self.cells.items()) if len(bss) > self.nc]
        mismatched: list[int] = []
        if self.downlink_extra is not None and self.is_full_coverage(topology):
            for mt in sorted(self.downlink_extra):
                expected = self.downlink_extra[mt] | topology.connected_bs(mt)
                if self.cell(mt) != expected:
                    mismatched.append(mt)
        return ValidationResult(budget_violations=budget, extra_set_mismatches=mismatched)

    def is_full_coverage(self, topology: Topology) -> bool:
        """True iff every terminal is associated with all base stations connected to it."""
        self.check_indices(topology)
        return all(
            topology.connected_bs(mt) <= self.cell(mt) for mt in range(1, topology.K + 1)
        )


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of ``CellAssociation.validate``. Empty lists mean valid."""

    budget_violations: list[tuple[int, int]]
    extra_set_mismatches: list[int]

    @property
    def ok(self) -> bool:
        return not self.budget_violations and not self.extra_set_mismatches


def association_to_json_dict(assoc: CellAssociation, topology: Topology) -> dict:
    obj: dict = {
        "K": topology.K,
        "L": topology.L,
        "Nc": assoc.nc,
        "C": {str(mt): sorted(bss) for mt, bss in sorted(assoc.cells.items()) if bss},
    }
    if assoc.downlink_extra is not None:
        obj["C_D"] = {str(mt): sorted(bss) for mt, bss in sorted(assoc.downlink_extra.items())}
    return obj


def association_from_json_dict(obj: dict) -> tuple[Topology, CellAssociation]:
    try:
        topology = Topology(int(obj["K"]), int(obj["L"]))
        nc = int(obj["Nc"])
        cells = {int(mt): frozenset(map(int, bss)) for mt, bss in obj["C"].items()}
        extra = None
        if "C_D" in obj and obj["C_D"] is not None:
            extra = {int(mt): frozenset(map(int, bss)) for mt, bss in obj["C_D"].items()}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise StructuralError(f"malformed association JSON: {exc}") from exc
    assoc = CellAssociation(nc=nc, cells=cells, downlink_extra=extra)
    assoc.check_indices(topology)
    return topology, assoc


def dump_association(assoc: CellAssociation, topology: Topology) -> str:
    """Stable JSON text for an association (sorted keys, trailing newline)."""
    return json.dumps(association_to_json_dict(assoc, topology), indent=2, sort_keys=True) + "\n"


def load_association(text: str) -> tuple[Topology, CellAssociation]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"invalid JSON: {exc}") from exc
    return association_from_json_dict(obj)
