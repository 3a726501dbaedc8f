"""Immutable model of the K-user locally connected interference network.

Users are base station / mobile terminal (BS/MT) pairs indexed 1..K.
MT ``i`` is connected to the base stations ``{i-L, ..., i}`` clipped to
``[1, K]``, so the first ``L`` terminals see fewer base stations. There
is no wraparound. Two networks with equal ``(K, L)`` answer every
adjacency query identically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import StructuralError

UPLINK = "uplink"
DOWNLINK = "downlink"
SESSIONS = (UPLINK, DOWNLINK)

__all__ = ["Topology", "UPLINK", "DOWNLINK", "SESSIONS"]


@dataclass(frozen=True)
class Topology:
    """A K-user linear network with connectivity parameter L.

    Attributes:
        K: number of BS-MT pairs, at least 1.
        L: connectivity parameter, 0 <= L < K. ``L = 0`` is K parallel
           point-to-point links; ``L = 1`` is the classic linear model.
    """

    K: int
    L: int

    def __post_init__(self) -> None:
        if self.K < 1:
            raise StructuralError(f"K must be positive, got {self.K}")
        if self.L < 0:
            raise StructuralError(f"L must be non-negative, got {self.L}")
        if self.L >= self.K:
            raise StructuralError(f"L must be smaller than K, got L={self.L}, K={self.K}")

    def _check_index(self, idx: int, what: str) -> None:
        if not 1 <= idx <= self.K:
            raise StructuralError(f"{what} index {idx} out of range [1, {self.K}]")

    def connected_bs(self, mt: int) -> frozenset[int]:
        """Base stations connected to mobile terminal ``mt``.

        Returns ``{mt-L, ..., mt}`` clipped to ``[1, K]``.
        """
        self._check_index(mt, "MT")
        return frozenset(range(max(1, mt - self.L), mt + 1))

    def connected_mts(self, bs: int) -> frozenset[int]:
        """Mobile terminals connected to base station ``bs``: ``{bs, ..., bs+L}`` clipped."""
        self._check_index(bs, "BS")
        return frozenset(range(bs, min(self.K, bs + self.L) + 1))

    def interference_set(self, node: int, session: str) -> frozenset[int]:
        """Receivers that transmitter ``node`` is connected to.

        In the uplink the transmitter is MT ``node`` and the receivers are
        base stations ``{node-L, ..., node}``; in the downlink the
        transmitter is BS ``node`` and the receivers are mobile terminals
        ``{node, ..., node+L}``. Both are clipped to ``[1, K]``.
        """
        if session == UPLINK:
            return self.connected_bs(node)
        if session == DOWNLINK:
            return self.connected_mts(node)
        raise StructuralError(f"unknown session {session!r}, expected one of {SESSIONS}")

    def subnetwork_partition(self, s: int) -> list[tuple[int, int]]:
        """Split ``[1, K]`` into blocks of ``s`` consecutive pairs.

        Block ``k`` starts at ``s*(k-1) + 1``; the last block may be
        shorter. Returns inclusive ``(start, end)`` intervals covering
        ``[1, K]`` exactly once.
        """
        if s < 1:
            raise StructuralError(f"subnetwork size must be >= 1, got {s}")
        return [(a, min(a + s - 1, self.K)) for a in range(1, self.K + 1, s)]

    def subnetwork_of(self, idx: int, s: int) -> int:
        """1-based subnetwork number of user ``idx`` under block size ``s``."""
        self._check_index(idx, "user")
        return (idx - 1) // s + 1
