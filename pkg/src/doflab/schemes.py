"""Closed-form per-user DoF values and the constructions achieving them.

All values are exact rationals. The generators emit, for any network
size, the association plus the uplink and/or downlink plan of the
periodic construction, dropping any assignment that would reference an
index outside the network in a trailing partial subnetwork. A bundle
therefore reports two numbers per session: the asymptotic per-user value
and the exact finite-K DoF count its plan achieves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .association import CellAssociation
from .errors import FormulaDomainError, InstanceTooSmallError
from .topology import DOWNLINK, UPLINK, Topology
from .verify import DownlinkPlan, UplinkPlan

__all__ = [
    "tau_d_zf",
    "tau_u_zf",
    "gamma_d",
    "tau_avg_lower",
    "tau_wyner",
    "SessionValue",
    "SchemeBundle",
    "build_downlink_scheme",
    "build_uplink_scheme",
    "build_joint_scheme",
]


def _check_params(L: int, Nc: int) -> None:
    if L < 0:
        raise FormulaDomainError(f"L must be non-negative, got {L}")
    if Nc < 1:
        raise FormulaDomainError(f"Nc must be positive, got {Nc}")


def tau_d_zf(L: int, Nc: int) -> Fraction:
    """Downlink-only zero-forcing per-user DoF: 2Nc / (2Nc + L)."""
    _check_params(L, Nc)
    return Fraction(2 * Nc, 2 * Nc + L)


def tau_u_zf(L: int, Nc: int) -> Fraction:
    """Uplink-only zero-forcing per-user DoF.

    1 with full coverage (Nc >= L+1), (Nc+1)/(L+2) in the middle range,
    and 2Nc/(2Nc+L) when 2Nc < L. The two sided formulas agree at
    2Nc = L, so branching on that threshold keeps the value continuous
    and matches both converse arguments.
    """
    _check_params(L, Nc)
    if Nc >= L + 1:
        return Fraction(1)
    if 2 * Nc >= L:
        return Fraction(Nc + 1, L + 2)
    return Fraction(2 * Nc, 2 * Nc + L)


def epsilon_kappa(L: int, Nc: int) -> tuple[int, int]:
    """Helper pair for the shared-association downlink: ceil((L+1)/2) and its offset."""
    eps = math.ceil((L + 1) / 2)
    return eps, eps + Nc - (L + 1)


def gamma_d(L: int, Nc: int) -> Fraction:
    """Downlink component under a full-coverage association, Nc >= L+1.

    With eps = ceil((L+1)/2) and kappa = eps + Nc - (L+1), the value is
    2*kappa / (2*kappa + L).
    """
    _check_params(L, Nc)
    if Nc <= L:
        raise FormulaDomainError(f"gamma_d requires Nc >= L+1, got L={L}, Nc={Nc}")
    _, kappa = epsilon_kappa(L, Nc)
    return Fraction(2 * kappa, 2 * kappa + L)


def tau_avg_lower(L: int, Nc: int) -> Fraction:
    """Achievable average uplink-downlink per-user DoF (inner bound)."""
    _check_params(L, Nc)
    if Nc >= L + 1:
        return (1 + gamma_d(L, Nc)) / 2
    return Fraction(2 * Nc, 2 * Nc + L)


def tau_wyner(Nc: int) -> Fraction:
    """Average per-user DoF of the L = 1 linear network: information-theoretic value."""
    _check_params(1, Nc)
    if Nc == 1:
        return Fraction(2, 3)
    return Fraction(4 * Nc - 3, 4 * Nc - 2)


# ---------------------------------------------------------------------------
# Constructions


@dataclass(frozen=True)
class SessionValue:
    """Declared outcome of a construction for one session."""

    asymptotic: Fraction
    finite_dof: int
    subnetwork_size: int

    def to_json_dict(self) -> dict:
        return {
            "asymptotic": f"{self.asymptotic.numerator}/{self.asymptotic.denominator}",
            "finite_dof": self.finite_dof,
            "subnetwork_size": self.subnetwork_size,
        }


@dataclass(frozen=True)
class SchemeBundle:
    """An association together with the plan(s) realizing it."""

    topology: Topology
    association: CellAssociation
    uplink_plan: UplinkPlan | None
    downlink_plan: DownlinkPlan | None
    declared: dict[str, SessionValue]


def _shares_for(
    pairs: dict[int, int], assoc: CellAssociation, topology: Topology
) -> frozenset[tuple[int, int, int]]:
    """Minimal share set: deliver each decoded message to every other
    decoding base station that hears its terminal and may hold it."""
    decoding_bss = set(pairs.values())
    shares = set()
    for k, dec in pairs.items():
        targets = (topology.connected_bs(k) & decoding_bss & assoc.cell(k)) - {dec}
        for j in targets:
            shares.add((dec, j, k))
    return frozenset(shares)


def _within(topology: Topology, *index_groups) -> bool:
    for group in index_groups:
        for idx in group:
            if not 1 <= idx <= topology.K:
                return False
    return True


def build_downlink_scheme(K: int, L: int, Nc: int) -> SchemeBundle:
    """Periodic downlink construction achieving 2Nc served users per 2Nc+L.

    Each subnetwork carries two broadcast blocks of Nc messages each. In
    local indices: message i <= Nc is transmitted from base stations
    {i..Nc}; message i in {Nc+L+1..2Nc+L} from {Nc+1..i-L}. The middle L
    receivers and the last L transmitters idle to isolate the blocks and
    the subnetworks. A trailing partial subnetwork keeps only messages
    whose references stay inside the network.
    """
    _check_params(L, Nc)
    s = 2 * Nc + L
    if K < s:
        raise InstanceTooSmallError(f"downlink construction needs K >= 2Nc+L = {s}, got K={K}")
    topology = Topology(K, L)
    cells: dict[int, frozenset[int]] = {}
    active: set[int] = set()
    for lo, _hi in topology.subnetwork_partition(s):
        base = lo - 1
        for i in range(1, Nc + 1):
            mt = base + i
            tset = frozenset(range(base + i, base + Nc + 1))
            if _within(topology, [mt], tset):
                cells[mt] = tset
                active.add(mt)
        for i in range(Nc + L + 1, 2 * Nc + L + 1):
            mt = base + i
            tset = frozenset(range(base + Nc + 1, base + i - L + 1))
            if _within(topology, [mt], tset):
                cells[mt] = tset
                active.add(mt)
    assoc = CellAssociation(nc=Nc, cells=cells)
    plan = DownlinkPlan(transmit_sets=dict(cells), active_receivers=frozenset(active))
    declared = {
        DOWNLINK: SessionValue(tau_d_zf(L, Nc), len(active), s),
    }
    return SchemeBundle(topology, assoc, None, plan, declared)


def _uplink_full_coverage(topology: Topology, Nc: int) -> tuple[CellAssociation, UplinkPlan]:
    cells = {i: topology.connected_bs(i) for i in range(1, topology.K + 1)}
    assoc = CellAssociation(nc=Nc, cells=cells)
    pairs = {i: i for i in range(1, topology.K + 1)}
    plan = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=pairs,
        shares=_shares_for(pairs, assoc, topology),
    )
    return assoc, plan


def _uplink_middle_range(topology: Topology, L: int, Nc: int) -> tuple[CellAssociation, UplinkPlan]:
    """Subnetworks of L+2 pairs with the last Nc+1 terminals active.

    Within a subnetwork the last Nc messages decode at their own base
    stations and the first active message decodes at the first base
    station. Cancellation associations follow the literal budget count:
    active terminal i (local) also reaches the bottom-most L+1-i base
    stations of the preceding subnetwork.
    """
    s = L + 2
    first_active = L + 2 - Nc
    cells: dict[int, set[int]] = {}
    pairs: dict[int, int] = {}
    for lo, _hi in topology.subnetwork_partition(s):
        base = lo - 1
        for i in range(first_active, L + 3):
            mt = base + i
            if mt > topology.K:
                continue
            own: set[int] = set(range(base + first_active + 1, base + i + 1))
            if i <= L + 1:
                own.add(base + 1)
            borrow = max(0, L + 1 - i)
            preceding = set(range(lo - borrow, lo)) if base > 0 else set()
            dec = base + 1 if i == first_active else base + i
            cell = own | preceding | {dec}
            if not _within(topology, [mt], cell):
                continue
            cells[mt] = cell
            pairs[mt] = dec
    assoc = CellAssociation(nc=Nc, cells={m: frozenset(c) for m, c in cells.items()})
    plan = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=pairs,
        shares=_shares_for(pairs, assoc, topology),
    )
    return assoc, plan


def _uplink_sparse_range(
    topology: Topology, L: int, Nc: int, block_cells: bool
) -> tuple[CellAssociation, UplinkPlan]:
    """Subnetworks of 2Nc+L pairs with two blocks of Nc terminals active.

    Local terminals {1..Nc} decode at their own base stations; local
    terminals {Nc+L+1..2Nc+L} decode L below themselves, landing on
    {Nc+1..2Nc}. With ``block_cells`` the association is the full block of
    receiving base stations (the form shared with the downlink); without
    it, only the base stations that actually hear the terminal.
    """
    s = 2 * Nc + L
    cells: dict[int, frozenset[int]] = {}
    pairs: dict[int, int] = {}
    for lo, _hi in topology.subnetwork_partition(s):
        base = lo - 1
        a_block = range(base + 1, base + Nc + 1)
        b_block = range(base + Nc + 1, base + 2 * Nc + 1)
        for i in range(1, Nc + 1):
            mt = base + i
            cell = frozenset(a_block) if block_cells else frozenset(range(base + 1, base + i + 1))
            if _within(topology, [mt], cell):
                cells[mt] = cell
                pairs[mt] = mt
        for j in range(Nc + L + 1, 2 * Nc + L + 1):
            mt = base + j
            cell = frozenset(b_block) if block_cells else frozenset(range(mt - L, base + 2 * Nc + 1))
            if _within(topology, [mt], cell):
                cells[mt] = cell
                pairs[mt] = mt - L
    assoc = CellAssociation(nc=Nc, cells=cells)
    plan = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=pairs,
        shares=_shares_for(pairs, assoc, topology),
    )
    return assoc, plan


def build_uplink_scheme(K: int, L: int, Nc: int) -> SchemeBundle:
    """Uplink construction for the three budget regimes.

    Nc >= L+1 gives full coverage and one DoF per user; L <= 2Nc gives
    Nc+1 active terminals per L+2; 2Nc < L reuses the two-block layout of
    the downlink construction with Nc terminals decoded per block.
    """
    _check_params(L, Nc)
    if K < L + 2:
        raise InstanceTooSmallError(f"uplink construction needs K >= L+2 = {L + 2}, got K={K}")
    topology = Topology(K, L)
    if Nc >= L + 1:
        assoc, plan = _uplink_full_coverage(topology, Nc)
        s = L + 2
    elif 2 * Nc >= L:
        assoc, plan = _uplink_middle_range(topology, L, Nc)
        s = L + 2
    else:
        assoc, plan = _uplink_sparse_range(topology, L, Nc, block_cells=False)
        s = 2 * Nc + L
    declared = {UPLINK: SessionValue(tau_u_zf(L, Nc), len(plan.active_mts), s)}
    return SchemeBundle(topology, assoc, plan, None, declared)


def _downlink_plan_two_blocks(topology: Topology, L: int, Nc: int) -> DownlinkPlan:
    """Downlink side of the shared two-block association (budget regime Nc <= L)."""
    s = 2 * Nc + L
    transmit: dict[int, frozenset[int]] = {}
    active: set[int] = set()
    for lo, _hi in topology.subnetwork_partition(s):
        base = lo - 1
        for i in range(1, Nc + 1):
            mt = base + i
            tset = frozenset(range(base + i, base + Nc + 1))
            if _within(topology, [mt], tset):
                transmit[mt] = tset
                active.add(mt)
        for i in range(Nc + L + 1, 2 * Nc + L + 1):
            mt = base + i
            tset = frozenset(range(base + Nc + 1, base + i - L + 1))
            if _within(topology, [mt], tset):
                transmit[mt] = tset
                active.add(mt)
    return DownlinkPlan(transmit_sets=transmit, active_receivers=frozenset(active))


def build_joint_scheme(K: int, L: int, Nc: int) -> SchemeBundle:
    """Shared-association construction for both sessions.

    Nc <= L: both sessions run on the two-block association, each
    achieving 2Nc users per 2Nc+L. Nc >= L+1: the uplink keeps full
    coverage (one DoF per user) and the downlink serves two blocks of
    kappa receivers per 2*kappa+L, using kappa extra associations per
    served terminal; the merged association stays within the budget.
    """
    _check_params(L, Nc)
    topology_probe = None
    if Nc <= L:
        s = 2 * Nc + L
        if K < s:
            raise InstanceTooSmallError(f"joint construction needs K >= 2Nc+L = {s}, got K={K}")
        topology = Topology(K, L)
        assoc, uplink = _uplink_sparse_range(topology, L, Nc, block_cells=True)
        downlink = _downlink_plan_two_blocks(topology, L, Nc)
        value = Fraction(2 * Nc, 2 * Nc + L)
        declared = {
            UPLINK: SessionValue(value, len(uplink.active_mts), s),
            DOWNLINK: SessionValue(value, len(downlink.active_receivers), s),
        }
        return SchemeBundle(topology, assoc, uplink, downlink, declared)

    eps, kappa = epsilon_kappa(L, Nc)
    s = 2 * kappa + L
    if K < max(s, L + 2):
        raise InstanceTooSmallError(
            f"joint construction needs K >= max(2*kappa+L, L+2) = {max(s, L + 2)}, got K={K}"
        )
    topology = Topology(K, L)
    if L % 2 == 1:
        s1 = range(eps, eps + kappa)
        s2 = range(2 * eps + kappa, 2 * eps + 2 * kappa)
    else:
        s1 = range(eps, eps + kappa)
        s2 = range(2 * eps + kappa - 1, 2 * eps + 2 * kappa - 1)
    extra: dict[int, frozenset[int]] = {}
    transmit: dict[int, frozenset[int]] = {}
    active: set[int] = set()
    for lo, _hi in topology.subnetwork_partition(s):
        base = lo - 1
        for i in s1:
            mt = base + i
            tset = frozenset(range(base + 1, base + kappa + 1))
            if _within(topology, [mt], tset):
                extra[mt] = tset
                transmit[mt] = tset
                active.add(mt)
        for i in s2:
            mt = base + i
            tset = frozenset(range(base + eps + kappa, base + eps + 2 * kappa))
            if _within(topology, [mt], tset):
                extra[mt] = tset
                transmit[mt] = tset
                active.add(mt)
    cells = {
        i: topology.connected_bs(i) | extra.get(i, frozenset()) for i in range(1, K + 1)
    }
    assoc = CellAssociation(nc=Nc, cells=cells, downlink_extra=extra)
    pairs = {i: i for i in range(1, K + 1)}
    uplink = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=pairs,
        shares=_shares_for(pairs, assoc, topology),
    )
    downlink = DownlinkPlan(transmit_sets=transmit, active_receivers=frozenset(active))
    declared = {
        UPLINK: SessionValue(Fraction(1), K, L + 2),
        DOWNLINK: SessionValue(gamma_d(L, Nc), len(active), s),
    }
    return SchemeBundle(topology, assoc, uplink, downlink, declared)
