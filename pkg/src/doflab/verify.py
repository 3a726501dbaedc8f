"""Feasibility checkers for uplink and downlink zero-forcing plans.

An uplink plan lists active terminals, one decoding pair per active
terminal, and explicit message-sharing edges over the backhaul. It is
accepted when every decoding base station can subtract all interference
from messages decoded earlier and shared to it, the decode-before
relation is acyclic, and every terminal stays inside its association.

A downlink plan lists, per served message, the transmit set actually
carrying it, plus the set of active receivers. It is accepted when every
served message admits a bipartite matching between its transmit set and
the active receivers that hear it, covering all of those receivers; for
generic channel coefficients this is exactly solvability of the nulling
system, which the numeric module validates empirically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .association import CellAssociation
from .errors import StructuralError
from .topology import DOWNLINK, UPLINK, Topology

__all__ = [
    "UplinkPlan",
    "DownlinkPlan",
    "Violation",
    "Diagnostics",
    "DofReport",
    "check_uplink",
    "check_downlink",
    "ordering_violations",
    "set_budget_bound",
    "decode_order",
    "max_matching",
    "plan_to_json_dict",
    "plan_from_json_dict",
    "dump_plan",
    "load_plan",
]


# ---------------------------------------------------------------------------
# Plan types


@dataclass(frozen=True)
class UplinkPlan:
    """Message-passing decoding plan for one uplink use of the network.

    Attributes:
        active_mts: terminals that transmit.
        decoding_pairs: MT index -> BS index where its message is decoded.
        shares: directed backhaul edges ``(from_bs, to_bs, mt)``; the edge
            carries MT's decoded message from its decoding base station to
            another associated base station.
    """

    active_mts: frozenset[int]
    decoding_pairs: dict[int, int]
    shares: frozenset[tuple[int, int, int]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "active_mts", frozenset(int(i) for i in self.active_mts))
        object.__setattr__(
            self, "decoding_pairs", {int(mt): int(bs) for mt, bs in self.decoding_pairs.items()}
        )
        object.__setattr__(
            self, "shares", frozenset((int(f), int(t), int(m)) for f, t, m in self.shares)
        )

    def check_indices(self, topology: Topology) -> None:
        for i in self.active_mts:
            topology._check_index(i, "active MT")
        for mt, bs in self.decoding_pairs.items():
            topology._check_index(mt, "decoding MT")
            topology._check_index(bs, "decoding BS")
        for f, t, m in self.shares:
            topology._check_index(f, "share source BS")
            topology._check_index(t, "share target BS")
            topology._check_index(m, "shared message MT")


@dataclass(frozen=True)
class DownlinkPlan:
    """Cooperative zero-forcing transmission plan for one downlink use.

    Attributes:
        transmit_sets: MT index -> base stations actively transmitting its
            message. Empty sets mean the message is not served.
        active_receivers: terminals decoding their own message.
    """

    transmit_sets: dict[int, frozenset[int]]
    active_receivers: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "transmit_sets",
            {int(mt): frozenset(int(b) for b in bss) for mt, bss in self.transmit_sets.items() if bss},
        )
        object.__setattr__(
            self, "active_receivers", frozenset(int(i) for i in self.active_receivers)
        )

    def served(self) -> frozenset[int]:
        return frozenset(self.transmit_sets)

    def check_indices(self, topology: Topology) -> None:
        for i in self.active_receivers:
            topology._check_index(i, "active receiver")
        for mt, bss in self.transmit_sets.items():
            topology._check_index(mt, "served MT")
            for b in bss:
                topology._check_index(b, "transmitting BS")


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class Violation:
    """One failed acceptance condition, tied to the offending indices."""

    condition: int
    mt: int | None
    bs: int | None
    detail: str

    def to_json_dict(self) -> dict:
        return {"condition": self.condition, "mt": self.mt, "bs": self.bs, "detail": self.detail}


@dataclass(frozen=True)
class Diagnostics:
    """Converse-style bookkeeping reported alongside a verdict.

    ``borrowed[k-1]`` counts decoding pairs whose terminal lies in
    subnetwork k but whose base station lies in subnetwork k-1.
    ``blocked[k-1]`` counts the run of consecutive base stations at the
    end of subnetwork k-1 that decode nothing while hearing at least one
    active terminal of subnetwork k whose message is not shared to them;
    this operationalizes the informal notion of a subnetwork blocking its
    predecessor and is a diagnostic, not ground truth. ``prefix_active[j-1]``
    is the number of active receivers with index at most j.
    """

    borrowed: tuple[int, ...] = ()
    blocked: tuple[int, ...] = ()
    prefix_active: tuple[int, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "borrowed": list(self.borrowed),
            "blocked": list(self.blocked),
            "prefix_active": list(self.prefix_active),
        }


@dataclass(frozen=True)
class DofReport:
    """Verdict and DoF accounting for one checked plan."""

    session: str
    achieved_dof: int
    per_user_ratio: Fraction
    per_subnetwork: tuple[int, ...]
    diagnostics: Diagnostics
    violations: tuple[Violation, ...] = ()

    @property
    def accepted(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "session": self.session,
            "accepted": self.accepted,
            "achieved_dof": self.achieved_dof,
            "per_user_ratio": f"{self.per_user_ratio.numerator}/{self.per_user_ratio.denominator}",
            "per_subnetwork": list(self.per_subnetwork),
            "diagnostics": self.diagnostics.to_json_dict(),
            "violations": [v.to_json_dict() for v in self.violations],
        }


def _per_subnetwork_counts(active: Iterable[int], topology: Topology, s: int) -> tuple[int, ...]:
    blocks = topology.subnetwork_partition(s)
    counts = [0] * len(blocks)
    for i in active:
        counts[(i - 1) // s] += 1
    return tuple(counts)


def _prefix_counts(active: Iterable[int], K: int) -> tuple[int, ...]:
    marks = [0] * (K + 1)
    for i in active:
        marks[i] = 1
    out = []
    run = 0
    for j in range(1, K + 1):
        run += marks[j]
        out.append(run)
    return tuple(out)


# ---------------------------------------------------------------------------
# Uplink checker


def decode_order(plan: UplinkPlan, topology: Topology) -> list[int] | None:
    """A decode order satisfying every decode-before dependency, or None.

    The dependency is: for a decoding pair (i, j), every other active
    terminal heard at base station j must have its message decoded first
    so it can be subtracted. Ties are broken toward the highest terminal
    index, which reproduces the top-down order of the constructions.
    """
    deps: dict[int, set[int]] = {i: set() for i in plan.decoding_pairs}
    for i, j in plan.decoding_pairs.items():
        for k in plan.active_mts:
            if k != i and j in topology.connected_bs(k) and k in plan.decoding_pairs:
                deps[i].add(k)
    order: list[int] = []
    ready = sorted(i for i, d in deps.items() if not d)
    pending = {i: set(d) for i, d in deps.items() if d}
    rdeps: dict[int, set[int]] = {i: set() for i in deps}
    for i, d in deps.items():
        for k in d:
            rdeps[k].add(i)
    while ready:
        k = ready.pop()  # highest index first
        order.append(k)
        for i in sorted(rdeps[k]):
            pending[i].discard(k)
            if not pending[i]:
                del pending[i]
                ready.append(i)
        ready.sort()
    if pending:
        return None
    return order


def check_uplink(
    plan: UplinkPlan,
    assoc: CellAssociation,
    topology: Topology,
    subnetwork_size: int | None = None,
) -> DofReport:
    """Decide feasibility of an uplink message-passing decoding plan.

    Conditions, in the order violations are numbered:

    0. well-formedness: active terminals and decoding pairs coincide, and
       each share edge originates at the decoding base station of the
       message it carries;
    1. each decoding pair (i, j) has j associated with and connected to i;
    2. at most one message is decoded per base station;
    3. for each decoding pair (i, j), every other active terminal heard at
       j is associated with j and a share edge delivers its message to j;
    4. the decode-before relation admits a topological order;
    5. all base stations a terminal uses (decoding plus share endpoints)
       lie inside its association, and every association meets the budget.
    """
    plan.check_indices(topology)
    assoc.check_indices(topology)
    s = subnetwork_size if subnetwork_size is not None else topology.K
    violations: list[Violation] = []

    for i in sorted(plan.active_mts):
        if i not in plan.decoding_pairs:
            violations.append(Violation(0, i, None, f"active MT {i} has no decoding pair"))
    for i in sorted(plan.decoding_pairs):
        if i not in plan.active_mts:
            violations.append(Violation(0, i, plan.decoding_pairs[i], f"inactive MT {i} has a decoding pair"))
    for f, t, m in sorted(plan.shares):
        dec = plan.decoding_pairs.get(m)
        if dec is None:
            violations.append(Violation(0, m, f, f"share edge carries undecoded message of MT {m}"))
        elif f != dec:
            violations.append(
                Violation(0, m, f, f"share edge for MT {m} originates at BS {f}, not its decoding BS {dec}")
            )

    for i, j in sorted(plan.decoding_pairs.items()):
        if j not in assoc.cell(i):
            violations.append(Violation(1, i, j, f"decoding BS {j} not in C_{i}"))
        if j not in topology.connected_bs(i):
            violations.append(Violation(1, i, j, f"decoding BS {j} not connected to MT {i}"))

    used_bs: dict[int, int] = {}
    for i, j in sorted(plan.decoding_pairs.items()):
        if j in used_bs:
            violations.append(
                Violation(2, i, j, f"BS {j} decodes both MT {used_bs[j]} and MT {i}")
            )
        else:
            used_bs[j] = i

    shares_to = {(t, m) for _, t, m in plan.shares}
    for i, j in sorted(plan.decoding_pairs.items()):
        for k in sorted(plan.active_mts):
            if k == i or j not in topology.connected_bs(k):
                continue
            if j not in assoc.cell(k):
                violations.append(
                    Violation(3, k, j, f"interferer MT {k} at BS {j} lacks the association needed to cancel it")
                )
            if (j, k) not in shares_to:
                violations.append(
                    Violation(3, k, j, f"no share edge delivers MT {k}'s message to BS {j}")
                )

    if decode_order(plan, topology) is None:
        cyc = _find_cycle(plan, topology)
        for i in cyc:
            violations.append(
                Violation(4, i, plan.decoding_pairs.get(i), "decode-before dependency cycle")
            )

    for i in sorted(plan.active_mts):
        used = {plan.decoding_pairs[i]} if i in plan.decoding_pairs else set()
        for f, t, m in plan.shares:
            if m == i:
                used.update((f, t))
        extra = used - assoc.cell(i)
        for b in sorted(extra):
            violations.append(Violation(5, i, b, f"BS {b} used for MT {i} is outside C_{i}"))
    for mt, size in assoc.validate(topology).budget_violations:
        violations.append(Violation(5, mt, None, f"|C_{mt}| = {size} exceeds budget {assoc.nc}"))

    dof = len(plan.active_mts)
    decoding_bss = set(plan.decoding_pairs.values())
    diagnostics = Diagnostics(
        borrowed=_borrowed_counts(plan, topology, s),
        blocked=_blocked_counts(plan, topology, s),
        prefix_active=_prefix_counts(decoding_bss, topology.K),
    )
    return DofReport(
        session=UPLINK,
        achieved_dof=dof,
        per_user_ratio=Fraction(dof, topology.K),
        per_subnetwork=_per_subnetwork_counts(plan.active_mts, topology, s),
        diagnostics=diagnostics,
        violations=tuple(violations),
    )


def _find_cycle(plan: UplinkPlan, topology: Topology) -> list[int]:
    """Terminals on one decode-before cycle, empty if acyclic."""
    adj: dict[int, list[int]] = {i: [] for i in plan.decoding_pairs}
    for i, j in plan.decoding_pairs.items():
        for k in plan.active_mts:
            if k != i and j in topology.connected_bs(k) and k in plan.decoding_pairs:
                adj[k].append(i)
    color: dict[int, int] = {}
    stack: list[int] = []

    def dfs(u: int) -> list[int] | None:
        color[u] = 1
        stack.append(u)
        for v in sorted(adj[u]):
            if color.get(v, 0) == 1:
                return stack[stack.index(v):]
            if color.get(v, 0) == 0:
                found = dfs(v)
                if found is not None:
                    return found
        color[u] = 2
        stack.pop()
        return None

    for u in sorted(adj):
        if color.get(u, 0) == 0:
            found = dfs(u)
            if found is not None:
                return found
            stack.clear()
    return []


def _borrowed_counts(plan: UplinkPlan, topology: Topology, s: int) -> tuple[int, ...]:
    blocks = topology.subnetwork_partition(s)
    delta = [0] * len(blocks)
    for i, j in plan.decoding_pairs.items():
        ki = (i - 1) // s
        kj = (j - 1) // s
        if ki == kj + 1:
            delta[ki] += 1
    return tuple(delta)


def _blocked_counts(plan: UplinkPlan, topology: Topology, s: int) -> tuple[int, ...]:
    blocks = topology.subnetwork_partition(s)
    decoding_bss = set(plan.decoding_pairs.values())
    shares_to = {(t, m) for _, t, m in plan.shares}
    mu = [0] * len(blocks)
    for k in range(1, len(blocks)):
        alpha_k = blocks[k][0]
        lo_prev = blocks[k - 1][0]
        run = 0
        for j in range(alpha_k - 1, lo_prev - 1, -1):
            if j in decoding_bss:
                break
            jams = any(
                m for m in plan.active_mts
                if (m - 1) // s == k and j in topology.connected_bs(m) and (j, m) not in shares_to
            )
            if not jams:
                break
            run += 1
        mu[k] = run
    return tuple(mu)


def ordering_violations(plan: UplinkPlan) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Decoding-pair pairs that break monotone ordering.

    For any two pairs of a feasible plan, the one with the larger terminal
    index also has the larger base-station index. Returns every offending
    pair of pairs, ordered by terminal index; empty for any accepted plan.
    """
    pairs = sorted(plan.decoding_pairs.items())
    bad = []
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            (i1, j1), (i2, j2) = pairs[a], pairs[b]
            if j1 >= j2:
                bad.append(((i1, j1), (i2, j2)))
    return bad


def set_budget_bound(
    assoc: CellAssociation,
    topology: Topology,
    window: tuple[int, int],
    plan: UplinkPlan,
) -> bool:
    """True iff at most ``Nc`` decoding pairs sit entirely inside ``window``.

    ``window`` is an inclusive index interval; the guarantee proved for
    feasible plans applies to windows of length ``L + 1``.
    """
    lo, hi = window
    if not (1 <= lo <= hi <= topology.K):
        raise StructuralError(f"window {window} outside [1, {topology.K}]")
    count = sum(1 for mt, bs in plan.decoding_pairs.items() if lo <= mt <= hi and lo <= bs <= hi)
    return count <= assoc.nc


# ---------------------------------------------------------------------------
# Downlink checker


def max_matching(
    left: list[int], right: list[int], adj: Mapping[int, frozenset[int]]
) -> tuple[dict[int, int], list[int]]:
    """Maximum bipartite matching covering the right side if possible.

    ``adj[l]`` lists right vertices reachable from left vertex ``l``.
    Augmenting-path search with lowest-index tie-breaking. Returns
    ``(match, hall_witness)`` where ``match`` maps right -> left for every
    matched right vertex, and ``hall_witness`` is a set of right vertices
    whose joint neighborhood is too small (empty when all are matched).
    """
    radj: dict[int, list[int]] = {r: [] for r in right}
    for l in sorted(left):
        for r in sorted(adj.get(l, frozenset())):
            if r in radj:
                radj[r].append(l)
    match_r: dict[int, int] = {}
    match_l: dict[int, int] = {}

    def augment(r: int, seen: set[int]) -> bool:
        for l in radj[r]:
            if l in seen:
                continue
            seen.add(l)
            if l not in match_l or augment(match_l[l], seen):
                match_r[r] = l
                match_l[l] = r
                return True
        return False

    unmatched = []
    for r in sorted(right):
        if not augment(r, set()):
            unmatched.append(r)
    if not unmatched:
        return match_r, []
    # Hall witness: alternating tree from one unmatched right vertex.
    r0 = unmatched[0]
    reach_r = {r0}
    reach_l: set[int] = set()
    frontier = [r0]
    while frontier:
        nxt = []
        for r in frontier:
            for l in radj[r]:
                if l not in reach_l:
                    reach_l.add(l)
                    if l in match_l and match_l[l] not in reach_r:
                        reach_r.add(match_l[l])
                        nxt.append(match_l[l])
        frontier = nxt
    return match_r, sorted(reach_r)


def nulled_receivers(
    transmit_set: frozenset[int], active: frozenset[int], topology: Topology
) -> frozenset[int]:
    """Active receivers connected to any base station in the transmit set."""
    out = set()
    for b in transmit_set:
        out.update(topology.connected_mts(b) & active)
    return frozenset(out)


def check_downlink(
    plan: DownlinkPlan,
    assoc: CellAssociation,
    topology: Topology,
    subnetwork_size: int | None = None,
) -> DofReport:
    """Decide feasibility of a cooperative zero-forcing downlink plan.

    Conditions, in the order violations are numbered:

    0. every transmit set stays inside the message's association;
    1. every active receiver is served and hears at least one base station
       of its own transmit set;
    2. every served message admits a matching from its transmit set onto
       all active receivers that hear it (Hall witness reported on
       failure);
    3. every active receiver belongs to the nulled-receiver set of its own
       message, so the desired signal actually arrives.
    """
    plan.check_indices(topology)
    assoc.check_indices(topology)
    s = subnetwork_size if subnetwork_size is not None else topology.K
    violations: list[Violation] = []

    for i in sorted(plan.transmit_sets):
        extra = plan.transmit_sets[i] - assoc.cell(i)
        for b in sorted(extra):
            violations.append(Violation(0, i, b, f"transmitting BS {b} is outside C_{i}"))
    for mt, size in assoc.validate(topology).budget_violations:
        violations.append(Violation(0, mt, None, f"|C_{mt}| = {size} exceeds budget {assoc.nc}"))

    for j in sorted(plan.active_receivers):
        tset = plan.transmit_sets.get(j, frozenset())
        if not tset:
            violations.append(Violation(1, j, None, f"active receiver {j} is not served"))
        elif not (tset & topology.connected_bs(j)):
            violations.append(
                Violation(1, j, None, f"no BS transmitting to MT {j} is connected to it")
            )

    for i in sorted(plan.transmit_sets):
        tset = plan.transmit_sets[i]
        victims = nulled_receivers(tset, plan.active_receivers, topology)
        adj = {b: topology.connected_mts(b) & victims for b in tset}
        _, witness = max_matching(sorted(tset), sorted(victims), adj)
        if witness:
            violations.append(
                Violation(
                    2,
                    i,
                    None,
                    f"message {i}: receivers {witness} exceed the matching capacity of its transmit set",
                )
            )

    for i in sorted(plan.active_receivers):
        tset = plan.transmit_sets.get(i, frozenset())
        if tset and i not in nulled_receivers(tset, plan.active_receivers, topology):
            violations.append(
                Violation(3, i, None, f"MT {i} does not hear its own transmit set")
            )

    dof = len(plan.active_receivers)
    diagnostics = Diagnostics(
        prefix_active=_prefix_counts(plan.active_receivers, topology.K),
    )
    return DofReport(
        session=DOWNLINK,
        achieved_dof=dof,
        per_user_ratio=Fraction(dof, topology.K),
        per_subnetwork=_per_subnetwork_counts(plan.active_receivers, topology, s),
        diagnostics=diagnostics,
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------------
# Plan serialization


def plan_to_json_dict(plan: UplinkPlan | DownlinkPlan) -> dict:
    if isinstance(plan, UplinkPlan):
        return {
            "session": UPLINK,
            "active": sorted(plan.active_mts),
            "pairs": {str(mt): bs for mt, bs in sorted(plan.decoding_pairs.items())},
            "shares": sorted([f, t, m] for f, t, m in plan.shares),
        }
    return {
        "session": DOWNLINK,
        "active": sorted(plan.active_receivers),
        "transmit_sets": {str(mt): sorted(bss) for mt, bss in sorted(plan.transmit_sets.items())},
    }


def plan_from_json_dict(obj: dict) -> UplinkPlan | DownlinkPlan:
    try:
        session = obj["session"]
        if session == UPLINK:
            return UplinkPlan(
                active_mts=frozenset(map(int, obj["active"])),
                decoding_pairs={int(mt): int(bs) for mt, bs in obj.get("pairs", {}).items()},
                shares=frozenset((int(f), int(t), int(m)) for f, t, m in obj.get("shares", [])),
            )
        if session == DOWNLINK:
            return DownlinkPlan(
                transmit_sets={
                    int(mt): frozenset(map(int, bss))
                    for mt, bss in obj.get("transmit_sets", {}).items()
                },
                active_receivers=frozenset(map(int, obj["active"])),
            )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise StructuralError(f"malformed plan JSON: {exc}") from exc
    raise StructuralError(f"unknown session {obj.get('session')!r} in plan JSON")


def dump_plan(plan: UplinkPlan | DownlinkPlan) -> str:
    return json.dumps(plan_to_json_dict(plan), indent=2, sort_keys=True) + "\n"


def load_plan(text: str) -> UplinkPlan | DownlinkPlan:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"invalid JSON: {exc}") from exc
    return plan_from_json_dict(obj)
