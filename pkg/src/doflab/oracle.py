"""Exhaustive-search oracles for desk-scale instances.

The uplink search enumerates decoding-pair assignments directly: an
association never needs to exceed the closure forced by the cancellation
conditions, so each candidate pair set determines its minimal
association and share set. Pruning rules (monotone pair ordering, the
sliding-window budget bound, one decoded message per base station, the
closure budget, and decode-cycle detection) all hold for every feasible
plan, so they never discard an optimum; with pruning disabled the search
degenerates to plain enumeration of every assignment, checked one by
one, which is the trustworthy baseline frozen into regression fixtures.

The downlink search scans active-receiver sets in decreasing size; for a
fixed active set, feasibility decomposes per message into the existence
of a transmit set within a locality window whose matching covers every
active receiver it reaches. The average search couples the two through
the shared association budget.

Two locality assumptions are recorded in each result's notes: uplink
associations are restricted to connected base stations (a message only
ever interferes there), and downlink transmit sets live in a window
around the terminal (default width Nc, adjustable to test sensitivity).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from random import Random

from .association import CellAssociation
from .errors import SearchLimitExceededError, StructuralError
from .schemes import SchemeBundle, SessionValue, build_joint_scheme, tau_avg_lower, tau_d_zf, tau_u_zf
from .topology import DOWNLINK, UPLINK, Topology
from .verify import (
    Diagnostics,
    DownlinkPlan,
    UplinkPlan,
    _blocked_counts,
    _borrowed_counts,
    check_downlink,
    check_uplink,
    max_matching,
)

__all__ = [
    "OracleResult",
    "SearchStats",
    "DEFAULT_LIMIT",
    "DEFAULT_AVG_LIMIT",
    "brute_force_uplink",
    "brute_force_downlink",
    "brute_force_average",
    "diagnostics",
    "sample_uplink_plans",
    "sample_downlink_plans",
]

DEFAULT_LIMIT = 10
DEFAULT_AVG_LIMIT = 8

AVERAGE = "average"

UPLINK_LOCALITY_NOTE = (
    "uplink associations restricted to connected base stations; lossless for L=1, "
    "adopted for general L since a message interferes only at connected receivers"
)


@dataclass(frozen=True)
class SearchStats:
    nodes: int
    pruned: int
    wall_time_s: float


@dataclass(frozen=True)
class OracleResult:
    """Outcome of an exhaustive search.

    ``optimal_dof`` is the total DoF count; for the average session it
    sums both sessions and ``average`` carries the per-use value with
    denominator 2.
    """

    session: str
    K: int
    L: int
    Nc: int
    optimal_dof: int
    per_user: Fraction
    average: Fraction | None
    witness: SchemeBundle
    stats: SearchStats
    notes: tuple[str, ...]
    window: int | None = None

    def to_json_dict(self) -> dict:
        def rational(v: Fraction) -> str:
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

        return {
            "session": self.session,
            "K": self.K,
            "L": self.L,
            "Nc": self.Nc,
            "optimal_dof": self.optimal_dof,
            "per_user": rational(self.per_user),
            "average": None if self.average is None else rational(self.average),
            "window": self.window,
            "stats": {
                "nodes": self.stats.nodes,
                "pruned": self.stats.pruned,
                "wall_time_s": round(self.stats.wall_time_s, 6),
            },
            "notes": list(self.notes),
        }


def _check_limit(K: int, limit: int, estimate: float, what: str) -> None:
    if K > limit:
        raise SearchLimitExceededError(
            f"{what} search refused: K={K} exceeds limit {limit} "
            f"(estimated search size ~{estimate:.3g} nodes)",
            estimate,
        )


# ---------------------------------------------------------------------------
# Uplink


def _closure_association(
    pairs: dict[int, int], topology: Topology, nc: int
) -> CellAssociation:
    """Minimal association supporting a decoding-pair set."""
    bss = set(pairs.values())
    cells = {}
    for k in pairs:
        cells[k] = (topology.connected_bs(k) & bss) | {pairs[k]}
    return CellAssociation(nc=nc, cells=cells)


def _closure_shares(
    pairs: dict[int, int], topology: Topology
) -> frozenset[tuple[int, int, int]]:
    bss = set(pairs.values())
    shares = set()
    for k, dec in pairs.items():
        for j in (topology.connected_bs(k) & bss) - {dec}:
            shares.add((dec, j, k))
    return frozenset(shares)


def _pairs_to_bundle(
    pairs: dict[int, int], topology: Topology, nc: int, subnetwork_size: int
) -> tuple[CellAssociation, UplinkPlan]:
    assoc = _closure_association(pairs, topology, nc)
    plan = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=dict(pairs),
        shares=_closure_shares(pairs, topology),
    )
    return assoc, plan


def _has_decode_cycle(pairs: dict[int, int], topology: Topology) -> bool:
    """Cycle in the decode-before relation implied by a pair set."""
    indeg = {i: 0 for i in pairs}
    adj: dict[int, list[int]] = {i: [] for i in pairs}
    for i, b_i in pairs.items():
        for k in pairs:
            if k != i and b_i in topology.connected_bs(k):
                adj[k].append(i)
                indeg[i] += 1
    queue = [i for i, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen < len(pairs)


def _uplink_estimate(topology: Topology) -> float:
    est = 1.0
    for i in range(1, topology.K + 1):
        est *= len(topology.connected_bs(i)) + 1
    return est


def brute_force_uplink(
    K: int, L: int, Nc: int, *, limit: int | None = None, prune: bool = True
) -> OracleResult:
    """Maximize the number of active terminals over all feasible uplink plans.

    Exact by exhaustion over decoding-pair assignments with associations
    restricted to connected base stations. ``prune=False`` enumerates
    every assignment and checks each one; ``prune=True`` applies only
    rules every accepted plan satisfies.
    """
    topology = Topology(K, L)
    limit = DEFAULT_LIMIT if limit is None else limit
    _check_limit(K, limit, _uplink_estimate(topology), "uplink")
    t0 = time.perf_counter()
    stats = {"nodes": 0, "pruned": 0}
    conn = {i: topology.connected_bs(i) for i in range(1, K + 1)}
    best: dict = {"count": -1, "pairs": {}}

    def consider(pairs: dict[int, int]) -> None:
        if len(pairs) <= best["count"]:
            return
        assoc, plan = _pairs_to_bundle(pairs, topology, Nc, K)
        report = check_uplink(plan, assoc, topology)
        if report.accepted:
            best["count"] = len(pairs)
            best["pairs"] = dict(pairs)

    if prune:

        def dfs(i: int, pairs: dict[int, int], last_bs: int, loads: dict[int, int]) -> None:
            stats["nodes"] += 1
            consider(pairs)
            if i > K:
                return
            if len(pairs) + (K - i + 1) <= best["count"]:
                stats["pruned"] += 1
                return
            dfs(i + 1, pairs, last_bs, loads)
            used = set(pairs.values())
            for b in sorted(conn[i]):
                if b <= last_bs or b in used:
                    continue
                new_loads = dict(loads)
                ok = True
                for k in itertools.chain(pairs, [i]):
                    lo = sum(1 for bb in itertools.chain(used, [b]) if bb in conn[k]) if k == i else None
                    if k == i:
                        new_loads[i] = lo
                    elif b in conn[k]:
                        new_loads[k] = new_loads[k] + 1
                    if new_loads.get(k, 0) > Nc:
                        ok = False
                        break
                if not ok:
                    stats["pruned"] += 1
                    continue
                if not _window_budget_ok(pairs, i, b, topology, Nc):
                    stats["pruned"] += 1
                    continue
                pairs[i] = b
                if _has_decode_cycle(pairs, topology):
                    stats["pruned"] += 1
                else:
                    dfs(i + 1, pairs, b, new_loads)
                del pairs[i]

        dfs(1, {}, 0, {})
    else:

        def enumerate_all(i: int, pairs: dict[int, int]) -> None:
            if i > K:
                stats["nodes"] += 1
                consider(pairs)
                return
            enumerate_all(i + 1, pairs)
            for b in sorted(conn[i]):
                pairs[i] = b
                enumerate_all(i + 1, pairs)
                del pairs[i]

        enumerate_all(1, {})

    pairs = best["pairs"]
    assoc, plan = _pairs_to_bundle(pairs, topology, Nc, K)
    report = check_uplink(plan, assoc, topology)
    if not report.accepted:
        raise AssertionError("oracle witness failed re-verification")
    bundle = SchemeBundle(
        topology=topology,
        association=assoc,
        uplink_plan=plan,
        downlink_plan=None,
        declared={UPLINK: SessionValue(tau_u_zf(L, Nc), best["count"], K)},
    )
    return OracleResult(
        session=UPLINK,
        K=K,
        L=L,
        Nc=Nc,
        optimal_dof=best["count"],
        per_user=Fraction(best["count"], K),
        average=None,
        witness=bundle,
        stats=SearchStats(stats["nodes"], stats["pruned"], time.perf_counter() - t0),
        notes=(UPLINK_LOCALITY_NOTE,),
    )


def _window_budget_ok(
    pairs: dict[int, int], mt: int, bs: int, topology: Topology, nc: int
) -> bool:
    """Sliding-window budget bound on windows containing the new pair."""
    L, K = topology.L, topology.K
    lo_w = max(1, max(mt, bs) - L)
    hi_w = min(min(mt, bs), K - L)
    for w in range(lo_w, hi_w + 1):
        hi = w + L
        count = 1
        for m, b in pairs.items():
            if w <= m <= hi and w <= b <= hi:
                count += 1
        if count > nc:
            return False
    return True


# ---------------------------------------------------------------------------
# Downlink


def _allowed_window(topology: Topology, i: int, window: int) -> tuple[int, ...]:
    return tuple(
        range(max(1, i - topology.L - window), min(topology.K, i + window) + 1)
    )


def _first_feasible_transmit_set(
    topology: Topology,
    i: int,
    active: frozenset[int],
    allowed: tuple[int, ...],
    nc: int,
    required: frozenset[int] = frozenset(),
) -> frozenset[int] | None:
    """Lexicographically first transmit set serving message i against ``active``.

    The set must fit in the shared budget together with ``required``
    (the base stations the uplink already forces into the association),
    reach receiver i, and admit a matching covering every active receiver
    it reaches.
    """
    conn_i = topology.connected_bs(i)
    for size in range(1, min(nc, len(allowed)) + 1):
        for combo in itertools.combinations(allowed, size):
            tset = frozenset(combo)
            if len(tset | required) > nc:
                continue
            if not (tset & conn_i):
                continue
            victims = set()
            for b in tset:
                victims.update(topology.connected_mts(b) & active)
            if i not in victims:
                continue
            if len(victims) > len(tset):
                continue
            adj = {b: topology.connected_mts(b) & frozenset(victims) for b in tset}
            _, witness = max_matching(sorted(tset), sorted(victims), adj)
            if not witness:
                return tset
    return None


def _masks_by_size(K: int) -> list[list[int]]:
    by_size: list[list[int]] = [[] for _ in range(K + 1)]
    for mask in range(1 << K):
        by_size[mask.bit_count()].append(mask)
    return by_size


def _mask_to_set(mask: int) -> frozenset[int]:
    out = set()
    i = 1
    while mask:
        if mask & 1:
            out.add(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def brute_force_downlink(
    K: int,
    L: int,
    Nc: int,
    window: int | None = None,
    *,
    limit: int | None = None,
    prune: bool = True,
) -> OracleResult:
    """Maximize the number of active receivers over windowed associations.

    Exact within the declared window: transmit sets are drawn from
    ``[i-L-window, i+window]``. For a fixed active set, messages are
    independent, so active sets are scanned in decreasing size and every
    member message is tested for a feasible transmit set.
    """
    topology = Topology(K, L)
    limit = DEFAULT_LIMIT if limit is None else limit
    window = Nc if window is None else window
    if window < 0:
        raise StructuralError(f"window must be non-negative, got {window}")
    _check_limit(K, limit, 2.0 ** K * K, "downlink")
    t0 = time.perf_counter()
    stats = {"nodes": 0, "pruned": 0}
    allowed = {i: _allowed_window(topology, i, window) for i in range(1, K + 1)}
    reach = {
        i: frozenset(range(max(1, i - L - window), min(K, i + window + L) + 1))
        for i in range(1, K + 1)
    }
    memo: dict[tuple, frozenset[int] | None] = {}

    def feasible_set(i: int, active: frozenset[int]) -> frozenset[int] | None:
        if prune:
            key = (i, active & reach[i])
            if key in memo:
                return memo[key]
            out = _first_feasible_transmit_set(topology, i, active, allowed[i], Nc)
            memo[key] = out
            return out
        return _first_feasible_transmit_set(topology, i, active, allowed[i], Nc)

    best_active: frozenset[int] = frozenset()
    best_sets: dict[int, frozenset[int]] = {}
    by_size = _masks_by_size(K)
    done = False
    for size in range(K, -1, -1):
        if done and prune:
            break
        for mask in by_size[size]:
            stats["nodes"] += 1
            active = _mask_to_set(mask)
            if len(active) <= len(best_active):
                stats["pruned"] += 1
                if prune:
                    continue
            sets = {}
            ok = True
            for i in sorted(active):
                tset = feasible_set(i, active)
                if tset is None:
                    ok = False
                    break
                sets[i] = tset
            if ok and len(active) > len(best_active):
                best_active, best_sets = active, sets
                done = True
        if best_active and prune:
            break

    assoc = CellAssociation(nc=Nc, cells=dict(best_sets))
    plan = DownlinkPlan(transmit_sets=dict(best_sets), active_receivers=best_active)
    report = check_downlink(plan, assoc, topology)
    if not report.accepted:
        raise AssertionError("oracle witness failed re-verification")
    bundle = SchemeBundle(
        topology=topology,
        association=assoc,
        uplink_plan=None,
        downlink_plan=plan,
        declared={DOWNLINK: SessionValue(tau_d_zf(L, Nc), len(best_active), K)},
    )
    return OracleResult(
        session=DOWNLINK,
        K=K,
        L=L,
        Nc=Nc,
        optimal_dof=len(best_active),
        per_user=Fraction(len(best_active), K),
        average=None,
        witness=bundle,
        stats=SearchStats(stats["nodes"], stats["pruned"], time.perf_counter() - t0),
        notes=(f"exact within transmit window {window} around each terminal",),
        window=window,
    )


# ---------------------------------------------------------------------------
# Average over a shared association


def brute_force_average(
    K: int,
    L: int,
    Nc: int,
    window: int | None = None,
    *,
    limit: int | None = None,
    prune: bool = True,
) -> OracleResult:
    """Maximize (uplink DoF + downlink DoF) / 2 over one shared association.

    Every feasible uplink pair set forces a minimal association closure;
    the downlink then chooses transmit sets that share the per-terminal
    budget with that closure. Enumerating pair sets and solving the
    conditioned downlink problem underneath visits every achievable pair
    of session values, exactly, within the downlink window.
    """
    topology = Topology(K, L)
    limit = DEFAULT_AVG_LIMIT if limit is None else limit
    window = Nc if window is None else window
    _check_limit(K, limit, _uplink_estimate(topology) * 2.0 ** K, "average")
    t0 = time.perf_counter()
    stats = {"nodes": 0, "pruned": 0}
    conn = {i: topology.connected_bs(i) for i in range(1, K + 1)}
    allowed = {i: _allowed_window(topology, i, window) for i in range(1, K + 1)}
    reach = {
        i: frozenset(range(max(1, i - L - window), min(K, i + window + L) + 1))
        for i in range(1, K + 1)
    }
    memo: dict[tuple, frozenset[int] | None] = {}

    def feasible_set(
        i: int, active: frozenset[int], required: frozenset[int]
    ) -> frozenset[int] | None:
        key = (i, active & reach[i], required)
        if key in memo:
            return memo[key]
        out = _first_feasible_transmit_set(topology, i, active, allowed[i], Nc, required)
        memo[key] = out
        return out

    by_size = _masks_by_size(K)

    def downlink_best(
        required: dict[int, frozenset[int]], at_least: int
    ) -> tuple[int, dict[int, frozenset[int]]] | None:
        """Largest feasible active set against the uplink closure, or None
        if nothing of size >= at_least works."""
        for size in range(K, max(at_least, 0) - 1, -1):
            for mask in by_size[size]:
                active = _mask_to_set(mask)
                sets = {}
                ok = True
                for i in sorted(active):
                    tset = feasible_set(i, active, required.get(i, frozenset()))
                    if tset is None:
                        ok = False
                        break
                    sets[i] = tset
                if ok:
                    return size, sets
        return None

    dl_free = downlink_best({}, 0)
    dl_free_count = dl_free[0] if dl_free else 0

    best = {"total": -1, "pairs": {}, "active": frozenset(), "sets": {}}

    def seed_from_scheme() -> None:
        try:
            bundle = build_joint_scheme(K, L, Nc)
        except Exception:
            return
        ul = check_uplink(bundle.uplink_plan, bundle.association, topology)
        dl = check_downlink(bundle.downlink_plan, bundle.association, topology)
        if ul.accepted and dl.accepted:
            best["total"] = ul.achieved_dof + dl.achieved_dof
            best["pairs"] = dict(bundle.uplink_plan.decoding_pairs)
            best["active"] = bundle.downlink_plan.active_receivers
            best["sets"] = dict(bundle.downlink_plan.transmit_sets)

    if prune:
        seed_from_scheme()

    def required_of(pairs: dict[int, int]) -> dict[int, frozenset[int]]:
        bss = set(pairs.values())
        return {k: (conn[k] & bss) | {pairs[k]} for k in pairs}

    def evaluate(pairs: dict[int, int]) -> None:
        stats["nodes"] += 1
        ul = len(pairs)
        if prune and ul + dl_free_count <= best["total"]:
            stats["pruned"] += 1
            return
        need = best["total"] - ul + 1 if prune else 0
        found = downlink_best(required_of(pairs), need)
        if found is None:
            return
        dl, sets = found
        if ul + dl > best["total"]:
            best["total"] = ul + dl
            best["pairs"] = dict(pairs)
            best["active"] = frozenset(sets)
            best["sets"] = dict(sets)

    def dfs(i: int, pairs: dict[int, int], last_bs: int) -> None:
        evaluate(pairs)
        if i > K:
            return
        if prune and (len(pairs) + (K - i + 1)) + dl_free_count <= best["total"]:
            stats["pruned"] += 1
            return
        dfs(i + 1, pairs, last_bs)
        used = set(pairs.values())
        for b in sorted(conn[i]):
            if b <= last_bs or b in used:
                continue
            pairs[i] = b
            over = any(
                sum(1 for bb in pairs.values() if bb in conn[k]) > Nc for k in pairs
            )
            if over or _has_decode_cycle(pairs, topology):
                stats["pruned"] += 1
            else:
                dfs(i + 1, pairs, b)
            del pairs[i]

    dfs(1, {}, 0)

    pairs = best["pairs"]
    cells = {}
    bss = set(pairs.values())
    for k in pairs:
        cells[k] = (conn[k] & bss) | {pairs[k]}
    for i, tset in best["sets"].items():
        cells[i] = cells.get(i, frozenset()) | tset
    assoc = CellAssociation(nc=Nc, cells=cells)
    uplink = UplinkPlan(
        active_mts=frozenset(pairs),
        decoding_pairs=dict(pairs),
        shares=_closure_shares(pairs, topology),
    )
    downlink = DownlinkPlan(transmit_sets=dict(best["sets"]), active_receivers=best["active"])
    ul_report = check_uplink(uplink, assoc, topology)
    dl_report = check_downlink(downlink, assoc, topology)
    if not (ul_report.accepted and dl_report.accepted):
        raise AssertionError("oracle witness failed re-verification")
    total = ul_report.achieved_dof + dl_report.achieved_dof
    bundle = SchemeBundle(
        topology=topology,
        association=assoc,
        uplink_plan=uplink,
        downlink_plan=downlink,
        declared={
            UPLINK: SessionValue(tau_u_zf(L, Nc), ul_report.achieved_dof, K),
            DOWNLINK: SessionValue(tau_d_zf(L, Nc), dl_report.achieved_dof, K),
        },
    )
    return OracleResult(
        session=AVERAGE,
        K=K,
        L=L,
        Nc=Nc,
        optimal_dof=total,
        per_user=Fraction(total, 2 * K),
        average=Fraction(total, 2),
        witness=bundle,
        stats=SearchStats(stats["nodes"], stats["pruned"], time.perf_counter() - t0),
        notes=(
            UPLINK_LOCALITY_NOTE,
            f"exact within transmit window {window} around each terminal",
        ),
        window=window,
    )


# ---------------------------------------------------------------------------
# Diagnostics and plan sampling


def diagnostics(witness: SchemeBundle, s: int) -> Diagnostics:
    """Borrowed and blocked counts of a witness's uplink plan per size-s block."""
    if witness.uplink_plan is None:
        raise StructuralError("witness has no uplink plan")
    plan = witness.uplink_plan
    topo = witness.topology
    decoding_bss = set(plan.decoding_pairs.values())
    prefix = [0] * topo.K
    run = 0
    for j in range(1, topo.K + 1):
        run += 1 if j in decoding_bss else 0
        prefix[j - 1] = run
    return Diagnostics(
        borrowed=_borrowed_counts(plan, topo, s),
        blocked=_blocked_counts(plan, topo, s),
        prefix_active=tuple(prefix),
    )


def sample_uplink_plans(
    K: int, L: int, Nc: int, rng: Random, count: int
) -> list[tuple[CellAssociation, UplinkPlan]]:
    """Feasible uplink plans sampled by random descents of the search tree.

    Each descent walks terminals in ascending order, picking uniformly
    among staying inactive and the base stations the pruning rules still
    allow; the resulting plan is kept only if the checker accepts it.
    """
    topology = Topology(K, L)
    conn = {i: topology.connected_bs(i) for i in range(1, K + 1)}
    out: list[tuple[CellAssociation, UplinkPlan]] = []
    attempts = 0
    while len(out) < count and attempts < count * 20:
        attempts += 1
        pairs: dict[int, int] = {}
        last_bs = 0
        for i in range(1, K + 1):
            options: list[int | None] = [None]
            used = set(pairs.values())
            for b in sorted(conn[i]):
                if b <= last_bs or b in used:
                    continue
                pairs[i] = b
                over = any(
                    sum(1 for bb in pairs.values() if bb in conn[k]) > Nc for k in pairs
                )
                bad = over or _has_decode_cycle(pairs, topology)
                del pairs[i]
                if not bad:
                    options.append(b)
            pick = rng.choice(options)
            if pick is not None:
                pairs[i] = pick
                last_bs = pick
        assoc, plan = _pairs_to_bundle(pairs, topology, Nc, K)
        if check_uplink(plan, assoc, topology).accepted:
            out.append((assoc, plan))
    return out


def sample_downlink_plans(
    K: int, L: int, Nc: int, rng: Random, count: int, window: int | None = None
) -> list[tuple[CellAssociation, DownlinkPlan]]:
    """Accepted downlink plans built from random active sets.

    Receivers that cannot be served against the current active set are
    deactivated until the remainder is feasible; shrinking the active set
    only relaxes the matching conditions, so the loop terminates.
    """
    topology = Topology(K, L)
    window = Nc if window is None else window
    allowed = {i: _allowed_window(topology, i, window) for i in range(1, K + 1)}
    out: list[tuple[CellAssociation, DownlinkPlan]] = []
    while len(out) < count:
        active = frozenset(i for i in range(1, K + 1) if rng.random() < 0.6)
        while True:
            sets = {}
            dropped = []
            for i in sorted(active):
                tset = _first_feasible_transmit_set(topology, i, active, allowed[i], Nc)
                if tset is None:
                    dropped.append(i)
                else:
                    sets[i] = tset
            if not dropped:
                break
            active = active - frozenset(dropped)
        assoc = CellAssociation(nc=Nc, cells=dict(sets))
        plan = DownlinkPlan(transmit_sets=sets, active_receivers=active)
        if check_downlink(plan, assoc, topology).accepted:
            out.append((assoc, plan))
    return out
