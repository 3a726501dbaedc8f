"""Regenerate the frozen uplink-oracle fixtures.

Values come from the unpruned exhaustive search, which enumerates every
decoding-pair assignment and checks each one; the fast pruned search
must reproduce them. Run from the repository root:

    python3 tests/make_fixtures.py

Writes tests/fixtures/uplink_oracle.json.
"""

from __future__ import annotations

import json
from pathlib import Path

from doflab.oracle import brute_force_uplink

MAX_K = 7
MAX_L = 3
MAX_NC = 2

# Instances pinned by individual regression tests, beyond the main matrix.
EXTRA = [(7, 5, 2), (9, 5, 2), (5, 3, 2)]


def main() -> None:
    entries = []
    for K in range(1, MAX_K + 1):
        for L in range(0, min(MAX_L, K - 1) + 1):
            for Nc in range(1, MAX_NC + 1):
                res = brute_force_uplink(K, L, Nc, prune=False)
                entries.append(
                    {"K": K, "L": L, "Nc": Nc, "optimal": res.optimal_dof, "nodes": res.stats.nodes}
                )
                print(f"K={K} L={L} Nc={Nc}: optimal={res.optimal_dof} ({res.stats.nodes} nodes)")
    for K, L, Nc in EXTRA:
        res = brute_force_uplink(K, L, Nc, prune=False, limit=K)
        entries.append(
            {"K": K, "L": L, "Nc": Nc, "optimal": res.optimal_dof, "nodes": res.stats.nodes}
        )
        print(f"K={K} L={L} Nc={Nc}: optimal={res.optimal_dof} ({res.stats.nodes} nodes)")
    out = {
        "generator": "unpruned exhaustive search over decoding-pair assignments",
        "session": "uplink",
        "entries": entries,
    }
    path = Path(__file__).parent / "fixtures" / "uplink_oracle.json"
    path.parent.mkdir(exist_ok=True)
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(entries)} entries)")


if __name__ == "__main__":
    main()
