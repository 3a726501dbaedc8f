"""Signal-level validation of accepted plans.

Channels are real-valued with the support pattern of the network model
and i.i.d. standard normal nonzero entries, reproducible from a seed.
Rates follow the per-real-dimension law R = (1/2) log2(1 + SNR) against
unit-variance noise, so an interference-free user shows a DoF slope of
one when regressed against (1/2) log2 P.

Downlink precoders solve the per-message nulling system implied by a
plan: unit gain at the intended receiver, zero gain at every other
active receiver that hears the transmit set. The residual report is the
numeric counterpart of the matching condition the checker enforces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, StructuralError
from .topology import Topology
from .verify import DownlinkPlan, UplinkPlan, decode_order, nulled_receivers

__all__ = [
    "ChannelRealization",
    "RateCurve",
    "PrecoderSolution",
    "DofEstimate",
    "sample_channels",
    "solve_downlink_precoders",
    "simulate_uplink",
    "simulate_downlink",
    "estimate_dof",
    "power_grid",
]


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of channel coefficients for a given network.

    ``h[i-1, j-1]`` is the coefficient between MT ``i`` and BS ``j``;
    it is nonzero exactly when the two are connected.
    """

    topology: Topology
    seed: int
    h: np.ndarray

    def coeff(self, mt: int, bs: int) -> float:
        self.topology._check_index(mt, "MT")
        self.topology._check_index(bs, "BS")
        return float(self.h[mt - 1, bs - 1])


def sample_channels(topology: Topology, seed: int) -> ChannelRealization:
    """Draw standard normal coefficients on the connectivity support."""
    rng = np.random.default_rng(seed)
    h = np.zeros((topology.K, topology.K))
    for mt in range(1, topology.K + 1):
        for bs in sorted(topology.connected_bs(mt)):
            h[mt - 1, bs - 1] = rng.standard_normal()
    return ChannelRealization(topology=topology, seed=seed, h=h)


@dataclass(frozen=True)
class PrecoderSolution:
    """Nulling coefficients per served message plus a residual report."""

    coefficients: dict[int, dict[int, float]]
    max_residual: float
    per_message_residual: dict[int, float]
    diagnostics: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "per_message_residual": {str(m): r for m, r in sorted(self.per_message_residual.items())},
            "diagnostics": list(self.diagnostics),
        }


def solve_downlink_precoders(
    plan: DownlinkPlan, channels: ChannelRealization
) -> PrecoderSolution:
    """Solve the per-message nulling systems of an accepted downlink plan.

    For each served message: unit gain at its receiver, zero gain at every
    other active receiver hearing its transmit set. A singular system is
    reported as a feasibility-contradiction diagnostic rather than raised,
    since the checker should have excluded it for generic channels.
    """
    topo = channels.topology
    coeffs: dict[int, dict[int, float]] = {}
    per_message: dict[int, float] = {}
    diagnostics: list[str] = []
    worst = 0.0
    active = plan.active_receivers
    for i in sorted(plan.transmit_sets):
        tset = sorted(plan.transmit_sets[i])
        victims = sorted(nulled_receivers(plan.transmit_sets[i], active, topo))
        a = channels.h[np.ix_([r - 1 for r in victims], [b - 1 for b in tset])]
        if i not in victims:
            diagnostics.append(f"message {i}: intended receiver hears none of its transmitters")
            per_message[i] = math.inf
            worst = math.inf
            continue
        b = np.array([1.0 if r == i else 0.0 for r in victims])
        if len(victims) > len(tset):
            diagnostics.append(
                f"message {i}: {len(victims)} receivers to control with {len(tset)} transmitters"
            )
        try:
            if len(victims) == len(tset):
                v = np.linalg.solve(a, b)
            else:
                v, *_ = np.linalg.lstsq(a, b, rcond=None)
        except np.linalg.LinAlgError:
            diagnostics.append(f"message {i}: singular nulling system")
            per_message[i] = math.inf
            worst = math.inf
            continue
        gains = channels.h[:, [c - 1 for c in tset]] @ v
        cross = max(
            (abs(float(gains[r - 1])) for r in active if r != i), default=0.0
        )
        unit_err = abs(float(gains[i - 1]) - 1.0)
        res = max(cross, unit_err)
        coeffs[i] = {bs: float(val) for bs, val in zip(tset, v)}
        per_message[i] = res
        worst = max(worst, res)
    return PrecoderSolution(
        coefficients=coeffs,
        max_residual=worst,
        per_message_residual=per_message,
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class RateCurve:
    """Per-user achievable rates over a grid of transmit powers."""

    powers: tuple[float, ...]
    rates: np.ndarray  # shape (len(powers), K), bits per channel use

    def __post_init__(self) -> None:
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))

    @property
    def n_users(self) -> int:
        return self.rates.shape[1]

    def to_csv(self) -> str:
        header = "P_exponent," + ",".join(f"user_{u}" for u in range(1, self.n_users + 1))
        lines = [header]
        for p, row in zip(self.powers, self.rates):
            exp = "-inf" if p == 0 else f"{math.log2(p):.6g}"
            lines.append(exp + "," + ",".join(f"{r:.12g}" for r in row))
        return "\n".join(lines) + "\n"


def power_grid(min_exp: float, max_exp: float, points: int) -> tuple[float, ...]:
    """Evenly spaced powers 2**e from ``min_exp`` to ``max_exp``."""
    if points < 2 or max_exp < min_exp:
        raise StructuralError(
            f"bad power grid: exponents [{min_exp}, {max_exp}], {points} points"
        )
    return tuple(float(2.0 ** e) for e in np.linspace(min_exp, max_exp, points))


def _rate(gain_sq: float, p: float) -> float:
    return 0.5 * math.log2(1.0 + gain_sq * p)


def simulate_uplink(
    plan: UplinkPlan, channels: ChannelRealization, powers: tuple[float, ...] | list[float]
) -> RateCurve:
    """Rates achieved by message-passing decoding on one channel draw.

    Decoding pairs are processed in a decode order; at each pair the
    contributions of messages already decoded and shared to that base
    station are subtracted (perfect estimates), after which no active
    interferer may remain. An un-subtracted interferer is a contract
    violation: the plan should not have been accepted.
    """
    topo = channels.topology
    order = decode_order(plan, topo)
    if order is None:
        raise ContractViolationError("decode-before dependencies contain a cycle")
    shares_to = {(t, m) for _, t, m in plan.shares}
    decoded: set[int] = set()
    gain_sq: dict[int, float] = {}
    for i in order:
        j = plan.decoding_pairs[i]
        for k in sorted(plan.active_mts):
            if k == i or j not in topo.connected_bs(k):
                continue
            if k not in decoded or (j, k) not in shares_to:
                raise ContractViolationError(
                    f"message of MT {k} still interferes at BS {j} when decoding MT {i}"
                )
        decoded.add(i)
        gain_sq[i] = channels.coeff(i, j) ** 2
    rates = np.zeros((len(powers), topo.K))
    for pi, p in enumerate(powers):
        for i, g2 in gain_sq.items():
            rates[pi, i - 1] = _rate(g2, p)
    return RateCurve(powers=tuple(powers), rates=rates)


def simulate_downlink(
    plan: DownlinkPlan, channels: ChannelRealization, powers: tuple[float, ...] | list[float]
) -> RateCurve:
    """Rates under zero-forcing precoding with per-transmitter power P.

    Each message's precoder column is normalized to unit norm and scaled
    by 1/sqrt(M), M being the largest number of messages any transmitter
    carries, so every transmitter meets its power constraint. Scaling a
    whole column preserves the nulls and leaves DoF slopes untouched; an
    ill-conditioned nulling system lowers only its own message's finite
    power rate.
    """
    topo = channels.topology
    sol = solve_downlink_precoders(plan, channels)
    if not math.isfinite(sol.max_residual):
        raise ContractViolationError(
            "nulling system unsolvable; plan should not have been accepted: "
            + "; ".join(sol.diagnostics)
        )
    per_tx_messages: dict[int, int] = {}
    for vec in sol.coefficients.values():
        for bs in vec:
            per_tx_messages[bs] = per_tx_messages.get(bs, 0) + 1
    m_max = max(per_tx_messages.values()) if per_tx_messages else 1
    gain_sq: dict[int, float] = {}
    for i, vec in sol.coefficients.items():
        norm_sq = sum(v * v for v in vec.values())
        gain_sq[i] = 1.0 / (m_max * norm_sq) if norm_sq > 0 else 0.0
    rates = np.zeros((len(powers), topo.K))
    for pi, p in enumerate(powers):
        for i in sorted(plan.active_receivers):
            rates[pi, i - 1] = _rate(gain_sq.get(i, 0.0), p)
    return RateCurve(powers=tuple(powers), rates=rates)


@dataclass(frozen=True)
class DofEstimate:
    """Least-squares DoF slopes from the top half of a rate curve."""

    per_user: tuple[float, ...]
    total: float


def estimate_dof(curve: RateCurve) -> DofEstimate:
    """Per-user slope of rate against (1/2) log2 P over the top half of the grid.

    The grid must have at least 4 points and span at least 2^10 .. 2^40 so
    the regression sits firmly in the high-power regime.
    """
    if len(curve.powers) < 4:
        raise StructuralError("power grid needs at least 4 points")
    positive = [p for p in curve.powers if p > 0]
    if not positive or min(positive) > 2.0 ** 10 or max(positive) < 2.0 ** 40:
        raise StructuralError("power grid must span at least 2^10 .. 2^40")
    half = len(curve.powers) // 2
    top = sorted(range(len(curve.powers)), key=lambda idx: curve.powers[idx])[half:]
    x = np.array([0.5 * math.log2(curve.powers[idx]) for idx in top])
    slopes = []
    for u in range(curve.n_users):
        y = curve.rates[list(top), u]
        slope = float(np.polyfit(x, y, 1)[0]) if np.any(y != 0) else 0.0
        slopes.append(slope)
    return DofEstimate(per_user=tuple(slopes), total=float(sum(slopes)))
