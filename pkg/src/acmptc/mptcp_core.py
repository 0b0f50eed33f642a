"""Analytical MPTCP model and the single-path / vanilla multipath baselines.

Windows are measured in Mbit so that window / RTT[s] is a rate in Mbps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import AllocationError, DomainError
from .net_model import NetworkState

# window used when a path reports zero loss (the equilibrium window diverges)
FLOOR_WINDOW_MBIT = 1.0
# loss is clipped below one before entering the subflow model
MAX_MODEL_LOSS = 0.999
# below this the equilibrium window would overflow; treated as lossless
MIN_MODEL_LOSS = 1e-12


@dataclass(frozen=True)
class SubflowParams:
    window: float
    rtt_s: float
    loss_prob: float

    def __post_init__(self):
        if self.rtt_s == 0:
            raise DomainError("subflow RTT must be non-zero")
        if not (self.window > 0 and self.rtt_s > 0 and 0.0 <= self.loss_prob < 1.0):
            raise DomainError(
                f"invalid subflow (window={self.window}, rtt={self.rtt_s}, p={self.loss_prob})")


@dataclass(frozen=True)
class AllocationResult:
    shares: tuple[float, ...]
    total: float


def subflow_throughput(s: SubflowParams) -> float:
    return (s.window / s.rtt_s) * (1.0 - s.loss_prob / 2.0)


def total_throughput(subflows: Sequence[SubflowParams]) -> float:
    return sum(subflow_throughput(s) for s in subflows)


def equilibrium_window(p: float, exact: bool = True) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"equilibrium window needs 0 < p < 1, got {p}")
    if exact:
        return math.sqrt(2.0 * (1.0 - p) / p)
    return math.sqrt(2.0 / p)


def allocate_load(total: float, subflows: Sequence[SubflowParams]) -> AllocationResult:
    """Split ``total`` across subflows in proportion to modeled throughput.

    The last subflow takes the remainder so the shares add up to ``total``
    exactly.
    """
    if total < 0:
        raise DomainError(f"total load must be >= 0, got {total}")
    if not subflows:
        raise AllocationError("no subflows to allocate to")
    tp = [subflow_throughput(s) for s in subflows]
    denom = sum(tp)
    if denom <= 0:
        raise AllocationError("all subflows have zero modeled throughput")
    shares = [total * x / denom for x in tp[:-1]]
    rest = total - sum(shares)
    shares.append(max(rest, 0.0))
    return AllocationResult(tuple(shares), float(total))


def path_window(loss: float) -> float:
    """Equilibrium window for a path, with the zero-loss floor.

    The floor applies below ``MIN_MODEL_LOSS`` as well.
    """
    if loss < MIN_MODEL_LOSS:
        return FLOOR_WINDOW_MBIT
    return max(FLOOR_WINDOW_MBIT, equilibrium_window(min(loss, MAX_MODEL_LOSS)))


def path_subflow(network: NetworkState, path_id: int) -> SubflowParams:
    p = network.paths[path_id]
    loss = min(max(p.loss_rate, 0.0), MAX_MODEL_LOSS)
    return SubflowParams(window=path_window(loss), rtt_s=p.rtt_ms / 1000.0, loss_prob=loss)


def tcp_pick_path(network: NetworkState) -> int:
    """Highest-bandwidth path, lowest index on ties."""
    best = 0
    for p in network.paths[1:]:
        if p.bandwidth_mbps > network.paths[best].bandwidth_mbps:
            best = p.path_id
    return best


def baseline_tcp_schedule(demands: Sequence[float], network: NetworkState,
                          pinned: Sequence[int] | None = None) -> list[list[float]]:
    """Single-path TCP: each stream stays on its pinned path.

    ``pinned`` holds the per-stream path chosen at t=0; pass ``None`` on the
    first step to pick it from ``network``. Returns per-stream, per-path
    offered load.
    """
    n = network.n_paths
    if pinned is None:
        pinned = [tcp_pick_path(network)] * len(demands)
    out = []
    for demand, pid in zip(demands, pinned):
        row = [0.0] * n
        rate = subflow_throughput(path_subflow(network, pid))
        row[pid] = min(float(demand), rate)
        out.append(row)
    return out


def baseline_mptcp_schedule(demands: Sequence[float], network: NetworkState) -> list[list[float]]:
    """Vanilla MPTCP: each stream's demand split over all paths by modeled throughput."""
    subflows = [path_subflow(network, i) for i in range(network.n_paths)]
    return [list(allocate_load(float(d), subflows).shares) for d in demands]
