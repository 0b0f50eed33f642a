"""Simulated multi-path network: path state, dynamics, load and traces."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, InputError, TraceParseError


@dataclass(frozen=True)
class PathState:
    path_id: int
    bandwidth_mbps: float
    latency_ms: float
    rtt_ms: float
    loss_rate: float
    congestion: float
    capacity_mbps: float
    # loss from the dynamics alone; loss_rate also carries overflow drops
    base_loss_rate: float = -1.0
    offered_mbps: float = 0.0
    delivered_mbps: float = 0.0

    def __post_init__(self):
        if self.base_loss_rate < 0:
            object.__setattr__(self, "base_loss_rate", self.loss_rate)

    def check(self) -> None:
        vals = (self.bandwidth_mbps, self.latency_ms, self.rtt_ms, self.loss_rate,
                self.congestion, self.capacity_mbps)
        if not all(math.isfinite(v) for v in vals):
            raise AssertionError(f"path {self.path_id}: non-finite field")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise AssertionError(f"path {self.path_id}: loss {self.loss_rate}")
        if not 0.0 <= self.congestion <= 1.0:
            raise AssertionError(f"path {self.path_id}: congestion {self.congestion}")
        if not 0.0 <= self.bandwidth_mbps <= self.capacity_mbps:
            raise AssertionError(f"path {self.path_id}: bandwidth {self.bandwidth_mbps}")
        if self.rtt_ms < self.latency_ms:
            raise AssertionError(f"path {self.path_id}: rtt below latency")


@dataclass(frozen=True)
class NetworkState:
    t: int
    paths: tuple[PathState, ...]

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ConfigError("network needs at least one path")
        for i, p in enumerate(self.paths):
            if p.path_id != i:
                raise ConfigError(f"path ids must be 0..n-1, got {p.path_id} at {i}")

    @property
    def n_paths(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class DynamicsConfig:
    n_paths: int = 5
    bandwidth_range: tuple[float, float] = (10.0, 100.0)
    latency_range: tuple[float, float] = (10.0, 100.0)
    loss_range: tuple[float, float] = (0.0, 0.05)
    walk_step_fraction: float = 0.1
    background_traffic_range: tuple[float, float] = (0.0, 50.0)
    seed: int = 0

    def validate(self) -> None:
        if self.n_paths < 1:
            raise ConfigError("dynamics.n_paths must be >= 1")
        for name in ("bandwidth_range", "latency_range", "loss_range",
                     "background_traffic_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ConfigError(f"dynamics.{name}: need finite min <= max, got [{lo}, {hi}]")
            if lo < 0:
                raise ConfigError(f"dynamics.{name}: negative bound {lo}")
        if self.loss_range[1] > 1:
            raise ConfigError("dynamics.loss_range: upper bound above 1")
        # zero is allowed so the steady scenario can freeze the walk
        if not 0.0 <= self.walk_step_fraction <= 1.0:
            raise ConfigError("dynamics.walk_step_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class TraceRecord:
    t: int
    path_id: int
    bandwidth_mbps: float
    latency_ms: float
    loss_rate: float


def init_network(config: DynamicsConfig, rng: np.random.Generator) -> NetworkState:
    config.validate()
    n = config.n_paths
    bw = rng.uniform(*config.bandwidth_range, size=n)
    lat = rng.uniform(*config.latency_range, size=n)
    loss = rng.uniform(*config.loss_range, size=n)
    cap = float(config.bandwidth_range[1])
    paths = tuple(
        PathState(
            path_id=i,
            bandwidth_mbps=float(bw[i]),
            latency_ms=float(lat[i]),
            rtt_ms=2.0 * float(lat[i]),
            loss_rate=float(loss[i]),
            congestion=0.0,
            capacity_mbps=cap,
        )
        for i in range(n)
    )
    return NetworkState(t=0, paths=paths)


def _walk(value: float, factor: float, bounds: Sequence[float]) -> float:
    return min(max(value * factor, bounds[0]), bounds[1])


def step_dynamics(state: NetworkState, config: DynamicsConfig,
                  rng: np.random.Generator) -> NetworkState:
    """Advance one step with a bounded multiplicative random walk.

    Each of bandwidth, latency and base loss is multiplied by exp(f * u) with
    u uniform in [-1, 1], so the relative change per step stays within about
    +-f and the walk has no drift in log space. Three uniform draws per path
    are always consumed, whatever the walk size, so the random stream stays
    aligned across scenarios.
    """
    n = state.n_paths
    f = config.walk_step_fraction
    draws = rng.uniform(-1.0, 1.0, size=(n, 3))
    out = []
    for p, d in zip(state.paths, draws):
        bw = _walk(p.bandwidth_mbps, math.exp(f * d[0]), config.bandwidth_range)
        bw = min(bw, p.capacity_mbps)
        lat = _walk(p.latency_ms, math.exp(f * d[1]), config.latency_range)
        loss = _walk(p.base_loss_rate, math.exp(f * d[2]), config.loss_range)
        out.append(replace(
            p,
            bandwidth_mbps=bw,
            latency_ms=lat,
            rtt_ms=2.0 * lat * (1.0 + p.congestion),
            loss_rate=loss,
            base_loss_rate=loss,
        ))
    return NetworkState(t=state.t + 1, paths=tuple(out))


def apply_load(state: NetworkState, offered_mbps_per_path: Sequence[float]) -> NetworkState:
    """Push offered traffic through the paths.

    Congestion is offered/capacity. Traffic above the available bandwidth is
    dropped and counted as extra loss on top of the base loss. The resulting
    delivered rate per path is stored on the returned state.
    """
    if len(offered_mbps_per_path) != state.n_paths:
        raise InputError(
            f"offered load has {len(offered_mbps_per_path)} entries, network has {state.n_paths} paths")
    out = []
    for p, offered in zip(state.paths, offered_mbps_per_path):
        offered = float(offered)
        if offered < 0 or not math.isfinite(offered):
            raise InputError(f"offered load on path {p.path_id} must be finite and >= 0, got {offered}")
        congestion = min(1.0, offered / p.capacity_mbps) if p.capacity_mbps > 0 else (1.0 if offered > 0 else 0.0)
        loss = p.base_loss_rate
        if offered > p.bandwidth_mbps:
            loss += (offered - p.bandwidth_mbps) / offered
        loss = min(max(loss, 0.0), 1.0)
        delivered = min(offered, p.bandwidth_mbps) * (1.0 - loss)
        out.append(replace(p, congestion=congestion, loss_rate=loss,
                           offered_mbps=offered, delivered_mbps=delivered))
    return NetworkState(t=state.t, paths=tuple(out))


TRACE_HEADER = ("t", "path_id", "bandwidth_mbps", "latency_ms", "loss_rate")


def load_trace(source) -> list[TraceRecord]:
    """Parse a path trace CSV from a text/binary stream, bytes or str."""
    text = _read_text(source)
    rows = csv_rows(io.StringIO(text))
    lineno, header = next(rows, (1, None))
    if header is None:
        raise TraceParseError("line 1: missing header")
    if tuple(h.strip() for h in header) != TRACE_HEADER:
        raise TraceParseError(f"line {lineno}: expected header {','.join(TRACE_HEADER)}")
    records = []
    seen = set()
    for lineno, row in rows:
        if len(row) != 5:
            raise TraceParseError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            t, pid = int(row[0]), int(row[1])
            bw, lat, loss = float(row[2]), float(row[3]), float(row[4])
        except ValueError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from None
        if t < 0 or pid < 0:
            raise TraceParseError(f"line {lineno}: negative t or path_id")
        if not all(math.isfinite(v) for v in (bw, lat, loss)):
            raise TraceParseError(f"line {lineno}: non-finite value")
        if bw < 0 or lat < 0:
            raise TraceParseError(f"line {lineno}: negative bandwidth or latency")
        if not 0.0 <= loss <= 1.0:
            raise TraceParseError(f"line {lineno}: loss_rate {loss} outside [0, 1]")
        if (t, pid) in seen:
            raise TraceParseError(f"line {lineno}: duplicate record for t={t}, path_id={pid}")
        seen.add((t, pid))
        records.append(TraceRecord(t, pid, bw, lat, loss))
    records.sort(key=lambda r: (r.t, r.path_id))
    return records


def csv_rows(stream):
    """(line number, row) pairs, skipping blank rows and ``#`` comment lines."""
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        yield lineno, row


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _overwrite(p: PathState, rec: TraceRecord) -> PathState:
    bw = min(rec.bandwidth_mbps, p.capacity_mbps)
    return replace(p, bandwidth_mbps=bw, latency_ms=rec.latency_ms,
                   rtt_ms=2.0 * rec.latency_ms * (1.0 + p.congestion),
                   loss_rate=rec.loss_rate, base_loss_rate=rec.loss_rate)


def apply_records(state: NetworkState, records: Iterable[TraceRecord]) -> NetworkState:
    """Overwrite paths from records without advancing time."""
    paths = list(state.paths)
    for rec in records:
        if not 0 <= rec.path_id < len(paths):
            raise InputError(f"trace record for unknown path_id {rec.path_id}")
        paths[rec.path_id] = _overwrite(paths[rec.path_id], rec)
    return NetworkState(t=state.t, paths=tuple(paths))


def trace_step(state: NetworkState, records_at_t: Sequence[TraceRecord]) -> NetworkState:
    for rec in records_at_t:
        if rec.t != state.t + 1:
            raise InputError(f"trace record at t={rec.t}, expected t={state.t + 1}")
    nxt = apply_records(state, records_at_t)
    # carried-forward paths still see the congestion term in their RTT
    paths = tuple(
        p if any(r.path_id == p.path_id for r in records_at_t)
        else replace(p, rtt_ms=2.0 * p.latency_ms * (1.0 + p.congestion), loss_rate=p.base_loss_rate)
        for p in nxt.paths
    )
    return NetworkState(t=state.t + 1, paths=paths)


def group_by_step(records: Sequence[TraceRecord]) -> dict[int, list[TraceRecord]]:
    out: dict[int, list[TraceRecord]] = {}
    for r in records:
        out.setdefault(r.t, []).append(r)
    return out


def synthetic_trace(config: DynamicsConfig, steps: int, seed: int) -> list[TraceRecord]:
    """Generate a path trace from the random-walk dynamics (for demos and tests)."""
    rng = np.random.default_rng(seed)
    state = init_network(config, rng)
    out = []
    for _ in range(steps):
        out.extend(TraceRecord(state.t, p.path_id, p.bandwidth_mbps, p.latency_ms, p.loss_rate)
                   for p in state.paths)
        state = step_dynamics(state, config, rng)
    return out


def write_trace(records: Sequence[TraceRecord], sink) -> None:
    sink.write(f"# acmptc {__version__}\n")
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in records:
        w.writerow([r.t, r.path_id, f"{r.bandwidth_mbps:.6g}", f"{r.latency_ms:.6g}", f"{r.loss_rate:.6g}"])


def background_draw(config: DynamicsConfig, state: NetworkState,
                    rng: np.random.Generator) -> np.ndarray:
    """Background traffic per path for one step.

    One network-wide rate is drawn uniformly from the configured range and
    spread over the paths in proportion to their available bandwidth.
    """
    total = rng.uniform(*config.background_traffic_range)
    bw = np.array([p.bandwidth_mbps for p in state.paths])
    s = bw.sum()
    if s <= 0:
        return np.full(state.n_paths, total / state.n_paths)
    return total * bw / s


__all__ = [
    "PathState", "NetworkState", "DynamicsConfig", "TraceRecord",
    "init_network", "step_dynamics", "apply_load", "load_trace", "trace_step",
    "apply_records", "group_by_step", "synthetic_trace", "write_trace", "background_draw",
    "TRACE_HEADER",
]
