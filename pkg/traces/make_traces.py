"""Regenerate the shipped synthetic traces: python traces/make_traces.py"""

import csv
import os

import numpy as np

from acmptc import __version__
from acmptc.net_model import DynamicsConfig, synthetic_trace, write_trace

HERE = os.path.dirname(os.path.abspath(__file__))
LADDER = (8.0, 12.0, 16.0, 25.0)  # 360-degree video bitrate rungs, Mbps
SEGMENT = 4  # steps per video segment


def stream_trace(n_streams: int, steps: int, seed: int) -> list[tuple[int, int, float]]:
    rng = np.random.default_rng(seed)
    rows = []
    for sid in range(n_streams):
        rung = int(rng.integers(0, len(LADDER)))
        for t in range(steps):
            if t % SEGMENT == 0 and t:
                rung = int(np.clip(rung + rng.choice((-1, 0, 0, 1)), 0, len(LADDER) - 1))
            rows.append((t, sid, LADDER[rung]))
    return sorted(rows)


def main() -> None:
    with open(os.path.join(HERE, "paths_5x1000.csv"), "w", encoding="utf-8", newline="") as fh:
        write_trace(synthetic_trace(DynamicsConfig(), 1000, seed=2024), fh)
    with open(os.path.join(HERE, "streams_3x1000.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# acmptc {__version__}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "stream_id", "bitrate_mbps"))
        w.writerows((t, sid, f"{r:.6g}") for t, sid, r in stream_trace(3, 1000, seed=2024))


if __name__ == "__main__":
    main()
