"""Discrete-event simulation of the tandem computation -> transmission queue.

Two models share the same admitted-job stream:

* ``simulate_actual``: M/GI/1/1 computation server feeding an exponential
  transmission server with a single replacement buffer.
* ``simulate_equivalent``: same first queue, but every packet that finds the
  transmitter busy is kept and delivered in one batch at the end of the next
  service period.

Each transmission service period consumes exactly one Exp(mu) draw from the
transmission stream, in period order, so both models see the same draws and
the receiver-side age sawtooth can be compared point by point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .analytic import SystemConfig
from .distributions import make_streams

DEFAULT_N_PACKETS = 1_000_000
DEFAULT_SEED = 20190101
DEFAULT_WARMUP = 0.01
DEFAULT_BATCHES = 30
CI_LEVEL = 0.99


@dataclass(frozen=True)
class SimConfig:
    system: SystemConfig
    n_packets: int = DEFAULT_N_PACKETS
    master_seed: int = DEFAULT_SEED
    warmup_fraction: float = DEFAULT_WARMUP
    batch_count: int = DEFAULT_BATCHES

    def __post_init__(self):
        if self.n_packets <= 0:
            raise ValueError("n_packets must be positive")
        if self.batch_count <= 0:
            raise ValueError("batch_count must be positive")
        if self.n_packets < 10 * self.batch_count:
            raise ValueError("n_packets must be at least 10 * batch_count")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must be in [0, 1)")


class DeliveryRecord(NamedTuple):
    gen_time: float
    delivery_time: float


@dataclass
class SimRun:
    """Per-packet trace of one run.

    ``release`` is the time packet i would reach the receiver in the
    equivalent (no-discard) model; for the actual model it is the end of the
    service period that carries the packet which displaced it.
    """

    model: str
    gen: np.ndarray
    comp_end: np.ndarray
    service_start: np.ndarray  # nan when discarded
    delivery: np.ndarray  # nan when discarded
    release: np.ndarray
    found_busy: np.ndarray
    discarded: np.ndarray
    n_periods: int

    @property
    def n_packets(self) -> int:
        return len(self.gen)

    @property
    def n_delivered(self) -> int:
        return int(np.count_nonzero(~self.discarded))

    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Receiver sawtooth: (delivery times, freshest generation time)."""
        return collapse_deliveries(self.delivery[~self.discarded], self.gen[~self.discarded])

    def records(self) -> list[DeliveryRecord]:
        kept = ~self.discarded
        return [DeliveryRecord(g, d) for g, d in zip(self.gen[kept].tolist(), self.delivery[kept].tolist())]

    def system_time(self) -> np.ndarray:
        return self.release - self.gen

    def interarrival(self) -> np.ndarray:
        """X_i = t_i - t_{i-1}; the first entry is nan."""
        x = np.empty_like(self.gen)
        x[0] = np.nan
        x[1:] = np.diff(self.gen)
        return x


@dataclass(frozen=True)
class SawtoothStats:
    avg_aoi: float
    avg_peak_aoi: float
    n_deliveries: int
    ci_halfwidth_aoi: float
    ci_halfwidth_peak: float
    horizon_start: float
    horizon_end: float
    peaks: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class SimMetrics:
    avg_aoi: float
    avg_peak_aoi: float
    n_deliveries: int
    busy_found_fraction: float
    e_xt_hat: float
    ci_halfwidth_aoi: float
    ci_halfwidth_peak: float
    ci_halfwidth_busy: float
    ci_halfwidth_xt: float
    admitted_rate: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _admitted_jobs(sc: SimConfig):
    """Generation and computation-end epochs of the admitted jobs plus the
    transmission draws (one per service period; there are at most n)."""
    cfg = sc.system
    n = sc.n_packets
    streams = make_streams(sc.master_seed)
    idle = streams.arrival.exponential(1.0 / cfg.lam, size=n)
    proc = cfg.dist.sample_many(streams.computation, n)
    service = streams.transmission.exponential(1.0 / cfg.mu, size=n)
    gen = np.empty(n)
    gen[0] = idle[0]
    # t_i = t_{i-1} + P_{i-1} + I_i
    np.cumsum(proc[:-1] + idle[1:], out=gen[1:])
    gen[1:] += idle[0]
    return gen, gen + proc, service


def simulate_actual(sc: SimConfig) -> SimRun:
    gen, comp_end, service = _admitted_jobs(sc)
    n = len(gen)
    c = comp_end.tolist()
    draws = service.tolist()
    start = [math.nan] * n
    deliver = [math.nan] * n
    busy = [False] * n
    dropped = [False] * n
    si = 0
    cur = -1
    buf = -1
    end = 0.0
    for i in range(n):
        ci = c[i]
        while cur >= 0 and end <= ci:
            deliver[cur] = end
            if buf >= 0:
                cur = buf
                buf = -1
                start[cur] = end
                end += draws[si]
                si += 1
            else:
                cur = -1
        if cur < 0:
            cur = i
            start[i] = ci
            end = ci + draws[si]
            si += 1
        else:
            busy[i] = True
            if buf >= 0:
                dropped[buf] = True
            buf = i
    while cur >= 0:
        deliver[cur] = end
        if buf >= 0:
            cur = buf
            buf = -1
            start[cur] = end
            end += draws[si]
            si += 1
        else:
            cur = -1

    delivery = np.array(deliver)
    discarded = np.array(dropped)
    # a displaced packet is released with the next packet that does get served
    release = delivery.copy()
    idx = np.where(discarded, n, np.arange(n))
    nxt = np.minimum.accumulate(idx[::-1])[::-1]
    release[discarded] = delivery[nxt[discarded]]
    return SimRun(
        model="actual",
        gen=gen,
        comp_end=comp_end,
        service_start=np.array(start),
        delivery=delivery,
        release=release,
        found_busy=np.array(busy),
        discarded=discarded,
        n_periods=si,
    )


def simulate_equivalent(sc: SimConfig) -> SimRun:
    gen, comp_end, service = _admitted_jobs(sc)
    n = len(gen)
    c = comp_end.tolist()
    draws = service.tolist()
    start = [math.nan] * n
    deliver = [math.nan] * n
    busy = [False] * n
    si = 0
    batch: list[int] = []
    pending: list[int] = []
    end = 0.0
    for i in range(n):
        ci = c[i]
        while batch and end <= ci:
            for j in batch:
                deliver[j] = end
            if pending:
                batch = pending
                pending = []
                for j in batch:
                    start[j] = end
                end += draws[si]
                si += 1
            else:
                batch = []
        if not batch:
            batch = [i]
            start[i] = ci
            end = ci + draws[si]
            si += 1
        else:
            busy[i] = True
            pending.append(i)
    while batch:
        for j in batch:
            deliver[j] = end
        if pending:
            batch = pending
            pending = []
            for j in batch:
                start[j] = end
            end += draws[si]
            si += 1
        else:
            batch = []

    delivery = np.array(deliver)
    return SimRun(
        model="equivalent",
        gen=gen,
        comp_end=comp_end,
        service_start=np.array(start),
        delivery=delivery,
        release=delivery.copy(),
        found_busy=np.array(busy),
        discarded=np.zeros(n, dtype=bool),
        n_periods=si,
    )


def collapse_deliveries(delivery: np.ndarray, gen: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by delivery time and keep the freshest packet per delivery epoch."""
    delivery = np.asarray(delivery, dtype=float)
    gen = np.asarray(gen, dtype=float)
    order = np.lexsort((gen, delivery))
    d = delivery[order]
    g = gen[order]
    if len(d) == 0:
        return d, g
    last = np.ones(len(d), dtype=bool)
    last[:-1] = d[1:] != d[:-1]
    return d[last], g[last]


def _t_quantile(batches: int) -> float:
    return float(stats.t.ppf(0.5 + CI_LEVEL / 2, batches - 1))


def batch_halfwidth(values: np.ndarray) -> float:
    """Student-t half-width at CI_LEVEL for a set of batch means."""
    values = np.asarray(values, dtype=float)
    b = len(values)
    if b < 2:
        return math.inf
    return _t_quantile(b) * float(np.std(values, ddof=1)) / math.sqrt(b)


def metrics_from_deliveries(
    records: Sequence[DeliveryRecord] | np.ndarray,
    horizon_start: float | None = None,
    horizon_end: float | None = None,
    batch_count: int = DEFAULT_BATCHES,
) -> SawtoothStats:
    """Exact time-average and peak statistics of the receiver age sawtooth.

    ``records`` holds (gen_time, delivery_time) pairs. Between deliveries the
    age grows with slope 1 from ``delivery - gen`` of the last reset, so each
    segment contributes a trapezoid. ``horizon_start`` defaults to the first
    delivery (the age is undefined before it) and must not precede it;
    ``horizon_end`` defaults to the last delivery.
    """
    arr = np.asarray(records, dtype=float).reshape(-1, 2)
    d, g = collapse_deliveries(arr[:, 1], arr[:, 0])
    if len(d) < 2:
        raise ValueError("need at least two deliveries")
    if horizon_start is None:
        horizon_start = float(d[0])
    if horizon_end is None:
        horizon_end = float(d[-1])
    if horizon_start < d[0]:
        raise ValueError("horizon_start precedes the first delivery; age is undefined there")
    if not horizon_end > horizon_start:
        raise ValueError("empty measurement horizon")

    # last reset at or before horizon_start, deliveries strictly inside
    first = int(np.searchsorted(d, horizon_start, side="right")) - 1
    inside = (d > horizon_start) & (d <= horizon_end)
    dd = np.concatenate(([horizon_start], d[inside], [horizon_end]))
    gg = np.concatenate(([g[first]], g[inside]))
    seg = np.diff(dd)
    age0 = dd[:-1] - gg
    areas = seg * age0 + 0.5 * seg * seg
    peaks = d[inside] - gg[:-1]
    if len(peaks) < 1:
        raise ValueError("need at least two deliveries inside the horizon")

    avg = float(areas.sum() / (horizon_end - horizon_start))
    n_batches = min(batch_count, len(peaks))
    if n_batches >= 2:
        # contiguous batches of peaks / inter-delivery segments
        edges = np.linspace(0, len(peaks), n_batches + 1).astype(int)
        seg_area = areas[: len(peaks)]
        seg_len = seg[: len(peaks)]
        aoi_b = np.add.reduceat(seg_area, edges[:-1]) / np.add.reduceat(seg_len, edges[:-1])
        peak_b = np.add.reduceat(peaks, edges[:-1]) / np.diff(edges)
        hw_aoi = batch_halfwidth(aoi_b)
        hw_peak = batch_halfwidth(peak_b)
    else:
        hw_aoi = hw_peak = math.inf
    return SawtoothStats(
        avg_aoi=avg,
        avg_peak_aoi=float(peaks.mean()),
        n_deliveries=len(peaks) + 1,
        ci_halfwidth_aoi=hw_aoi,
        ci_halfwidth_peak=hw_peak,
        horizon_start=float(horizon_start),
        horizon_end=float(horizon_end),
        peaks=peaks,
    )


def _batch_mean_ci(values: np.ndarray, batch_count: int) -> tuple[float, float]:
    n = len(values)
    b = min(batch_count, n)
    edges = np.linspace(0, n, b + 1).astype(int)
    means = np.add.reduceat(values, edges[:-1]) / np.diff(edges)
    return float(values.mean()), batch_halfwidth(means)


def summarize(run: SimRun, sc: SimConfig) -> SimMetrics:
    """Post-warm-up statistics of a run."""
    d, g = run.breakpoints()
    skip = int(sc.warmup_fraction * len(d))
    skip = min(skip, len(d) - 2)
    saw = metrics_from_deliveries(np.column_stack((g, d)), horizon_start=float(d[skip]), batch_count=sc.batch_count)

    # packet-level statistics over admitted jobs after the warm-up share
    first = max(1, int(sc.warmup_fraction * run.n_packets))
    busy = run.found_busy[first:].astype(float)
    xt = (run.interarrival() * run.system_time())[first:]
    busy_hat, busy_hw = _batch_mean_ci(busy, sc.batch_count)
    xt_hat, xt_hw = _batch_mean_ci(xt, sc.batch_count)
    span = run.gen[-1] - run.gen[first - 1]
    return SimMetrics(
        avg_aoi=saw.avg_aoi,
        avg_peak_aoi=saw.avg_peak_aoi,
        n_deliveries=saw.n_deliveries,
        busy_found_fraction=busy_hat,
        e_xt_hat=xt_hat,
        ci_halfwidth_aoi=saw.ci_halfwidth_aoi,
        ci_halfwidth_peak=saw.ci_halfwidth_peak,
        ci_halfwidth_busy=busy_hw,
        ci_halfwidth_xt=xt_hw,
        admitted_rate=float((run.n_packets - first) / span),
    )


def conditional_xt(run: SimRun, sc: SimConfig) -> dict:
    """Empirical E[X_i T_i | K_{i-1}] split by the state packet i-1 found.

    Returns {"idle": (mean, se), "busy": (mean, se)}. Consecutive products
    are correlated, so the standard error comes from batch means.
    """
    first = max(1, int(sc.warmup_fraction * run.n_packets))
    xt = (run.interarrival() * run.system_time())[first:]
    prev_busy = run.found_busy[first - 1 : -1]
    size = len(xt) // sc.batch_count
    out = {}
    for name, mask in (("idle", ~prev_busy), ("busy", prev_busy)):
        vals = xt[mask]
        batches = [xt[i * size : (i + 1) * size][mask[i * size : (i + 1) * size]] for i in range(sc.batch_count)]
        if len(vals) < 2 or any(len(b) == 0 for b in batches):
            out[name] = (math.nan, math.nan)
            continue
        means = np.array([b.mean() for b in batches])
        out[name] = (float(vals.mean()), float(means.std(ddof=1) / math.sqrt(sc.batch_count)))
    return out


@dataclass(frozen=True)
class EquivalenceReport:
    n_breakpoints_actual: int
    n_breakpoints_equivalent: int
    max_breakpoint_discrepancy: float
    avg_aoi_actual: float
    avg_aoi_equivalent: float
    avg_peak_actual: float
    avg_peak_equivalent: float
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.n_breakpoints_actual == self.n_breakpoints_equivalent
            and self.max_breakpoint_discrepancy < self.tolerance
            and abs(self.avg_aoi_actual - self.avg_aoi_equivalent) < self.tolerance * max(1.0, self.avg_aoi_actual)
            and abs(self.avg_peak_actual - self.avg_peak_equivalent) < self.tolerance * max(1.0, self.avg_peak_actual)
        )


def compare_models(sc: SimConfig) -> EquivalenceReport:
    """Run both models on coupled streams and compare the receiver sawtooth."""
    act = simulate_actual(sc)
    eqv = simulate_equivalent(sc)
    da, ga = act.breakpoints()
    de, ge = eqv.breakpoints()
    if len(da) == len(de):
        gap = float(max(np.max(np.abs(da - de)), np.max(np.abs(ga - ge))))
    else:
        gap = math.inf
    ma = metrics_from_deliveries(np.column_stack((ga, da)), batch_count=sc.batch_count)
    me = metrics_from_deliveries(np.column_stack((ge, de)), batch_count=sc.batch_count)
    return EquivalenceReport(
        n_breakpoints_actual=len(da),
        n_breakpoints_equivalent=len(de),
        max_breakpoint_discrepancy=gap,
        avg_aoi_actual=ma.avg_aoi,
        avg_aoi_equivalent=me.avg_aoi,
        avg_peak_actual=ma.avg_peak_aoi,
        avg_peak_equivalent=me.avg_peak_aoi,
    )


TRACE_COLUMNS = ("index", "gen_time", "computation_end", "service_start", "delivery_time", "state_found", "discarded")


def write_trace(run: SimRun, path) -> None:
    """Per-packet event trace as CSV; empty cells for packets never served."""

    def num(x: float) -> str:
        return "" if math.isnan(x) else repr(x)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for i, (g, c, s, d, b, x) in enumerate(
            zip(
                run.gen.tolist(),
                run.comp_end.tolist(),
                run.service_start.tolist(),
                run.delivery.tolist(),
                run.found_busy.tolist(),
                run.discarded.tolist(),
            )
        ):
            w.writerow((i, repr(g), repr(c), num(s), num(d), "B" if b else "Id", int(x)))
