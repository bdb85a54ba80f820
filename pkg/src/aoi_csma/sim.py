"""Event-driven simulation of the finite population.

N devices contend for M channels under idealized CSMA: sensing is
instantaneous, there are no hidden nodes, and two backoff timers never
expire simultaneously.  Each device carries an always-on Poisson arrival
stream, an exponential backoff clock while waiting, and an exponential
service clock while transmitting.  A backoff expiry samples one channel
uniformly at random: if it is free the device occupies it, otherwise it
stays waiting with a fresh backoff, which by memorylessness realizes the
aggregate access rate w * (1 - gamma * X_S) per waiting device.

Per-device receiver AoI follows the sawtooth: unit growth everywhere,
downward jumps to the delivered packet's age at successful completions.
Statistics exclude a configurable warm-up window.

Randomness contract: every draw is a pure function of
(seed, replication, device, purpose, draw index).  One counter-keyed
generator per (seed, replication, purpose) yields consecutive blocks of
shape (n_devices, block); device d consumes row d, so draw sequences are
independent of event interleaving across devices and replications are
reproducible under any parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from heapq import heapify, heappop, heappush

import numpy as np

from .core import AoiError, Policy, PolicyScheme, Scheme, SystemParams, validate


class InvalidConfig(AoiError):
    """The simulation configuration is incomplete or out of range."""


class ChannelAccounting(AoiError):
    """Internal invariant violated: busy channels != devices in service."""


IDLE, WAITING, SERVICE = 0, 1, 2
_ARRIVAL, _BACKOFF, _COMPLETE = 0, 1, 2
_P_ARRIVAL, _P_BACKOFF, _P_SERVICE, _P_CHANNEL, _P_SUCCESS = range(5)

_MASK64 = (1 << 64) - 1
_NORMAL_95 = 1.959963984540054


@dataclass(slots=True)
class DeviceState:
    """Mutable per-device state evolved by the event loop.

    ``packet_timestamp`` is meaningful only outside Idle; ``channel`` only in
    Service.  ``aoi_time``/``aoi_value`` pin the sawtooth at the last reset
    (delivery or warm-up boundary), ``aoi_integral`` accumulates its area.
    """

    mode: int = IDLE
    packet_timestamp: float = 0.0
    channel: int = -1
    aoi_time: float = 0.0
    aoi_value: float = 0.0
    aoi_integral: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    """One replication's configuration.

    Exactly one of ``stop_arrivals`` (total system-wide packet arrivals) or
    ``stop_time`` must be set.  ``warmup_fraction`` of the horizon is
    excluded from AoI statistics.  ``sample_dt`` enables empirical-measure
    sampling.  ``replication`` indexes the derived random streams.
    """

    params: SystemParams
    ps: PolicyScheme
    seed: int
    stop_arrivals: int | None = None
    stop_time: float | None = None
    warmup_fraction: float = 0.1
    sample_dt: float | None = None
    replication: int = 0


@dataclass(frozen=True)
class SimResult:
    """Per-device AoI averages, event counts, and optional trajectory."""

    avg_aoi_per_device: np.ndarray
    avg_aoi_mean: float
    avg_aoi_stderr: float
    arrivals: int
    delivered: int
    failed: int
    preempted: int
    discarded: int
    effective_k_estimate: float
    measured_time: float
    end_time: float
    n_devices: int
    n_channels: int
    trajectory_times: np.ndarray | None = None
    trajectory_counts: np.ndarray | None = None

    @property
    def trajectory_fractions(self) -> np.ndarray | None:
        if self.trajectory_counts is None:
            return None
        return self.trajectory_counts / float(self.n_devices)


class _Streams:
    """Blocked, counter-addressed random streams per (replication, purpose)."""

    BLOCK = 64

    def __init__(self, seed: int, replication: int, n: int, m: int,
                 lam: float, w: float, mu: float):
        if replication < 0:
            raise InvalidConfig(f"replication index must be nonnegative, got {replication}")
        self._n = n
        self._m = m
        self._key_hi = seed & _MASK64
        self._rep = replication
        self._scales = {_P_ARRIVAL: 1.0 / lam, _P_BACKOFF: 1.0 / w, _P_SERVICE: 1.0 / mu}
        self._gens: dict[int, np.random.Generator] = {}
        self._blocks: dict[int, list[list[list[float]]]] = {p: [] for p in range(5)}
        self._ptr: dict[int, list[int]] = {p: [0] * n for p in range(5)}

    def _extend(self, purpose: int) -> None:
        gen = self._gens.get(purpose)
        if gen is None:
            key = np.array([self._key_hi, (self._rep << 3) | purpose], dtype=np.uint64)
            gen = np.random.Generator(np.random.Philox(key=key))
            self._gens[purpose] = gen
        shape = (self._n, self.BLOCK)
        if purpose == _P_CHANNEL:
            block = gen.integers(0, self._m, size=shape, dtype=np.int64)
        elif purpose == _P_SUCCESS:
            block = gen.random(size=shape)
        else:
            block = gen.exponential(scale=self._scales[purpose], size=shape)
        self._blocks[purpose].append(block.tolist())

    def _draw(self, purpose: int, device: int):
        ptr = self._ptr[purpose]
        idx = ptr[device]
        ptr[device] = idx + 1
        j, r = divmod(idx, self.BLOCK)
        blocks = self._blocks[purpose]
        while j >= len(blocks):
            self._extend(purpose)
        return blocks[j][device][r]

    def arrival(self, device: int) -> float:
        return self._draw(_P_ARRIVAL, device)

    def backoff(self, device: int) -> float:
        return self._draw(_P_BACKOFF, device)

    def service(self, device: int) -> float:
        return self._draw(_P_SERVICE, device)

    def channel(self, device: int) -> int:
        return self._draw(_P_CHANNEL, device)

    def success(self, device: int) -> float:
        return self._draw(_P_SUCCESS, device)


def _check_config(config: SimConfig) -> None:
    p = config.params
    if p.n_devices is None or p.n_channels is None:
        raise InvalidConfig("n_devices and n_channels must both be set for simulation")
    if not (isinstance(p.n_devices, int) and p.n_devices >= 1):
        raise InvalidConfig(f"n_devices must be a positive integer, got {p.n_devices!r}")
    if not (isinstance(p.n_channels, int) and p.n_channels >= 1):
        raise InvalidConfig(f"n_channels must be a positive integer, got {p.n_channels!r}")
    if (config.stop_arrivals is None) == (config.stop_time is None):
        raise InvalidConfig("exactly one of stop_arrivals / stop_time must be set")
    if config.stop_arrivals is not None and config.stop_arrivals < 1:
        raise InvalidConfig(f"stop_arrivals must be >= 1, got {config.stop_arrivals}")
    if config.stop_time is not None and not config.stop_time > 0:
        raise InvalidConfig(f"stop_time must be positive, got {config.stop_time}")
    if not 0.0 <= config.warmup_fraction <= 0.5:
        raise InvalidConfig(f"warmup_fraction must lie in [0, 0.5], got {config.warmup_fraction}")
    if config.sample_dt is not None and not config.sample_dt > 0:
        raise InvalidConfig(f"sample_dt must be positive, got {config.sample_dt}")
    validate(p)


def run(config: SimConfig) -> SimResult:
    """Simulate one replication and return its statistics."""
    _check_config(config)
    params = config.params
    n: int = params.n_devices
    m: int = params.n_channels
    w, prob, gamma = params.w, params.p, params.gamma
    policy, wp = config.ps.policy, config.ps.scheme is Scheme.WP
    streams = _Streams(config.seed, config.replication, n, m, params.lam, w, params.mu)

    devices = [DeviceState() for _ in range(n)]
    occupied = [False] * m
    busy = 0
    n_idle, n_wait, n_serv = n, 0, 0
    arrivals = delivered = failed = preempted = discarded = 0

    stop_arrivals = config.stop_arrivals
    stop_time = config.stop_time
    if stop_arrivals is not None:
        warm_arrivals = math.ceil(config.warmup_fraction * stop_arrivals)
        stats_start_t = None
    else:
        warm_arrivals = None
        stats_start_t = config.warmup_fraction * stop_time

    stats_on = False
    stats_t0 = 0.0
    ns_integral = 0.0
    last_t = 0.0

    sampling = config.sample_dt is not None
    sample_dt = config.sample_dt or 0.0
    next_sample = 0.0
    traj_times: list[float] = []
    traj_counts: list[tuple[int, int, int]] = []
    if sampling:
        traj_times.append(0.0)
        traj_counts.append((n_idle, n_wait, n_serv))
        next_sample = sample_dt

    def begin_stats(tb: float) -> None:
        nonlocal stats_on, stats_t0, ns_integral
        for dev in devices:
            dev.aoi_value += tb - dev.aoi_time
            dev.aoi_time = tb
            dev.aoi_integral = 0.0
        stats_on = True
        stats_t0 = tb
        ns_integral = 0.0

    if warm_arrivals == 0:
        begin_stats(0.0)

    heap = [(streams.arrival(d), d, _ARRIVAL) for d in range(n)]
    heapify(heap)

    end_time: float | None = None
    while True:
        t, d, kind = heappop(heap)
        if stop_time is not None and t > stop_time:
            end_time = stop_time
            break
        if not stats_on and stats_start_t is not None and t >= stats_start_t:
            begin_stats(stats_start_t)
        if stats_on:
            seg_from = last_t if last_t > stats_t0 else stats_t0
            if t > seg_from:
                ns_integral += n_serv * (t - seg_from)
        if sampling:
            while next_sample < t:
                traj_times.append(next_sample)
                traj_counts.append((n_idle, n_wait, n_serv))
                next_sample += sample_dt
        last_t = t
        dev = devices[d]

        if kind == _ARRIVAL:
            arrivals += 1
            heappush(heap, (t + streams.arrival(d), d, _ARRIVAL))
            md = dev.mode
            if md == IDLE:
                dev.mode = WAITING
                dev.packet_timestamp = t
                n_idle -= 1
                n_wait += 1
                heappush(heap, (t + streams.backoff(d), d, _BACKOFF))
            elif md == WAITING:
                dev.packet_timestamp = t
            else:
                if wp:
                    dev.packet_timestamp = t
                    preempted += 1
                else:
                    discarded += 1
            if warm_arrivals is not None and not stats_on and arrivals >= warm_arrivals:
                begin_stats(t)
            if stop_arrivals is not None and arrivals >= stop_arrivals:
                end_time = t
                break
        elif kind == _BACKOFF:
            c = streams.channel(d)
            if occupied[c]:
                heappush(heap, (t + streams.backoff(d), d, _BACKOFF))
            else:
                occupied[c] = True
                busy += 1
                dev.mode = SERVICE
                dev.channel = c
                n_wait -= 1
                n_serv += 1
                if busy != n_serv:
                    raise ChannelAccounting(f"busy={busy} but {n_serv} devices in service")
                heappush(heap, (t + streams.service(d), d, _COMPLETE))
        else:  # _COMPLETE
            if streams.success(d) < prob:
                delivered += 1
                if stats_on:
                    dtau = t - dev.aoi_time
                    dev.aoi_integral += dev.aoi_value * dtau + 0.5 * dtau * dtau
                dev.aoi_value = t - dev.packet_timestamp
                dev.aoi_time = t
                occupied[dev.channel] = False
                busy -= 1
                dev.channel = -1
                dev.mode = IDLE
                n_serv -= 1
                n_idle += 1
            else:
                failed += 1
                if policy is Policy.S:
                    heappush(heap, (t + streams.service(d), d, _COMPLETE))
                    continue
                occupied[dev.channel] = False
                busy -= 1
                dev.channel = -1
                n_serv -= 1
                if policy is Policy.I:
                    dev.mode = IDLE
                    n_idle += 1
                else:  # Policy.W re-contends with the undelivered packet
                    dev.mode = WAITING
                    n_wait += 1
                    heappush(heap, (t + streams.backoff(d), d, _BACKOFF))
            if busy != n_serv:
                raise ChannelAccounting(f"busy={busy} but {n_serv} devices in service")

    if not stats_on:
        if stats_start_t is not None and stats_start_t < end_time:
            begin_stats(stats_start_t)
        else:
            raise InvalidConfig("horizon ended before the warm-up window closed")
    measured = end_time - stats_t0
    if measured <= 0.0:
        raise InvalidConfig("horizon too short: no time left after warm-up")

    seg_from = last_t if last_t > stats_t0 else stats_t0
    if end_time > seg_from:
        ns_integral += n_serv * (end_time - seg_from)
    if sampling:
        while next_sample <= end_time + 1e-12:
            traj_times.append(next_sample)
            traj_counts.append((n_idle, n_wait, n_serv))
            next_sample += sample_dt

    avgs = np.empty(n)
    for d, dev in enumerate(devices):
        dtau = end_time - dev.aoi_time
        avgs[d] = (dev.aoi_integral + dev.aoi_value * dtau + 0.5 * dtau * dtau) / measured
    mean = float(avgs.mean())
    stderr = float(avgs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean_xs = ns_integral / (measured * n)
    k_est = w * (1.0 - gamma * mean_xs)

    return SimResult(
        avg_aoi_per_device=avgs,
        avg_aoi_mean=mean,
        avg_aoi_stderr=stderr,
        arrivals=arrivals,
        delivered=delivered,
        failed=failed,
        preempted=preempted,
        discarded=discarded,
        effective_k_estimate=k_est,
        measured_time=measured,
        end_time=end_time,
        n_devices=n,
        n_channels=m,
        trajectory_times=np.array(traj_times) if sampling else None,
        trajectory_counts=np.array(traj_counts, dtype=np.int64) if sampling else None,
    )


def trajectory(config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Empirical-measure series (times, fractions) of a single replication."""
    if config.sample_dt is None:
        raise InvalidConfig("trajectory requires sample_dt")
    result = run(config)
    return result.trajectory_times, result.trajectory_fractions


@dataclass(frozen=True)
class PooledResult:
    """Replications with pooled statistics over their per-replication means."""

    results: tuple[SimResult, ...]
    mean_aoi: float
    stderr: float
    half_width: float

    @property
    def n_reps(self) -> int:
        return len(self.results)


def _run_replication(args: tuple[SimConfig, int]) -> SimResult:
    config, rep = args
    return run(replace(config, replication=rep))


def replicate(config: SimConfig, n_reps: int, parallelism: int = 1) -> PooledResult:
    """Run independent replications with decorrelated deterministic streams.

    Identical (seed, config) reproduces identical pooled output regardless of
    the degree of parallelism; replication j uses stream index
    config.replication + j.
    """
    if n_reps < 1:
        raise InvalidConfig(f"n_reps must be >= 1, got {n_reps}")
    if parallelism < 1:
        raise InvalidConfig(f"parallelism must be >= 1, got {parallelism}")
    jobs = [(config, config.replication + j) for j in range(n_reps)]
    if parallelism == 1 or n_reps == 1:
        results = [_run_replication(job) for job in jobs]
    else:
        chunk = max(1, n_reps // (4 * parallelism))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_replication, jobs, chunksize=chunk))
    means = np.array([r.avg_aoi_mean for r in results])
    mean = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(n_reps)) if n_reps > 1 else 0.0
    return PooledResult(
        results=tuple(results),
        mean_aoi=mean,
        stderr=stderr,
        half_width=_NORMAL_95 * stderr,
    )


# ---------------------------------------------------------------------------
# CSV serialization (9 significant digits, LF line endings).

def _fmt(x: float) -> str:
    return f"{x:.9g}"


def aoi_csv_lines(result: SimResult) -> list[str]:
    lines = ["device_id,avg_aoi"]
    for d, v in enumerate(result.avg_aoi_per_device):
        lines.append(f"{d},{_fmt(v)}")
    return lines


def summary_csv_lines(results: list[SimResult]) -> list[str]:
    """Pooled summary over one or more replications."""
    means = np.array([r.avg_aoi_mean for r in results])
    mean = float(means.mean())
    if len(results) > 1:
        stderr = float(means.std(ddof=1) / math.sqrt(len(results)))
    else:
        stderr = results[0].avg_aoi_stderr
    k_est = float(np.mean([r.effective_k_estimate for r in results]))
    header = "mean,stderr,arrivals,delivered,failed,preempted,discarded,k_estimate"
    row = ",".join(
        [_fmt(mean), _fmt(stderr)]
        + [str(sum(getattr(r, f) for r in results))
           for f in ("arrivals", "delivered", "failed", "preempted", "discarded")]
        + [_fmt(k_est)]
    )
    return [header, row]


def traj_csv_lines(result: SimResult) -> list[str]:
    if result.trajectory_times is None:
        raise InvalidConfig("result carries no trajectory (sample_dt was not set)")
    lines = ["t,x_I,x_W,x_S"]
    for t, row in zip(result.trajectory_times, result.trajectory_fractions):
        lines.append(f"{_fmt(t)},{_fmt(row[0])},{_fmt(row[1])},{_fmt(row[2])}")
    return lines


def write_csv(lines: list[str], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
