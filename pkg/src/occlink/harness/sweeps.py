"""BER sweeps, the frame-queue throughput model and packet-arrival traces.

Every sweep point draws from its own generator seeded by
``(master_seed, point_index)``, so serial and parallel runs agree exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import channel as ch
from ..detect.regions import DetectionConfig, detect_rois
from ..scene import CameraModel, FrameToggleDrive, LedArraySpec, NoiseSourceSpec, Scene, project, render_sequence
from .config import ConfigError, ScenarioConfig

BER_HEADER = ("snr_db", "receiver", "symbols", "errors", "ber", "ci_low", "ci_high", "theory")
THROUGHPUT_HEADER = ("arrival_fps", "bits_per_second", "delivered_packets", "dropped_packets", "capacity_bps")
TRACE_HEADER = ("time", "received_fraction", "packets")


def point_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(index)])


def binomial_ci(errors: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Clopper-Pearson interval."""
    ci = stats.binomtest(int(errors), int(n)).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


# ---------------------------------------------------------------------------
# scene and interference


def build_scene(cfg: ScenarioConfig) -> Scene:
    arrays = tuple(LedArraySpec(tuple(v), drive=FrameToggleDrive(30.0), name=f"veh{i}")
                   for i, v in enumerate(cfg.scene.vehicles))
    sources = tuple(NoiseSourceSpec(cat, tuple(pos)) for cat, pos in cfg.scene.noise_sources)
    return Scene(arrays=arrays, noise_sources=sources)


def accepted_sources(scene: Scene, cam: CameraModel = CameraModel(), frames: int = 4) -> list[bool]:
    """Which noise sources end up inside an accepted RoI (i.e. leak into the adaptive receiver)."""
    rois = detect_rois(render_sequence(scene, cam, frames), DetectionConfig())
    out = []
    for src in scene.noise_sources:
        u, v = project(src.world_position, cam)
        out.append(any(r.bbox[0] <= u < r.bbox[2] and r.bbox[1] <= v < r.bbox[3] for r in rois))
    return out


def _interference(sources, amplitude: float, times: np.ndarray) -> np.ndarray:
    """Summed normalized interference at the given instants."""
    out = np.zeros(len(times))
    for src in sources:
        out += src.mean(times, times) / max(src.intensity, 1e-12)
    return amplitude * out


# ---------------------------------------------------------------------------
# BER


@dataclass(frozen=True)
class BerTask:
    index: int
    snr_db: float
    symbols: int
    seed: int
    params: ch.ChannelParams
    standard_sources: tuple
    adaptive_sources: tuple
    amplitude: float


def _ber_point(task: BerTask) -> list[tuple]:
    rng = point_rng(task.seed, task.index)
    n = task.symbols
    params = task.params.with_snr_db(task.snr_db)
    bits = rng.integers(0, 2, n)
    x = bits * params.on_level
    if isinstance(params.fading, ch.FadingParams):
        gain = ch.sample_gain(params, rng, n)
        theory = ch.faded_ber_theory(params) if params.noise_std > 0 else 0.0
    else:
        gain = float(params.fading)
        theory = float(ch.ook_ber_theory(ch.snr(params, gain))) if params.noise_std > 0 else 0.0
    sample = ch.transmit(x, params, gain, rng) if params.noise_std > 0 else ch.transmit(x, params, gain)
    times = rng.uniform(0.0, 1.0, n)
    scale = params.on_level * params.responsivity
    threshold = 0.5 * scale
    rows = []
    for name, sources in (("standard", task.standard_sources), ("adaptive", task.adaptive_sources)):
        y = sample.received + scale * _interference(sources, task.amplitude, times)
        errors = int(np.count_nonzero((y > threshold).astype(int) != bits))
        lo, hi = binomial_ci(errors, n)
        rows.append((task.snr_db, name, n, errors, errors / n, lo, hi, theory))
    return rows


def run_ber_sweep(cfg: ScenarioConfig, workers: int | None = None) -> list[tuple]:
    """Monte Carlo BER for the standard (whole-frame) and adaptive (per-RoI) receivers.

    The standard receiver's decision region contains every interfering
    source; the adaptive receiver sees only sources that survive detection.
    """
    cfg.sweep.validate()
    scene = build_scene(cfg)
    leaks = accepted_sources(scene) if scene.noise_sources else []
    std = tuple(scene.noise_sources)
    ada = tuple(s for s, leak in zip(scene.noise_sources, leaks) if leak)
    tasks = [BerTask(i, float(s), cfg.sweep.symbols, cfg.seed, cfg.channel, std, ada, cfg.scene.interference_amplitude)
             for i, s in enumerate(cfg.sweep.snr_db)]
    workers = cfg.sweep.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ber_point, tasks))
    else:
        results = [_ber_point(t) for t in tasks]
    return [row for rows in results for row in rows]


# ---------------------------------------------------------------------------
# throughput


def _arrival_times(rate: float, duration: float, process: str, rng) -> np.ndarray:
    if process == "poisson":
        n = rng.poisson(rate * duration)
        return np.sort(rng.uniform(0.0, duration, n))
    return np.arange(int(math.floor(rate * duration + 1e-9))) / rate


def simulate_queue(arrivals: np.ndarray, batch: int, service_fps: float, capacity: int, duration: float,
                   buffer: float = math.inf) -> tuple[int, int]:
    """FIFO queue drained at frame instants ``k / service_fps``.

    Each arrival enqueues ``batch`` packets; each frame carries up to
    ``capacity``.  Packets beyond ``buffer`` queued are dropped (tail drop).
    Returns ``(delivered, dropped)``.
    """
    ticks = np.arange(1, int(math.floor(service_fps * duration + 1e-9)) + 1) / service_fps
    events = sorted([(t, 1) for t in arrivals] + [(t, 0) for t in ticks])  # service first on ties
    queue = delivered = dropped = 0
    for _, kind in events:
        if kind == 1:
            room = buffer - queue
            add = batch if room >= batch else max(int(room), 0)
            dropped += batch - add
            queue += add
        else:
            take = min(queue, capacity)
            queue -= take
            delivered += take
    return delivered, dropped


def run_throughput(cfg: ScenarioConfig, arrival_rates=None) -> list[tuple]:
    tc = cfg.throughput
    tc.validate()
    rates = tc.arrival_fps if arrival_rates is None else tuple(arrival_rates)
    if any(r <= 0 for r in rates):
        raise ConfigError("arrival rates must be positive")
    cap_bps = tc.packets_per_frame * tc.packet_bits * tc.service_fps
    rows = []
    for i, rate in enumerate(rates):
        rng = point_rng(cfg.seed, i)
        arr = _arrival_times(rate, tc.duration, tc.arrivals, rng)
        delivered, dropped = simulate_queue(arr, tc.packets_per_frame, tc.service_fps, tc.packets_per_frame,
                                            tc.duration, tc.buffer)
        rows.append((float(rate), delivered * tc.packet_bits / tc.duration, delivered, dropped, cap_bps))
    return rows


# ---------------------------------------------------------------------------
# packet trace


def jitter_series(cfg: ScenarioConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Frame times and per-frame tracking jitter magnitude (pixels)."""
    tc = cfg.trace
    t = np.arange(int(round(tc.duration * tc.frame_fps))) / tc.frame_fps
    jit = np.abs(rng.normal(0.0, 1.0, len(t))) * tc.jitter_std
    for start, length, amp in tc.bursts:
        inside = (t >= start) & (t < start + length)
        jit[inside] += amp * (0.5 + 0.5 * rng.random(int(inside.sum())))
    return t, jit


def run_packet_trace(cfg: ScenarioConfig) -> list[tuple]:
    """Per-second fraction of packets whose every frame decodes.

    A frame decodes when its tracking jitter stays within tolerance and all
    of its bits survive the channel at the configured noise level.
    """
    tc = cfg.trace
    tc.validate()
    rng = point_rng(cfg.seed, 0)
    t, jit = jitter_series(cfg, rng)
    params = cfg.channel.with_snr_db(tc.snr_db)
    bits = rng.integers(0, 2, (len(t), tc.bits_per_frame))
    x = bits * params.on_level
    if params.noise_std > 0:
        y = ch.transmit(x, params, 1.0, rng).received
    else:
        y = ch.transmit(x, params, 1.0).received
    bit_ok = (y > 0.5 * params.on_level * params.responsivity).astype(int) == bits
    frame_ok = bit_ok.all(axis=1) & (jit <= tc.tolerance)
    header = 16 + 16  # two flags plus the length field
    frames_per_packet = max(1, math.ceil((cfg.payload_bits + header) / tc.bits_per_frame))
    n_packets = len(t) // frames_per_packet
    ok = frame_ok[:n_packets * frames_per_packet].reshape(n_packets, frames_per_packet).all(axis=1)
    start = t[:n_packets * frames_per_packet:frames_per_packet]
    rows = []
    for sec in range(int(math.floor(tc.duration))):
        sel = (start >= sec) & (start < sec + 1)
        n = int(sel.sum())
        rows.append((float(sec), float(ok[sel].mean()) if n else 0.0, n))
    return rows
