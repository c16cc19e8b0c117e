"""Vocal attribute extraction: predominant F0, harmonic energy, voicing.

The baseline pitch tracker is a harmonic-sum search over a 10-cent
candidate grid. Externally computed pitch tracks can be ingested from CSV
instead (header: time_s,f0_hz,energy_db,voiced at exactly 10 ms rows).
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidArgumentError, ParseError

TRACK_HOP_S = 0.01
UNVOICED_DB = -120.0
HARMONIC_CEILING_HZ = 5000.0


@dataclass
class PitchEnergyTrack:
    """Time-aligned F0 (Hz), vocal energy (dB) and voicing at 10 ms hop."""

    f0_hz: np.ndarray
    energy_db: np.ndarray
    voiced: np.ndarray
    hop_s: float = TRACK_HOP_S

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.energy_db = np.asarray(self.energy_db, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        n = len(self.f0_hz)
        if len(self.energy_db) != n or len(self.voiced) != n:
            raise InvalidArgumentError("track sequences must have equal length")
        if np.any((self.f0_hz > 0) != self.voiced):
            raise InvalidArgumentError("voiced flag must mirror f0 > 0")

    def __len__(self):
        return len(self.f0_hz)


def _harmonic_bin_ranges(f0, n_bins, bin_hz, tol_cents=30.0, n_harmonics=10):
    """(lo, hi) bin slices around each usable harmonic of f0."""
    lo_f = 2.0 ** (-tol_cents / 1200.0)
    hi_f = 2.0 ** (tol_cents / 1200.0)
    ranges = []
    for h in range(1, n_harmonics + 1):
        fh = h * f0
        if fh >= HARMONIC_CEILING_HZ:
            break
        lo = int(np.floor(fh * lo_f / bin_hz))
        hi = int(np.ceil(fh * hi_f / bin_hz)) + 1
        lo = max(lo, 0)
        hi = min(hi, n_bins)
        if lo >= hi:
            continue
        ranges.append((h, lo, hi))
    return ranges


def detect_f0_baseline(spec, f_min=80.0, f_max=600.0, voicing_factor=3.0,
                       grid_cents=10.0, tol_cents=30.0, n_harmonics=10):
    """Predominant-F0 track from a log spectrogram at 10 ms hop.

    Per frame the candidate maximizing the 1/h-weighted harmonic sum
    (max linear magnitude within +/- tol_cents of each harmonic below
    5 kHz) wins; the weighting breaks the otherwise exact tie between a
    tone and its subharmonics. A frame is unvoiced when the winning sum
    does not exceed voicing_factor * weight_sum * median frame magnitude.
    """
    if f_min >= f_max:
        raise InvalidArgumentError("f_min must be below f_max")
    if abs(spec.hop_s - TRACK_HOP_S) > 1e-9:
        raise InvalidArgumentError("pitch tracking needs a 10 ms hop spectrogram")
    if spec.bin_hz > 8.0:
        raise InvalidArgumentError("bin spacing too coarse for F0 search")

    n_cands = int(np.floor(1200.0 * np.log2(f_max / f_min) / grid_cents)) + 1
    candidates = f_min * 2.0 ** (grid_cents * np.arange(n_cands) / 1200.0)
    mags = spec.magnitudes()  # (n_bins, n_frames)
    n_frames = mags.shape[1]

    cand_ranges = [
        _harmonic_bin_ranges(f, spec.n_bins, spec.bin_hz, tol_cents, n_harmonics)
        for f in candidates
    ]
    # peak magnitude per (candidate, harmonic) slice, all frames at once
    sums = np.zeros((len(candidates), n_frames))
    weight_sum = np.zeros(len(candidates))
    slice_max = {}
    for ci, ranges in enumerate(cand_ranges):
        for h, lo, hi in ranges:
            key = (lo, hi)
            if key not in slice_max:
                slice_max[key] = mags[lo:hi].max(axis=0)
            sums[ci] += slice_max[key] / h
            weight_sum[ci] += 1.0 / h
    if not weight_sum.any():
        raise InvalidArgumentError("empty candidate grid")

    best = np.argmax(sums, axis=0)
    best_sum = sums[best, np.arange(n_frames)]
    frame_median = np.median(mags, axis=0)
    threshold = voicing_factor * np.maximum(weight_sum[best], 1e-12) * frame_median
    voiced = best_sum > threshold

    # refine the winning candidate from its harmonic peak bins: parabolic
    # interpolation of the log magnitude around each peak, averaged over
    # harmonics weighted by peak magnitude (the 10-cent grid alone leaves
    # slice-max plateaus wider than the grid step)
    f0 = np.zeros(n_frames)
    log_mags = spec.values
    for ci in np.unique(best):
        frames = np.flatnonzero((best == ci) & voiced)
        if len(frames) == 0:
            continue
        num = np.zeros(len(frames))
        den = np.zeros(len(frames))
        for h, lo, hi in cand_ranges[ci]:
            sub = mags[lo:hi, :][:, frames]
            b = np.argmax(sub, axis=0) + lo
            inner = (b > 0) & (b < spec.n_bins - 1)
            delta = np.zeros(len(frames))
            left = log_mags[np.maximum(b - 1, 0), frames]
            mid = log_mags[b, frames]
            right = log_mags[np.minimum(b + 1, spec.n_bins - 1), frames]
            denom = left - 2.0 * mid + right
            ok = inner & (np.abs(denom) > 1e-12)
            delta[ok] = np.clip(0.5 * (left - right)[ok] / denom[ok], -0.5, 0.5)
            f_est = (b + delta) * spec.bin_hz / h
            w = mags[b, frames] / h
            num += w * f_est
            den += w
        f0[frames] = num / np.maximum(den, 1e-30)
    f0 = np.where(voiced & (f0 > 0), f0, 0.0)
    voiced = f0 > 0
    energy = np.where(voiced, 0.0, UNVOICED_DB)
    return PitchEnergyTrack(f0_hz=f0, energy_db=energy, voiced=voiced)


def harmonic_energy(spec, f0_hz, tol_cents=30.0, n_harmonics=10):
    """Vocal energy: 10*log10 of summed squared harmonic peak magnitudes.

    Harmonics of the given F0 below 5 kHz contribute the max linear
    magnitude within +/- tol_cents; unvoiced frames get -120 dB.
    """
    f0_hz = np.asarray(f0_hz, dtype=np.float64)
    if len(f0_hz) != spec.n_frames:
        raise InvalidArgumentError(
            f"f0 length {len(f0_hz)} != spectrogram frames {spec.n_frames}"
        )
    mags = spec.magnitudes()
    energy = np.full(len(f0_hz), UNVOICED_DB)
    for t in range(len(f0_hz)):
        if f0_hz[t] <= 0:
            continue
        ranges = _harmonic_bin_ranges(
            f0_hz[t], spec.n_bins, spec.bin_hz, tol_cents, n_harmonics
        )
        if not ranges:
            continue
        power = sum(mags[lo:hi, t].max() ** 2 for _, lo, hi in ranges)
        energy[t] = 10.0 * np.log10(max(power, 1e-30))
    return energy


def _runs(mask):
    """(start, end) index pairs of True runs, end exclusive."""
    mask = np.asarray(mask, dtype=bool)
    if len(mask) == 0:
        return []
    edges = np.flatnonzero(np.diff(mask.astype(np.int8)))
    starts = list(edges[mask[edges + 1]] + 1)
    ends = list(edges[~mask[edges + 1]] + 1)
    if mask[0]:
        starts.insert(0, 0)
    if mask[-1]:
        ends.append(len(mask))
    return list(zip(starts, ends))


def detect_vocal_activity(track, min_run_s=0.2, max_gap_s=0.1):
    """Vocal-spurt mask: median-smoothed voiced runs >= min_run_s, with
    internal gaps shorter than max_gap_s absorbed."""
    voiced = np.asarray(track.voiced, dtype=bool)
    n = len(voiced)
    if n == 0:
        return np.zeros(0, dtype=bool)
    # median filter, length 5
    padded = np.pad(voiced.astype(np.int8), 2, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, 5)
    smooth = windows.sum(axis=1) >= 3

    min_run = int(round(min_run_s / track.hop_s))
    max_gap = int(round(max_gap_s / track.hop_s))
    vocal = np.zeros(n, dtype=bool)
    for start, end in _runs(smooth):
        if end - start >= min_run:
            vocal[start:end] = True
    # absorb short non-vocal gaps lying between vocal regions
    for start, end in _runs(~vocal):
        if start > 0 and end < n and (end - start) < max_gap:
            vocal[start:end] = True
    return vocal


def write_track(track, path):
    """Write a track to CSV (header time_s,f0_hz,energy_db,voiced)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time_s,f0_hz,energy_db,voiced\n")
        for t in range(len(track)):
            fh.write(
                f"{t * track.hop_s:.2f},{float(track.f0_hz[t])!r},"
                f"{float(track.energy_db[t])!r},{int(track.voiced[t])}\n"
            )


def ingest_track(path):
    """Read a pitch-track CSV, validating hop and track invariants."""
    f0, energy, voiced = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time_s,f0_hz,energy_db,voiced":
            raise FormatError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError("expected 4 columns", path=path, line=lineno)
            try:
                t = float(parts[0])
                f = float(parts[1])
                e = float(parts[2])
                v = int(parts[3])
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from exc
            if v not in (0, 1):
                raise ParseError(f"voiced must be 0/1, got {parts[3]}",
                                 path=path, line=lineno)
            expected_t = (lineno - 2) * TRACK_HOP_S
            if abs(t - expected_t) > 1e-6:
                raise FormatError(
                    f"{path}:{lineno}: time {t} not on 10 ms grid "
                    f"(expected {expected_t})"
                )
            if (f > 0) != bool(v):
                raise ParseError(
                    f"f0={f} inconsistent with voiced={v}", path=path, line=lineno
                )
            f0.append(f)
            energy.append(e)
            voiced.append(bool(v))
    return PitchEnergyTrack(
        f0_hz=np.array(f0), energy_db=np.array(energy), voiced=np.array(voiced)
    )
