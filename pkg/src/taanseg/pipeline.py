"""End-to-end wiring: audio -> vocal attributes -> style features ->
posteriors -> labeled taan timeline.
"""

import numpy as np

from . import dsp, features, mlp, segmentation, vocal
from .config import PipelineConfig


def extract_track(clip, cfg=None):
    """Baseline vocal attributes from audio: F0, harmonic energy, voicing."""
    cfg = cfg or PipelineConfig()
    clip = dsp.resample(clip, 8000)
    spec = dsp.log_spectrogram(clip, win_s=0.04, hop_s=0.01, n_dft=1024)
    track = vocal.detect_f0_baseline(
        spec, f_min=cfg.f0_min_hz, f_max=cfg.f0_max_hz,
        voicing_factor=cfg.voicing_factor, grid_cents=cfg.f0_grid_cents,
        tol_cents=cfg.harmonic_tol_cents, n_harmonics=cfg.n_harmonics,
    )
    energy = vocal.harmonic_energy(spec, track.f0_hz,
                                   tol_cents=cfg.harmonic_tol_cents,
                                   n_harmonics=cfg.n_harmonics)
    return vocal.PitchEnergyTrack(f0_hz=track.f0_hz, energy_db=energy,
                                  voiced=track.voiced)


def track_features(track, cfg=None):
    """Style features from a pitch/energy track."""
    cfg = cfg or PipelineConfig()
    mask = vocal.detect_vocal_activity(track, min_run_s=cfg.vocal_min_run_s,
                                       max_gap_s=cfg.vocal_max_gap_s)
    return features.extract_features(track, mask,
                                     max_gap_frac=cfg.feature_gap_frac,
                                     smooth_s=cfg.smooth_window_s,
                                     var_floor=cfg.norm_var_floor)


def segment_posteriors(posteriors, decisions, cfg=None):
    """Posterior sequence -> grouped taan timeline."""
    cfg = cfg or PipelineConfig()
    sdm = segmentation.posterior_sdm(posteriors)
    nov = segmentation.novelty(sdm, half_width_s=cfg.novelty_half_width_s,
                               frame_s=posteriors.frame_s,
                               gaussian_taper=cfg.gaussian_taper)
    bounds = segmentation.pick_boundaries(
        nov, neighborhood_s=cfg.pick_neighborhood_s,
        rel_threshold=cfg.pick_rel_threshold, frame_s=posteriors.frame_s,
    )
    timeline = segmentation.label_segments(bounds, decisions,
                                           posteriors.vocal_mask,
                                           frame_s=posteriors.frame_s)
    return segmentation.group_sections(timeline,
                                       vocal_gap_s=cfg.group_vocal_gap_s,
                                       instr_gap_s=cfg.group_instr_gap_s)


def segment_audio(clip, model, cfg=None):
    """Full MLP-path pipeline on one concert."""
    cfg = cfg or PipelineConfig()
    track = extract_track(clip, cfg)
    seq = track_features(track, cfg)
    posteriors, decisions = mlp.classify_frames(model, seq,
                                                threshold=cfg.taan_threshold)
    return segment_posteriors(posteriors, decisions, cfg)


def labels_to_frame_targets(labels):
    """Frame-label strings -> (binary taan targets, vocal mask)."""
    y = np.array([1 if lab == "taan" else 0 for lab in labels], dtype=np.int64)
    vocal_mask = np.array([lab != "instrumental" for lab in labels], dtype=bool)
    return y, vocal_mask


def training_set(seq, labels):
    """Aligned (features, targets) on frames vocal in both views."""
    y, truth_vocal = labels_to_frame_targets(labels)
    n = min(len(seq), len(y))
    use = seq.vocal_mask[:n] & truth_vocal[:n]
    return seq.features[:n][use], y[:n][use]
