"""Colour-ring re-identification and behavioural benchmark (Python bindings)."""

from ._corvid import (
    ColorTable,
    CorvidError,
    PrototypeModel,
    combination_space_size,
    error_stats,
    evaluate,
    feeding_rate,
    identify,
    iou,
    join_tracks_csv,
    match_frames_csv,
    parse_combination,
    peck_window_prf,
    synth,
    train,
)

__all__ = [
    "ColorTable",
    "CorvidError",
    "PrototypeModel",
    "combination_space_size",
    "error_stats",
    "evaluate",
    "feeding_rate",
    "identify",
    "iou",
    "join_tracks_csv",
    "match_frames_csv",
    "parse_combination",
    "peck_window_prf",
    "synth",
    "train",
]
