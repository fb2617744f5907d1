"""Magnitude-series preprocessing ahead of learning.

Three stages, each optional, applied in a fixed order to every
per-subcarrier magnitude series (snapshots in time order):

1. Hampel outlier repair: replace samples deviating from their windowed
   median by more than ``n_sigma`` robust standard deviations.
2. Wavelet soft-threshold denoising (see :mod:`dsrcsense.wavelet`).
3. Background elimination: subtract the mean traffic-free response,
   estimated from snapshots whose ground-truth count is zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, Field

from .errors import DataError, ParameterError, ShapeError
from .wavelet import DEFAULT_LEVEL, max_decomposition_level, wavelet_denoise

# Consistent scale factor between the median absolute deviation and the
# standard deviation of a Gaussian.
_MAD_SCALE = 1.4826


class PreprocessConfig(BaseModel):
    """Stage toggles and parameters; disabling a stage skips it entirely."""

    hampel: bool = True
    hampel_half_window: int = Field(default=2, ge=1)
    hampel_n_sigma: float = Field(default=3.0, ge=0.0)
    wavelet: bool = True
    wavelet_level: int = Field(default=DEFAULT_LEVEL, ge=1)
    background: bool = True


def hampel_filter(values: np.ndarray, half_window: int = 2, n_sigma: float = 3.0) -> np.ndarray:
    """Windowed-median outlier repair.

    Windows are truncated at the series edges. A sample is replaced by
    its window median when it deviates by more than ``n_sigma`` times the
    scaled median absolute deviation of the window; a zero deviation
    scale therefore replaces any sample not equal to the median.

    Accepts a 1-d series or a 2-d array filtered along axis 0.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        return hampel_filter(x[:, None], half_window, n_sigma)[:, 0]
    if x.ndim != 2:
        raise ParameterError(f"expected 1-d or 2-d input, got shape {x.shape}")
    if half_window < 1:
        raise ParameterError(f"half_window must be positive, got {half_window}")
    n = x.shape[0]
    window = 2 * half_window + 1

    med = np.empty_like(x)
    mad = np.empty_like(x)
    if n >= window:
        view = sliding_window_view(x, window, axis=0)  # (n - w + 1, cols, w)
        med[half_window:n - half_window] = np.median(view, axis=2)
        mad[half_window:n - half_window] = np.median(
            np.abs(view - med[half_window:n - half_window, :, None]), axis=2
        )
    edge_rows = [i for i in range(min(half_window, n))]
    edge_rows += [i for i in range(max(n - half_window, half_window), n)]
    if n < window:
        edge_rows = list(range(n))
    for i in edge_rows:
        seg = x[max(0, i - half_window): i + half_window + 1]
        med[i] = np.median(seg, axis=0)
        mad[i] = np.median(np.abs(seg - med[i]), axis=0)

    deviation = np.abs(x - med)
    replace = deviation > n_sigma * _MAD_SCALE * mad
    return np.where(replace, med, x)


@dataclass
class BackgroundProfile:
    """Mean response of the link with no vehicles present."""

    values: np.ndarray  # (columns,)
    frame_count: int


def background_profile(frames: np.ndarray) -> BackgroundProfile:
    """Average traffic-free frames (rows) into a background profile."""
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise DataError(
            "background profile needs at least one traffic-free frame, "
            f"got shape {frames.shape}"
        )
    return BackgroundProfile(values=frames.mean(axis=0), frame_count=frames.shape[0])


def remove_background(frames: np.ndarray, profile: BackgroundProfile) -> np.ndarray:
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2 or frames.shape[1] != profile.values.size:
        raise ShapeError(
            f"frames of shape {frames.shape} do not match a profile of "
            f"width {profile.values.size}"
        )
    return frames - profile.values[None, :]


def preprocess_matrix(
    features: np.ndarray,
    counts: np.ndarray,
    config: PreprocessConfig,
) -> tuple[np.ndarray, BackgroundProfile | None]:
    """Run the enabled stages over a snapshot-by-feature magnitude matrix.

    Rows must be in snapshot time order; each column is treated as one
    series. Background elimination derives its profile from rows whose
    count is zero and raises :class:`DataError` when none exist.
    """
    x = np.asarray(features, dtype=float)
    counts = np.asarray(counts)
    if x.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-d, got shape {x.shape}")
    if counts.shape != (x.shape[0],):
        raise ShapeError(
            f"counts of shape {counts.shape} do not match {x.shape[0]} snapshots"
        )

    if config.hampel:
        x = hampel_filter(x, config.hampel_half_window, config.hampel_n_sigma)
    if config.wavelet:
        if max_decomposition_level(x.shape[0]) < 1:
            warnings.warn(
                f"series of length {x.shape[0]} is too short to decompose; "
                "skipping wavelet stage",
                stacklevel=2,
            )
        else:
            x = np.column_stack([
                wavelet_denoise(x[:, j], config.wavelet_level)
                for j in range(x.shape[1])
            ])
    profile = None
    if config.background:
        zero_rows = counts == 0
        if not np.any(zero_rows):
            raise DataError(
                "background elimination needs at least one zero-count snapshot"
            )
        profile = background_profile(x[zero_rows])
        x = remove_background(x, profile)
    return x, profile
