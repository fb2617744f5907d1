"""Least-squares channel estimation from a cyclic training sequence.

A known training sequence is transmitted ahead of each packet. After the
first ``L`` samples the received signal is in convolution steady state,
so stacking the remaining ``N_p`` samples gives the linear model

    y = T h + n

with ``T`` the (N_p x L) Toeplitz matrix of training samples and ``n``
circular complex Gaussian noise. The least-squares estimate is

    h_hat = (T^H T)^{-1} T^H y

with error covariance ``sigma_n^2 (T^H T)^{-1}``. Zadoff-Chu training is
the default: its periodic autocorrelation is ideal, which makes
``T^H T = N_p I`` and the estimator both orthogonal and minimum-variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, ParameterError, ShapeError
from .raytrace import cfr_from_taps

__all__ = [
    "NoiseModel",
    "TrainingSequence",
    "zadoff_chu",
    "training_sequence",
    "training_matrix",
    "simulate_reception",
    "ls_estimate",
    "ls_error_covariance",
    "estimated_cfr",
]


@dataclass
class NoiseModel:
    """Circular complex Gaussian noise: total per-sample variance sigma_sq."""

    sigma_sq: float
    rng_seed: int = 0

    def draw(self, count: int) -> np.ndarray:
        if self.sigma_sq < 0:
            raise ParameterError(f"noise variance must be nonnegative, got {self.sigma_sq}")
        if self.sigma_sq == 0.0:
            return np.zeros(count, dtype=complex)
        rng = np.random.default_rng(self.rng_seed)
        scale = math.sqrt(self.sigma_sq / 2.0)
        return scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def zadoff_chu(n_period: int, root: int = 1) -> np.ndarray:
    """One period of a Zadoff-Chu sequence.

    The root must be coprime with the length for the constant-amplitude
    zero-autocorrelation property to hold.
    """
    if n_period < 1:
        raise ParameterError(f"sequence length must be positive, got {n_period}")
    if root < 1 or math.gcd(root, n_period) != 1:
        raise ParameterError(
            f"root {root} must be positive and coprime with length {n_period}"
        )
    n = np.arange(n_period, dtype=float)
    if n_period % 2 == 0:
        phase = n * n
    else:
        phase = n * (n + 1)
    return np.exp(-1j * np.pi * root * phase / n_period)


@dataclass
class TrainingSequence:
    """A cyclically extended training waveform.

    ``samples[k] = base[k mod n_period]`` for ``k`` in ``[0, n_prefix +
    n_period)``: one period preceded by enough repetition that the last
    ``n_period`` received samples are in steady state for any channel of
    up to ``n_prefix`` taps.
    """

    samples: np.ndarray
    n_period: int
    n_prefix: int

    def __post_init__(self) -> None:
        if self.samples.shape != (self.n_period + self.n_prefix,):
            raise ShapeError(
                f"training sequence must have n_period + n_prefix = "
                f"{self.n_period + self.n_prefix} samples, got {self.samples.shape}"
            )


def training_sequence(n_period: int = 64, n_prefix: int = 32, root: int = 1) -> TrainingSequence:
    base = zadoff_chu(n_period, root)
    idx = np.arange(n_period + n_prefix) % n_period
    return TrainingSequence(samples=base[idx], n_period=n_period, n_prefix=n_prefix)


def training_matrix(seq: TrainingSequence, tap_count: int | None = None) -> np.ndarray:
    """Steady-state convolution matrix T with shape (n_period, tap_count).

    ``T[i, c] = samples[n_prefix + i - c]``; rows cover the final
    ``n_period`` received samples, columns the channel taps.
    """
    taps = seq.n_prefix if tap_count is None else tap_count
    if taps < 1 or taps > seq.n_prefix:
        raise ParameterError(
            f"tap count must be in [1, {seq.n_prefix}] for steady state, got {taps}"
        )
    rows = seq.n_prefix + np.arange(seq.n_period)
    idx = rows[:, None] - np.arange(taps)[None, :]
    return seq.samples[idx]


def simulate_reception(taps: np.ndarray, matrix: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Received steady-state samples ``y = T h + n``."""
    taps = np.asarray(taps, dtype=complex)
    if taps.ndim != 1 or matrix.ndim != 2 or matrix.shape[1] != taps.size:
        raise ShapeError(
            f"matrix {matrix.shape} does not act on taps of shape {taps.shape}"
        )
    return matrix @ taps + noise.draw(matrix.shape[0])


def ls_estimate(y: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Least-squares channel estimate ``(T^H T)^{-1} T^H y``.

    Solved as a general linear system; no structure of T is assumed.
    """
    y = np.asarray(y, dtype=complex)
    if matrix.ndim != 2:
        raise ShapeError(f"training matrix must be 2-d, got shape {matrix.shape}")
    n_obs, n_taps = matrix.shape
    if y.shape != (n_obs,):
        raise ShapeError(f"observation shape {y.shape} does not match matrix {matrix.shape}")
    if n_obs < n_taps:
        raise EstimationError(
            f"underdetermined system: {n_obs} observations for {n_taps} taps"
        )
    if np.linalg.matrix_rank(matrix) < n_taps:
        raise EstimationError("training matrix is rank deficient")
    gram = matrix.conj().T @ matrix
    return np.linalg.solve(gram, matrix.conj().T @ y)


def ls_error_covariance(matrix: np.ndarray, sigma_sq: float) -> np.ndarray:
    """Estimation error covariance ``sigma_sq (T^H T)^{-1}``."""
    if sigma_sq < 0:
        raise ParameterError(f"noise variance must be nonnegative, got {sigma_sq}")
    gram = matrix.conj().T @ matrix
    if np.linalg.matrix_rank(matrix) < matrix.shape[1]:
        raise EstimationError("training matrix is rank deficient")
    return sigma_sq * np.linalg.inv(gram)


def estimated_cfr(tap_estimate: np.ndarray, subcarrier_count: int) -> np.ndarray:
    """Frequency response of an estimated channel (zero-padded DFT)."""
    return cfr_from_taps(tap_estimate, subcarrier_count)
