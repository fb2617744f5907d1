"""Geometric multipath synthesis for a roadside link.

Rays between a transmitter and receiver are built with the image method:
the line-of-sight path, a ground bounce, one bounce off each canyon wall,
and one specular bounce per illuminated vehicle face. Each path carries a
complex gain ``lambda / (4 pi d) * product(reflection coefficients)`` and
a propagation delay ``d / c``. Vehicles crossing the direct segment
attenuate the line of sight by a fixed blockage loss.

Path gains exclude the carrier-phase rotation ``exp(-j 2 pi f_c tau)``;
it is applied when paths are folded into channel taps, where each tap is

    h[n] = sum_k a_k exp(-j 2 pi f_c tau_k) g_rc(n T_s - tau_k)

with ``g_rc`` the raised-cosine pulse. The channel frequency response is
the N-point DFT of the zero-padded taps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np
from pydantic import BaseModel, Field

from .errors import GeometryError, ParameterError, TruncationError
from .scene import Scene

SPEED_OF_LIGHT = 299_792_458.0

_FACE_NAMES = {(0, -1): "x-", (0, 1): "x+", (1, -1): "y-", (1, 1): "y+", (2, 1): "top"}


class ReflectionCoefficient(BaseModel):
    """Specular reflection: gain magnitude plus a half-turn phase flag."""

    magnitude: float = Field(ge=0.0, le=1.0)
    phase_inverted: bool = True

    @property
    def value(self) -> float:
        return -self.magnitude if self.phase_inverted else self.magnitude


class RadioConfig(BaseModel):
    """Link and channel-model parameters."""

    carrier_freq: float = Field(default=5.9e9, gt=0.0)
    bandwidth: float = Field(default=10e6, gt=0.0)
    sample_interval: float = Field(default=1e-7, gt=0.0)
    tap_count: int = Field(default=32, ge=1)  # channel impulse response length
    subcarrier_count: int = Field(default=64, ge=1)
    rolloff: float = Field(default=0.1, ge=0.0, lt=1.0)
    max_rays: int = Field(default=25, ge=1)
    tx_power_dbm: float = 30.0
    vehicle_reflection: ReflectionCoefficient = ReflectionCoefficient(magnitude=0.95)
    ground_reflection: ReflectionCoefficient = ReflectionCoefficient(magnitude=0.50)
    wall_reflection: ReflectionCoefficient = ReflectionCoefficient(magnitude=0.60)
    blockage_loss_db: float = Field(default=15.0, ge=0.0)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass
class PathSet:
    """Propagation paths for one link, strongest first.

    ``amplitudes`` hold the geometric gain including reflection and
    blockage factors but not the carrier-phase rotation (see module
    docstring). ``descriptors`` identify each bounce: ``("los",)``,
    ``("ground",)``, ``("wall", +1/-1)`` or ``("vehicle", index, face)``.
    """

    amplitudes: np.ndarray  # complex (K,)
    delays: np.ndarray  # float (K,) seconds
    descriptors: list[tuple]
    tx: np.ndarray  # (3,)
    rx: np.ndarray  # (3,)

    @property
    def n_paths(self) -> int:
        return int(self.delays.size)

    @property
    def direct_distance(self) -> float:
        return float(np.linalg.norm(self.rx - self.tx))


def raised_cosine(t: np.ndarray | float, rolloff: float, sample_interval: float) -> np.ndarray:
    """Raised-cosine pulse, unit amplitude at t = 0.

    The removable singularity at ``t = +-T_s / (2 beta)`` is evaluated by
    its analytic limit ``(pi / 4) sinc(1 / (2 beta))``.
    """
    x = np.asarray(t, dtype=float) / sample_interval
    beta = float(rolloff)
    if beta == 0.0:
        return np.sinc(x)
    den = 1.0 - (2.0 * beta * x) ** 2
    near = np.abs(den) < 1e-8
    safe = np.where(near, 1.0, den)
    out = np.sinc(x) * np.cos(np.pi * beta * x) / safe
    return np.where(near, (np.pi / 4.0) * np.sinc(x), out)


def _segment_hits_boxes(p0: np.ndarray, p1: np.ndarray,
                        lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """True per box when the open segment p0..p1 crosses its interior."""
    if lo.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    d = p1 - p0
    zero = d == 0.0
    safe = np.where(zero, 1.0, d)
    ta = (lo - p0) / safe
    tb = (hi - p0) / safe
    tmin_ax = np.minimum(ta, tb)
    tmax_ax = np.maximum(ta, tb)
    inside = (p0 >= lo) & (p0 <= hi)
    tmin_ax = np.where(zero, np.where(inside, -np.inf, np.inf), tmin_ax)
    tmax_ax = np.where(zero, np.where(inside, np.inf, -np.inf), tmax_ax)
    tmin = np.maximum(tmin_ax.max(axis=1), 0.0)
    tmax = np.minimum(tmax_ax.min(axis=1), 1.0)
    return tmax > tmin


def trace_paths(scene: Scene, radio: RadioConfig, rx_index: int = 0) -> PathSet:
    """Synthesize the multipath set for one receiver.

    Returns paths sorted by descending gain magnitude, truncated to
    ``radio.max_rays``. An empty scene yields exactly four paths: line of
    sight, ground bounce and the two wall bounces.
    """
    cfg = scene.config
    if not 0 <= rx_index < len(cfg.rx_positions):
        raise ParameterError(
            f"rx_index {rx_index} out of range for {len(cfg.rx_positions)} receivers"
        )
    tx = np.asarray(cfg.tx_position, dtype=float)
    rx = np.asarray(cfg.rx_positions[rx_index], dtype=float)
    if np.array_equal(tx, rx):
        raise GeometryError("transmitter and receiver positions coincide")
    for name, p in (("tx", tx), ("rx", rx)):
        if p[2] <= 0.0:
            raise GeometryError(f"{name} antenna must sit above ground, z={p[2]}")
        if abs(p[1]) >= cfg.wall_offset:
            raise GeometryError(
                f"{name} antenna must lie strictly between the walls, y={p[1]}"
            )

    lam = radio.wavelength
    lo, hi = scene.boxes()
    amps: list[complex] = []
    delays: list[float] = []
    descs: list[tuple] = []

    def add(image: np.ndarray, gain_factor: float, desc: tuple) -> None:
        d = float(np.linalg.norm(rx - image))
        amps.append(lam / (4.0 * np.pi * d) * gain_factor)
        delays.append(d / SPEED_OF_LIGHT)
        descs.append(desc)

    # line of sight, attenuated when any vehicle box crosses the segment
    los_gain = 1.0
    if np.any(_segment_hits_boxes(tx, rx, lo, hi)):
        los_gain = 10.0 ** (-radio.blockage_loss_db / 20.0)
    add(tx, los_gain, ("los",))

    # ground bounce (image below the z = 0 plane)
    add(np.array([tx[0], tx[1], -tx[2]]), radio.ground_reflection.value, ("ground",))

    # one bounce per canyon wall at y = +-wall_offset
    for side in (1, -1):
        wall_y = side * cfg.wall_offset
        image = np.array([tx[0], 2.0 * wall_y - tx[1], tx[2]])
        add(image, radio.wall_reflection.value, ("wall", side))

    # one specular bounce per vehicle face that sees both antennas
    n = scene.n_vehicles
    if n:
        gamma_v = radio.vehicle_reflection.value
        for axis, side in _FACE_NAMES:
            plane = hi[:, axis] if side > 0 else lo[:, axis]
            visible = (side * (tx[axis] - plane) > 0) & (side * (rx[axis] - plane) > 0)
            if not np.any(visible):
                continue
            idx = np.nonzero(visible)[0]
            c = plane[idx]
            images = np.tile(tx, (idx.size, 1))
            images[:, axis] = 2.0 * c - tx[axis]
            s = (c - images[:, axis]) / (rx[axis] - images[:, axis])
            points = images + s[:, None] * (rx - images)
            others = [a for a in range(3) if a != axis]
            on_face = (s > 0.0) & (s < 1.0)
            for a in others:
                on_face &= (points[:, a] >= lo[idx, a]) & (points[:, a] <= hi[idx, a])
            for j, vi in enumerate(idx):
                if not on_face[j]:
                    continue
                d = float(np.linalg.norm(rx - images[j]))
                amps.append(lam / (4.0 * np.pi * d) * gamma_v)
                delays.append(d / SPEED_OF_LIGHT)
                descs.append(("vehicle", int(vi), _FACE_NAMES[(axis, side)]))

    amplitudes = np.asarray(amps, dtype=complex)
    delay_arr = np.asarray(delays, dtype=float)
    order = np.argsort(-np.abs(amplitudes), kind="stable")[: radio.max_rays]
    return PathSet(
        amplitudes=amplitudes[order],
        delays=delay_arr[order],
        descriptors=[descs[i] for i in order],
        tx=tx,
        rx=rx,
    )


def taps_from_paths(paths: PathSet, radio: RadioConfig) -> np.ndarray:
    """Fold paths into the sampled channel impulse response (length L).

    Raises :class:`TruncationError` when a path delay falls at or beyond
    the tap window ``L * T_s``.
    """
    ts = radio.sample_interval
    window = radio.tap_count * ts
    if paths.n_paths and float(np.max(paths.delays)) >= window:
        raise TruncationError(
            f"path delay {np.max(paths.delays):.3e} s exceeds the "
            f"{radio.tap_count}-tap window of {window:.3e} s"
        )
    n = np.arange(radio.tap_count, dtype=float)
    if paths.n_paths == 0:
        return np.zeros(radio.tap_count, dtype=complex)
    carrier = np.exp(-2j * np.pi * radio.carrier_freq * paths.delays)
    pulse = raised_cosine(n[:, None] * ts - paths.delays[None, :], radio.rolloff, ts)
    return pulse @ (paths.amplitudes * carrier)


def cfr_from_taps(taps: np.ndarray, subcarrier_count: int) -> np.ndarray:
    """Channel frequency response: N-point DFT of the zero-padded taps."""
    taps = np.asarray(taps, dtype=complex)
    if taps.ndim != 1:
        raise ParameterError(f"taps must be one-dimensional, got shape {taps.shape}")
    if subcarrier_count < taps.size:
        raise ParameterError(
            f"subcarrier count {subcarrier_count} is smaller than tap count {taps.size}"
        )
    return np.fft.fft(taps, n=subcarrier_count)


def received_power_dbm(paths: PathSet, radio: RadioConfig) -> np.ndarray:
    """Absolute per-path received power given the configured transmit power."""
    mags = np.abs(paths.amplitudes)
    with np.errstate(divide="ignore"):
        return radio.tx_power_dbm + 20.0 * np.log10(mags)


def write_path_csv(paths: PathSet, radio: RadioConfig, fh: IO[str]) -> int:
    """Dump paths as rows of: path id, gain magnitude, phase, delay."""
    writer = csv.writer(fh)
    writer.writerow(["path", "magnitude", "phase", "delay"])
    full_gain = paths.amplitudes * np.exp(-2j * np.pi * radio.carrier_freq * paths.delays)
    for i in range(paths.n_paths):
        writer.writerow([
            i,
            repr(float(np.abs(full_gain[i]))),
            repr(float(np.angle(full_gain[i]))),
            repr(float(paths.delays[i])),
        ])
    return paths.n_paths
