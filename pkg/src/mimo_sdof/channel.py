"""Block-fading CSI generation, distance trajectories, and phase channels."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError
from .matcore import as_generator, block_diagonal

LINKS = ((1, 1), (1, 2), (2, 1), (2, 2))


@dataclass(frozen=True)
class FadingParams:
    """Large-scale fading and noise parameters.

    Defaults follow the roundabout V2V setup: -40 dB at 1 m, exponent 2.5,
    -89 dBm noise per receive antenna.
    """

    eta_db: float = -40.0
    pathloss_exponent: float = 2.5
    noise_power_dbm: float = -89.0

    def __post_init__(self):
        if not self.pathloss_exponent > 0:
            raise InvalidParameterError("pathloss_exponent must be positive")

    @property
    def eta_linear(self):
        return 10.0 ** (self.eta_db / 10.0)

    @property
    def noise_watts(self):
        return 10.0 ** ((self.noise_power_dbm - 30.0) / 10.0)

    @classmethod
    def rayleigh(cls):
        """Unit-gain parameters (eta = 0 dB) for rank and slope runs."""
        return cls(eta_db=0.0)


def pathloss_gain(d, params):
    """Amplitude gain ``sqrt(eta * d**-exponent)`` at distance `d` meters."""
    if not d > 0:
        raise InvalidParameterError(f"distance must be positive, got {d}")
    return math.sqrt(params.eta_linear * d ** (-params.pathloss_exponent))


@dataclass(frozen=True)
class Trajectory:
    """Per-slot distances for every (tx, rx) link.

    ``distances`` has shape ``(2, 2, T)`` indexed ``[tx - 1, rx - 1, t - 1]``.
    """

    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        if d.ndim != 3 or d.shape[:2] != (2, 2) or d.shape[2] < 1:
            raise InvalidParameterError("distances must have shape (2, 2, T) with T >= 1")
        if not np.all(d > 0):
            raise InvalidParameterError("all distances must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @property
    def slots(self):
        return self.distances.shape[2]

    def distance(self, tx, rx, t):
        return float(self.distances[tx - 1, rx - 1, t - 1])

    def window(self, start, slots):
        """Sub-trajectory of `slots` slots beginning at 1-based slot `start`, wrapping around."""
        idx = (np.arange(slots) + start - 1) % self.slots
        return Trajectory(self.distances[:, :, idx])

    @classmethod
    def constant(cls, slots, d=1.0):
        if slots < 1:
            raise InvalidParameterError("slots must be >= 1")
        if not d > 0:
            raise InvalidParameterError("distance must be positive")
        return cls(np.full((2, 2, slots), float(d)))


def read_trajectory_csv(path):
    """Read a trajectory file with header ``t,tx,rx,distance_m``."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "tx", "rx", "distance_m"]:
            raise InvalidParameterError(f"{path}: expected header t,tx,rx,distance_m")
        for rec in reader:
            rows.append((int(rec["t"]), int(rec["tx"]), int(rec["rx"]), float(rec["distance_m"])))
    if not rows:
        raise InvalidParameterError(f"{path}: no trajectory rows")
    slots = max(r[0] for r in rows)
    d = np.full((2, 2, slots), np.nan)
    for t, tx, rx, dist in rows:
        if not (1 <= t and tx in (1, 2) and rx in (1, 2)):
            raise InvalidParameterError(f"{path}: bad row t={t} tx={tx} rx={rx}")
        d[tx - 1, rx - 1, t - 1] = dist
    if np.isnan(d).any():
        raise InvalidParameterError(f"{path}: trajectory does not cover all slots for all four links")
    return Trajectory(d)


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "tx", "rx", "distance_m"])
        for t in range(1, traj.slots + 1):
            for tx, rx in LINKS:
                w.writerow([t, tx, rx, repr(traj.distance(tx, rx, t))])


def _roundabout_positions(slots, radius, approach, speed, slot_s):
    # Four agents start on the N, W, S, E approach roads, drive radially in,
    # circulate counter-clockwise and keep circulating; every agent is the
    # previous one rotated by 90 degrees, so no two ever coincide.
    s = speed * slot_s * np.arange(slots)
    r = np.where(s < approach, radius + approach - s, radius)
    arc = np.clip(s - approach, 0.0, None)
    theta0 = np.pi / 2 + arc / radius
    pos = np.empty((4, slots, 2))
    for k in range(4):
        th = theta0 + k * np.pi / 2
        pos[k, :, 0] = r * np.cos(th)
        pos[k, :, 1] = r * np.sin(th)
    return pos


def synth_trajectory(kind, slots, distance=10.0, radius=15.0, approach=40.0, speed=10.0, slot_s=0.01):
    """Synthesize a trajectory.

    Parameters
    ----------
    kind : {"fixed-distance", "roundabout"}
    slots : int
    distance : float
        Link distance for ``fixed-distance``.
    radius, approach, speed, slot_s : float
        Roundabout geometry: circle radius (m), approach road length (m),
        vehicle speed (m/s) and slot duration (s).
    """
    if slots < 1:
        raise InvalidParameterError("slots must be >= 1")
    if kind == "fixed-distance":
        return Trajectory.constant(slots, distance)
    if kind != "roundabout":
        raise InvalidParameterError(f"unknown trajectory kind {kind!r}")
    for name, v in (("radius", radius), ("approach", approach), ("speed", speed), ("slot_s", slot_s)):
        if not v > 0:
            raise InvalidParameterError(f"{name} must be positive")
    pos = _roundabout_positions(slots, radius, approach, speed, slot_s)
    tx_agents = (0, 2)
    rx_agents = (1, 3)
    d = np.empty((2, 2, slots))
    for i, a in enumerate(tx_agents):
        for j, b in enumerate(rx_agents):
            d[i, j] = np.linalg.norm(pos[a] - pos[b], axis=1)
    return Trajectory(d)


@dataclass(frozen=True)
class ChannelSet:
    """Per-slot CSI ``H_{i,j}[t]`` (N x M) for the four links.

    ``h`` has shape ``(2, 2, T, N, M)`` indexed ``[i - 1, j - 1, t - 1]``
    where `i` is the transmitter and `j` the receiver.
    """

    config: object
    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        exp = (2, 2, h.shape[2] if h.ndim == 5 else -1, self.config.N, self.config.M)
        if h.ndim != 5 or h.shape != exp:
            raise InvalidParameterError(f"channel array shape {h.shape} does not match {exp}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def slots(self):
        return self.h.shape[2]

    def matrix(self, i, j, t):
        return self.h[i - 1, j - 1, t - 1]


def generate_channel(config, traj, params, seed_state, slots=None):
    """Draw a ChannelSet: pathloss amplitude times unit Rayleigh fading.

    `traj` may be None for all-unit distances; otherwise its slot count must
    equal `slots` when both are given.
    """
    if traj is None:
        if slots is None:
            raise InvalidParameterError("slots is required when no trajectory is given")
        traj = Trajectory.constant(slots)
    elif slots is not None and slots != traj.slots:
        raise InvalidParameterError(f"trajectory covers {traj.slots} slots, {slots} requested")
    rng = as_generator(seed_state)
    t = traj.slots
    n, m = config.N, config.M
    z = rng.standard_normal((2, 2, t, n, m, 2))
    h = np.sqrt(0.5) * (z[..., 0] + 1j * z[..., 1])
    gains = np.sqrt(params.eta_linear * traj.distances ** (-params.pathloss_exponent))
    h *= gains[:, :, :, None, None]
    return ChannelSet(config, h)


def effective_phase_matrix(cs, i, j, slot_range, tx_antennas):
    """``bd{H_{i,j}[t][:, :tx_antennas]}`` for t in the inclusive 1-based range.

    An empty range returns an ``0 x 0`` matrix.
    """
    t0, t1 = slot_range
    if t1 < t0:
        return np.zeros((0, 0), dtype=np.complex128)
    if t0 < 1 or t1 > cs.slots:
        raise InvalidParameterError(f"slot range {slot_range} outside [1, {cs.slots}]")
    if not 0 <= tx_antennas <= cs.config.M:
        raise InvalidParameterError(f"tx_antennas={tx_antennas} exceeds M={cs.config.M}")
    return block_diagonal([cs.h[i - 1, j - 1, t - 1, :, :tx_antennas] for t in range(t0, t1 + 1)])
