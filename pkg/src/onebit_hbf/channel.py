"""Clustered (Saleh-Valenzuela) narrowband mmWave channel with ULAs.

Random draws use ``numpy.random.Generator``; parallel callers should give
every trial its own generator (see :func:`trial_rng`).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "UlaGeometry",
    "ChannelParams",
    "ChannelRealization",
    "array_response",
    "array_responses",
    "cluster_powers",
    "sample_laplacian_angle",
    "sample_laplacian_angles",
    "generate_channel",
    "trial_rng",
    "dump_channel_json",
    "load_channel_json",
]


@dataclass(frozen=True)
class UlaGeometry:
    num_antennas: int
    spacing_ratio: float = 0.5  # d / lambda

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.spacing_ratio > 0:
            raise ValueError(f"spacing_ratio must be positive, got {self.spacing_ratio}")


@dataclass(frozen=True)
class ChannelParams:
    """Cluster-ray model parameters. Angles are in radians."""

    num_clusters: int = 10
    rays_per_cluster: int = 10
    angle_spread_rad: float = math.radians(2.5)
    aod_mean_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    aoa_mean_sector_width: float = math.pi / 3.0
    power_decay_base: float = 0.7

    def __post_init__(self):
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be >= 1")
        if self.rays_per_cluster < 1:
            raise ValueError("rays_per_cluster must be >= 1")
        if not self.angle_spread_rad > 0:
            raise ValueError("angle_spread_rad must be positive")
        lo, hi = self.aod_mean_range
        if not hi >= lo:
            raise ValueError("aod_mean_range must be an ordered interval")
        if not self.aoa_mean_sector_width > 0:
            raise ValueError("aoa_mean_sector_width must be positive")
        if not 0.0 < self.power_decay_base < 1.0:
            raise ValueError("power_decay_base must lie in (0, 1)")


@dataclass
class ChannelRealization:
    """One channel draw plus the rays it was built from.

    Ray arrays have shape ``(num_clusters, rays_per_cluster)``.
    """

    h: np.ndarray
    ray_gains: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray
    cluster_powers: np.ndarray
    tx: UlaGeometry = field(repr=False)
    rx: UlaGeometry = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        """Rebuild H from the stored rays, ray by ray."""
        nt, nr = self.tx.num_antennas, self.rx.num_antennas
        n_paths = self.ray_gains.size
        h = np.zeros((nr, nt), dtype=np.complex128)
        for g, t, r in zip(self.ray_gains.ravel(), self.aod.ravel(), self.aoa.ravel()):
            h += g * np.outer(array_response(self.rx, r), array_response(self.tx, t).conj())
        return math.sqrt(nt * nr / n_paths) * h


def array_response(geom: UlaGeometry, theta: float) -> np.ndarray:
    """Unit-norm ULA steering vector: entry k is exp(j*k*2*pi*(d/lambda)*sin(theta)) / sqrt(N)."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    k = np.arange(geom.num_antennas)
    return np.exp(1j * k * 2.0 * np.pi * geom.spacing_ratio * math.sin(theta)) / math.sqrt(geom.num_antennas)


def array_responses(geom: UlaGeometry, thetas) -> np.ndarray:
    """Steering vectors for many angles, one per column (N x len(thetas))."""
    thetas = np.asarray(thetas, dtype=float).ravel()
    k = np.arange(geom.num_antennas)[:, None]
    return np.exp(1j * k * 2.0 * np.pi * geom.spacing_ratio * np.sin(thetas)[None, :]) / math.sqrt(
        geom.num_antennas
    )


def cluster_powers(num_clusters: int, decay_base: float = 0.7) -> np.ndarray:
    """Geometric cluster powers c * base**i, i = 1..N_cl, normalized to sum to N_cl."""
    if num_clusters < 1:
        raise ValueError("num_clusters must be >= 1")
    if not 0.0 < decay_base < 1.0:
        raise ValueError("decay_base must lie in (0, 1)")
    raw = decay_base ** np.arange(1, num_clusters + 1, dtype=float)
    return raw * (num_clusters / raw.sum())


def _open_uniform(rng: np.random.Generator, size=None):
    # random() returns k / 2**53; shifting by half a step keeps draws inside (0, 1)
    return rng.random(size) + 2.0**-54


def sample_laplacian_angles(mean, spread: float, rng: np.random.Generator, size=None):
    """Laplacian draws whose standard deviation equals ``spread``.

    Scale b = spread / sqrt(2); inverse-CDF sampling with one uniform per draw.
    """
    if not spread > 0:
        raise ValueError("spread must be positive")
    b = spread / math.sqrt(2.0)
    v = _open_uniform(rng, size) - 0.5
    return mean - b * np.sign(v) * np.log1p(-2.0 * np.abs(v))


def sample_laplacian_angle(mean: float, spread: float, rng: np.random.Generator) -> float:
    return float(sample_laplacian_angles(mean, spread, rng))


def generate_channel(
    tx: UlaGeometry, rx: UlaGeometry, params: ChannelParams, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one channel realization.

    Draw order (fixed, so a seed fully determines the channel, and arrays of
    different sizes see the same physical rays for the same seed):

    1. AoA sector start, uniform on [0, 2*pi).
    2. Cluster mean AoDs, uniform on ``aod_mean_range``.
    3. Cluster mean AoAs, uniform inside the sector.
    4. Per-ray Laplacian AoD offsets, then AoA offsets.
    5. Complex Gaussian ray gains with per-cluster variance.
    """
    ncl, nray = params.num_clusters, params.rays_per_cluster
    powers = cluster_powers(ncl, params.power_decay_base)

    sector_start = rng.uniform(0.0, 2.0 * math.pi)
    lo, hi = params.aod_mean_range
    aod_means = rng.uniform(lo, hi, size=ncl)
    aoa_means = sector_start + rng.uniform(0.0, params.aoa_mean_sector_width, size=ncl)
    aod = sample_laplacian_angles(aod_means[:, None], params.angle_spread_rad, rng, (ncl, nray))
    aoa = sample_laplacian_angles(aoa_means[:, None], params.angle_spread_rad, rng, (ncl, nray))
    z = rng.standard_normal((ncl, nray, 2))
    gains = np.sqrt(powers[:, None] / 2.0) * (z[..., 0] + 1j * z[..., 1])

    nt, nr = tx.num_antennas, rx.num_antennas
    a_t = array_responses(tx, aod)
    a_r = array_responses(rx, aoa)
    h = math.sqrt(nt * nr / (ncl * nray)) * (a_r * gains.ravel()) @ a_t.conj().T
    return ChannelRealization(
        h=h, ray_gains=gains, aod=aod, aoa=aoa, cluster_powers=powers, tx=tx, rx=rx
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 stream for ``(seed, trial)``, order-independent."""
    if seed < 0 or trial < 0:
        raise ValueError("seed and trial index must be nonnegative")
    return np.random.default_rng([seed, trial])


def dump_channel_json(real: ChannelRealization, seed: int, params: ChannelParams) -> str:
    """Serialize a channel for cross-implementation comparison."""
    doc = {
        "nt": real.tx.num_antennas,
        "nr": real.rx.num_antennas,
        "seed": seed,
        "params": asdict(params),
        "h_real": real.h.real.tolist(),
        "h_imag": real.h.imag.tolist(),
    }
    return json.dumps(doc, sort_keys=True)


def load_channel_json(text: str) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`dump_channel_json`; returns ``(h, metadata)``."""
    doc = json.loads(text)
    h = np.asarray(doc.pop("h_real"), dtype=float) + 1j * np.asarray(doc.pop("h_imag"), dtype=float)
    if h.shape != (doc["nr"], doc["nt"]):
        raise ValueError(f"channel shape {h.shape} does not match nr={doc['nr']}, nt={doc['nt']}")
    return h, doc
