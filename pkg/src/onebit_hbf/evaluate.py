"""Spectral efficiency, reference beamformers and the Monte-Carlo harness.

SNR is P / sigma^2; sweeps vary P at fixed ``noise_var``. All designs in this
package are independent of P, so each trial designs once and evaluates the
rate at every SNR point.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .binaryopt import PAIR_GUARD, GuardError
from .channel import ChannelParams, UlaGeometry, generate_channel, trial_rng
from .hybrid import (
    DesignConfig,
    HybridBeamformer,
    SystemConfig,
    design_digital,
    design_exhaustive,
    design_hybrid,
    effective_channel,
)
from .linalg import as_complex_matrix, logdet2_hermitian_pd, svd

__all__ = [
    "SingularCombinerError",
    "ExperimentSpec",
    "ExperimentResult",
    "SWEEPS",
    "ALGORITHMS",
    "snr_to_power",
    "rate",
    "spectral_efficiency",
    "full_digital_beamformer",
    "full_digital_opt",
    "naive_one_bit_baseline",
    "run_monte_carlo",
    "resolve_workers",
]

ALGORITHMS = ("opt", "proposed", "naive-quant", "exhaustive")
SWEEPS = ("snr", "ns", "nt", "es-compare", "single")


class SingularCombinerError(ValueError):
    """The post-combining noise covariance W^H W is singular."""


def snr_to_power(snr_db: float, noise_var: float = 1.0) -> float:
    return noise_var * 10.0 ** (snr_db / 10.0)


def rate(h, f, w, power: float, noise_var: float) -> float:
    """log2|I + (P/Ns) R_n^{-1} W^H H F F^H H^H W| with R_n = sigma^2 W^H W.

    With R_n = L L^H the determinant equals |I + (P/Ns) L^{-1} A A^H L^{-H}|,
    A = W^H H F, whose argument is Hermitian PD by construction.
    """
    h = np.asarray(h)
    f = np.asarray(f)
    w = np.asarray(w)
    if power < 0:
        raise ValueError("power must be nonnegative")
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    ns = f.shape[1]
    if w.shape[1] != ns or h.shape != (w.shape[0], f.shape[0]):
        raise ValueError(f"nonconforming H {h.shape}, F {f.shape}, W {w.shape}")
    gram = w.conj().T @ w
    # rank check on the combiner itself; Cholesky alone accepts near-singular Grams
    sv = np.linalg.svd(w, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-10:
        raise SingularCombinerError("combiner W = W_RF W_BB is rank deficient")
    chol = np.linalg.cholesky(noise_var * 0.5 * (gram + gram.conj().T))
    a = np.linalg.solve(chol, w.conj().T @ h @ f)
    arg = np.eye(ns) + (power / ns) * (a @ a.conj().T)
    return max(0.0, logdet2_hermitian_pd(0.5 * (arg + arg.conj().T)))


def spectral_efficiency(h, bf: HybridBeamformer, power: float, noise_var: float = 1.0) -> float:
    return rate(h, bf.precoder, bf.combiner, power, noise_var)


def full_digital_beamformer(h, ns: int) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained SVD beamformers: top-ns right (F) and left (W) singular vectors."""
    res = svd(as_complex_matrix(h, "H"), full_matrices=False)
    return res.right[:, :ns], res.left[:, :ns]


def full_digital_opt(h, sys: SystemConfig) -> float:
    f, w = full_digital_beamformer(h, sys.ns)
    return rate(h, f, w, sys.power, sys.noise_var)


def naive_one_bit_baseline(h, sys: SystemConfig) -> HybridBeamformer:
    """Comparator ("naive-quant"): sign of the real part of the unconstrained beamformers.

    A simple quantized reference, not an established baseline. Zero real parts map to +1.
    """
    f, w = full_digital_beamformer(h, sys.ns)
    f_rf = np.where(f.real >= 0, 1.0, -1.0) / math.sqrt(sys.nt)
    w_rf = np.where(w.real >= 0, 1.0, -1.0) / math.sqrt(sys.nr)
    f_bb, w_bb = design_digital(effective_channel(h, f_rf, w_rf), f_rf, w_rf)
    return HybridBeamformer(f_rf=f_rf, w_rf=w_rf, f_bb=f_bb, w_bb=w_bb)


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep. ``grid`` holds SNRs in dB for snr/es-compare, stream counts
    for ns, transmit antenna counts for nt; ``snr_db`` is the operating point
    of the other sweeps.
    """

    sweep: str
    grid: tuple = ()
    system: SystemConfig = field(default_factory=SystemConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    design: DesignConfig = field(default_factory=DesignConfig)
    spacing_ratio: float = 0.5
    snr_db: float = 20.0

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"unknown sweep {self.sweep!r}; expected one of {SWEEPS}")
        if self.sweep != "single" and not self.grid:
            raise ValueError(f"{self.sweep} sweep needs a nonempty grid")
        if self.sweep == "ns":
            for ns in self.grid:
                replace(self.system, ns=int(ns), n_rf=int(ns))
        if self.sweep == "nt":
            for nt in self.grid:
                replace(self.system, nt=int(nt))

    @property
    def sweep_var(self) -> str:
        return {"ns": "ns", "nt": "nt"}.get(self.sweep, "snr_db")

    @property
    def points(self) -> tuple:
        return (self.snr_db,) if self.sweep == "single" else tuple(self.grid)

    @property
    def algorithms(self) -> tuple[str, ...]:
        if self.sweep == "es-compare":
            return ALGORITHMS
        if self.sweep == "single" and self.system.nt + self.system.nr <= PAIR_GUARD:
            return ALGORITHMS
        return ALGORITHMS[:3]

    def check_guard(self) -> None:
        if self.sweep == "es-compare" and self.system.nt + self.system.nr > PAIR_GUARD:
            raise GuardError(
                f"exhaustive guard exceeded: nt + nr = {self.system.nt + self.system.nr} > {PAIR_GUARD}"
            )


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    sweep_var: str
    sweep_value: float
    algorithm: str
    mean_se: float
    std_err: float
    trials: int
    seed: int


def _designs(h, sys: SystemConfig, design: DesignConfig, algorithms) -> dict:
    out = {}
    for alg in algorithms:
        if alg == "opt":
            out[alg] = full_digital_beamformer(h, sys.ns)
        elif alg == "proposed":
            bf = design_hybrid(h, sys, design)
            out[alg] = (bf.precoder, bf.combiner)
        elif alg == "naive-quant":
            bf = naive_one_bit_baseline(h, sys)
            out[alg] = (bf.precoder, bf.combiner)
        elif alg == "exhaustive":
            bf = design_exhaustive(h, sys, design)
            out[alg] = (bf.precoder, bf.combiner)
        else:
            raise ValueError(f"unknown algorithm {alg!r}")
    return out


def _run_trial(spec: ExperimentSpec, seed: int, trial: int) -> np.ndarray:
    """Rates for one trial, shape (len(points), len(algorithms))."""
    algs = spec.algorithms
    sys0 = spec.system
    out = np.empty((len(spec.points), len(algs)))
    rx = UlaGeometry(sys0.nr, spec.spacing_ratio)

    if spec.sweep in ("snr", "es-compare", "single"):
        tx = UlaGeometry(sys0.nt, spec.spacing_ratio)
        h = generate_channel(tx, rx, spec.channel, trial_rng(seed, trial)).h
        designs = _designs(h, sys0, spec.design, algs)
        for i, snr_db in enumerate(spec.points):
            p = snr_to_power(snr_db, sys0.noise_var)
            for j, alg in enumerate(algs):
                out[i, j] = rate(h, *designs[alg], p, sys0.noise_var)
        return out

    p = snr_to_power(spec.snr_db, sys0.noise_var)
    h = None
    if spec.sweep == "ns":
        tx = UlaGeometry(sys0.nt, spec.spacing_ratio)
        h = generate_channel(tx, rx, spec.channel, trial_rng(seed, trial)).h
    for i, value in enumerate(spec.points):
        if spec.sweep == "ns":
            sys = replace(sys0, ns=int(value), n_rf=int(value))
        else:
            sys = replace(sys0, nt=int(value))
            # fresh stream per point: same rays, different array size
            h = generate_channel(UlaGeometry(sys.nt, spec.spacing_ratio), rx, spec.channel, trial_rng(seed, trial)).h
        designs = _designs(h, sys, spec.design, algs)
        for j, alg in enumerate(algs):
            out[i, j] = rate(h, *designs[alg], p, sys.noise_var)
    return out


def _run_chunk(args) -> list[np.ndarray]:
    spec, seed, trials = args
    return [_run_trial(spec, seed, t) for t in trials]


def resolve_workers(workers: int | None) -> int:
    """0 or None means one worker per available CPU."""
    if not workers:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
    if workers < 0:
        raise ValueError("workers must be nonnegative")
    return workers


def run_monte_carlo(spec: ExperimentSpec, trials: int, seed: int, workers: int = 1) -> list[ExperimentResult]:
    """Average rates over ``trials`` channels.

    Trial t uses the random stream derived from ``(seed, t)``, and the
    reduction runs in trial order, so the output does not depend on
    ``workers``.

    Raises:
        GuardError: es-compare requested above the exhaustive-search guard.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    spec.check_guard()
    workers = min(resolve_workers(workers), trials)

    if workers == 1:
        per_trial = _run_chunk((spec, seed, range(trials)))
    else:
        chunks = [range(trials)[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(spec, seed, c) for c in chunks]))
        per_trial = [None] * trials
        for chunk, part in zip(chunks, parts):
            for t, r in zip(chunk, part):
                per_trial[t] = r
    stack = np.stack(per_trial)  # trials x points x algorithms

    results = []
    for i, value in enumerate(spec.points):
        for j, alg in enumerate(spec.algorithms):
            x = stack[:, i, j]
            std_err = float(np.std(x, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            results.append(
                ExperimentResult(
                    experiment=spec.sweep,
                    sweep_var=spec.sweep_var,
                    sweep_value=value,
                    algorithm=alg,
                    mean_se=float(np.mean(x)),
                    std_err=std_err,
                    trials=trials,
                    seed=seed,
                )
            )
    return results
