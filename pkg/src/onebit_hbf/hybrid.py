"""Hybrid precoder/combiner design with one-bit analog phase shifters.

The analog stage picks one (precoder, combiner) column pair per stream. Pair
l maximizes ``|w^H Q_l f|``, where Q_l is the truncated channel with the
streams already served projected out through a regularized inverse:

    Q_l = U_s (alpha*I + S_s V_s^H F_{l-1} W_{l-1}^H U_s)^{-1} S_s V_s^H

The first pair searches H itself unless ``DesignConfig.q1_raw`` is off.
The two candidate sets come from the dominant right singular vector of Q_l
(precoder) and the dominant left one (combiner). The digital stage is the
SVD of the effective channel ``W_RF^H H F_RF``, scaled to the power
constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .binaryopt import SignVector, build_candidates, exhaustive_pair, joint_pair_select
from .linalg import as_complex_matrix, solve_regularized, svd

__all__ = [
    "SystemConfig",
    "DesignConfig",
    "HybridBeamformer",
    "sign_matrix",
    "truncate_svd",
    "interference_matrix",
    "design_analog",
    "design_analog_exhaustive",
    "effective_channel",
    "design_digital",
    "design_hybrid",
    "design_exhaustive",
]


@dataclass(frozen=True)
class SystemConfig:
    nt: int = 64
    nr: int = 16
    n_rf: int = 4
    ns: int = 4
    power: float = 100.0
    noise_var: float = 1.0

    def __post_init__(self):
        for name in ("nt", "nr", "n_rf", "ns"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if self.ns != self.n_rf:
            raise ValueError(f"ns ({self.ns}) must equal n_rf ({self.n_rf})")
        if self.ns > min(self.nt, self.nr):
            raise ValueError(f"ns ({self.ns}) exceeds min(nt, nr) = {min(self.nt, self.nr)}")
        if not self.power > 0:
            raise ValueError("power must be positive")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")

    @property
    def snr(self) -> float:
        return self.power / self.noise_var


@dataclass(frozen=True)
class DesignConfig:
    """Knobs of the analog stage.

    ``alpha_rel`` sets the regularizer as a fraction of the channel's largest
    singular value. With ``q1_raw`` (default) the first pair searches the raw
    channel; otherwise it searches the ns-term truncation, which loses a few
    percent of rate when ns is small.
    """

    alpha_rel: float = 1e-6
    q1_raw: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha_rel < 1.0:
            raise ValueError(f"alpha_rel must lie in (0, 1), got {self.alpha_rel}")


@dataclass
class HybridBeamformer:
    f_rf: np.ndarray  # nt x ns, entries +-1/sqrt(nt)
    w_rf: np.ndarray  # nr x ns, entries +-1/sqrt(nr)
    f_bb: np.ndarray  # ns x ns
    w_bb: np.ndarray  # ns x ns

    @property
    def ns(self) -> int:
        return self.f_bb.shape[1]

    @property
    def precoder(self) -> np.ndarray:
        return self.f_rf @ self.f_bb

    @property
    def combiner(self) -> np.ndarray:
        return self.w_rf @ self.w_bb

    def check(self, tol: float = 1e-10) -> None:
        """Raise AssertionError unless the constant-modulus and power constraints hold."""
        nt, nr = self.f_rf.shape[0], self.w_rf.shape[0]
        assert np.allclose(np.abs(self.f_rf), 1.0 / math.sqrt(nt), rtol=0, atol=1e-15)
        assert np.allclose(np.abs(self.w_rf), 1.0 / math.sqrt(nr), rtol=0, atol=1e-15)
        assert abs(np.linalg.norm(self.precoder) ** 2 - self.ns) <= tol
        assert abs(np.linalg.norm(self.combiner) ** 2 - self.ns) <= tol


def sign_matrix(columns: Sequence[SignVector], n: int | None = None) -> np.ndarray:
    """Stack scaled sign vectors as columns; ``n`` sizes the empty case."""
    if not columns:
        if n is None:
            raise ValueError("n is required for an empty column list")
        return np.zeros((n, 0))
    return np.column_stack([c.vector for c in columns])


def truncate_svd(h, ns: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep the ns strongest singular triplets: (U_s nr x ns, s_s length ns, V_s nt x ns)."""
    h = as_complex_matrix(h, "H")
    if not 1 <= ns <= min(h.shape):
        raise ValueError(f"ns={ns} must lie in [1, {min(h.shape)}]")
    res = svd(h, full_matrices=False)
    return res.left[:, :ns], res.singular[:ns], res.right[:, :ns]


def interference_matrix(u_hat, s_hat, v_hat, f_prev, w_prev, alpha: float) -> np.ndarray:
    """Q_l for the next pair given the l-1 pairs already chosen (nr x nt)."""
    u_hat = np.asarray(u_hat)
    v_hat = np.asarray(v_hat)
    s_hat = np.asarray(s_hat)
    if s_hat.ndim == 2:
        s_hat = np.diag(s_hat)
    f_prev = np.asarray(f_prev)
    w_prev = np.asarray(w_prev)
    if f_prev.shape[1] != w_prev.shape[1]:
        raise ValueError("f_prev and w_prev must have the same number of columns")
    sv = s_hat[:, None] * v_hat.conj().T  # S_s V_s^H, ns x nt
    m = (sv @ f_prev) @ (w_prev.conj().T @ u_hat)
    return u_hat @ solve_regularized(m, alpha, sv)


def _dominant_pair(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    res = svd(q, full_matrices=False)
    return res.left[:, 0], res.right[:, 0]


def _proposed_select(q: np.ndarray) -> tuple[SignVector, SignVector]:
    p1, q1 = _dominant_pair(q)
    return joint_pair_select(q, build_candidates(q1), build_candidates(p1))


def _successive(
    h, sys: SystemConfig, cfg: DesignConfig, select: Callable, q1_raw: bool
) -> tuple[np.ndarray, np.ndarray]:
    h = as_complex_matrix(h, "H")
    if h.shape != (sys.nr, sys.nt):
        raise ValueError(f"H has shape {h.shape}, config expects ({sys.nr}, {sys.nt})")
    u_hat, s_hat, v_hat = truncate_svd(h, sys.ns)
    alpha = cfg.alpha_rel * s_hat[0]
    if not alpha > 0:
        raise ValueError("channel is identically zero")
    fcols: list[SignVector] = []
    wcols: list[SignVector] = []
    for l in range(sys.ns):
        if l == 0 and q1_raw:
            q = h
        else:
            q = interference_matrix(
                u_hat, s_hat, v_hat, sign_matrix(fcols, sys.nt), sign_matrix(wcols, sys.nr), alpha
            )
        f, w = select(q)
        fcols.append(f)
        wcols.append(w)
    return sign_matrix(fcols), sign_matrix(wcols)


def design_analog(h, sys: SystemConfig, cfg: DesignConfig = DesignConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Successive one-bit analog design; returns (F_RF nt x ns, W_RF nr x ns)."""
    return _successive(h, sys, cfg, _proposed_select, cfg.q1_raw)


def design_analog_exhaustive(h, sys: SystemConfig, cfg: DesignConfig = DesignConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Same successive structure with a brute-force pair search on each Q_l.

    The first pair always searches the raw channel, so for ns = 1 this is the
    globally optimal analog design. Raises GuardError above the pair guard.
    """
    return _successive(h, sys, cfg, exhaustive_pair, True)


def effective_channel(h, f_rf, w_rf) -> np.ndarray:
    """W_RF^H H F_RF."""
    h = np.asarray(h)
    f_rf = np.asarray(f_rf)
    w_rf = np.asarray(w_rf)
    if h.shape != (w_rf.shape[0], f_rf.shape[0]):
        raise ValueError(f"H {h.shape} does not conform with W_RF {w_rf.shape} and F_RF {f_rf.shape}")
    return w_rf.conj().T @ h @ f_rf


def design_digital(h_eff, f_rf, w_rf) -> tuple[np.ndarray, np.ndarray]:
    """SVD baseband stage: F_BB = S, W_BB = C for H_eff = C D S^H, then power-normalized."""
    h_eff = as_complex_matrix(h_eff, "effective channel")
    ns = h_eff.shape[0]
    if h_eff.shape != (ns, ns):
        raise ValueError(f"effective channel must be square, got {h_eff.shape}")
    res = svd(h_eff)
    f_bb = res.right
    w_bb = res.left
    f_bb = math.sqrt(ns) * f_bb / np.linalg.norm(np.asarray(f_rf) @ f_bb)
    w_bb = math.sqrt(ns) * w_bb / np.linalg.norm(np.asarray(w_rf) @ w_bb)
    return f_bb, w_bb


def _finish(h, f_rf, w_rf) -> HybridBeamformer:
    f_bb, w_bb = design_digital(effective_channel(h, f_rf, w_rf), f_rf, w_rf)
    return HybridBeamformer(f_rf=f_rf, w_rf=w_rf, f_bb=f_bb, w_bb=w_bb)


def design_hybrid(h, sys: SystemConfig, cfg: DesignConfig = DesignConfig()) -> HybridBeamformer:
    """Full proposed design: successive analog pairs, then the SVD digital stage."""
    f_rf, w_rf = design_analog(h, sys, cfg)
    return _finish(h, f_rf, w_rf)


def design_exhaustive(h, sys: SystemConfig, cfg: DesignConfig = DesignConfig()) -> HybridBeamformer:
    f_rf, w_rf = design_analog_exhaustive(h, sys, cfg)
    return _finish(h, f_rf, w_rf)
