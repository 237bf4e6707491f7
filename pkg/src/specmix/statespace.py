"""State-space (LTI SDE) forms of Matern mixtures and their exact discretization.

Each Matern component maps to a small companion-form SDE; a frequency shift
doubles the block with a rotation coupling. The assembled model is block
diagonal, and discretization works per block: a closed-form rotation for the
oscillation times a small matrix exponential for the baseband part, never an
exponential of the full state matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .kernels import MaternComponent, SpectralMixtureModel


@dataclass(frozen=True)
class LtiSde:
    """Continuous-time model dx = F x dt + L dW, cov(dW) = Qc dt, y = H x.

    ``channel_offsets`` lists (start, size) of the per-component diagonal
    blocks; ``channel_freqs`` holds each channel's shift frequency in rad/s,
    or None for a raw baseband block that has not been shifted.
    """

    F: np.ndarray
    L: np.ndarray
    Qc: np.ndarray
    H: np.ndarray
    Pinf: np.ndarray
    channel_offsets: tuple[tuple[int, int], ...]
    channel_freqs: tuple[float | None, ...]

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]


@dataclass(frozen=True)
class DiscreteStateSpace:
    """Exact discretization x_{k+1} = A x_k + q_k, q_k ~ N(0, Q), y_k = H x_k."""

    A: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    Pinf: np.ndarray
    dt: float
    channel_offsets: tuple[tuple[int, int], ...]

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]


def rotation_matrix(theta: float) -> np.ndarray:
    """2x2 counterclockwise rotation [[cos, -sin], [sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def matern_baseband_sde(order: float, variance: float, lengthscale: float) -> LtiSde:
    """Companion-form SDE whose first state has the Matern kernel.

    Closed-form stationary covariance and white-noise density are used; the
    Lyapunov identity F Pinf + Pinf F' + L Qc L' = 0 holds exactly and is
    checked in the tests rather than solved for numerically.
    """
    comp = MaternComponent(order, variance, lengthscale)
    lam = comp.decay_rate
    s2 = variance
    m = comp.state_dim
    if m == 1:
        F = np.array([[-lam]])
        Pinf = np.array([[s2]])
        qc = 2.0 * s2 * lam
    elif m == 2:
        F = np.array([[0.0, 1.0], [-lam * lam, -2.0 * lam]])
        Pinf = np.diag([s2, s2 * lam * lam])
        qc = 4.0 * s2 * lam**3
    else:
        F = np.array(
            [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-(lam**3), -3.0 * lam * lam, -3.0 * lam]]
        )
        Pinf = np.array(
            [
                [s2, 0.0, -s2 * lam * lam / 3.0],
                [0.0, s2 * lam * lam / 3.0, 0.0],
                [-s2 * lam * lam / 3.0, 0.0, s2 * lam**4],
            ]
        )
        qc = (16.0 / 3.0) * s2 * lam**5
    L = np.zeros((m, 1))
    L[-1, 0] = 1.0
    H = np.zeros((1, m))
    H[0, 0] = 1.0
    return LtiSde(F, L, np.array([[qc]]), H, Pinf, ((0, m),), (None,))


def apply_frequency_shift(base: LtiSde, omega: float) -> LtiSde:
    """Modulate a baseband block to center frequency ``omega`` (rad/s).

    The state doubles to two phase-coupled copies: F picks up a rotation
    coupling, the two copies are driven by independent noise, and H reads
    the first state of the in-phase copy, so the measured covariance is
    cos(omega tau) times the baseband kernel.
    """
    if len(base.channel_offsets) != 1 or base.channel_freqs != (None,):
        raise ValueError("apply_frequency_shift expects a single unshifted baseband block")
    if omega < 0:
        raise ValueError(f"shift frequency must be >= 0, got {omega}")
    m = base.state_dim
    F_rot = np.array([[0.0, -omega], [omega, 0.0]])
    F = np.kron(F_rot, np.eye(m)) + np.kron(np.eye(2), base.F)
    L = np.kron(np.eye(2), base.L)
    Qc = np.kron(np.eye(2), base.Qc)
    H = np.hstack([base.H, np.zeros_like(base.H)])
    Pinf = np.kron(np.eye(2), base.Pinf)
    return LtiSde(F, L, Qc, H, Pinf, ((0, 2 * m),), (float(omega),))


def assemble_model_sde(model: SpectralMixtureModel) -> LtiSde:
    """Stack the shifted per-component SDEs block-diagonally.

    The measurement row sums the in-phase first state of every channel.
    """
    if model.n_components == 0:
        raise ValueError("cannot assemble a state-space model with no components")
    blocks = []
    for comp in model.components:
        base = matern_baseband_sde(comp.order, comp.variance, comp.lengthscale)
        blocks.append(apply_frequency_shift(base, comp.center_freq))
    sizes = [b.state_dim for b in blocks]
    offsets = []
    start = 0
    for s in sizes:
        offsets.append((start, s))
        start += s
    M = start
    F = scipy.linalg.block_diag(*[b.F for b in blocks])
    L = scipy.linalg.block_diag(*[b.L for b in blocks])
    Qc = scipy.linalg.block_diag(*[b.Qc for b in blocks])
    Pinf = scipy.linalg.block_diag(*[b.Pinf for b in blocks])
    H = np.zeros((1, M))
    for (st, _), b in zip(offsets, blocks):
        H[0, st : st + b.state_dim] = b.H[0]
    freqs = tuple(b.channel_freqs[0] for b in blocks)
    return LtiSde(F, L, Qc, H, Pinf, tuple(offsets), freqs)


def discretize(sde: LtiSde, dt: float) -> DiscreteStateSpace:
    """Exact discretization over a step ``dt`` using the stationarity identity.

    Per channel, A = R(omega dt) kron expm(F_base dt) for shifted blocks
    (the rotation and baseband factors commute) and Q = Pinf - A Pinf A',
    which preserves the stationary distribution by construction.
    """
    if dt <= 0 or not np.isfinite(dt):
        raise ValueError(f"dt must be finite and > 0, got {dt}")
    M = sde.state_dim
    A = np.zeros((M, M))
    Q = np.zeros((M, M))
    for (start, size), omega in zip(sde.channel_offsets, sde.channel_freqs):
        end = start + size
        if omega is None:
            Fb = sde.F[start:end, start:end]
            _check_decay(Fb, dt)
            Ab = scipy.linalg.expm(Fb * dt)
        else:
            m = size // 2
            Fb = sde.F[start : start + m, start : start + m]
            _check_decay(Fb, dt)
            Ab = np.kron(rotation_matrix(omega * dt), scipy.linalg.expm(Fb * dt))
        if not np.all(np.isfinite(Ab)):
            raise NumericalError("transition matrix overflowed; model is unresolvable at this dt")
        Pb = sde.Pinf[start:end, start:end]
        Qb = Pb - Ab @ Pb @ Ab.T
        A[start:end, start:end] = Ab
        Q[start:end, start:end] = 0.5 * (Qb + Qb.T)
    return DiscreteStateSpace(A, Q, sde.H.copy(), sde.Pinf.copy(), float(dt), sde.channel_offsets)


def _check_decay(F_base: np.ndarray, dt: float) -> None:
    # Reject lengthscales so short that exp(-lam dt) underflows: the channel
    # would decorrelate completely within one step and expm of the companion
    # form overflows long before that point anyway.
    m = F_base.shape[0]
    lam = abs(F_base[-1, 0]) ** (1.0 / m)
    if lam * dt > 700.0:
        raise NumericalError(
            f"lengthscale is unresolvable at this sample rate "
            f"(decay rate {lam:.3e}/s over step {dt:.3e}s)"
        )


def discretize_model(model: SpectralMixtureModel) -> DiscreteStateSpace:
    """Assemble and discretize ``model`` at its own sample rate."""
    return discretize(assemble_model_sde(model), model.dt)


def state_space_kernel(sde: LtiSde, taus) -> np.ndarray:
    """Stationary covariance H expm(F tau) Pinf H' evaluated per channel block.

    Slow reference path (a dense matrix exponential per block per lag); used
    as the cross-check against the closed-form kernels.
    """
    taus = np.asarray(taus, dtype=float)
    out = np.zeros(taus.shape)
    for start, size in sde.channel_offsets:
        end = start + size
        Fb = sde.F[start:end, start:end]
        Pb = sde.Pinf[start:end, start:end]
        Hb = sde.H[:, start:end]
        for idx in np.ndindex(taus.shape):
            t = taus[idx]
            Eb = scipy.linalg.expm(Fb * abs(t))
            out[idx] += (Hb @ Eb @ Pb @ Hb.T).item()
    return out


class BlockDiagMatrix:
    """Block-diagonal square matrix with fast left/right products.

    Blocks are grouped by size so each group multiplies as one stacked
    matmul; with D equal blocks of size b this costs O(b M^2) per product
    against a dense M x M operand instead of O(M^3).
    """

    def __init__(self, mat: np.ndarray, offsets: tuple[tuple[int, int], ...]):
        self.shape = mat.shape
        self._groups = []
        by_size: dict[int, list[int]] = {}
        for start, size in offsets:
            by_size.setdefault(size, []).append(start)
        for size, starts in by_size.items():
            blocks = np.stack([mat[s : s + size, s : s + size] for s in starts])
            rows = np.concatenate([np.arange(s, s + size) for s in starts])
            self._groups.append((size, np.asarray(starts), blocks, rows))

    def matmul(self, X: np.ndarray) -> np.ndarray:
        """Return self @ X for X of shape (M,) or (M, n)."""
        out = np.empty_like(X, dtype=float)
        for size, starts, blocks, rows in self._groups:
            sub = X[rows]
            stacked = sub.reshape(len(starts), size, -1)
            prod = blocks @ stacked
            out[rows] = prod.reshape(sub.shape)
        return out

    def rmatmul_t(self, X: np.ndarray) -> np.ndarray:
        """Return X @ self.T for X of shape (n, M)."""
        out = np.empty_like(X, dtype=float)
        for size, starts, blocks, rows in self._groups:
            sub = X[:, rows]
            stacked = sub.reshape(X.shape[0], len(starts), size)
            prod = np.einsum("nds,dts->ndt", stacked, blocks)
            out[:, rows] = prod.reshape(sub.shape)
        return out
