"""SIR-optimal receiver filter design.

The aggregate SIR of the link is a generalized Rayleigh quotient of the
receive filter f:

    SIR(f) = (f^H T1 f) / (f^H (T2 - T1) f)

where T1 accumulates the desired-symbol quadratic forms over all receive
symbols and T2 the total received power forms (residual SI after digital
cancellation plus the full desired path).  Maximizing under ||f|| = 1 is a
Hermitian-definite generalized eigenproblem: the optimum is the eigenvector
of (T2 - T1)^-1 T1 with the largest eigenvalue, and that eigenvalue is the
achieved SIR.

T2 - T1 (the total interference power form) is positive definite in any
non-degenerate configuration; near-orthogonal corner cases are handled by
escalating diagonal loading before factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .analytics import AnalyticsConfig, ClosedFormAnalytics
from .util import to_db
from .waveform import ReceiverFilter


class NumericalError(RuntimeError):
    """Raised when the interference form cannot be made positive definite."""


LOADING_STEPS = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass
class OptimizationProblem:
    """Hermitian quadratic forms of the aggregate SIR.

    ``herm_residual_*`` record the relative asymmetry of the raw accumulators
    before symmetrization (a self-check of the assembly).
    """

    t1: np.ndarray
    t2: np.ndarray
    regularization: float = 0.0
    herm_residual_t1: float = 0.0
    herm_residual_t2: float = 0.0

    @property
    def interference_form(self) -> np.ndarray:
        n = self.t1.shape[0]
        return self.t2 - self.t1 + self.regularization * np.eye(n)


@dataclass
class OptimalFilter:
    """Solution of the constrained SIR maximization."""

    filter: ReceiverFilter
    achieved_sir: float
    eigen_residual: float
    regularization: float
    degenerate: bool

    @property
    def achieved_sir_db(self) -> float:
        return to_db(self.achieved_sir)


def _conjugate_by_shift(x: np.ndarray, shift: int) -> np.ndarray:
    """M^H X M for the circular-shift matrix M moving index n to n + shift."""
    return np.roll(x, (-shift, -shift), axis=(0, 1))


def assemble_problem(cfg: AnalyticsConfig) -> OptimizationProblem:
    """Accumulate T1 and T2 over every receive symbol.

    The desired-symbol power is invariant under the subcarrier rotation of
    the filter, so the subcarrier sum contributes a factor K to the shifted
    desired matrices; the SI/desired-path matrices do depend on the rotation
    (and, through the cancelled self-replica, on the symbol index), so their
    sum runs over both indices explicitly.  Both accumulators are
    symmetrized before return.
    """
    engine = ClosedFormAnalytics(cfg)
    grid = cfg.grid
    n, k_sub, m_sub = grid.N, grid.K, grid.M

    t1 = np.zeros((n, n), dtype=complex)
    for m in range(m_sub):
        t1 += _conjugate_by_shift(engine.build_u(m), m * k_sub)
    t1 *= k_sub

    diff = np.arange(n)[:, None] - np.arange(n)[None, :]   # [a, b] -> a - b
    v_r = engine.build_v_r()
    t2 = np.zeros((n, n), dtype=complex)
    for m in range(m_sub):
        acc = np.zeros((n, n), dtype=complex)
        for k in range(k_sub):
            v = engine.build_v_si(k, m) + v_r
            # S_k^H V S_k multiplies entry [a, b] by exp(-2j*pi*k*(b-a)/K)
            acc += v * np.exp(2j * np.pi * k * diff / k_sub)
        t2 += _conjugate_by_shift(acc, m * k_sub)

    res1 = np.max(np.abs(t1 - t1.conj().T)) / max(np.max(np.abs(t1)), 1e-300)
    res2 = np.max(np.abs(t2 - t2.conj().T)) / max(np.max(np.abs(t2)), 1e-300)
    t1 = 0.5 * (t1 + t1.conj().T)
    t2 = 0.5 * (t2 + t2.conj().T)
    return OptimizationProblem(t1=t1, t2=t2,
                               herm_residual_t1=float(res1),
                               herm_residual_t2=float(res2))


def solve(problem: OptimizationProblem) -> OptimalFilter:
    """Top generalized eigenpair of (T1, T2 - T1) under escalating loading."""
    t1 = problem.t1
    base = problem.t2 - problem.t1
    n = t1.shape[0]
    scale = float(np.real(np.trace(base))) / n

    loaded = None
    reg_used = 0.0
    for step in LOADING_STEPS:
        reg = step * scale + problem.regularization
        candidate = base + reg * np.eye(n)
        try:
            scipy.linalg.cholesky(candidate, lower=True)
        except np.linalg.LinAlgError:
            continue
        loaded = candidate
        reg_used = reg
        break
    if loaded is None:
        smallest = float(scipy.linalg.eigvalsh(base)[0])
        raise NumericalError(
            f"interference form stayed indefinite after maximum loading; "
            f"smallest eigenvalue {smallest:.6e}")

    eigvals, eigvecs = scipy.linalg.eigh(t1, loaded)
    lam = float(eigvals[-1])
    f = eigvecs[:, -1]
    f = f / np.linalg.norm(f)

    # canonical global phase: largest-magnitude tap real and positive
    pivot = int(np.argmax(np.abs(f)))
    f = f * np.exp(-1j * np.angle(f[pivot]))

    gap = abs(eigvals[-1] - eigvals[-2]) / max(abs(lam), 1e-300) if n > 1 else 1.0
    degenerate = bool(gap < 1e-8)

    residual = np.linalg.norm(np.linalg.solve(loaded, t1 @ f) - lam * f)
    residual /= max(abs(lam) * np.linalg.norm(f), 1e-300)

    return OptimalFilter(
        filter=ReceiverFilter(taps=f, origin="optimal"),
        achieved_sir=lam, eigen_residual=float(residual),
        regularization=reg_used, degenerate=degenerate)


def sir_of_filter(f, problem: OptimizationProblem) -> float:
    """Rayleigh quotient of an arbitrary nonzero filter (scale invariant)."""
    taps = f.taps if isinstance(f, ReceiverFilter) else np.asarray(f, dtype=complex)
    if not np.any(taps):
        raise ValueError("filter must be nonzero")
    num = float(np.real(np.conj(taps) @ problem.t1 @ taps))
    den = float(np.real(np.conj(taps) @ (problem.t2 - problem.t1) @ taps))
    return num / den if den > 0 else np.inf


def optimal_receiver(cfg: AnalyticsConfig) -> OptimalFilter:
    """Assemble and solve in one step."""
    return solve(assemble_problem(cfg))
