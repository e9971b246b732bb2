"""Truncated-Fock-space primitives and special functions.

Everything downstream builds on the conventions fixed here:

* quadrature observable ``X_theta = a exp(-i theta) + a^dag exp(i theta)``,
  so the vacuum has unit variance and the position-like eigenfunctions are
  ``phi_n(x) = (2 pi)^(-1/4) (2^n n!)^(-1/2) H_n(x / sqrt 2) exp(-x^2 / 4)``;
* a balanced mixer maps ``c_pm = (a_plus +- a_minus exp(-i theta)) / sqrt 2``,
  with the relative phase shift acting on the ``a_minus`` (signal) arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm
from scipy.special import ndtr

from .errors import TruncationError

# Per-mode photon cutoff that closes quadrature-grid normalization to 1e-6
# for the states treated here; individual calls may override.
DEFAULT_N_MAX = 60


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform 1-D grid used to tabulate quadrature-amplitude densities."""

    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (self.step > 0.0):
            raise ValueError(f"grid step must be positive, got {self.step}")
        if not (self.lo < self.hi):
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 2:
            raise ValueError("grid must contain at least two points")

    @property
    def n_points(self) -> int:
        return int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1

    @property
    def is_symmetric(self) -> bool:
        return abs(self.lo + self.hi) <= 1e-12 * max(1.0, abs(self.hi))

    def points(self) -> np.ndarray:
        n = self.n_points
        if self.is_symmetric:
            # build as signed multiples of step so that mirrored nodes are
            # exact float negations (and the center node, if any, exactly 0);
            # parity identities then hold bit for bit
            return self.step * (np.arange(n) - (n - 1) / 2.0)
        return self.lo + self.step * np.arange(n)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def halved(self) -> "QuadratureGrid":
        """Same interval at half the step, for refinement checks."""
        return QuadratureGrid(self.lo, self.hi, self.step / 2.0)


DEFAULT_GRID = QuadratureGrid(-8.0, 8.0, 0.01)


def recommended_grid(n_max: int, step: float = 0.01,
                     margin: float = 4.0) -> QuadratureGrid:
    """Symmetric grid wide enough for wavefunctions up to phi_{n_max}.

    phi_n turns over at x = sqrt(4 n + 2); beyond that it decays like a
    Gaussian, so a few units of clearance close normalization to 1e-9.
    """
    hi = max(8.0, float(math.ceil(math.sqrt(4.0 * n_max + 2.0) + margin)))
    return QuadratureGrid(-hi, hi, step)


def hermite_wavefunction_matrix(n_max: int, xs: np.ndarray) -> np.ndarray:
    """Tabulate phi_0 .. phi_{n_max} on the points ``xs``.

    Returns an array of shape ``(n_max + 1, len(xs))``.  Uses the normalized
    three-term recurrence ``phi_{n+1} = (x phi_n - sqrt(n) phi_{n-1}) /
    sqrt(n+1)``, which stays finite well past n = 150 where the raw Hermite
    polynomials would overflow.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    xs = np.asarray(xs, dtype=float)
    out = np.empty((n_max + 1, xs.size))
    out[0] = (2.0 * np.pi) ** -0.25 * np.exp(-0.25 * xs * xs)
    if n_max >= 1:
        out[1] = xs * out[0]
    for n in range(1, n_max):
        out[n + 1] = (xs * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def hermite_wavefunction_row(n_max: int, x: float) -> np.ndarray:
    """Values phi_0(x) .. phi_{n_max}(x) of the quadrature eigenfunctions."""
    return hermite_wavefunction_matrix(n_max, np.array([float(x)]))[:, 0]


def gaussian_cdf(x):
    """Standard normal CDF, elementwise on arrays, float on scalars."""
    if np.isscalar(x):
        return float(ndtr(x))
    return ndtr(np.asarray(x, dtype=float))


def bessel_i0(x: float) -> float:
    """Modified Bessel function I_0 by its power series.

    Sums (x/2)^(2k) / (k!)^2 until the next term falls below 1e-16 of the
    running total.  Adequate over the argument range used here (x <= ~700
    before exp overflow).
    """
    x = float(x)
    if x < 0.0:
        raise ValueError("bessel_i0 requires x >= 0")
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while term > 1e-16 * total:
        k += 1
        term *= q / (k * k)
        total += term
    return total


def coherent_amplitudes(amp: complex, n_max: int, tail_tol: float = 1e-9) -> np.ndarray:
    """Fock coefficients exp(-|amp|^2/2) amp^n / sqrt(n!) for n = 0..n_max.

    Built by the ratio recurrence, so no factorials are formed.  Raises
    :class:`TruncationError` when the retained probability falls below
    ``1 - tail_tol`` (which also catches exp(-|amp|^2/2) underflowing at
    |amp| beyond ~37).
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    amp = complex(amp)
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = math.exp(-0.5 * abs(amp) ** 2)
    for n in range(n_max):
        c[n + 1] = c[n] * amp / math.sqrt(n + 1)
    retained = float(np.sum(np.abs(c) ** 2))
    if retained < 1.0 - tail_tol:
        raise TruncationError(
            f"coherent state |amp|={abs(amp):.4g} keeps only {retained:.12g} "
            f"of its mass at n_max={n_max} (tail_tol={tail_tol:g})"
        )
    return c


@dataclass(frozen=True)
class TruncatedUnitary:
    """Two-mode photon-number-conserving unitary, stored block by block.

    ``blocks[N]`` acts on the total-photon-number-N sector, whose basis is
    ordered by the signal-mode count: index k stands for ``|N-k, k>`` in
    ``|n_plus, n_minus>`` notation.  Blocks with N <= n_max are complete and
    unitary; blocks with N > n_max are restrictions to the retained pairs
    (both occupations <= n_max) and are kept for completeness of the type,
    not for exact propagation.
    """

    n_max: int
    phase: float
    blocks: list = field(repr=False)

    def block(self, total_n: int) -> np.ndarray:
        return self.blocks[total_n]

    def block_basis(self, total_n: int) -> list:
        """(n_plus, n_minus) pairs indexing the rows/columns of a block."""
        lo = max(0, total_n - self.n_max)
        hi = min(total_n, self.n_max)
        return [(total_n - k, k) for k in range(lo, hi + 1)]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Propagate a two-mode coefficient matrix ``psi[n_plus, n_minus]``.

        Exact on amplitude that lives in complete blocks; mass in truncated
        blocks is transformed by the restricted matrices.
        """
        dim = self.n_max + 1
        if psi.shape != (dim, dim):
            raise ValueError(f"expected state of shape {(dim, dim)}, got {psi.shape}")
        out = np.zeros((dim, dim), dtype=complex)
        for total_n in range(2 * self.n_max + 1):
            pairs = self.block_basis(total_n)
            rows = [p[0] for p in pairs]
            cols = [p[1] for p in pairs]
            out_vec = self.blocks[total_n] @ psi[rows, cols]
            out[rows, cols] = out_vec
        return out


def _mixer_mode_matrix(phase: float) -> np.ndarray:
    """2x2 map taking (a_plus, a_minus) to the balanced-mixer outputs."""
    e = np.exp(-1j * phase)
    return np.array([[1.0, e], [1.0, -e]]) / math.sqrt(2.0)


def beamsplitter_unitary(n_max: int, phase: float) -> TruncatedUnitary:
    """Fock-space unitary of the phase-shift-plus-balanced-mixer stage.

    Implements the mode map ``c_pm = (a_plus +- a_minus exp(-i phase)) /
    sqrt 2`` so that counting photons after the returned unitary measures
    the difference observable ``n_phase``.  Each total-photon-number block
    is the exponential of the block generator; blocks beyond n_max are the
    truncation of the corresponding complete block.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    v = _mixer_mode_matrix(phase)
    h = 1j * logm(v)
    h = 0.5 * (h + h.conj().T)  # strip logm roundoff; generator is hermitian
    blocks = []
    for total_n in range(2 * n_max + 1):
        hn = np.zeros((total_n + 1, total_n + 1), dtype=complex)
        for k in range(total_n + 1):  # k = signal-mode occupation
            n_plus = total_n - k
            hn[k, k] = h[0, 0] * n_plus + h[1, 1] * k
            if k < total_n:
                # <N-k-1, k+1| H |N-k, k> couples neighbouring occupations
                hn[k + 1, k] = h[1, 0] * math.sqrt((k + 1) * n_plus)
                hn[k, k + 1] = h[0, 1] * math.sqrt((k + 1) * n_plus)
        un = expm(-1j * hn)
        if total_n > n_max:
            keep = slice(total_n - n_max, n_max + 1)
            un = un[keep, keep]
        blocks.append(un)
    return TruncatedUnitary(n_max=n_max, phase=phase, blocks=blocks)
