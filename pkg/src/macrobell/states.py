"""Constructors for the two-mode states under study.

Both catalog states are Schmidt diagonal, ``sum_n c_n |n>|n>`` with real
non-negative coefficients, which is what makes every joint statistic in the
Bell engines depend on the analyzer phases only through their sum.  The
two-mode squeezed vacuum additionally gets a Gaussian covariance form so the
EPR module can work in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError
from .hilbert import (
    DEFAULT_N_MAX,
    QuadratureGrid,
    bessel_i0,
    hermite_wavefunction_matrix,
)

# Index order of the covariance axes: (X0_A, Xpi2_A, X0_B, Xpi2_B).
X0A, XP2A, X0B, XP2B = 0, 1, 2, 3


@dataclass(frozen=True)
class SchmidtDiagonalState:
    """Normalized coefficients of ``sum_n c_n |n>|n>`` up to a cutoff."""

    coeffs: np.ndarray
    label: str
    tail_mass: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        object.__setattr__(self, "coeffs", c)
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state '{self.label}' has norm^2 {norm}, expected 1")

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def to_json_dict(self) -> dict:
        c = np.asarray(self.coeffs)
        if np.iscomplexobj(c) and np.any(c.imag != 0.0):
            coeffs = [[float(v.real), float(v.imag)] for v in c]
        else:
            coeffs = [float(v) for v in c.real]
        return {
            "label": self.label,
            "n_max": self.n_max,
            "coeffs": coeffs,
            "tail_mass": self.tail_mass,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "SchmidtDiagonalState":
        raw = data["coeffs"]
        if raw and isinstance(raw[0], (list, tuple)):
            coeffs = np.array([complex(re, im) for re, im in raw])
        else:
            coeffs = np.asarray(raw, dtype=float)
        state = cls(coeffs=coeffs, label=data["label"], tail_mass=data["tail_mass"])
        if state.n_max != data["n_max"]:
            raise ValueError("inconsistent n_max in serialized state")
        return state

    @classmethod
    def from_json(cls, path) -> "SchmidtDiagonalState":
        with open(path, encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f))


@dataclass(frozen=True)
class GaussianCovariance:
    """4x4 covariance of (X0_A, Xpi2_A, X0_B, Xpi2_B); means are zero."""

    matrix: np.ndarray
    mean: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.shape != (4, 4):
            raise ValueError("covariance must be 4x4")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        diag = np.diag(m)
        if np.any(diag < 1.0 - 1e-12):
            raise ValueError("diagonal variances below the vacuum level 1")
        for a, b in ((X0A, XP2A), (X0B, XP2B)):
            if m[a, a] * m[b, b] < 1.0 - 1e-9:
                raise ValueError("per-mode Heisenberg product below 1")

    def variance_of(self, coeffs) -> float:
        """Variance of a linear combination ``coeffs . (X0A, XP2A, X0B, XP2B)``."""
        v = np.asarray(coeffs, dtype=float)
        return float(v @ self.matrix @ v)


def _renormalized(raw: np.ndarray, total_mass: float, label: str,
                  tail_tol: float) -> SchmidtDiagonalState:
    """Package raw coefficients, guarding and recording the discarded tail."""
    retained = float(np.sum(np.abs(raw) ** 2))
    tail = max(0.0, 1.0 - retained / total_mass)
    if tail > tail_tol:
        raise TruncationError(
            f"{label}: n_max={len(raw) - 1} discards tail mass {tail:.3g} "
            f"(allowed {tail_tol:g})"
        )
    coeffs = raw / math.sqrt(retained)
    return SchmidtDiagonalState(coeffs=coeffs, label=label, tail_mass=tail)


def pair_coherent(r0: float, n_max: int = DEFAULT_N_MAX,
                  tail_tol: float = 1e-9) -> SchmidtDiagonalState:
    """Pair-coherent state, c_n proportional to (r0^2)^n / n!.

    The exact normalization is 1/sqrt(I_0(2 r0^2)); after the cutoff the
    retained coefficients are renormalized and the discarded relative mass
    is recorded on the returned state.
    """
    if not r0 > 0.0:
        raise ValueError("r0 must be positive")
    raw = np.empty(n_max + 1)
    raw[0] = 1.0
    for n in range(n_max):
        raw[n + 1] = raw[n] * r0 * r0 / (n + 1)
    return _renormalized(raw, bessel_i0(2.0 * r0 * r0),
                         f"pair_coherent(r0={r0:g})", tail_tol)


def two_mode_squeezed(r: float, n_max: int = DEFAULT_N_MAX,
                      tail_tol: float = 1e-9) -> SchmidtDiagonalState:
    """Two-mode squeezed vacuum, c_n = sech(r) tanh(r)^n."""
    if r < 0.0:
        raise ValueError("squeezing parameter r must be >= 0")
    t = math.tanh(r)
    raw = (1.0 / math.cosh(r)) * t ** np.arange(n_max + 1)
    return _renormalized(raw, 1.0, f"two_mode_squeezed(r={r:g})", tail_tol)


def vacuum(n_max: int = DEFAULT_N_MAX) -> SchmidtDiagonalState:
    """Two-mode vacuum; the r = 0 member of the squeezed family."""
    return two_mode_squeezed(0.0, n_max)


def tmsv_covariance(r: float) -> GaussianCovariance:
    """Quadrature covariance of the two-mode squeezed vacuum.

    Var(X0) = Var(Xpi2) = cosh 2r per mode, with cross-mode correlations
    +sinh 2r between the X0 quadratures and -sinh 2r between the Xpi2 ones;
    the difference X0_A - X0_B is squeezed to variance 2 exp(-2r).
    """
    if r < 0.0:
        raise ValueError("squeezing parameter r must be >= 0")
    v = math.cosh(2.0 * r)
    s = math.sinh(2.0 * r)
    m = np.diag([v, v, v, v])
    m[X0A, X0B] = m[X0B, X0A] = s
    m[XP2A, XP2B] = m[XP2B, XP2A] = -s
    return GaussianCovariance(matrix=m)


@dataclass(frozen=True)
class CrosscheckReport:
    """Agreement between Fock-grid moments and the covariance form."""

    r: float
    n_max: int
    var_x0_fock: float
    var_x0_gaussian: float
    cov_x0_fock: float
    cov_x0_gaussian: float
    max_abs_diff: float
    tolerance: float

    @property
    def consistent(self) -> bool:
        return self.max_abs_diff <= self.tolerance


def fock_vs_covariance_crosscheck(r: float, n_max: int,
                                  tolerance: float = 1e-6) -> CrosscheckReport:
    """Compare <X0_A X0_B> and <X0_A^2> between the two representations.

    The Fock-side moments come from the tabulated joint quadrature density,
    so this exercises the same grid machinery the Bell engine relies on.
    The grid is sized from n_max: the top retained wavefunction turns over
    near x = sqrt(4 n_max + 2), and the second moment needs a few extra
    units of clearance beyond that.
    """
    state = two_mode_squeezed(r, n_max)  # propagates the truncation guard
    hi = float(math.ceil(math.sqrt(4.0 * n_max + 2.0)) + 4.0)
    grid = QuadratureGrid(-hi, hi, 0.02)
    xs = grid.points()
    w = grid.trapezoid_weights()
    phi = hermite_wavefunction_matrix(n_max, xs)

    c = state.coeffs.real
    psi = (phi * c[:, None]).T @ phi  # joint amplitude at angle sum 0
    dens = psi * psi
    wx = w * xs
    cov_fock = float(wx @ dens @ wx)
    marginal = state.probabilities() @ (phi * phi)
    var_fock = float(np.sum(marginal * w * xs * xs))

    cov = tmsv_covariance(r)
    var_g = cov.matrix[X0A, X0A]
    cov_g = cov.matrix[X0A, X0B]
    max_diff = max(abs(var_fock - var_g), abs(cov_fock - cov_g))
    return CrosscheckReport(
        r=r, n_max=n_max,
        var_x0_fock=var_fock, var_x0_gaussian=var_g,
        cov_x0_fock=cov_fock, cov_x0_gaussian=cov_g,
        max_abs_diff=max_diff, tolerance=tolerance,
    )
