"""Clauser-Horne statistics for sign-binned quadrature measurements.

This is the large-local-oscillator limit of the photon-difference apparatus:
the scaled difference count measures the quadrature ``X_theta`` of the signal
mode, outcomes are binned to +-1 by sign, and Gaussian blur of standard
deviation ``sigma0`` (quadrature units; ``E * sigma0`` photons) smears the
bin boundary.  For a Schmidt-diagonal state the joint amplitude is

    psi(x_a, x_b) = sum_n c_n exp(-i n (theta + phi)) phi_n(x_a) phi_n(x_b)

so every statistic depends on the analyzer phases only through their sum.
The ratio tested everywhere is

    S = [P++(t,p) - P++(t,p') + P++(t',p) + P++(t',p')] / [P+A(t') + P+B(p)]

which local models bound by 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateDenominator, NoViolation
from .hilbert import QuadratureGrid, hermite_wavefunction_matrix
from .states import SchmidtDiagonalState

# Analyzer quadruple that exhibits the violation for the pair-coherent
# benchmark state (theta, phi, theta', phi').
DEFAULT_ANGLES_TUPLE = (0.0, -math.pi / 4, math.pi / 2, -3 * math.pi / 4)


@dataclass(frozen=True)
class AngleQuad:
    """The four analyzer phases entering the Clauser-Horne ratio."""

    theta: float
    phi: float
    theta_prime: float
    phi_prime: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not math.isfinite(v):
                raise ValueError("angles must be finite")

    def as_tuple(self) -> tuple:
        return (self.theta, self.phi, self.theta_prime, self.phi_prime)

    def pairs(self) -> tuple:
        """(theta, phi) combinations in numerator order: ++, +-', '+, ''."""
        return (
            (self.theta, self.phi),
            (self.theta, self.phi_prime),
            (self.theta_prime, self.phi),
            (self.theta_prime, self.phi_prime),
        )

    def sums(self) -> tuple:
        return tuple(t + p for t, p in self.pairs())

    def shifted(self, delta: float) -> "AngleQuad":
        """Shift both A-side angles by +delta and both B-side by -delta."""
        return AngleQuad(self.theta + delta, self.phi - delta,
                         self.theta_prime + delta, self.phi_prime - delta)


DEFAULT_ANGLES = AngleQuad(*DEFAULT_ANGLES_TUPLE)


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian blur of the measurement record.

    ``sigma0`` is the standard deviation on the quadrature scale; when the
    local-oscillator amplitude ``E`` is given, the equivalent photon-number
    blur ``sigma = E * sigma0`` is available as well.
    """

    sigma0: float
    E: float | None = None

    def __post_init__(self):
        if self.sigma0 < 0.0:
            raise ValueError("sigma0 must be >= 0")
        if self.E is not None and not self.E > 0.0:
            raise ValueError("local-oscillator amplitude E must be positive")

    @property
    def sigma_photon(self) -> float:
        if self.E is None:
            raise ValueError("photon-scale sigma needs the amplitude E")
        return self.E * self.sigma0


NO_NOISE = NoiseModel(sigma0=0.0)


@dataclass(frozen=True)
class BellResult:
    """One evaluation of the Clauser-Horne ratio with its ingredients."""

    s: float
    p_joint: tuple  # P++ at (t,p), (t,p'), (t',p), (t',p')
    p_single_a: float  # P+ at A for theta'
    p_single_b: float  # P+ at B for phi
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "S": self.s,
            "p_joint": list(self.p_joint),
            "p_single_a": self.p_single_a,
            "p_single_b": self.p_single_b,
            "meta": dict(self.meta),
        }


def sign_weight(x: float, sigma0: float) -> float:
    """Probability that a value x still bins as '+' under the blur.

    For sigma0 > 0 this is Phi(x / sigma0); at sigma0 = 0 it is the
    inclusive-zero step, 1 for x >= 0 and 0 otherwise.
    """
    if sigma0 < 0.0:
        raise ValueError("sigma0 must be >= 0")
    if sigma0 == 0.0:
        return 1.0 if x >= 0.0 else 0.0
    return float(ndtr(x / sigma0))


def _noise_weights(xs: np.ndarray, sigma0: float) -> np.ndarray:
    """sign_weight tabulated on a grid, suitable for quadrature.

    At sigma0 = 0 the node sitting exactly on the jump takes the mean of
    the one-sided limits (1/2); that is the value for which the trapezoid
    sum converges to the Riemann integral of the step.
    """
    if sigma0 == 0.0:
        return 1.0 * (xs > 1e-12) + 0.5 * (np.abs(xs) <= 1e-12)
    return ndtr(xs / sigma0)


@lru_cache(maxsize=16)
def _grid_tables(n_max: int, grid: QuadratureGrid):
    xs = grid.points()
    wt = grid.trapezoid_weights()
    phi = hermite_wavefunction_matrix(n_max, xs)
    for arr in (xs, wt, phi):
        arr.flags.writeable = False
    return xs, wt, phi


def joint_quadrature_density(state: SchmidtDiagonalState, theta: float,
                             phi: float, grid: QuadratureGrid) -> np.ndarray:
    """|psi(x_a, x_b)|^2 tabulated on grid x grid (rows: x_a).

    The grid must be symmetric about 0 and wide enough to hold the
    occupied wavefunctions (x beyond sqrt(4 n + 2) for the top occupied n);
    then the trapezoid mass closes to 1e-6 or better.
    """
    if not grid.is_symmetric:
        raise ValueError("parity handling requires a grid symmetric about 0")
    _, _, table = _grid_tables(state.n_max, grid)
    u = state.coeffs * np.exp(-1j * np.arange(state.n_max + 1) * (theta + phi))
    re = table.T @ (u.real[:, None] * table)
    dens = re * re
    if np.any(u.imag != 0.0):
        im = table.T @ (u.imag[:, None] * table)
        dens += im * im
    return dens


def marginal_quadrature_density(state: SchmidtDiagonalState,
                                grid: QuadratureGrid) -> np.ndarray:
    """Single-side quadrature density; angle-free because the reduced
    state of either mode is diagonal in photon number."""
    _, _, table = _grid_tables(state.n_max, grid)
    return state.probabilities() @ (table * table)


def p_plus_plus(state: SchmidtDiagonalState, theta: float, phi: float,
                noise: NoiseModel, grid: QuadratureGrid) -> float:
    """Joint probability of '+' at both sides for one analyzer pair."""
    xs, wt, _ = _grid_tables(state.n_max, grid)
    dens = joint_quadrature_density(state, theta, phi, grid)
    w = wt * _noise_weights(xs, noise.sigma0)
    return float(w @ dens @ w)


def p_plus_single(state: SchmidtDiagonalState, side: str, angle: float,
                  noise: NoiseModel, grid: QuadratureGrid) -> float:
    """Probability of '+' at one side; 1/2 for every parity-even state."""
    if side not in ("A", "B"):
        raise ValueError("side must be 'A' or 'B'")
    xs, wt, _ = _grid_tables(state.n_max, grid)
    marginal = marginal_quadrature_density(state, grid)
    return float(np.sum(marginal * wt * _noise_weights(xs, noise.sigma0)))


def _sum_kernel(state: SchmidtDiagonalState, grid: QuadratureGrid,
                sigma0: float) -> np.ndarray:
    """K[n, n'] = integral of phi_n phi_n' times the blurred sign weight.

    P++ at angle sum s is then u^dag (K o K) u with u_n = c_n exp(-i n s),
    which is the joint double integral of :func:`p_plus_plus` reorganized;
    scans use this form because K is angle-free.
    """
    xs, wt, table = _grid_tables(state.n_max, grid)
    w = wt * _noise_weights(xs, sigma0)
    return (table * w) @ table.T


def _pp_from_kernel(coeffs: np.ndarray, angle_sum: float,
                    kernel: np.ndarray) -> float:
    u = coeffs * np.exp(-1j * np.arange(len(coeffs)) * angle_sum)
    return float(np.real(np.conj(u) @ (kernel * kernel) @ u))


def _single_from_tables(state, grid, sigma0: float) -> float:
    xs, wt, _ = _grid_tables(state.n_max, grid)
    marginal = marginal_quadrature_density(state, grid)
    return float(np.sum(marginal * wt * _noise_weights(xs, sigma0)))


def _assemble(p_joint, single_a, single_b, meta) -> BellResult:
    denom = single_a + single_b
    if denom < 1e-12:
        raise DegenerateDenominator(f"singles sum to {denom}")
    num = p_joint[0] - p_joint[1] + p_joint[2] + p_joint[3]
    return BellResult(s=num / denom, p_joint=tuple(p_joint),
                      p_single_a=single_a, p_single_b=single_b, meta=meta)


def _meta(state, grid, noise, angles, engine="quadrature-limit") -> dict:
    return {
        "engine": engine,
        "state": state.label,
        "n_max": state.n_max,
        "grid": (grid.lo, grid.hi, grid.step),
        "sigma0": noise.sigma0,
        "angles": angles.as_tuple(),
    }


def ch_statistic(state: SchmidtDiagonalState, angles: AngleQuad,
                 noise: NoiseModel, grid: QuadratureGrid) -> BellResult:
    """Clauser-Horne ratio from the four joint terms and two singles."""
    p_joint = [p_plus_plus(state, t, p, noise, grid) for t, p in angles.pairs()]
    single_a = p_plus_single(state, "A", angles.theta_prime, noise, grid)
    single_b = p_plus_single(state, "B", angles.phi, noise, grid)
    return _assemble(p_joint, single_a, single_b,
                     _meta(state, grid, noise, angles))


def _s_at_sigma(state, angles, grid, sigma0: float) -> BellResult:
    """Kernel-path evaluation of the ratio; equal to ch_statistic up to
    float ordering, and cheap enough for scans and searches."""
    kernel = _sum_kernel(state, grid, sigma0)
    p_joint = [_pp_from_kernel(state.coeffs, s, kernel) for s in angles.sums()]
    single = _single_from_tables(state, grid, sigma0)
    return _assemble(p_joint, single, single,
                     _meta(state, grid, NoiseModel(sigma0), angles))


def bell_scan(state: SchmidtDiagonalState, angles: AngleQuad,
              grid: QuadratureGrid, sigma0_values) -> list:
    """Evaluate the ratio over a sequence of blur levels."""
    return [_s_at_sigma(state, angles, grid, float(s)) for s in sigma0_values]


@dataclass(frozen=True)
class NoiseThresholdResult:
    """Largest blur that still violates the inequality."""

    sigma0_max: float
    sigma_photon_max: float
    s_no_noise: float
    trace: tuple  # (sigma0, S) pairs visited by the bisection, sorted

    def as_tuple(self) -> tuple:
        return (self.sigma0_max, self.sigma_photon_max)


def noise_threshold(state: SchmidtDiagonalState, angles: AngleQuad, E: float,
                    grid: QuadratureGrid, tol: float = 1e-5,
                    bracket_hi: float = 10.0) -> NoiseThresholdResult:
    """Bisect for the largest sigma0 with S(sigma0) > 1.

    The photon-scale threshold is E * sigma0_max: the blur enters the
    statistics only on the quadrature scale, so the photon threshold grows
    linearly with the local-oscillator amplitude.  Raises
    :class:`NoViolation` when there is nothing to threshold.
    """
    if not E > 0.0:
        raise ValueError("local-oscillator amplitude E must be positive")
    evaluated = {}

    def s_of(sigma0: float) -> float:
        if sigma0 not in evaluated:
            evaluated[sigma0] = _s_at_sigma(state, angles, grid, sigma0).s
        return evaluated[sigma0]

    s_zero = s_of(0.0)
    if s_zero <= 1.0:
        raise NoViolation(
            f"S = {s_zero:.9g} <= 1 at sigma0 = 0 for {state.label}; "
            "no threshold exists"
        )
    hi = bracket_hi
    while s_of(hi) > 1.0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("violation persists to implausible blur; aborting")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if s_of(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    trace = tuple(sorted(evaluated.items()))
    return NoiseThresholdResult(sigma0_max=lo, sigma_photon_max=E * lo,
                                s_no_noise=s_zero, trace=trace)


def optimize_angles(state: SchmidtDiagonalState, noise: NoiseModel,
                    grid: QuadratureGrid, coarse_points: int = 24,
                    refine_rounds: int = 12) -> tuple:
    """Deterministic search for the angle quadruple maximizing the ratio.

    Only angle sums matter, so theta is pinned to 0 and the search runs
    over (phi, theta', phi'): a coarse lattice first (which contains the
    canonical violation quadruple when coarse_points is a multiple of 8),
    then step-halving coordinate descent.  Returns (AngleQuad, S).
    """
    kernel = _sum_kernel(state, grid, noise.sigma0)
    single = _single_from_tables(state, grid, noise.sigma0)
    denom = 2.0 * single
    if denom < 1e-12:
        raise DegenerateDenominator(f"singles sum to {denom}")
    coeffs = state.coeffs

    lattice = -math.pi + (2.0 * math.pi / coarse_points) * np.arange(coarse_points)
    lut = np.array([_pp_from_kernel(coeffs, s, kernel) for s in lattice])

    # numerator = P(phi) - P(phi') + P(theta'+phi) + P(theta'+phi'),
    # all indices mod the lattice size
    idx = np.arange(coarse_points)
    a, b, c = np.meshgrid(idx, idx, idx, indexing="ij")  # phi, theta', phi'
    num = lut[a] - lut[c] + lut[(b + a) % coarse_points] + lut[(b + c) % coarse_points]
    best_flat = int(np.argmax(num))
    ia, ib, ic = np.unravel_index(best_flat, num.shape)
    best = [float(lattice[ia]), float(lattice[ib]), float(lattice[ic])]
    best_num = float(num[ia, ib, ic])

    def numerator(v) -> float:
        phi, theta_p, phi_p = v
        return (_pp_from_kernel(coeffs, phi, kernel)
                - _pp_from_kernel(coeffs, phi_p, kernel)
                + _pp_from_kernel(coeffs, theta_p + phi, kernel)
                + _pp_from_kernel(coeffs, theta_p + phi_p, kernel))

    step = 2.0 * math.pi / coarse_points
    for _ in range(refine_rounds):
        improved = True
        while improved:
            improved = False
            for k in range(3):
                for sign in (1.0, -1.0):
                    trial = list(best)
                    trial[k] += sign * step
                    val = numerator(trial)
                    if val > best_num:
                        best, best_num = trial, val
                        improved = True
        step *= 0.5

    quad = AngleQuad(0.0, best[0], best[1], best[2])
    return quad, best_num / denom
