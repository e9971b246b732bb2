"""Macroscopic EPR criterion for Gaussian two-mode states.

One side carries a strong local oscillator of amplitude E, so its spin-like
observables are ``S_x = E X_0 / 2`` and ``S_y = E X_pi/2 / 2`` and their
uncertainty product is bounded by ``|<S_z>| / 2 = E^2 / 4``.  When the
far side lets both quadratures of the near side be inferred with errors
``Delta_1, Delta_2`` whose spin-scaled product beats that bound, no local
quantum description of the near side exists.  For Gaussian states the
optimal inference is linear, so everything reduces to covariance algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import SingularCovariance
from .states import X0A, X0B, XP2A, XP2B, GaussianCovariance, tmsv_covariance


class InferenceErrors(NamedTuple):
    """Optimal linear inference of the A quadratures from the B ones."""

    delta1: float  # residual error on X0_A given X0_B
    delta2: float  # residual error on Xpi2_A given Xpi2_B
    gain1: float   # minimizing gain g in X0_A - g X0_B
    gain2: float


def inference_errors(cov: GaussianCovariance,
                     apparatus_noise: float = 0.0) -> InferenceErrors:
    """Minimize Var(X_A - g X_B) over the gain g, per quadrature.

    The minimum is Var_A - Cov^2 / Var_B at g = Cov / Var_B.  An optional
    apparatus noise (standard deviation, quadrature units) adds in
    quadrature to both residuals; it defaults to zero so the returned
    errors are the intrinsic quantum ones.
    """
    m = cov.matrix
    out = []
    for a, b in ((X0A, X0B), (XP2A, XP2B)):
        var_b = m[b, b]
        if var_b <= 0.0:
            raise SingularCovariance(f"Var of axis {b} is {var_b}")
        gain = m[a, b] / var_b
        var_min = m[a, a] - m[a, b] ** 2 / var_b
        out.append((math.sqrt(var_min + apparatus_noise ** 2), gain))
    (d1, g1), (d2, g2) = out
    return InferenceErrors(delta1=d1, delta2=d2, gain1=g1, gain2=g2)


@dataclass(frozen=True)
class EprReport:
    """Outcome of the spin-scaled inference test at amplitude E."""

    E: float
    delta1: float
    delta2: float
    delta_x: float      # E * delta1 / 2, photon-number units
    delta_y: float
    product: float      # delta_x * delta_y
    bound: float        # E^2 / 4
    satisfied: bool     # strict: product < bound
    photon_scale: float  # 2 |<S_z>| = E^2, the macroscopic reference scale
    r: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "E": self.E,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta_x": self.delta_x,
            "delta_y": self.delta_y,
            "product": self.product,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "photon_scale": self.photon_scale,
        }
        if self.r is not None:
            d["r"] = self.r
        return d


def epr_criterion(delta1: float, delta2: float, E: float,
                  r: float | None = None) -> EprReport:
    """Scale the quadrature inference errors to spin units and test them.

    The flag is ``delta_x * delta_y < E^2 / 4``, strict, which is the same
    as ``delta1 * delta2 < 1``: the amplitude cancels, but the *bound*
    E^2 / 4 is what makes the test macroscopic, since 2|<S_z>| = E^2
    photons set the scale of the uncertainty product being beaten.
    """
    if not E > 0.0:
        raise ValueError("local-oscillator amplitude E must be positive")
    if delta1 <= 0.0 or delta2 <= 0.0:
        raise ValueError("inference errors must be positive")
    dx = E * delta1 / 2.0
    dy = E * delta2 / 2.0
    bound = E * E / 4.0
    return EprReport(
        E=E, delta1=delta1, delta2=delta2, delta_x=dx, delta_y=dy,
        product=dx * dy, bound=bound, satisfied=dx * dy < bound,
        photon_scale=E * E, r=r,
    )


@dataclass(frozen=True)
class MacroscopicityMargins:
    """Photon-number headroom of the inference errors below E/2."""

    m1: float
    m2: float
    threshold: float
    m1_macroscopic: bool
    m2_macroscopic: bool


def macroscopicity_margins(report: EprReport,
                           threshold: float = 1e4) -> MacroscopicityMargins:
    """Margins m_k = 2 (E/2 - Delta_spin_k) in photon-number units.

    'Macroscopic' has no sharp definition, so each margin is flagged
    against a caller-chosen photon threshold (default 1e4).
    """
    m1 = 2.0 * (report.E / 2.0 - report.delta_x)
    m2 = 2.0 * (report.E / 2.0 - report.delta_y)
    return MacroscopicityMargins(
        m1=m1, m2=m2, threshold=threshold,
        m1_macroscopic=m1 >= threshold, m2_macroscopic=m2 >= threshold,
    )


def tmsv_epr_report(r: float, E: float) -> EprReport:
    """Criterion evaluated on the two-mode squeezed vacuum at squeezing r.

    Closed form: delta1 = delta2 = 1 / sqrt(cosh 2r), so the product is
    1 / cosh 2r and the criterion holds for every r > 0.
    """
    inf = inference_errors(tmsv_covariance(r))
    return epr_criterion(inf.delta1, inf.delta2, E, r=r)


def epr_sweep(r_values, e_values, threshold: float = 1e4) -> list:
    """(EprReport, MacroscopicityMargins) over the (r, E) product grid."""
    out = []
    for r in r_values:
        for e in e_values:
            report = tmsv_epr_report(float(r), float(e))
            out.append((report, macroscopicity_margins(report, threshold)))
    return out
