"""Executable checks of the constructive lemmas behind the diagnostics.

Three families:

* an exact identity: the disc average of |h . grad u(x)|^2 over |h| <= r
  equals (r^2/4) ||grad u||^2, checked by independent quadrature;
* an interpolation inequality: (r/2) ||grad u|| <= S2(u; r) + (r^2/2)
  ||grad^2 u||, the Taylor-split form whose remainder constant 1/2 comes
  from int_0^1 (1-t) dt, checked as a nonnegative margin;
* the sub-linear envelope construction: from sampled running suprema of a
  vanishing function q, build piecewise-linear knots q_k with q_0 = qbar_0,
  q_k = max(qbar_k, q_{k-1}/(1 + 1/k)), qbar_k = 1/(k+1) + sup_{z >= k-1} q,
  and verify the properties (positivity, domination, monotonicity, decay,
  and z Q'(z) + Q(z) >= 0 on every integer interval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import kernel_exact
from .spectral import SpectralField, to_physical

__all__ = [
    "hgrad_identity_check",
    "interpolation_inequality_check",
    "EnvelopeFunction",
    "sublinear_envelope",
    "envelope_eval",
    "envelope_properties",
]


# -- gradient-increment identity ----------------------------------------------

def _gradient_moments(u: SpectralField) -> tuple[float, float, float]:
    """Grid means of (d1 u . d1 u), (d1 u . d2 u), (d2 u . d2 u), summed
    over components; evaluated in physical space on the padded grid (exact
    for the band-limited quadratic integrands)."""
    g = u.grid
    a = b = c = 0.0
    for comp in u.coeffs:
        d1 = to_physical(SpectralField(g, (2j * np.pi * g.k1 * comp)[None]))[0]
        d2 = to_physical(SpectralField(g, (2j * np.pi * g.k2 * comp)[None]))[0]
        a += float(np.mean(d1 * d1))
        b += float(np.mean(d1 * d2))
        c += float(np.mean(d2 * d2))
    return a, b, c


def hgrad_identity_check(u: SpectralField, r: float, n_quad: int = 10_000) -> tuple[float, float]:
    """Both sides of the disc-average identity; equal for exact arithmetic.

    lhs: tensor quadrature (Gauss-Legendre in radius x uniform in angle over
    the disc |h| <= r) of the physical-grid mean of |h . grad u|^2.
    rhs: (r^2/4) sum_k (2 pi |k|)^2 |u_hat(k)|^2 directly in mode space.
    """
    if not 0 < r <= 0.25:
        raise ValueError("r must lie in (0, 1/4]")
    if n_quad < 1000:
        raise ValueError("n_quad must be >= 1000")
    a, b, c = _gradient_moments(u)

    n_r = max(2, int(round(np.sqrt(n_quad / 4.0))))
    n_theta = max(4, int(np.ceil(n_quad / n_r)))
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    ell = 0.5 * r * (nodes + 1.0)          # map [-1,1] -> [0,r]
    w_ell = 0.5 * r * weights * ell        # includes the polar Jacobian
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    h1 = np.outer(ell, np.cos(theta))
    h2 = np.outer(ell, np.sin(theta))
    vals = h1 * h1 * a + 2.0 * h1 * h2 * b + h2 * h2 * c
    lhs = float(np.sum(w_ell[:, None] * vals) * (2.0 * np.pi / n_theta) / (np.pi * r * r))

    grad_sq = float(np.sum((2 * np.pi) ** 2 * u.grid.ksq * np.sum(np.abs(u.coeffs) ** 2, axis=0)))
    rhs = 0.25 * r * r * grad_sq
    return lhs, rhs


# -- interpolation inequality ---------------------------------------------------

def interpolation_inequality_check(u: SpectralField, r: float) -> float:
    """Margin S2(u; r) + (r^2/2) ||grad^2 u|| - (r/2) ||grad u||.

    Nonnegative for every band-limited field and every r > 0 (the Taylor
    split is a theorem; a negative margin beyond round-off indicates a bug
    in the structure-function machinery).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    g = u.grid
    mass = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    ksq = g.ksq
    grad = np.sqrt(float(np.sum((2 * np.pi) ** 2 * ksq * mass)))
    hess = np.sqrt(float(np.sum((2 * np.pi) ** 4 * ksq * ksq * mass)))
    s2 = np.sqrt(float(np.sum(kernel_exact(2.0 * np.pi * np.sqrt(ksq) * r) * mass)))
    return s2 + 0.5 * r * r * hess - 0.5 * r * grad


# -- sub-linear envelope ---------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeFunction:
    """Piecewise-linear function on integer knots z = 0, 1, ..., k_max."""

    knots: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.knots, dtype=float)
        if q.ndim != 1 or q.size < 2:
            raise ValueError("need at least two knots")
        if np.any(q <= 0):
            raise ValueError("knots must be positive")
        if np.any(np.diff(q) > 0):
            raise ValueError("knots must be nonincreasing")
        k = np.arange(q.size - 1)
        if np.any(q[1:] * (1.0 + 1.0 / (k + 1)) < q[:-1] * (1.0 - 1e-12)):
            raise ValueError("knots violate the decay bound q_{k+1} >= q_k/(1+1/(k+1))")
        q.setflags(write=False)
        object.__setattr__(self, "knots", q)

    @property
    def k_max(self) -> int:
        return self.knots.size - 1


def sublinear_envelope(sup_samples) -> EnvelopeFunction:
    """Envelope knots from sampled running suprema s_k = sup_{z >= k-1} q(z).

    qbar_k = 1/(k+1) + s_k, then q_0 = qbar_0 and
    q_k = max(qbar_k, q_{k-1}/(1 + 1/k)).
    """
    s = np.asarray(sup_samples, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need sup samples for k = 0..k_max with k_max >= 1")
    if np.any(s < 0):
        raise ValueError("sup samples must be nonnegative")
    if np.any(np.diff(s) > 0):
        raise ValueError("sup samples must be nonincreasing")
    k = np.arange(s.size)
    qbar = 1.0 / (k + 1.0) + s
    q = np.empty_like(qbar)
    q[0] = qbar[0]
    for i in range(1, s.size):
        q[i] = max(qbar[i], q[i - 1] / (1.0 + 1.0 / i))
    return EnvelopeFunction(q)


def envelope_eval(env: EnvelopeFunction, z: float) -> float:
    """Linear interpolation Q(z) = q_k + (z - k)(q_{k+1} - q_k)."""
    if z < 0 or z > env.k_max:
        raise ValueError(f"z = {z} outside [0, {env.k_max}]")
    k = min(int(np.floor(z)), env.k_max - 1)
    q = env.knots
    return float(q[k] + (z - k) * (q[k + 1] - q[k]))


def envelope_properties(env: EnvelopeFunction, sup_samples) -> dict[str, float]:
    """Measured margins of the envelope properties; all must be >= 0.

    Q2/Q3: domination of the sampled suprema and strict positivity;
    Q5: monotone nonincreasing knots; Q6: min over intervals of the
    worst-case value of z Q'(z) + Q(z) (attained at the right endpoint).
    Q1 (piecewise linearity) and Q4 (decay) hold by construction; the decay
    margin reported is q_0 - q_kmax.
    """
    q = env.knots
    s = np.asarray(sup_samples, dtype=float)
    k = np.arange(q.size - 1)
    return {
        "dominates_samples": float(np.min(np.minimum(q[:-1], q[1:]) - s[1:])),
        "positive": float(np.min(q)),
        "nonincreasing": float(np.min(q[:-1] - q[1:])),
        "decay": float(q[0] - q[-1]),
        "zQp_plus_Q": float(np.min((q[1:] - q[:-1]) * (k + 1) + q[1:])),
    }
