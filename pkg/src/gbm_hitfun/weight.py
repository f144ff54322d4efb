"""The kernel w_lam of the hitting-density representation.

For X(t) = x exp(B(t) - 2 mu t) started at x = 1 + lam > 1 and stopped
at 1, the density of the stopped integral functional can be written as
an explicit prefactor plus an integral against a kernel w_lam on
[0, infinity).  The kernel splits into

* a discrete part w1: a finite combination of exponentials e^{z_i v}
  over the zeros z_i of K_mu (empty for mu < 3/2), and
* a continuous part w2: the Laplace transform at v of a nonnegative
  Bessel-product ratio h(u) times u, present exactly when mu - 1/2 is
  not a nonnegative integer.

Everything downstream (density, tails, Poisson kernels, moment
identities) consumes this module.  Precision-critical integrals of the
kernel are computed here in swapped order: integrating the exponentials
in v first reduces them to sums and h-integrals with all-positive
terms, which is how the moment operations reach near machine accuracy
while pointwise evaluation stays an ordinary tabulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import special as sp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .bessel import (
    KZeroSet,
    gamma_fn,
    is_half_integer,
    k_zero_set,
    reversed_bessel_theta,
)
from .errors import ConvergenceError, DomainError
from .quadrature import (
    QuadratureSpec,
    gauss_legendre_panels,
    geometric_edges,
    integrate_finite,
    integrate_semi_infinite,
)


@dataclass(frozen=True)
class ModelParams:
    """Drift and starting point of the stopped geometric Brownian motion.

    The hitting level is fixed at 1 (see the density module for the
    rescaling that handles other levels); lam = x - 1 > 0 measures the
    starting distance.
    """

    mu: float
    x: float
    a: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu < 0:
            raise DomainError(f"drift must be finite and >= 0, got {self.mu}")
        if not np.isfinite(self.x) or self.x <= 1.0:
            raise DomainError(f"start point must exceed 1, got {self.x}")
        if self.a != 1.0:
            raise DomainError("hitting level is fixed at 1; rescale instead")
        if self.x - 1.0 < 0.05:
            warnings.warn(
                "x within 0.05 of the hitting level: kernel evaluation "
                "loses accuracy to cancellation", stacklevel=2)

    @property
    def lam(self) -> float:
        return self.x - 1.0


def _h_values(mu: float, x: float, u: np.ndarray) -> np.ndarray:
    """Vectorized h(u): scaled-Bessel form, overflow-free for mu <= 10.

    Uses exponentially scaled I and K so that every factor stays within
    double range down to u = 1e-12 and out to u ~ hundreds.
    """
    lam = x - 1.0
    xu = x * u
    ive_u = sp.ive(mu, u)
    kve_u = sp.kve(mu, u)
    num = (sp.ive(mu, xu) * kve_u
           - ive_u * sp.kve(mu, xu) * np.exp(-2.0 * lam * u))
    num = num * np.exp(-2.0 * u)
    c = np.cos(np.pi * mu)
    s = np.sin(np.pi * mu)
    damp = kve_u * np.exp(-2.0 * u)
    den = (c * damp) ** 2 + (np.pi * ive_u + s * damp) ** 2
    return num / den


def h_mu_lambda(u, params: ModelParams):
    """Nonnegative kernel h under the continuous-part integral.

    Behaves like x^mu (c_mu/c'_mu)(1 - x^{-2 mu}) u^{2 mu} as u -> 0+
    for mu > 0, with c_mu/c'_mu = 2^{1 - 2 mu} / (Gamma(mu)
    Gamma(mu + 1)), and like log x / (log u)^2 for mu = 0; decays like
    e^{-2u} / (pi sqrt(x)) for large u.  Accepts scalars or arrays,
    u > 0.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("h is defined for finite u > 0")
    out = _h_values(params.mu, params.x, arr)
    return float(out) if np.isscalar(u) else out


# ---------------------------------------------------------------------
# discrete part

def _discrete_terms(params: ModelParams,
                    zeros: KZeroSet) -> Tuple[Tuple[complex, complex], ...]:
    """Coefficient/rate pairs (A_i, z_i) of w1(v) = sum A_i e^{z_i v}.

    A_i = -(x^mu/lam) z_i e^{lam z_i} K_mu(x z_i) / K_{mu-1}(z_i).  For
    half-integer orders the K-ratio is taken through the reversed
    Bessel polynomials, which cancels the branch-sensitive square-root
    and exponential factors exactly:
        e^{lam z} K_{m+1/2}(x z)/K_{m-1/2}(z)
            = x^{-1/2} theta_m(1/(x z)) / theta_{m-1}(1/z).
    """
    mu, x, lam = params.mu, params.x, params.lam
    if zeros.count == 0:
        return ()
    terms = []
    if is_half_integer(mu):
        m = int(round(mu - 0.5))
        for z in zeros.zeros:
            ratio = (x ** -0.5 * np.polyval(
                reversed_bessel_theta(m)[::-1], 1.0 / (x * z))
                / np.polyval(reversed_bessel_theta(m - 1)[::-1], 1.0 / z))
            terms.append((-(x ** mu / lam) * z * ratio, z))
    else:
        for z in zeros.zeros:
            # zeros of non-half-integer orders are strictly complex, so
            # the principal branch is unambiguous
            ratio = np.exp(lam * z) * sp.kv(mu, x * z) / sp.kv(abs(mu - 1.0), z)
            terms.append((-(x ** mu / lam) * z * ratio, z))
    # enforce exact conjugate symmetry: average each upper-half term
    # with the conjugate of its mirror
    by_key = {(round(z.real, 9), round(z.imag, 9)): a for a, z in terms}
    fixed = []
    for a, z in terms:
        mirror = by_key.get((round(z.real, 9), round(-z.imag, 9)))
        if z.imag == 0.0:
            fixed.append((complex(a.real, 0.0), z))
        elif mirror is not None:
            fixed.append((0.5 * (a + mirror.conjugate()), z))
        else:
            fixed.append((a, z))
    return tuple(fixed)


def _w1_from_terms(terms, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not terms:
        return np.zeros(v.shape)
    acc = np.zeros(v.shape, dtype=complex)
    for a, z in terms:
        acc += a * np.exp(z * v)
    return acc.real


def w1_eval(v, params: ModelParams, zeros: KZeroSet):
    """Discrete kernel part w1(v) given the zero set of K_mu.

    Real-valued by conjugate pairing; identically zero when the zero
    set is empty (mu < 3/2).
    """
    if abs(zeros.order - params.mu) > 1e-12:
        raise DomainError(
            f"zero set is for order {zeros.order}, params have {params.mu}")
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise DomainError("w1 is defined for v >= 0")
    out = _w1_from_terms(_discrete_terms(params, zeros), arr)
    return float(out) if np.isscalar(v) else out


# ---------------------------------------------------------------------
# continuous part

#: shared u-grid parameters for the tabulated kernel: geometric panels
#: below u = 1 resolve the u^{2 mu + 1} origin behaviour of the
#: integrand h(u) u for any mu <= 10, fixed-width panels above resolve
#: the resonance peaks, and e^{-2u} is below double noise at U_MAX.
_U_MIN = 1e-12
_U_MAX = 45.0
_PANEL_PTS = 16


def _resonance_refinement(mu: float) -> np.ndarray:
    """Extra grid edges resolving the near-cut resonance of h.

    For sin(pi mu) < 0 a shadow zero of K_mu just behind the cut pulls
    the denominator of h toward zero at a single u*, leaving a
    Lorentzian peak of half-width |cos(pi mu)| K / |(pi I + sin(pi mu)
    K)'| there (arbitrarily sharp as mu approaches an odd
    half-integer).  Graded panel edges spanning 24 half-widths pin the
    peak to the panel degree.
    """
    s = math.sin(math.pi * mu)
    if s >= 0.0:
        return np.empty(0)

    def term2(u):
        return (math.pi * sp.ive(mu, u)
                + s * sp.kve(mu, u) * math.exp(-2.0 * u))

    lo, hi = 1e-6, 60.0
    if term2(lo) * term2(hi) >= 0.0:
        return np.empty(0)
    u_star = brentq(term2, lo, hi)
    du = 1e-6 * max(1.0, u_star)
    deriv = (term2(u_star + du) - term2(u_star - du)) / (2.0 * du)
    damp = sp.kve(mu, u_star) * math.exp(-2.0 * u_star)
    width = max(abs(math.cos(math.pi * mu)) * damp / abs(deriv), 1e-8)
    offsets = np.array([-24.0, -16.0, -10.0, -6.0, -4.0, -2.5, -1.5,
                        -0.75, 0.0, 0.75, 1.5, 2.5, 4.0, 6.0, 10.0,
                        16.0, 24.0])
    return u_star + width * offsets


class _ContinuousKernel:
    """Fixed-grid discretization of the continuous-part integrals.

    Holds h on a shared composite Gauss-Legendre grid so that w2
    values, power moments of h, and tail moments of w2 all become dot
    products with positive terms (full relative accuracy, no
    cancellation), evaluated in microseconds.
    """

    def __init__(self, params: ModelParams):
        mu, x = params.mu, params.x
        self.mu = mu
        self.x = x
        self.coef = -np.cos(np.pi * mu) * x ** mu / params.lam
        if mu == 0.0:
            # resolve the (log u)^{-2} origin behaviour: graded panels
            # reach much deeper and log-spacing keeps the integrand
            # polynomial-like per panel
            low = geometric_edges(1e-60, 1.0, ratio=4.0)
        else:
            low = geometric_edges(_U_MIN, 1.0, ratio=2.0)
        # h develops narrow resonance peaks above u ~ 1 as mu grows
        # (near-zeros of the denominator shadowing the K_mu zeros), so
        # the mid range gets fixed-width panels instead of octaves
        high = np.arange(1.0, _U_MAX + 0.25, 0.5)
        edges = np.concatenate([low, high[1:]])
        extra = _resonance_refinement(mu)
        if extra.size:
            extra = extra[(extra > edges[0]) & (extra < edges[-1])]
            edges = np.unique(np.concatenate([edges, extra]))
        self.u_lo = edges[0]
        self.u, self.wts = gauss_legendre_panels(edges, _PANEL_PTS)
        self.h = _h_values(mu, x, self.u)

    def w2(self, v) -> np.ndarray:
        """Exact-batch w2 on an array of v >= 0."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        amp = self.coef * self.wts * self.h * self.u
        return np.exp(-v[:, None] * self.u[None, :]) @ amp

    def _h_small_end(self, p: float) -> float:
        """integral of h(u) u^p du over the truncated origin (0, u_lo).

        Uses the exact small-u law of h; the relative error of the law
        at u_lo is O(u_lo^{min(1, 2mu)}) for mu > 0 and O(1/log u_lo)
        for mu = 0, so the correction itself is accurate far beyond
        what the completed moments need.
        """
        mu, x, eps = self.mu, self.x, self.u_lo
        if mu > 0.0:
            if 2.0 * mu + p + 1.0 <= 0.0:
                raise DomainError(
                    f"h(u) u^{p} is not integrable at the origin for "
                    f"mu = {mu}")
            scale = (x ** mu * 2.0 ** (1.0 - 2.0 * mu)
                     * (1.0 - x ** (-2.0 * mu))
                     / (gamma_fn(mu) * gamma_fn(mu + 1.0)))
            return scale * eps ** (2.0 * mu + p + 1.0) / (2.0 * mu + p + 1.0)
        # mu = 0: h ~ log(x) / (L^2 + pi^2), L = log(2/u) - gamma
        ell = np.log(2.0 / eps) - np.euler_gamma
        if p == -1.0:
            return (np.log(x) / np.pi) * (np.pi / 2.0 - np.arctan(ell / np.pi))
        if p < -1.0:
            raise DomainError(
                f"h(u) u^{p} is not integrable at the origin for mu = 0")
        return np.log(x) * eps ** (p + 1.0) / ((p + 1.0)
                                               * (ell ** 2 + np.pi ** 2))

    def h_power_moment(self, p: float) -> float:
        """integral of h(u) u^p du over (0, infinity)."""
        return float(self.wts @ (self.h * self.u ** p)) + self._h_small_end(p)

    def w2_tail_kappa_moment(self, m: int, vcut: float, lam: float) -> float:
        """integral of kappa^m w2(v) dv over [vcut, infinity).

        kappa = v (2 lam + v).  The v-integral is done analytically
        under the u-integral; every resulting term is positive up to
        the overall sign of w2, so the dot product keeps full relative
        accuracy even for very large vcut.
        """
        u, h, wts = self.u, self.h, self.wts
        damp = np.exp(-u * vcut)
        acc = np.zeros_like(u)
        small = 0.0
        for j in range(m + 1):
            n = m + j
            binom = math.comb(m, j) * (2.0 * lam) ** (m - j)
            # int_vcut^inf v^n e^{-u v} dv
            # = e^{-u vcut} sum_r (n!/r!) vcut^r u^{r-n-1}
            inner = np.zeros_like(u)
            for r in range(n + 1):
                weight = (math.factorial(n) / math.factorial(r)
                          * vcut ** r)
                inner += weight * u ** (r - n - 1)
                # the truncated origin contributes with e^{-u vcut} ~ 1
                small += binom * weight * self._h_small_end(r - n)
            acc += binom * inner
        return float(self.coef * (wts @ (h * u * damp * acc))
                     + self.coef * small)

    def w2_tail_power_moment(self, p: int, vcut: float) -> float:
        """integral of v^p w2(v) dv over [vcut, infinity), exactly."""
        u, h, wts = self.u, self.h, self.wts
        damp = np.exp(-u * vcut)
        inner = np.zeros_like(u)
        small = 0.0
        for r in range(p + 1):
            weight = math.factorial(p) / math.factorial(r) * vcut ** r
            inner += weight * u ** (r - p - 1)
            small += weight * self._h_small_end(r - p)
        return float(self.coef * (wts @ (h * u * damp * inner))
                     + self.coef * small)


def w2_eval(v: float, params: ModelParams,
            spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Continuous kernel part w2(v) by adaptive semi-infinite quadrature.

    -cos(pi mu) (x^mu / lam) * integral of h(u) e^{-v u} u du.  Only
    defined when mu - 1/2 is not a nonnegative integer (otherwise the
    continuous part is absent and the representation is purely
    discrete).  For mu = 0 the (0, 1] piece is integrated after the
    substitution u = e^{-s}, which turns the (log u)^{-2} origin
    behaviour into a smooth exponentially decaying integrand.
    """
    mu, x, lam = params.mu, params.x, params.lam
    if is_half_integer(mu):
        raise DomainError(
            f"mu = {mu}: the continuous part is absent (half-integer order)")
    v = float(v)
    if not (v >= 0) or not np.isfinite(v):
        raise DomainError("w2 is defined for finite v >= 0")
    coef = -np.cos(np.pi * mu) * x ** mu / lam

    def integrand(u):
        return _h_values(mu, x, u) * u * np.exp(-v * u)

    rate = 0.8 * (2.0 + v)
    if mu == 0.0:
        # u = e^{-s} on (0, 1]: du u -> e^{-2s} ds, s over [0, inf)
        def sub(s):
            es = np.exp(-s)
            return (_h_values(mu, x, es) * np.exp(-v * es)
                    * np.exp(-2.0 * s))

        r1 = integrate_semi_infinite(sub, 0.0, 1.5, spec)
        r2 = integrate_semi_infinite(integrand, 1.0, rate, spec)
        value, err, conv = (r1.value + r2.value, r1.err_est + r2.err_est,
                            r1.converged and r2.converged)
    else:
        inner = QuadratureSpec(spec.abs_tol, spec.rel_tol,
                               spec.max_subdivisions,
                               split_points=[1e-8, 1e-4, 1e-2])
        res = integrate_semi_infinite(integrand, 0.0, rate, inner)
        value, err, conv = res.value, res.err_est, res.converged
    if not conv:
        raise ConvergenceError(
            f"w2({v}) quadrature did not converge (err_est {err:.2e})",
            estimate=coef * value, err_est=abs(coef) * err)
    return coef * value


def w2_tail_constant(params: ModelParams) -> float:
    """Limit constant of the continuous part's power tail.

    v^{2 mu + 2} w2(v) -> -cos(pi mu) Gamma(2 mu + 2)
    (x^{2 mu} - 1) / (2^{2 mu - 1} Gamma(mu) Gamma(mu + 1) lam) for
    mu > 0; for mu = 0 the tail is -(log x)/lam / (v log v)^2 and the
    constant -(log x)/lam is returned.  The constant follows from the
    u -> 0 law of h by Watson's lemma applied to the Laplace integral
    defining the continuous part.
    """
    mu, x, lam = params.mu, params.x, params.lam
    if is_half_integer(mu):
        return 0.0
    if mu == 0.0:
        return -np.log(x) / lam
    return (-np.cos(np.pi * mu) * gamma_fn(2.0 * mu + 2.0)
            * (x ** (2.0 * mu) - 1.0)
            / (2.0 ** (2.0 * mu - 1.0) * gamma_fn(mu)
               * gamma_fn(mu + 1.0) * lam))


# ---------------------------------------------------------------------
# assembled representation

@dataclass(frozen=True)
class WLambdaRep:
    """Assembled kernel: discrete terms, tabulated continuous part, tail.

    ``eval`` interpolates the continuous part on the graded grid up to
    v_max (piecewise monotone cubic, abs error ~1e-6 at default grid)
    and switches to the tail model beyond; the discrete part is always
    evaluated exactly.  Precision-critical consumers use the moment
    operations or the internal kernel, not ``eval``.
    """

    params: ModelParams
    discrete_terms: Tuple[Tuple[complex, complex], ...]
    has_continuous: bool
    grid_v: Optional[np.ndarray]
    grid_w2: Optional[np.ndarray]
    tail_constant: float
    tail_exponent: Tuple[float, int]
    v_max: float
    _interp: Optional[PchipInterpolator] = field(repr=False, default=None)
    _kernel: Optional[_ContinuousKernel] = field(repr=False, default=None)

    def w1(self, v) -> np.ndarray:
        return _w1_from_terms(self.discrete_terms, np.asarray(v, float))

    def w2_exact(self, v) -> np.ndarray:
        """Continuous part on an array of v, at quadrature-grid accuracy."""
        v = np.asarray(v, dtype=float)
        if not self.has_continuous:
            return np.zeros(v.shape)
        return self._kernel.w2(v).reshape(v.shape)

    def _w2_tail_model(self, v: np.ndarray) -> np.ndarray:
        power, logpow = self.tail_exponent
        out = self.tail_constant / np.power(v, power)
        if logpow:
            out = out / np.log(v) ** logpow
        return out

    def eval(self, v):
        """Kernel value w(v) = w1(v) + w2(v) for any v >= 0."""
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(arr < 0) or np.any(~np.isfinite(arr)):
            raise DomainError("kernel defined for finite v >= 0")
        out = _w1_from_terms(self.discrete_terms, arr)
        if self.has_continuous:
            inside = arr <= self.v_max
            if inside.any():
                out[inside] += self._interp(arr[inside])
            if (~inside).any():
                out[~inside] += self._w2_tail_model(arr[~inside])
        return float(out[0]) if np.isscalar(v) else out


def build_w(params: ModelParams, grid_ratio: float = 1.02) -> WLambdaRep:
    """Construct the kernel representation for 0 <= mu <= 10.

    Half-integer drifts produce a purely discrete kernel (possibly
    empty: identically zero for mu = 1/2); otherwise the continuous
    part is tabulated on a graded grid [0, v_max], v_max =
    max(50, 50/lam), with the theorem tail model beyond.
    """
    mu = params.mu
    zeros = k_zero_set(mu)
    terms = _discrete_terms(params, zeros)
    half = is_half_integer(mu)
    v_max = max(50.0, 50.0 / params.lam)
    tail_exp = (2.0 * mu + 2.0, 0) if mu > 0 else (2.0, 2)

    if half:
        return WLambdaRep(
            params=params, discrete_terms=terms, has_continuous=False,
            grid_v=None, grid_w2=None, tail_constant=0.0,
            tail_exponent=tail_exp, v_max=v_max)

    kernel = _ContinuousKernel(params)
    n = max(64, int(np.ceil(np.log(v_max / 1e-3) / np.log(grid_ratio))))
    grid_v = np.concatenate([[0.0], np.geomspace(1e-3, v_max, n)])
    grid_w2 = kernel.w2(grid_v)
    interp = PchipInterpolator(grid_v, grid_w2, extrapolate=False)
    return WLambdaRep(
        params=params, discrete_terms=terms, has_continuous=True,
        grid_v=grid_v, grid_w2=grid_w2,
        tail_constant=w2_tail_constant(params),
        tail_exponent=tail_exp, v_max=v_max,
        _interp=interp, _kernel=kernel)


# ---------------------------------------------------------------------
# moments

def _w1_kappa_moment(terms, lam: float, m: int, vcut: float = 0.0) -> float:
    """integral of kappa^m w1(v) dv over [vcut, infinity), exactly.

    kappa^m = sum_j C(m,j)(2 lam)^{m-j} v^{m+j} and each
    int_vcut^inf v^n e^{z v} dv = e^{z vcut} sum_r (n!/r!)
    vcut^r (-z)^{r-n-1}.
    """
    acc = 0.0 + 0.0j
    for a, z in terms:
        for j in range(m + 1):
            n = m + j
            binom = math.comb(m, j) * (2.0 * lam) ** (m - j)
            inner = sum(
                math.factorial(n) / math.factorial(r)
                * vcut ** r * (-z) ** (r - n - 1)
                for r in range(n + 1))
            acc += a * binom * np.exp(z * vcut) * inner
    return float(acc.real)


def w_moment(rep: WLambdaRep, m: int) -> float:
    """Moment integral of the kernel against kappa^m, kappa = v(2lam+v).

    m = 0 gives the plain integral of w (equals
    x^{mu-1/2}(mu^2 - 1/4)/(2x) for every mu >= 0); m = 1 equals
    2 x^{mu-1/2} for mu > 1/2; moments with 2 <= m < mu + 1/2 vanish.
    Integrability requires m <= mu + 1/2 for m >= 1.
    """
    if m < 0 or m != int(m):
        raise DomainError("moment order must be a nonnegative integer")
    m = int(m)
    mu, lam = rep.params.mu, rep.params.lam
    if m >= 1 and mu + 0.5 < m:
        raise DomainError(
            f"kappa^{m} w is not integrable for mu = {mu} (needs "
            f"mu + 1/2 >= {m})")
    val = _w1_kappa_moment(rep.discrete_terms, lam, m)
    if rep.has_continuous:
        kern = rep._kernel
        for j in range(m + 1):
            binom = math.comb(m, j) * (2.0 * lam) ** (m - j)
            val += (kern.coef * binom * math.factorial(m + j)
                    * kern.h_power_moment(-m - j))
    return val


def w_kappa_moment_tail(rep: WLambdaRep, m: int, vcut: float) -> float:
    """integral of kappa^m w(v) dv over [vcut, infinity).

    Same integrand as ``w_moment`` but starting at vcut; used by the
    density and Poisson modules to complete truncated v-integrals
    without losing relative accuracy (all terms carry one sign).
    """
    if vcut < 0:
        raise DomainError("vcut must be >= 0")
    if m < 0 or m != int(m):
        raise DomainError("moment order must be a nonnegative integer")
    m = int(m)
    mu, lam = rep.params.mu, rep.params.lam
    if m >= 1 and mu + 0.5 < m:
        raise DomainError(
            f"kappa^{m} w is not integrable for mu = {mu}")
    val = _w1_kappa_moment(rep.discrete_terms, lam, m, vcut=vcut)
    if rep.has_continuous:
        val += rep._kernel.w2_tail_kappa_moment(m, vcut, lam)
    return val


def _w1_power_moment(terms, p: int, vcut: float) -> float:
    """integral of v^p w1(v) dv over [vcut, infinity), exactly."""
    acc = 0.0 + 0.0j
    for a, z in terms:
        inner = sum(
            math.factorial(p) / math.factorial(r)
            * vcut ** r * (-z) ** (r - p - 1)
            for r in range(p + 1))
        acc += a * np.exp(z * vcut) * inner
    return float(acc.real)


def w_power_moment_tail(rep: WLambdaRep, p: int, vcut: float) -> float:
    """integral of v^p w(v) dv over [vcut, infinity).

    Plain power moments of the kernel tail; the survival and total-mass
    routines consume p = 0, 1 (and p = 2 as a cross-check).  For the
    continuous part v^p w2 is integrable when p < 2 mu + 1; p = 1 is
    also allowed at mu = 0, where the (v log v)^{-2} tail converges
    logarithmically and the swapped integral picks the limit up
    analytically.
    """
    if vcut < 0:
        raise DomainError("vcut must be >= 0")
    if p < 0 or p != int(p):
        raise DomainError("power must be a nonnegative integer")
    p = int(p)
    mu = rep.params.mu
    if rep.has_continuous:
        if mu == 0.0 and p > 1:
            raise DomainError(
                f"v^{p} w is not integrable for mu = 0 (needs p <= 1)")
        if mu > 0.0 and p >= 2.0 * mu + 1.0:
            raise DomainError(
                f"v^{p} w is not integrable for mu = {mu} (needs "
                f"p < 2 mu + 1)")
    val = _w1_power_moment(rep.discrete_terms, p, vcut)
    if rep.has_continuous:
        val += rep._kernel.w2_tail_power_moment(p, vcut)
    return val
