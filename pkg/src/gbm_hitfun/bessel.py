"""Modified Bessel functions, the gamma function, and zeros of K_mu.

Real-argument I_nu, K_nu and the gamma function delegate to scipy's
AMOS/Cephes routines, which already meet the accuracy contract; this
module adds the domain checking, the principal-branch complex K_nu, the
reversed Bessel polynomials of half-integer orders, and the zero set of
K_mu in the left half-plane.

The zero count follows the classical rule: K_mu has k_mu = mu - 1/2
zeros (in the cut plane) when mu - 1/2 is a nonnegative integer, and
otherwise k_mu is the even integer closest to mu - 1/2; in particular
no zeros at all for 0 <= mu < 3/2.  Zeros sit at moderate modulus with
strictly negative real part and never coincide with zeros of K_{mu-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special as sp

from .errors import DomainError, ZeroCountError

# psi(1) = -gamma, needed by the mu = 0 small-argument expansion
# K_0(u) = log(2/u) I_0(u) + psi(1) + o(1).
EULER_GAMMA = float(np.euler_gamma)

# Largest order for which the zero search grid below is tuned.
ORDER_CAP = 10.0

# Complex K_nu is only certified on a bounded disk: the zero finder and
# the discrete-weight amplitudes K_mu(x z_i) are the only complex
# consumers, and x |z_i| stays well inside this radius for x <= 5,
# mu <= ORDER_CAP.
MAX_COMPLEX_ABS = 200.0


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not np.isfinite(nu) or nu < 0:
        raise DomainError(f"order must be finite and >= 0, got {nu}")
    return nu


def bessel_i(nu: float, u: float) -> float:
    """Modified Bessel function I_nu(u) for real u > 0.

    Raises OverflowError when the true value exceeds double range
    (I_nu grows like e^u/sqrt(2 pi u)); raises DomainError for u <= 0.
    """
    nu = _check_order(nu)
    u = float(u)
    if not (u > 0) or not np.isfinite(u):
        raise DomainError(f"argument must be positive and finite, got {u}")
    val = float(sp.iv(nu, u))
    if np.isinf(val):
        raise OverflowError(f"I_{nu}({u}) exceeds double precision range")
    return val


def bessel_k(nu: float, u: float) -> float:
    """Modified Bessel function K_nu(u) for real u > 0."""
    nu = _check_order(nu)
    u = float(u)
    if not (u > 0) or not np.isfinite(u):
        raise DomainError(f"argument must be positive and finite, got {u}")
    return float(sp.kv(nu, u))


def bessel_k_complex(nu: float, z: complex) -> complex:
    """Principal-branch K_nu(z) on the cut plane C minus (-inf, 0].

    Certified for |z| <= MAX_COMPLEX_ABS; agrees with bessel_k on the
    positive real axis.
    """
    nu = _check_order(nu)
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise DomainError("argument must be finite")
    if z.imag == 0.0 and z.real <= 0.0:
        raise DomainError(f"z = {z} lies on the branch cut (-inf, 0]")
    if abs(z) > MAX_COMPLEX_ABS:
        raise DomainError(
            f"|z| = {abs(z):.3g} exceeds the supported radius "
            f"{MAX_COMPLEX_ABS:g}")
    return complex(sp.kv(nu, z))


def gamma_fn(s: float) -> float:
    """Gamma function for s > 0."""
    s = float(s)
    if not (s > 0) or not np.isfinite(s):
        raise DomainError(f"gamma_fn needs s > 0, got {s}")
    return float(sp.gamma(s))


def is_half_integer(mu: float, tol: float = 1e-12) -> bool:
    """True when mu - 1/2 is a nonnegative integer (within tol)."""
    m = mu - 0.5
    return m >= -tol and abs(m - round(m)) <= tol


def k_zero_count(mu: float) -> int:
    """Number of zeros of K_mu in the cut plane.

    mu - 1/2 itself when that is a nonnegative integer, otherwise the
    even integer closest to mu - 1/2 (zero for mu < 3/2).
    """
    mu = _check_order(mu)
    if is_half_integer(mu):
        return int(round(mu - 0.5))
    if mu < 1.5:
        return 0
    return int(round((mu - 0.5) / 2.0)) * 2


def reversed_bessel_theta(m: int) -> np.ndarray:
    """Coefficients of the reversed Bessel polynomial theta_m.

    K_{m+1/2}(z) = sqrt(pi/2z) e^{-z} theta_m(1/z) with
    theta_m(w) = sum_j (m+j)! / ((m-j)! j! 2^j) w^j.  Returned ascending
    in w, exact integers as floats.
    """
    if m < 0 or m != int(m):
        raise DomainError(f"degree must be a nonnegative integer, got {m}")
    m = int(m)
    return np.array([
        math.factorial(m + j) / (math.factorial(m - j) * math.factorial(j)
                                 * 2.0 ** j)
        for j in range(m + 1)
    ])


def theta_eval(m: int, w) -> np.ndarray:
    """Evaluate theta_m at w (real or complex, scalar or array)."""
    return np.polyval(reversed_bessel_theta(m)[::-1], w)


@dataclass(frozen=True)
class KZeroSet:
    """Zeros of K_mu in the left half-plane, conjugation-closed.

    zeros are sorted by (real part, imaginary part); conjugate pairs are
    constructed exactly so closure under conjugation holds bit for bit.
    """

    order: float
    zeros: Tuple[complex, ...]
    count: int

    def __post_init__(self):
        if self.count != len(self.zeros):
            raise ZeroCountError(
                f"count {self.count} != {len(self.zeros)} zeros stored")


def _pair_and_sort(upper: np.ndarray, real_zeros: np.ndarray) -> Tuple[complex, ...]:
    zs = [complex(z.real, 0.0) for z in np.sort(real_zeros.real)]
    for z in upper:
        zs.append(complex(z.real, abs(z.imag)))
        zs.append(complex(z.real, -abs(z.imag)))
    zs.sort(key=lambda z: (z.real, z.imag))
    return tuple(zs)


def _newton_polish(mu: float, z: np.ndarray, steps: int = 4) -> np.ndarray:
    # K_nu' = -(K_{nu-1} + K_{nu+1})/2; K_{-nu} = K_nu
    for _ in range(steps):
        f = sp.kv(mu, z)
        fp = -0.5 * (sp.kv(abs(mu - 1.0), z) + sp.kv(mu + 1.0, z))
        z = z - f / fp
    return z


def _half_integer_zeros(mu: float) -> Tuple[complex, ...]:
    m = int(round(mu - 0.5))
    if m == 0:
        return ()
    # z^m theta_m(1/z) is a degree-m polynomial in z with the same
    # nonzero roots as K_{m+1/2}
    coeff = reversed_bessel_theta(m)
    roots = np.roots(coeff)
    roots = _newton_polish(mu, roots.astype(complex))
    upper = roots[roots.imag > 1e-9]
    real_zeros = roots[np.abs(roots.imag) <= 1e-9]
    return _pair_and_sort(upper, real_zeros)


def _search_zeros(mu: float) -> Tuple[complex, ...]:
    radius = 3.0 * mu + 4.0
    re = np.arange(-radius, -0.05 + 1e-12, 0.4)
    im = np.arange(0.05, radius + 1e-12, 0.4)
    z = (re[:, None] + 1j * im[None, :]).ravel()

    for _ in range(60):
        f = sp.kv(mu, z)
        fp = -0.5 * (sp.kv(abs(mu - 1.0), z) + sp.kv(mu + 1.0, z))
        step = f / fp
        mag = np.abs(step)
        step = np.where(mag > 0.5, step * (0.5 / np.maximum(mag, 0.5)), step)
        z = z - step
        ok = (np.isfinite(z) & (z.real < -1e-3)
              & (np.abs(z) < 2.0 * radius) & (np.abs(z) > 1e-3))
        z = z[ok]
        if z.size == 0:
            break

    if z.size:
        f = sp.kv(mu, z)
        fp = -0.5 * (sp.kv(abs(mu - 1.0), z) + sp.kv(mu + 1.0, z))
        z = z[np.abs(f / fp) < 1e-9 * (1.0 + np.abs(z))]
    # keep one representative per zero from the upper half-plane
    z = z[z.imag > 1e-3]
    z = z[np.argsort(z.real + 1e-6 * z.imag)]
    picked = []
    for zi in z:
        if all(abs(zi - p) > 1e-6 for p in picked):
            picked.append(zi)
    return _pair_and_sort(_newton_polish(mu, np.array(picked))
                          if picked else np.array([]), np.array([]))


def k_zero_set(mu: float) -> KZeroSet:
    """All zeros of K_mu in the cut plane, for 0 <= mu <= ORDER_CAP.

    Half-integer orders come from the reversed Bessel polynomial, other
    orders from Newton iteration seeded over a left-half-plane grid; in
    both cases the count is validated against the classical rule and a
    mismatch raises ZeroCountError.
    """
    mu = _check_order(mu)
    if mu > ORDER_CAP:
        raise DomainError(
            f"order {mu} exceeds the supported cap {ORDER_CAP:g}; the "
            "zero-search grid is not tuned beyond it")
    expected = k_zero_count(mu)
    if expected == 0:
        return KZeroSet(order=mu, zeros=(), count=0)
    zeros = (_half_integer_zeros(mu) if is_half_integer(mu)
             else _search_zeros(mu))
    if len(zeros) != expected:
        raise ZeroCountError(
            f"found {len(zeros)} zeros of K_{mu}, expected {expected}",
            estimate=zeros)
    return KZeroSet(order=mu, zeros=zeros, count=expected)
