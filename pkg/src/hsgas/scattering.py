"""Hard-core Neumann problem on a ball and the derived radial profiles.

The ground state of -lap f = lam f on b <= |x| <= R with f(b) = 0 and
Neumann boundary at R is radial, f(r) = (R/r) sin(s(r-b))/sin(s(R-b))
with s = sqrt(lam) fixed by tan(s(R-b)) = s R.  Everything downstream
(omega = 1 - f, u = 1 - f^2, the soft potential, the long-range ratio)
is built from two such solutions at radii ell and ell0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import fourier_table_pieces, radial_fourier_pieces, radial_moment

RESIDUAL_TOL = 1e-12


class ParameterError(ValueError):
    """Gas parameters violating a validity constraint."""


class BracketError(RuntimeError):
    """Root bracketing for the eigenvalue equation failed."""


@dataclass(frozen=True)
class GasParameters:
    """Physical inputs on the unit torus.

    scattering_length is the interaction strength; the hard-core radius
    is scattering_length / particle_count.
    """

    scattering_length: float
    particle_count: int
    short_scale: float
    reference_scale: float

    def __post_init__(self):
        a, n, ell, ell0 = (
            self.scattering_length,
            self.particle_count,
            self.short_scale,
            self.reference_scale,
        )
        if not (a >= 0.0 and math.isfinite(a)):
            raise ParameterError(f"scattering length must be >= 0, got {a}")
        if n < 2:
            raise ParameterError(f"particle count must be >= 2, got {n}")
        if not ell0 <= 0.5:
            raise ParameterError(
                f"reference scale ell0={ell0} violates ell0 <= 1/2 "
                "(balls must fit inside the unit torus)"
            )
        if not ell < ell0:
            raise ParameterError(
                f"short scale ell={ell} violates ell < ell0={ell0}"
            )
        if not a / n < ell:
            raise ParameterError(
                f"hard-core radius a/N={a / n:g} violates a/N < ell={ell}"
            )
        if a > 0 and not (n ** (-1.0) <= ell <= n ** (-0.75)):
            warnings.warn(
                f"ell={ell:g} is outside the asymptotic window "
                f"[N^-1, N^-3/4] = [{n**-1.0:g}, {n**-0.75:g}]; "
                "error terms may not be small",
                stacklevel=2,
            )

    @property
    def hc_radius(self) -> float:
        return self.scattering_length / self.particle_count


@dataclass(frozen=True)
class NeumannSolution:
    """Ground-state eigenpair of the hard-core Neumann problem on B_R."""

    params: GasParameters
    ball_radius: float
    eigenvalue: float
    hc_radius: float

    @property
    def root(self) -> float:
        return math.sqrt(self.eigenvalue)

    @property
    def sin_sd(self) -> float:
        return math.sin(self.root * (self.ball_radius - self.hc_radius))

    def residual(self) -> float:
        """|tan(s(R-b)) - s R| of the defining equation."""
        if self.eigenvalue == 0.0:
            return 0.0
        s = self.root
        return abs(math.tan(s * (self.ball_radius - self.hc_radius)) - s * self.ball_radius)

    def f(self, r):
        """The eigenvector: 0 below the core, sine ratio inside, 1 outside."""
        r = np.asarray(r, dtype=float)
        b, R = self.hc_radius, self.ball_radius
        if self.eigenvalue == 0.0:
            return np.where(r <= b, 0.0, 1.0) if b > 0 else np.ones_like(r)
        s = self.root
        out = np.ones_like(r)
        inside = (r > b) & (r < R)
        ri = r[inside]
        out[inside] = (R / ri) * np.sin(s * (ri - b)) / self.sin_sd
        out[r <= b] = 0.0
        return out

    def omega(self, r):
        return 1.0 - self.f(r)

    def u(self, r):
        return 1.0 - self.f(r) ** 2

    def log_derivative_f(self, r):
        """f'/f on (b, R): s cot(s(r-b)) - 1/r."""
        r = np.asarray(r, dtype=float)
        u = r - self.hc_radius
        return x_cot_x(self.root * u) / u - 1.0 / r


def x_cot_x(x):
    """x cot(x), stable through x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    out = np.empty_like(x)
    xs = x[small]
    out[small] = 1.0 - xs * xs / 3.0 - xs**4 / 45.0
    xb = x[~small]
    out[~small] = xb / np.tan(xb)
    return out


def solve_neumann(params: GasParameters, ball_radius: float) -> NeumannSolution:
    """Smallest positive eigenvalue of the hard-core Neumann problem.

    Bisection on s = sqrt(lam) in (0, pi/(2(R-b))) to 1e-14 relative,
    then two Newton steps.  a = 0 has the trivial constant solution.
    """
    b = params.hc_radius
    R = ball_radius
    if not b < R:
        raise ParameterError(f"need hard-core radius {b:g} < ball radius {R:g}")
    if params.scattering_length == 0.0:
        return NeumannSolution(params, R, 0.0, 0.0)

    d = R - b

    def h(s):
        return math.tan(s * d) - s * R

    lo = 1e-12 * math.pi / (2 * d)
    hi = (1.0 - 1e-12) * math.pi / (2 * d)
    if not (h(lo) < 0.0 < h(hi)):
        raise BracketError(
            f"eigenvalue bracket failed on ({lo:g}, {hi:g}): "
            f"h(lo)={h(lo):g}, h(hi)={h(hi):g}"
        )
    while (hi - lo) > 1e-14 * hi:
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(2):
        s -= h(s) / (d / math.cos(s * d) ** 2 - R)
    return NeumannSolution(params, R, s * s, b)


def eval_f(solution: NeumannSolution, r):
    """Radial profile of the Neumann eigenvector at r."""
    return solution.f(r)


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise radial function with its breakpoints.

    Pieces are the open intervals between consecutive boundaries; the
    evaluator must be smooth on each piece (it may jump at boundaries,
    as the ball indicators do).
    """

    piece_boundaries: tuple[float, ...]
    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    @property
    def pieces(self) -> list[tuple[float, float]]:
        bnd = self.piece_boundaries
        return [(bnd[i], bnd[i + 1]) for i in range(len(bnd) - 1)]

    def __call__(self, r):
        return self.evaluator(np.asarray(r, dtype=float))

    @property
    def support_radius(self) -> float:
        return self.piece_boundaries[-1]


def profile_f(solution: NeumannSolution) -> RadialProfile:
    b, R = solution.hc_radius, solution.ball_radius
    return RadialProfile((0.0, b, R), solution.f, label=f"f[R={R:g}]")


def profile_omega(solution: NeumannSolution) -> RadialProfile:
    b, R = solution.hc_radius, solution.ball_radius
    return RadialProfile((0.0, b, R), solution.omega, label=f"omega[R={R:g}]")


def profile_u(solution: NeumannSolution) -> RadialProfile:
    b, R = solution.hc_radius, solution.ball_radius
    return RadialProfile((0.0, b, R), solution.u, label=f"u[R={R:g}]")


def profile_chi(R: float) -> RadialProfile:
    return RadialProfile((0.0, R), lambda r: np.ones_like(r), label=f"chi[R={R:g}]")


def radial_fourier(profile: RadialProfile, p_norm: float, tol: float = 1e-10) -> float:
    """(4 pi/p) \int r profile(r) sin(p r) dr, or the 4 pi \int r^2 rule at p=0."""
    if p_norm == 0.0:
        return radial_moment(profile.evaluator, profile.pieces, power=2)
    return radial_fourier_pieces(profile.evaluator, profile.pieces, p_norm, tol)


def fourier_table(profile: RadialProfile, p_norms, tol: float = 1e-10, workers: int = 1):
    """Vectorized radial_fourier over a whole list of shell norms."""
    return fourier_table_pieces(profile.evaluator, profile.pieces, p_norms, tol, workers)


@dataclass(frozen=True)
class ShellTable:
    """One radial coefficient per lattice shell up to a cutoff."""

    indices: np.ndarray
    multiplicities: np.ndarray
    norms: np.ndarray
    values: np.ndarray
    provenance: str
    n_max: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite coefficients in table ({self.provenance})")

    def value_at(self, n: int) -> float:
        i = np.searchsorted(self.indices, n)
        if i == len(self.indices) or self.indices[i] != n:
            raise KeyError(f"shell n={n} is empty or beyond n_max={self.n_max}")
        return float(self.values[i])


def chi_moment_hats(R: float, p_norm: float):
    """Closed-form transforms of chi_R, chi_R |x|^2 and chi_R |x|^-1."""
    if not 0.0 < R <= 0.5:
        raise ParameterError(f"ball radius must be in (0, 1/2], got {R}")
    p = p_norm
    if p == 0.0:
        return (
            4.0 * np.pi * R**3 / 3.0,
            4.0 * np.pi * R**5 / 5.0,
            2.0 * np.pi * R**2,
        )
    x = R * p
    sx, cx = np.sin(x), np.cos(x)
    chi = 4.0 * np.pi * R / p**2 * (sx / x - cx)
    chi_r2 = (
        4.0 * np.pi * R**3 / p**2 * (-6.0 * sx / x**3 + 6.0 * cx / x**2 + 3.0 * sx / x - cx)
    )
    chi_inv = 4.0 * np.pi / p**2 * (1.0 - cx)
    return chi, chi_r2, chi_inv


def chi_hat(R: float, p_norm):
    """Vectorized transform of the ball indicator alone."""
    p = np.asarray(p_norm, dtype=float)
    x = R * p
    return 4.0 * np.pi * R / p**2 * (np.sin(x) / x - np.cos(x))


def chi_r2_hat(R: float, p_norm):
    """Vectorized transform of chi_R |x|^2."""
    p = np.asarray(p_norm, dtype=float)
    x = R * p
    sx, cx = np.sin(x), np.cos(x)
    return 4.0 * np.pi * R**3 / p**2 * (
        -6.0 * sx / x**3 + 6.0 * cx / x**2 + 3.0 * sx / x - cx
    )


def chi_inv_hat(R: float, p_norm):
    """Vectorized transform of chi_R |x|^-1."""
    p = np.asarray(p_norm, dtype=float)
    return 4.0 * np.pi / p**2 * (1.0 - np.cos(R * p))


# relative distance to the removable point p^2 = lam below which the
# closed form switches to its Taylor evaluation
_SINGULAR_WINDOW = 1e-6


def omega_hat_closed(solution: NeumannSolution, p_norm):
    """Closed-form Fourier coefficient of omega = 1 - f.

    omega_hat(p) = lam/(lam - p^2) chi_hat_R(p)
                   - 4 pi sin(p b) / (p (lam - p^2) cos(s(R-b)))

    The point p^2 = lam is removable; inside a small window around it
    the numerator is evaluated by its Taylor series in (p - s).
    """
    p = np.asarray(p_norm, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p).astype(float)
    if np.any(p <= 0.0):
        raise ValueError("omega_hat_closed needs p > 0; use the p=0 moment rule")
    lam = solution.eigenvalue
    if lam == 0.0:
        out = np.zeros_like(p)
        return float(out[0]) if scalar else out

    b, R = solution.hc_radius, solution.ball_radius
    s = solution.root
    d = R - b
    sin_sd, cos_sd = math.sin(s * d), math.cos(s * d)

    out = np.empty_like(p)
    near = np.abs(p * p - lam) < _SINGULAR_WINDOW * p * p

    pf = p[~near]
    chi = chi_hat(R, pf)
    out[~near] = (lam * chi - 4.0 * np.pi * np.sin(pf * b) / (pf * cos_sd)) / (lam - pf * pf)

    if np.any(near):
        pn = p[near]
        t = pn - s
        # G(p) = p sin(sd) cos(pR) - s cos(sd) sin(pR) + s sin(pb); G(s) = 0
        cR, sR = math.cos(s * R), math.sin(s * R)
        cb, sb = math.cos(s * b), math.sin(s * b)
        g1 = sin_sd * cR - s * R * sin_sd * sR - s * R * cos_sd * cR + s * b * cb
        g2 = (
            -2.0 * R * sin_sd * sR
            - s * R * R * sin_sd * cR
            + s * R * R * cos_sd * sR
            - s * b * b * sb
        )
        g3 = (
            -3.0 * R * R * sin_sd * cR
            + s * R**3 * sin_sd * sR
            + s * R**3 * cos_sd * cR
            - s * b**3 * cb
        )
        g4 = (
            4.0 * R**3 * sin_sd * sR
            + s * R**4 * sin_sd * cR
            - s * R**4 * cos_sd * sR
            + s * b**4 * sb
        )
        # G(p)/(s - p), Taylor in t = p - s
        k = -(g1 + t * (g2 / 2.0 + t * (g3 / 6.0 + t * g4 / 24.0)))
        out[near] = chi_hat(R, pn) - (4.0 * np.pi * R / (pn * sin_sd)) * k / (s + pn)

    return float(out[0]) if scalar else out
