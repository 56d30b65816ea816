"""Quadratic-Hamiltonian coefficients and their diagonalization.

Per shell the pair (F_p, G_p) is built from the correlation tables with
the hyperbolic amplitudes sigma = sinh(eta_p), gamma = cosh(eta_p); the
mixing angle tau_p kills the off-diagonal part and the dispersion is
eps_p = sqrt(F_p^2 - G_p^2).  The vacuum of the diagonal form sits
(1/2) sum_p [eps_p - F_p] below the normal-ordered quadratic form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationTables
from .quadrature import ConvergenceError


class ModelRegimeError(RuntimeError):
    """Spectral gap F_p > |G_p| violated on some shell."""


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Per-shell record of the quadratic form and its diagonalization."""

    indices: np.ndarray
    multiplicities: np.ndarray
    norms: np.ndarray
    eta: np.ndarray
    d: np.ndarray
    w: np.ndarray  # (V_hat * g_hat)(p)
    sigma: np.ndarray
    gamma: np.ndarray
    f_coef: np.ndarray
    g_coef: np.ndarray
    tau: np.ndarray
    dispersion: np.ndarray


def build_coefficients(tables: CorrelationTables) -> QuadraticCoefficients:
    """Assemble F_p, G_p, tau_p, eps_p on every tabulated shell.

    Raises ModelRegimeError (naming the first offending shell) if the
    gap F_p > |G_p| fails anywhere.
    """
    p2 = tables.norms**2
    eta = tables.eta.values
    d = tables.d_radial.values
    w = tables.vg_hat.values
    sigma = np.sinh(eta)
    gamma = np.cosh(eta)
    plus_sq = (gamma + sigma) ** 2

    f_coef = p2 * (sigma**2 + gamma**2) + w * plus_sq
    g_coef = 2.0 * p2 * gamma * sigma + w * plus_sq + 2.0 * d

    bad = f_coef <= np.abs(g_coef)
    if bad.any():
        i = int(np.argmax(bad))
        raise ModelRegimeError(
            f"no spectral gap on shell n={tables.indices[i]}: "
            f"F={f_coef[i]:g}, G={g_coef[i]:g}"
        )

    ratio = g_coef / f_coef
    tau = 0.25 * (np.log1p(-ratio) - np.log1p(ratio))
    eps = np.sqrt(f_coef - g_coef) * np.sqrt(f_coef + g_coef)
    return QuadraticCoefficients(
        indices=tables.indices,
        multiplicities=tables.multiplicities,
        norms=tables.norms,
        eta=eta,
        d=d,
        w=w,
        sigma=sigma,
        gamma=gamma,
        f_coef=f_coef,
        g_coef=g_coef,
        tau=tau,
        dispersion=eps,
    )


def dispersion(coeffs: QuadraticCoefficients, shell: int) -> float:
    """eps_p on the shell with index n = shell."""
    i = np.searchsorted(coeffs.indices, shell)
    if i == len(coeffs.indices) or coeffs.indices[i] != shell:
        raise KeyError(f"shell n={shell} not tabulated")
    return float(coeffs.dispersion[i])


def dispersion_reference(a: float, p_norm):
    """The closed-form excitation law sqrt(|p|^4 + 16 pi a p^2)."""
    p2 = np.asarray(p_norm, dtype=float) ** 2
    return np.sqrt(p2 * p2 + 16.0 * np.pi * a * p2)


def a_coefficient(coeffs: QuadraticCoefficients) -> np.ndarray:
    """A_p = -4 D_p (W_p (gamma+sigma)^2 + D_p + 2 p^2 gamma sigma).

    Satisfies F_p^2 - G_p^2 = |p|^4 + 2 p^2 W_p + A_p identically.
    """
    plus_sq = (coeffs.gamma + coeffs.sigma) ** 2
    return -4.0 * coeffs.d * (
        coeffs.w * plus_sq + coeffs.d + 2.0 * coeffs.norms**2 * coeffs.gamma * coeffs.sigma
    )


def diagonalization_residuals(coeffs: QuadraticCoefficients):
    """(diagonal, off-diagonal) residuals of the tau_p rotation.

    diagonal: F cosh(2 tau) + G sinh(2 tau) - eps, relative to eps;
    off-diagonal: F sinh(2 tau) + G cosh(2 tau), relative to F.
    """
    c2, s2 = np.cosh(2.0 * coeffs.tau), np.sinh(2.0 * coeffs.tau)
    diag = (coeffs.f_coef * c2 + coeffs.g_coef * s2 - coeffs.dispersion) / coeffs.dispersion
    off = (coeffs.f_coef * s2 + coeffs.g_coef * c2) / coeffs.f_coef
    return diag, off


def vacuum_quadratic_shift(coeffs: QuadraticCoefficients, tail_tol: float | None = None):
    """(1/2) sum_p [ -F_p + eps_p ] with a fitted p^-6 tail estimate.

    Each summand is -G^2/(F + eps) <= 0.  Returns (value, tail
    estimate); raises ConvergenceError when a tail tolerance is given
    and exceeded.
    """
    summand = -0.5 * coeffs.g_coef**2 / (coeffs.f_coef + coeffs.dispersion)
    value = float(np.dot(coeffs.multiplicities.astype(float), summand))
    tail = _p6_tail(coeffs.norms, summand)
    if tail_tol is not None and tail > tail_tol:
        raise ConvergenceError(
            f"vacuum-shift tail estimate {tail:g} exceeds tolerance {tail_tol:g}; "
            "increase n_max"
        )
    return value, tail


def _p6_tail(norms: np.ndarray, summand: np.ndarray) -> float:
    """Tail of a shell sum whose summand decays like C/p^6.

    Fits C on the upper quarter of the table and integrates the lattice
    density: sum_{|p|>P} C/p^6 ~ C / (6 pi^2 P^3).
    """
    if norms.size == 0:
        return 0.0
    cut = norms >= 0.5 * norms[-1]
    c6 = float(np.max(np.abs(summand[cut]) * norms[cut] ** 6))
    big_p = float(norms[-1])
    return c6 / (6.0 * np.pi**2 * big_p**3)
