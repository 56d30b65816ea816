"""Long-scale correlation layer built on top of two Neumann solutions.

The ratio g = f_ell0 / f_ell carries correlations between the short
scale ell and the reference scale ell0; eta_check = -N(1 - g) is its
centered, N-scaled version whose Fourier coefficients eta_p drive the
Bogoliubov layer.  The drift coefficients D_p are computed two ways: a
radial transform of the kernel

    D_check = -div[(f^2 - 1) grad eta_check]

and an independent lattice convolution -sum_r p.(p+r) u_hat(r) eta_{p+r};
their agreement, and the Fourier-side residual of the defining equation
for g, are the central correctness oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lattice
from .quadrature import ConvergenceError, radial_moment
from .scattering import (
    GasParameters,
    NeumannSolution,
    RadialProfile,
    ShellTable,
    fourier_table,
    radial_fourier,
    solve_neumann,
    x_cot_x,
)

# x cot x = 1 - sum a_k x^{2k}
_COT_COEFFS = (1.0 / 3.0, 1.0 / 45.0, 2.0 / 945.0, 1.0 / 4725.0, 2.0 / 93555.0)
_SERIES_CUT = 0.35


@dataclass(frozen=True)
class CorrelationProfiles:
    """All position-space profiles of the correlation layer."""

    params: GasParameters
    sol_ell: NeumannSolution
    sol_ell0: NeumannSolution
    g: RadialProfile
    eta_check: RadialProfile
    v_ell: RadialProfile
    d_check: RadialProfile

    @property
    def lam_ell(self) -> float:
        return self.sol_ell.eigenvalue

    @property
    def lam_ell0(self) -> float:
        return self.sol_ell0.eigenvalue

    def eta_derivative(self, r):
        """d/dr of eta_check, stable across the whole support."""
        p = self.params
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if p.scattering_length == 0.0:
            return out
        b = p.hc_radius
        mid = (r > b) & (r < p.short_scale)
        u = r[mid] - b
        out[mid] = (
            p.particle_count * self.g(r[mid]) * u * _cot_difference(
                self.sol_ell.eigenvalue, self.sol_ell0.eigenvalue, u
            )
        )
        outer = (r >= p.short_scale) & (r < p.reference_scale)
        ro = r[outer]
        s0 = self.sol_ell0.root
        out[outer] = (
            p.particle_count
            * self.sol_ell0.f(ro)
            * (x_cot_x(s0 * (ro - b)) / (ro - b) - 1.0 / ro)
        )
        return out


def _cot_difference(lam_hi, lam_lo, u):
    """(x cot x |_{s_lo u} - x cot x |_{s_hi u}) / u^2 without cancellation.

    Equals sum_k a_k (lam_hi^k - lam_lo^k) u^{2k-2}; the direct form
    loses all digits when both arguments are small, so a series is used
    below _SERIES_CUT.
    """
    u = np.asarray(u, dtype=float)
    x_hi = np.sqrt(lam_hi) * u
    x_lo = np.sqrt(lam_lo) * u
    out = np.empty_like(u)
    big = np.maximum(np.abs(x_hi), np.abs(x_lo)) >= _SERIES_CUT
    ub = u[big]
    out[big] = (x_cot_x(x_lo[big]) - x_cot_x(x_hi[big])) / (ub * ub)
    us2 = u[~big] ** 2
    acc = np.zeros_like(us2)
    for k in range(len(_COT_COEFFS) - 1, -1, -1):
        acc = acc * us2 + _COT_COEFFS[k] * (lam_hi ** (k + 1) - lam_lo ** (k + 1))
    out[~big] = acc
    return out


def build_profiles(params: GasParameters) -> CorrelationProfiles:
    """Solve both Neumann problems and assemble g, eta_check, V_ell, D_check."""
    sol_l = solve_neumann(params, params.short_scale)
    sol_0 = solve_neumann(params, params.reference_scale)
    n = params.particle_count
    b = params.hc_radius
    ell, ell0 = params.short_scale, params.reference_scale

    if params.scattering_length == 0.0:
        zero = lambda r: np.zeros_like(r)
        one = lambda r: np.ones_like(r)
        return CorrelationProfiles(
            params,
            sol_l,
            sol_0,
            g=RadialProfile((0.0, ell0), one, "g"),
            eta_check=RadialProfile((0.0, ell0), zero, "eta_check"),
            v_ell=RadialProfile((0.0, ell), zero, "V_ell"),
            d_check=RadialProfile((0.0, ell), zero, "D_check"),
        )

    s_l, s_0 = sol_l.root, sol_0.root
    lam_l, lam_0 = sol_l.eigenvalue, sol_0.eigenvalue
    sin_l, sin_0 = sol_l.sin_sd, sol_0.sin_sd
    # g on [b, ell]: the (r - b) zeros of both sines cancel exactly
    ratio_scale = (ell0 / ell) * (s_0 / s_l) * (sin_l / sin_0)

    def sinc(x):
        return np.sinc(x / np.pi)

    def g_eval(r):
        r = np.asarray(r, dtype=float)
        out = np.ones_like(r)
        inner = (r > b) & (r <= ell)
        u = r[inner] - b
        out[inner] = ratio_scale * sinc(s_0 * u) / sinc(s_l * u)
        out[r <= b] = ratio_scale
        outer = (r > ell) & (r < ell0)
        out[outer] = sol_0.f(r[outer])
        return out

    def eta_eval(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < ell0, n * (g_eval(r) - 1.0), 0.0)

    def v_eval(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < ell, 2.0 * n * lam_l * sol_l.f(r) ** 2, 0.0)

    def d_eval(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        mid = (r > b) & (r < ell)
        rm = r[mid]
        u = rm - b
        cross = _cot_difference(lam_l, lam_0, u) * (x_cot_x(s_l * u) - u / rm)
        out[mid] = (
            n
            * g_eval(rm)
            * ((lam_l - lam_0) * (1.0 - sol_l.f(rm) ** 2) - 2.0 * cross)
        )
        return out

    return CorrelationProfiles(
        params,
        sol_l,
        sol_0,
        g=RadialProfile((0.0, b, ell, ell0), g_eval, "g"),
        eta_check=RadialProfile((0.0, b, ell, ell0), eta_eval, "eta_check"),
        v_ell=RadialProfile((0.0, b, ell), v_eval, "V_ell"),
        d_check=RadialProfile((0.0, b, ell), d_eval, "D_check"),
    )


def ff0_profile(profiles: CorrelationProfiles, outer_radius: float) -> RadialProfile:
    """f_ell * f_ell0 restricted to [0, outer_radius].

    chi_R f_ell^2 g equals this product for R in {ell, ell0}, which is
    how both convolution coefficients reduce to radial transforms.
    """
    sol_l, sol_0 = profiles.sol_ell, profiles.sol_ell0
    b = profiles.params.hc_radius
    ell = profiles.params.short_scale

    def eval_(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < outer_radius, sol_l.f(r) * sol_0.f(r), 0.0)

    boundaries = (0.0, b, min(ell, outer_radius), outer_radius)
    boundaries = tuple(dict.fromkeys(boundaries))  # drop duplicates, keep order
    return RadialProfile(boundaries, eval_, f"f*f0[R={outer_radius:g}]")


def half_v_profile(profiles: CorrelationProfiles) -> RadialProfile:
    """N lam_ell chi_ell f^2 = V_ell / 2."""
    v = profiles.v_ell
    return RadialProfile(v.piece_boundaries, lambda r: 0.5 * v(r), "V_ell/2")


@dataclass
class CorrelationTables:
    """Per-shell Fourier tables of the correlation layer.

    vg_hat is (V_hat * g_hat)(p), computed as the transform of V_ell*g;
    chi0g_hat is N lam_ell0 (chi_ell0 f^2 ^ * g_hat)(p), the transform
    of N lam_ell0 chi_ell0 f^2 g.  g_hat(0) = 1 + eta_0 / N.
    """

    profiles: CorrelationProfiles
    n_max: int
    tol: float
    indices: np.ndarray
    multiplicities: np.ndarray
    norms: np.ndarray
    eta: ShellTable
    v_hat: ShellTable
    vg_hat: ShellTable
    chi0g_hat: ShellTable
    u_hat: ShellTable
    d_radial: ShellTable
    eta0: float
    v_hat0: float
    vg_hat0: float
    chi0g_hat0: float
    u_hat0: float
    interpolated_from: int | None = None
    interpolation_spot_check: float = 0.0

    @property
    def g_hat0(self) -> float:
        return 1.0 + self.eta0 / self.profiles.params.particle_count


def _shell_values(profile, norms, tol, workers, n_switch, rng_seed=20240):
    """Fourier table over all shells, with the optional log-grid path.

    Shells with |p| <= 2 pi sqrt(n_switch) are exact; beyond, the
    coefficient is sampled on a 2000-node logarithmic grid in |p| and
    filled in by monotone cubic interpolation.  Returns (values,
    spot_check_error) where the error is measured at up to 100 random
    interpolated shells.
    """
    exact = norms <= 2.0 * np.pi * np.sqrt(n_switch) + 1e-9
    if exact.all():
        return fourier_table(profile, norms, tol, workers), 0.0

    values = np.empty_like(norms)
    values[exact] = fourier_table(profile, norms[exact], tol, workers)
    hi = norms[~exact]
    grid = np.geomspace(hi.min() * 0.999, hi.max() * 1.001, 2000)
    gvals = fourier_table(profile, grid, tol, workers)
    from scipy.interpolate import PchipInterpolator

    interp = PchipInterpolator(np.log(grid), gvals)
    values[~exact] = interp(np.log(hi))

    rng = np.random.default_rng(rng_seed)
    n_check = min(100, hi.size)
    pick = rng.choice(hi.size, size=n_check, replace=False)
    ref = fourier_table(profile, hi[pick], tol, workers)
    err = float(np.max(np.abs(values[~exact][pick] - ref))) if n_check else 0.0
    return values, err


def build_tables(
    profiles: CorrelationProfiles,
    n_max: int,
    tol: float = 1e-10,
    workers: int = 1,
    n_switch: int = 1_000_000,
    u_hat_n_max: int | None = None,
) -> CorrelationTables:
    """Transform every correlation profile on all shells up to n_max."""
    ns, mult, norms = lattice.shell_arrays(n_max)
    prm = profiles.params
    n_part = prm.particle_count
    lam0 = profiles.lam_ell0

    eta_prof = profiles.eta_check
    v_prof = profiles.v_ell
    u_prof = RadialProfile(
        (0.0, prm.hc_radius, prm.short_scale),
        profiles.sol_ell.u,
        "u_ell",
    )
    ff0_l = ff0_profile(profiles, prm.short_scale)
    ff0_0 = ff0_profile(profiles, prm.reference_scale)
    lam_l = profiles.lam_ell

    spot = 0.0

    def table(profile, scale, name, override_norms=None, override=None):
        nonlocal spot
        t_norms = norms if override_norms is None else override_norms
        vals, err = _shell_values(profile, t_norms, tol, workers, n_switch)
        spot = max(spot, err)
        idx, m = (ns, mult) if override is None else override
        return ShellTable(idx, m, t_norms, scale * vals, name, n_max)

    eta_t = table(eta_prof, 1.0, "eta: quadrature")
    v_t = table(v_prof, 1.0, "V_hat: quadrature")
    vg_t = table(ff0_l, 2.0 * n_part * lam_l, "Vg_hat: quadrature of V*g")
    b_t = table(ff0_0, n_part * lam0, "chi0g_hat: quadrature of N lam0 chi0 f^2 g")
    d_t = table(profiles.d_check, 1.0, "D_p: radial transform of D_check")

    if u_hat_n_max is None or u_hat_n_max <= n_max:
        u_t = table(u_prof, 1.0, "u_hat: quadrature")
    else:
        nsu, multu, normsu = lattice.shell_arrays(u_hat_n_max)
        u_t = table(
            u_prof, 1.0, "u_hat: quadrature", normsu, (nsu, multu)
        )

    eta0 = radial_fourier(eta_prof, 0.0)
    return CorrelationTables(
        profiles=profiles,
        n_max=n_max,
        tol=tol,
        indices=ns,
        multiplicities=mult,
        norms=norms,
        eta=eta_t,
        v_hat=v_t,
        vg_hat=vg_t,
        chi0g_hat=b_t,
        u_hat=u_t,
        d_radial=d_t,
        eta0=eta0,
        v_hat0=radial_fourier(v_prof, 0.0),
        vg_hat0=2.0 * n_part * lam_l * radial_fourier(ff0_l, 0.0),
        chi0g_hat0=n_part * lam0 * radial_fourier(ff0_0, 0.0),
        u_hat0=radial_fourier(u_prof, 0.0),
        interpolated_from=n_switch if n_max > n_switch else None,
        interpolation_spot_check=spot,
    )


def eta_coefficient(profiles: CorrelationProfiles, p_norm: float, tol: float = 1e-10) -> float:
    """Fourier coefficient of eta_check at |p| = p_norm (p = 0 allowed)."""
    return radial_fourier(profiles.eta_check, p_norm, tol)


def d_coefficient_radial(profiles: CorrelationProfiles, p_norm: float, tol: float = 1e-10) -> float:
    """D_p through the radial transform of the drift kernel."""
    return radial_fourier(profiles.d_check, p_norm, tol)


def vg_coefficient(profiles: CorrelationProfiles, p_norm: float, tol: float = 1e-10) -> float:
    """(V_hat * g_hat)(p) as the transform of the product V_ell g."""
    scale = 2.0 * profiles.params.particle_count * profiles.lam_ell
    return scale * radial_fourier(ff0_profile(profiles, profiles.params.short_scale), p_norm, tol)


def chi0g_coefficient(profiles: CorrelationProfiles, p_norm: float, tol: float = 1e-10) -> float:
    """N lam_ell0 (chi_ell0 f^2 ^ * g_hat)(p) as a transform of the product."""
    scale = profiles.params.particle_count * profiles.lam_ell0
    return scale * radial_fourier(
        ff0_profile(profiles, profiles.params.reference_scale), p_norm, tol
    )


def scattering_residual(tables: CorrelationTables, profiles: CorrelationProfiles, p_norm: float) -> float:
    """Signed residual of p^2 eta_p + D_p + (Vg terms) on one shell.

    Uses the tabulated coefficients when p_norm is a table shell,
    otherwise evaluates all four transforms adaptively.  Exactly zero in
    exact arithmetic, so the value measures quadrature consistency.
    """
    i = np.searchsorted(tables.norms, p_norm)
    on_shell = (
        i < tables.norms.size and abs(tables.norms[i] - p_norm) < 1e-9 * p_norm
    )
    if on_shell:
        eta_p = tables.eta.values[i]
        d_p = tables.d_radial.values[i]
        half_w = 0.5 * tables.vg_hat.values[i]
        b_p = tables.chi0g_hat.values[i]
    else:
        tol = tables.tol
        eta_p = eta_coefficient(profiles, p_norm, tol)
        d_p = d_coefficient_radial(profiles, p_norm, tol)
        half_w = 0.5 * vg_coefficient(profiles, p_norm, tol)
        b_p = chi0g_coefficient(profiles, p_norm, tol)
    return p_norm**2 * eta_p + d_p + half_w - b_p


def flux_residual(profiles: CorrelationProfiles) -> float:
    """lam_ell int chi_ell f^2 g  -  lam_ell0 int chi_ell0 f^2 g.

    The p = 0 analogue of the scattering identity: the flux of
    f^2 grad g through both core and outer spheres vanishes.
    """
    prm = profiles.params
    inner = radial_moment(
        ff0_profile(profiles, prm.short_scale).evaluator,
        ff0_profile(profiles, prm.short_scale).pieces,
    )
    outer = radial_moment(
        ff0_profile(profiles, prm.reference_scale).evaluator,
        ff0_profile(profiles, prm.reference_scale).pieces,
    )
    return profiles.lam_ell * inner - profiles.lam_ell0 * outer


def d_coefficient_convolution(
    tables: CorrelationTables,
    p_vec,
    conv_cutoff: float,
):
    """D_p as the truncated lattice sum -sum_r p.(p+r) u_hat(r) eta_{p+r}.

    The sum keeps q = p + r with 0 < |q| <= conv_cutoff; the reported
    tail bound uses the fitted decay envelopes |eta_q| <= C_eta/(l^2 q^4)
    and |u_hat(r)| <= C_u/(N r^2).  Returns (value, tail_bound).
    """
    p_vec = np.asarray(p_vec, dtype=int)
    if p_vec.shape != (3,) or not p_vec.any():
        raise ValueError("p must be a nonzero integer vector (units of 2 pi)")
    q_index_max = int(np.floor((conv_cutoff / (2.0 * np.pi)) ** 2 + 1e-9))
    if q_index_max < 1:
        raise ConvergenceError(f"conv_cutoff={conv_cutoff:g} admits no shells")
    if q_index_max > tables.eta.n_max:
        raise ConvergenceError(
            f"eta table (n_max={tables.eta.n_max}) does not cover "
            f"|p+r| <= {conv_cutoff:g} (needs n={q_index_max})"
        )
    m_cube = int(np.ceil(np.sqrt(q_index_max))) + int(np.max(np.abs(p_vec)))
    r_index_max = 3 * m_cube * m_cube
    u_cov = int(tables.u_hat.indices[-1]) if tables.u_hat.indices.size else 0
    if r_index_max > u_cov:
        raise ConvergenceError(
            f"u_hat table (covers n<={u_cov}) too small for the r-cube "
            f"(needs n={r_index_max}); rebuild tables with u_hat_n_max>={r_index_max}"
        )

    eta_lookup = np.zeros(q_index_max + 1)
    eta_lookup[tables.eta.indices[tables.eta.indices <= q_index_max]] = (
        tables.eta.values[tables.eta.indices <= q_index_max]
    )
    u_lookup = np.zeros(r_index_max + 1)
    sel = tables.u_hat.indices <= r_index_max
    u_lookup[tables.u_hat.indices[sel]] = tables.u_hat.values[sel]
    u_lookup[0] = tables.u_hat0

    vx, vy, vz, r2, _ = lattice._cube_cache(m_cube)
    # include r = 0 explicitly (cube_arrays drops the origin)
    vx = np.concatenate([vx, [0]])
    vy = np.concatenate([vy, [0]])
    vz = np.concatenate([vz, [0]])
    r2 = np.concatenate([r2, [0]])
    qx, qy, qz = vx + p_vec[0], vy + p_vec[1], vz + p_vec[2]
    q2 = qx * qx + qy * qy + qz * qz
    keep = (q2 > 0) & (q2 <= q_index_max)
    p_dot_q = (
        4.0 * np.pi**2 * (p_vec[0] * qx + p_vec[1] * qy + p_vec[2] * qz)
    ).astype(float)
    terms = np.where(keep, p_dot_q * u_lookup[np.minimum(r2, r_index_max)]
                     * eta_lookup[np.where(keep, q2, 0)], 0.0)
    value = -float(np.sum(terms))

    prm = tables.profiles.params
    c_eta = _decay_constant(tables.eta, power=4) * prm.short_scale**2
    c_u = _decay_constant(tables.u_hat, power=2) * prm.particle_count
    p_norm = 2.0 * np.pi * float(np.linalg.norm(p_vec))
    tail = (
        2.0
        * p_norm
        * c_u
        * c_eta
        / (4.0 * np.pi**2 * prm.particle_count * prm.short_scale**2 * conv_cutoff**2)
    )
    return value, tail


def _decay_constant(table: ShellTable, power: int) -> float:
    """max |value| * |p|^power over the upper quarter of the table."""
    cut = table.norms >= 0.5 * table.norms[-1]
    if not cut.any():
        cut = slice(None)
    return float(np.max(np.abs(table.values[cut]) * table.norms[cut] ** power))
