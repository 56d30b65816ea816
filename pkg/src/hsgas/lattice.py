"""Momentum lattice 2 pi Z^3: shell decomposition and cube-cutoff iteration.

A shell collects all lattice vectors sharing a squared index n = |v|^2;
radial coefficient tables carry one value per shell, weighted by the
exact representation count r3(n).  Cube cutoffs (|v_i| <= M) are kept
separate because the conditionally convergent sums are defined through
them and their value depends on the cutoff shape.
"""

from __future__ import annotations

import functools
import math

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

# exact r3 tables are O(n sqrt(n)); past this the array alone is the
# least of the cost, so treat it as a resource ceiling
N_MAX_BUDGET = 2_000_000


class ResourceError(RuntimeError):
    """Shell enumeration request exceeding the configured memory budget."""


@dataclass(frozen=True)
class MomentumShell:
    """One squared-norm class of lattice vectors.

    index: n = |v|^2 on the integer index lattice, so |p|^2 = 4 pi^2 n
    on 2 pi Z^3 (or |p|^2 = n when the integer lattice itself is summed).
    """

    index: int
    multiplicity: int
    norm: float


@dataclass(frozen=True)
class CubeCutoff:
    """Per-coordinate bound |v_1|,|v_2|,|v_3| <= M."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("cube cutoff M must be >= 1")


def r3_multiplicities(n_max: int) -> np.ndarray:
    """Exact counts of v in Z^3 with |v|^2 = n, for n = 0..n_max.

    Two-stage convolution: r2 from a double loop over (x, y), then one
    z-loop.  Deterministic and O(n_max sqrt(n_max)).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_max > N_MAX_BUDGET:
        raise ResourceError(
            f"n_max={n_max} exceeds the shell-table budget {N_MAX_BUDGET}"
        )
    root = int(math.isqrt(n_max))
    r2 = np.zeros(n_max + 1, dtype=np.int64)
    for x in range(root + 1):
        x2 = x * x
        if x2 > n_max:
            break
        ymax = int(math.isqrt(n_max - x2))
        y = np.arange(ymax + 1)
        counts = np.full(ymax + 1, 4, dtype=np.int64)  # (+-x, +-y)
        if x == 0:
            counts //= 2
        counts[y == 0] //= 2
        np.add.at(r2, x2 + y * y, counts)
    r3 = np.zeros(n_max + 1, dtype=np.int64)
    for z in range(root + 1):
        z2 = z * z
        if z2 > n_max:
            break
        weight = 2 if z else 1
        r3[z2:] += weight * r2[: n_max + 1 - z2]
    return r3


def enumerate_shells(n_max: int, scale: float = TWO_PI) -> list[MomentumShell]:
    """All nonempty shells with 1 <= n <= n_max, ascending.

    Shells with r3(n) = 0 (n of the form 4^a(8b+7)) are omitted.
    `scale` converts the integer index to a momentum: norm = scale*sqrt(n).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    r3 = r3_multiplicities(n_max)
    return [
        MomentumShell(index=n, multiplicity=int(r3[n]), norm=scale * np.sqrt(n))
        for n in range(1, n_max + 1)
        if r3[n] > 0
    ]


def shell_arrays(n_max: int, scale: float = TWO_PI):
    """Vectorized shell data: (indices, multiplicities, norms), n ascending."""
    r3 = r3_multiplicities(n_max)
    ns = np.nonzero(r3[1:])[0] + 1
    return ns, r3[ns], scale * np.sqrt(ns.astype(float))


def cube_iterate(cutoff: CubeCutoff):
    """Walk the nonzero integer vectors of the cube in lexicographic order."""
    M = cutoff.M
    for vx in range(-M, M + 1):
        for vy in range(-M, M + 1):
            for vz in range(-M, M + 1):
                if vx == 0 and vy == 0 and vz == 0:
                    continue
                yield (vx, vy, vz)


@functools.lru_cache(maxsize=2)
def _cube_cache(M: int):
    return cube_arrays(CubeCutoff(M))


def cube_arrays(cutoff: CubeCutoff):
    """Vectorized cube contents: (vx, vy, vz, |v|^2, max_i |v_i|).

    Same lexicographic order as cube_iterate, origin removed.
    """
    M = cutoff.M
    rng = np.arange(-M, M + 1)
    vx, vy, vz = np.meshgrid(rng, rng, rng, indexing="ij")
    vx, vy, vz = vx.ravel(), vy.ravel(), vz.ravel()
    keep = (vx != 0) | (vy != 0) | (vz != 0)
    vx, vy, vz = vx[keep], vy[keep], vz[keep]
    n2 = vx * vx + vy * vy + vz * vz
    cheb = np.maximum(np.abs(vx), np.maximum(np.abs(vy), np.abs(vz)))
    return vx, vy, vz, n2, cheb


def cube_partial_sums(summand, m_max: int) -> np.ndarray:
    """S_M = sum over {v: 0 < max|v_i| <= M} of summand(|v|^2), M = 1..m_max.

    `summand` maps an integer array of squared norms to values.  All
    cutoffs are obtained from a single cube pass by grouping on the
    Chebyshev norm, so the sequence is exactly the cube-cutoff partial
    sums of the conditionally convergent series.
    """
    _, _, _, n2, cheb = cube_arrays(CubeCutoff(m_max))
    per_layer = np.bincount(cheb, weights=summand(n2), minlength=m_max + 1)
    return np.cumsum(per_layer)[1:]


def ball_partial_sums(summand, m_max: int) -> np.ndarray:
    """Ball-cutoff analogue (|v| <= M) of cube_partial_sums, for diagnostics."""
    _, _, _, n2, _ = cube_arrays(CubeCutoff(m_max))
    radius = np.floor(np.sqrt(n2.astype(float))).astype(np.int64)
    keep = radius <= m_max
    per_layer = np.bincount(
        radius[keep], weights=summand(n2[keep]), minlength=m_max + 1
    )
    return np.cumsum(per_layer)[1:]
