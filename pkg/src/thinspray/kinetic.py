"""Particle (characteristics) discretization of the droplet phase.

A cloud of weighted particles samples the droplet number density in phase
space.  Each particle carries a position on the torus, an unbounded velocity,
a number weight (droplets represented per unit phase-space sampling) and a
species tag: species 1 are the unit-radius parents, species 2 the radius-r2
fragments.  Drag relaxation uses the exact exponential update, so the stiff
small-radius limit costs nothing in dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial import cKDTree

from .errors import FieldError
from .grid import GridSpec, ScalarField, VectorField
from .transfer import cic_gather, cic_scatter, wrap_positions

PARENT_SPECIES = 1
FRAGMENT_SPECIES = 2


@dataclass
class ParticleCloud:
    x: np.ndarray        # (N, dim) positions in [0, length)
    xi: np.ndarray       # (N, dim) velocities
    w: np.ndarray        # (N,) nonnegative number weights
    species: np.ndarray  # (N,) int, 1 = radius one, 2 = radius r2

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.xi = np.atleast_2d(np.asarray(self.xi, dtype=np.float64))
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        self.species = np.asarray(self.species, dtype=np.int64).ravel()
        n = self.x.shape[0]
        if self.xi.shape != self.x.shape or self.w.shape != (n,) or self.species.shape != (n,):
            raise ValueError("particle arrays have inconsistent shapes")
        if n and self.w.min() < 0:
            raise ValueError("particle weights must be nonnegative")

    @property
    def count(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @classmethod
    def empty(cls, dim: int) -> "ParticleCloud":
        z = np.zeros((0, dim))
        return cls(z, z.copy(), np.zeros(0), np.zeros(0, dtype=np.int64))

    @classmethod
    def concatenate(cls, clouds) -> "ParticleCloud":
        clouds = [c for c in clouds if c.count]
        if not clouds:
            raise ValueError("nothing to concatenate")
        return cls(
            np.concatenate([c.x for c in clouds]),
            np.concatenate([c.xi for c in clouds]),
            np.concatenate([c.w for c in clouds]),
            np.concatenate([c.species for c in clouds]),
        )

    def select(self, mask: np.ndarray) -> "ParticleCloud":
        return ParticleCloud(self.x[mask], self.xi[mask], self.w[mask], self.species[mask])

    def copy(self) -> "ParticleCloud":
        return ParticleCloud(self.x.copy(), self.xi.copy(), self.w.copy(), self.species.copy())


@dataclass(frozen=True)
class TruncationSpec:
    """Smooth velocity-space cutoff: 1 inside |xi| <= 1/eps, 0 beyond 2/eps."""

    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"truncation eps must be positive, got {self.eps}")


def velocity_cutoff(xi: np.ndarray, eps: float) -> np.ndarray:
    """Radial C^2 bump in velocity space.

    Equals 1 for |xi| <= 1/eps, 0 for |xi| >= 2/eps, and decreases
    monotonically (quintic smoothstep) in between.
    """
    if not eps > 0:
        raise ValueError(f"cutoff eps must be positive, got {eps}")
    xi = np.asarray(xi, dtype=np.float64)
    single = xi.ndim == 1
    r = np.linalg.norm(np.atleast_2d(xi), axis=1)
    t = np.clip(r * eps - 1.0, 0.0, 1.0)
    out = 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    return float(out[0]) if single else out


def stokes_relax_time(r: float) -> float:
    """Velocity relaxation time of a droplet of radius r (normalized: r^2)."""
    if not r > 0:
        raise ValueError(f"droplet radius must be positive, got {r}")
    return r * r


def species_radius(species: np.ndarray, r2: float) -> np.ndarray:
    """Radius per particle: 1 for parents, r2 for fragments."""
    return np.where(species == FRAGMENT_SPECIES, r2, 1.0)


def species_mass_factor(species: np.ndarray, r2: float) -> np.ndarray:
    """Liquid volume carried per unit number weight: radius cubed."""
    return species_radius(species, r2) ** 3


def interpolate_velocity(u: VectorField, x: np.ndarray) -> np.ndarray:
    """Evaluate u at particle positions with the shared multilinear kernel."""
    vals = cic_gather(u, x)
    if not np.isfinite(vals).all():
        raise FieldError("interpolated velocity is non-finite")
    return vals


def advance_particles(cloud: ParticleCloud, u: VectorField, dt: float,
                      r2: float = 1.0) -> ParticleCloud:
    """Advance positions and velocities by one step of the drag dynamics.

    With the fluid velocity frozen at the particle position, the
    characteristics dx/dt = xi, dxi/dt = (u - xi)/r^2 integrate exactly:

        xi' = u + (xi - u) exp(-dt/r^2)
        x'  = x + dt u + r^2 (1 - exp(-dt/r^2)) (xi - u)

    Unconditionally stable as r -> 0 (xi' -> u, straight-line transport).
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if cloud.count == 0:
        return cloud.copy()
    up = interpolate_velocity(u, cloud.x)
    tau_p = np.where(cloud.species == FRAGMENT_SPECIES, stokes_relax_time(r2), 1.0)[:, None]
    decay = np.exp(-dt / tau_p)
    dxi = cloud.xi - up
    xi_new = up + dxi * decay
    x_new = cloud.x + dt * up + tau_p * (1.0 - decay) * dxi
    x_new = wrap_positions(u.grid, x_new)
    return ParticleCloud(x_new, xi_new, cloud.w.copy(), cloud.species.copy())


def absorb_and_fragment(cloud: ParticleCloud, dt: float, tau: float,
                        r2: float) -> tuple[ParticleCloud, ParticleCloud]:
    """Break up parent droplets into radius-r2 fragments.

    Parent weights decay by exp(-dt/tau); each parent spawns one fragment at
    its own (x, xi) carrying the lost weight amplified by 1/r2^3, so the
    liquid volume  sum(w1) + r2^3 sum(w2)  and the mass-weighted momentum are
    conserved exactly.  Species-2 members of the cloud pass through untouched.
    """
    if not tau > 0:
        raise ValueError(f"fragmentation time must be positive, got {tau}")
    if not 0 < r2 < 1:
        raise ValueError(f"fragment radius must lie in (0, 1), got {r2}")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    out = cloud.copy()
    parents = out.species == PARENT_SPECIES
    if dt == 0 or not parents.any():
        return out, ParticleCloud.empty(cloud.dim)
    w_old = out.w[parents]
    w_new = w_old * np.exp(-dt / tau)
    out.w[parents] = w_new
    spawned = ParticleCloud(
        out.x[parents].copy(),
        out.xi[parents].copy(),
        (w_old - w_new) / r2**3,
        np.full(parents.sum(), FRAGMENT_SPECIES, dtype=np.int64),
    )
    return out, spawned


def absorb_to_density(cloud: ParticleCloud, grid: GridSpec, dt: float,
                      rate: float = 1.0) -> tuple[ParticleCloud, ScalarField]:
    """Transfer droplet number into the carrier density.

    Weights decay by exp(-rate*dt); the released weight is deposited on the
    grid with the shared kernel, so the field integrates to exactly the total
    released weight (up to rounding).
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    out = cloud.copy()
    if dt == 0 or cloud.count == 0:
        return out, ScalarField.zeros(grid)
    w_new = out.w * np.exp(-rate * dt)
    released = out.w - w_new
    out.w = w_new
    field = ScalarField(grid, cic_scatter(grid, out.x, released))
    return out, field


def deposit_moments(cloud: ParticleCloud, grid: GridSpec,
                    truncation: TruncationSpec | None = None,
                    mass_weights: np.ndarray | None = None):
    """Deposit the number density m0 and momentum density m1 of the cloud.

    With a truncation, each particle's weight is multiplied by the smooth
    velocity cutoff before deposition.  `mass_weights` scales each particle
    (used for coupling-weighted multi-species deposits).  Returns a DragField.
    """
    from .fluid import DragField  # local import: fluid builds on this module

    if cloud.count == 0:
        return DragField(ScalarField.zeros(grid), VectorField.zeros(grid))
    w = cloud.w
    if truncation is not None:
        w = w * velocity_cutoff(cloud.xi, truncation.eps)
    if mass_weights is not None:
        w = w * mass_weights
    cols = np.concatenate([w[:, None], w[:, None] * cloud.xi], axis=1)
    dens = cic_scatter(grid, cloud.x, cols)
    m0 = ScalarField(grid, dens[..., 0])
    m1 = VectorField(grid, np.moveaxis(dens[..., 1:], -1, 0))
    return DragField(m0, m1)


def merge_particles(cloud: ParticleCloud, budget: int,
                    length: float = 2.0 * np.pi) -> tuple[ParticleCloud, float]:
    """Reduce the cloud to at most `budget` particles by pairwise merging.

    Nearest phase-space neighbours within one species are combined into a
    single particle conserving sum(w) and sum(w xi) exactly; positions use the
    periodic weighted mean on a torus of the given period.  Returns the merged
    cloud and the relative change of sum(w |xi|^2), the one moment a merge
    does not preserve.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if cloud.count <= budget:
        return cloud.copy(), 0.0
    m2_before = float(np.sum(cloud.w * np.sum(cloud.xi**2, axis=1)))
    out = cloud.copy()
    while out.count > budget:
        ids, counts = np.unique(out.species, return_counts=True)
        progress = False
        for sid in ids[np.argsort(-counts, kind="stable")]:
            group = np.flatnonzero(out.species == sid)
            merged = _merge_pass(out, group, out.count - budget, length)
            if merged is not None:
                out = merged
                progress = True
                break
        if not progress:  # no species has a pair left to merge
            break
    m2_after = float(np.sum(out.w * np.sum(out.xi**2, axis=1)))
    rel = abs(m2_after - m2_before) / max(abs(m2_before), 1e-300)
    return out, rel


def _merge_pass(cloud: ParticleCloud, group: np.ndarray, max_merges: int,
                length: float):
    """One greedy nearest-neighbour merge pass inside one species group."""
    if group.size < 2 or max_merges < 1:
        return None
    x = cloud.x[group]
    xi = cloud.xi[group]
    # balance the metric between position and velocity spread
    sx = max(x.std(), 1e-12)
    sv = max(xi.std(), 1e-12)
    z = np.concatenate([x / sx, xi / sv], axis=1)
    dist, nn = cKDTree(z).query(z, k=2)
    order = np.argsort(dist[:, 1], kind="stable")
    used = np.zeros(group.size, dtype=bool)
    pairs = []
    for i in order:
        j = nn[i, 1]
        if used[i] or used[j]:
            continue
        used[i] = used[j] = True
        pairs.append((i, j))
        if len(pairs) >= max_merges:
            break
    if not pairs:
        return None
    pairs = np.array(pairs)
    a, b = group[pairs[:, 0]], group[pairs[:, 1]]
    wa, wb = cloud.w[a], cloud.w[b]
    wsum = wa + wb
    safe = np.where(wsum > 0, wsum, 1.0)
    frac_b = np.where(wsum > 0, wb / safe, 0.5)
    xi_m = np.where(
        (wsum > 0)[:, None],
        (wa[:, None] * cloud.xi[a] + wb[:, None] * cloud.xi[b]) / safe[:, None],
        0.5 * (cloud.xi[a] + cloud.xi[b]),
    )
    delta = np.remainder(cloud.x[b] - cloud.x[a] + 0.5 * length, length) - 0.5 * length
    x_m = np.remainder(cloud.x[a] + frac_b[:, None] * delta, length)
    keep = np.ones(cloud.count, dtype=bool)
    keep[a] = False
    keep[b] = False
    return ParticleCloud(
        np.concatenate([cloud.x[keep], x_m]),
        np.concatenate([cloud.xi[keep], xi_m]),
        np.concatenate([cloud.w[keep], wsum]),
        np.concatenate([cloud.species[keep], cloud.species[a]]),
    )


def sample_gaussian_spray(grid: GridSpec, count: int, total_number: float,
                          mean_velocity, sigma: float, seed: int,
                          species: int = PARENT_SPECIES) -> ParticleCloud:
    """Sample a spray uniform in x with Gaussian velocities.

    Positions come from a seeded scrambled Halton sequence; velocities are
    Gaussian, then recentred and rescaled so the cloud's number, momentum and
    second moment match the analytic values exactly:

        sum w          = total_number
        sum w xi       = total_number * mean_velocity
        sum w |xi|^2   = total_number * (dim sigma^2 + |mean_velocity|^2)
    """
    from scipy.stats import qmc

    if count < 2:
        raise ValueError("need at least 2 particles to match moments")
    dim = grid.dim
    mean_velocity = np.broadcast_to(np.asarray(mean_velocity, dtype=np.float64), (dim,))
    halton = qmc.Halton(d=dim, scramble=True, seed=seed)
    x = halton.random(count) * grid.length
    rng = np.random.default_rng(seed + 1)
    xi = rng.standard_normal((count, dim))
    xi -= xi.mean(axis=0)
    if sigma > 0:
        current = np.sum(xi**2) / count
        xi *= sigma * np.sqrt(dim / current)
    else:
        xi[:] = 0.0
    xi += mean_velocity
    w = np.full(count, total_number / count)
    return ParticleCloud(x, xi, w, np.full(count, species, dtype=np.int64))


def characteristic_value_growth(t_final: float, dim: int = 3,
                                rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the phase-density value carried along one characteristic.

    The velocity field contracts phase-space volume at rate dim while
    absorption removes number at rate 1, so the pointwise value obeys
    df/dt = (dim - 1) f.  Returns (t, f/f0) from a high-order adaptive solve;
    the supremum bound over [0, T] is exp((dim-1) T).
    """
    sol = solve_ivp(lambda t, y: (dim - 1) * y, (0.0, t_final), [1.0],
                    method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)
    t = np.linspace(0.0, t_final, 201)
    return t, sol.sol(t)[0]
