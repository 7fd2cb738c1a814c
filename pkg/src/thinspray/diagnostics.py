"""Moments, conservation budgets, and inequality checks.

Kinetic integrals are evaluated as particle sums (the cloud is the
quadrature); grid integrals use the trapezoid rule, which is spectrally
exact for periodic fields.  The budget helpers reconstruct the continuous
identities satisfied by the coupled system and report their discrete
residuals, which scale first order in dt for the splitting used here.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .fluid import FluidState
from .grid import (
    GridSpec,
    ScalarField,
    VectorField,
    divergence_residual,
    grad_l2_norm_sq,
    integral,
    mollify,
)
from .kinetic import (
    ParticleCloud,
    interpolate_velocity,
    species_mass_factor,
    velocity_cutoff,
)
from .transfer import cic_gather, cic_scatter

BALL_VOLUME_FACTOR = 4.0 * np.pi / 3.0


@dataclass
class DiagnosticsRecord:
    """One row of per-step diagnostics.

    Spray kinetic energy and drag dissipation are mass-weighted over species
    (unit parents, r2^3 fragments); the drag dissipation carries the
    per-species relaxation weights so the energy budget closes with a single
    scenario coefficient.
    """

    t: float
    e_kinetic_spray: float   # 0.5 * mass-weighted M2 of the spray
    e_fluid: float           # 0.5 * integral (1 + rho) |u|^2
    dissipation_visc: float  # nu * integral |grad u|^2
    dissipation_drag: float  # species-weighted integral |u - xi|^2 f
    m0: float
    m1: np.ndarray           # (dim,) number-weighted momentum of the spray
    m2: float
    total_momentum: np.ndarray  # (dim,) mass-weighted spray + (1+rho) fluid
    mass_f: float            # number of droplets (sum of weights)
    mass_rho: float          # integral of the added density
    div_residual: float

    def scalars(self) -> dict:
        """Flatten to plain floats with stable per-axis column names."""
        out = {}
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                for ax, comp in enumerate(v):
                    out[f"{f.name}_{'xyz'[ax]}"] = float(comp)
            else:
                out[f.name] = float(v)
        return out


def cloud_moments(cloud: ParticleCloud, mass_weights: np.ndarray | None = None):
    """(M0, M1 vector, M2) particle sums, optionally mass-weighted."""
    if cloud.count == 0:
        return 0.0, np.zeros(cloud.dim), 0.0
    w = cloud.w if mass_weights is None else cloud.w * mass_weights
    m0 = float(w.sum())
    m1 = (w[:, None] * cloud.xi).sum(axis=0)
    m2 = float(np.sum(w * np.sum(cloud.xi**2, axis=1)))
    return m0, m1, m2


def compute_moments(cloud: ParticleCloud, grid: GridSpec,
                    alpha: float) -> tuple[ScalarField, float]:
    """Moment of order alpha: local field sum(w |xi|^alpha) and its integral."""
    if alpha < 0:
        raise ValueError("moment order must be nonnegative for particle data")
    if cloud.count == 0:
        return ScalarField.zeros(grid), 0.0
    speed = np.linalg.norm(cloud.xi, axis=1)
    q = cloud.w * speed**alpha
    field = ScalarField(grid, cic_scatter(grid, cloud.x, q))
    return field, float(q.sum())


def collect_record(t: float, fluid: FluidState, cloud: ParticleCloud,
                   rho: ScalarField | None, *, r2: float = 1.0, nu: float = 1.0,
                   drag_weight_parents: float = 1.0,
                   drag_weight_fragments: float | None = None) -> DiagnosticsRecord:
    """Measure every budget ingredient for the current coupled state.

    drag_weight_* are the per-species factors multiplying |u - xi|^2 f in the
    dissipation (1 for the limit system; 1 and r2 for the two-radius system).
    """
    u = fluid.u
    grid = u.grid
    rho_vals = np.zeros(grid.shape) if rho is None else rho.values

    if cloud.count:
        mass_fac = species_mass_factor(cloud.species, r2)
        m0, m1, m2 = cloud_moments(cloud)
        _, m1_mass, m2_mass = cloud_moments(cloud, mass_fac)
        up = interpolate_velocity(u, cloud.x)
        # |u|^2 is interpolated with the deposit kernel (not squared after
        # interpolation) so the grid pairing <u^2, m0> equals this particle
        # sum exactly and the drag work cancels from the energy budget;
        # Jensen keeps the result nonnegative.
        u_sq = ScalarField(grid, np.sum(u.values**2, axis=0))
        g2 = cic_gather(u_sq, cloud.x)
        slip_sq = g2 - 2.0 * np.sum(up * cloud.xi, axis=1) \
            + np.sum(cloud.xi**2, axis=1)
        if drag_weight_fragments is None:
            drag_w = np.full(cloud.count, drag_weight_parents)
        else:
            drag_w = np.where(cloud.species == 2, drag_weight_fragments,
                              drag_weight_parents)
        dissipation_drag = float(np.sum(cloud.w * drag_w * slip_sq))
    else:
        m0, m1, m2 = 0.0, np.zeros(grid.dim), 0.0
        m1_mass, m2_mass = np.zeros(grid.dim), 0.0
        dissipation_drag = 0.0

    fluid_momentum = integral(VectorField(grid, (1.0 + rho_vals) * u.values))
    e_fluid = 0.5 * float(np.sum((1.0 + rho_vals) * np.sum(u.values**2, axis=0))) \
        * grid.cell_volume

    return DiagnosticsRecord(
        t=t,
        e_kinetic_spray=0.5 * m2_mass,
        e_fluid=e_fluid,
        dissipation_visc=nu * grad_l2_norm_sq(u),
        dissipation_drag=dissipation_drag,
        m0=m0,
        m1=np.asarray(m1, dtype=float),
        m2=m2,
        total_momentum=np.asarray(m1_mass + fluid_momentum, dtype=float),
        mass_f=m0,
        mass_rho=float(integral(rho)) if rho is not None else 0.0,
        div_residual=divergence_residual(u),
    )


def energy_budget(records: Sequence[DiagnosticsRecord],
                  drag_coefficient: float = 1.5) -> np.ndarray:
    """Residual of the energy identity at each record time.

    residual(t) = E(t) + int_0^t [dissipation_visc + c * dissipation_drag]
                  - E(0),

    with E = e_kinetic_spray + e_fluid and c the scenario drag coefficient
    (3/2 for the single-species limit, 1 for the two-radius system, whose
    species weights already sit inside dissipation_drag).  Zero for the exact
    dynamics; first order in dt for the discrete splitting.
    """
    t = np.array([r.t for r in records])
    if not np.all(np.diff(t) > 0):
        raise ValueError("record times must be strictly increasing")
    energy = np.array([r.e_kinetic_spray + r.e_fluid for r in records])
    dissipation = np.array(
        [r.dissipation_visc + drag_coefficient * r.dissipation_drag for r in records]
    )
    cumulative = np.concatenate([[0.0], cumulative_trapezoid(dissipation, t)])
    return energy + cumulative - energy[0]


def momentum_budget(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """Drift of the conserved total momentum, (num_records, dim)."""
    p = np.stack([r.total_momentum for r in records])
    return p - p[0]


def momentum_tolerance(records: Sequence[DiagnosticsRecord], dt: float,
                       coefficient: float = 4.0) -> float:
    """First-order splitting tolerance for the momentum drift.

    The drag impulse exchanged up to time T is bounded by
    int 2 sqrt(M0 * dissipation_drag) (Cauchy-Schwarz); the splitting error
    is that impulse times O(dt).  The fluid-only benchmark cannot calibrate
    this budget (its drift is identically zero), so the tolerance scales with
    the run's own exchange magnitude.
    """
    t = np.array([r.t for r in records])
    rate = np.array([2.0 * np.sqrt(max(r.m0, 0.0) * max(r.dissipation_drag, 0.0))
                     for r in records])
    impulse = np.concatenate([[0.0], cumulative_trapezoid(rate, t)])
    return coefficient * dt * float(impulse[-1]) + 1e-14


def liquid_volume(cloud: ParticleCloud, r2: float) -> float:
    """Total liquid volume: sum of weights times radius cubed."""
    if cloud.count == 0:
        return 0.0
    return float(np.sum(cloud.w * species_mass_factor(cloud.species, r2)))


@dataclass
class RadialDensity:
    """Piecewise-constant radial velocity-space density on [0, edges[-1]].

    edges are increasing shell boundaries starting at 0; values[j] is the
    density on [edges[j], edges[j+1]).  Moments integrate exactly:
    m_alpha = 4 pi sum_j values[j] (edges[j+1]^(a+3) - edges[j]^(a+3)) / (a+3).
    """

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.edges[0] != 0.0 or np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must increase from 0")
        if self.values.size != self.edges.size - 1:
            raise ValueError("need one value per shell")
        if self.values.size and self.values.min() < 0:
            raise ValueError("radial density must be nonnegative")

    def moment(self, alpha: float) -> float:
        p = alpha + 3.0
        shells = (self.edges[1:] ** p - self.edges[:-1] ** p) / p
        return float(4.0 * np.pi * np.sum(self.values * shells))

    def sup(self) -> float:
        return float(self.values.max(initial=0.0))


def radial_histogram(cloud: ParticleCloud, volume_x: float,
                     nbins: int = 32) -> RadialDensity:
    """Space-averaged radial phase density reconstructed from a cloud.

    Bins sum(w) into speed shells and divides by (spatial volume x shell
    volume), yielding a bounded nonnegative radial density whose exact shell
    moments approximate the cloud's.
    """
    speed = np.linalg.norm(cloud.xi, axis=1)
    top = max(float(speed.max(initial=0.0)) * 1.0001, 1e-12)
    edges = np.linspace(0.0, top, nbins + 1)
    counts, _ = np.histogram(speed, bins=edges, weights=cloud.w)
    shell_vol = BALL_VOLUME_FACTOR * (edges[1:] ** 3 - edges[:-1] ** 3)
    return RadialDensity(edges, counts / (volume_x * shell_vol))


def check_moment_bound(h: RadialDensity, alpha: float,
                       gamma: float) -> tuple[float, float, bool]:
    """Interpolation bound between velocity moments of a bounded density.

    For 0 <= alpha < gamma the moments of any bounded nonnegative h satisfy

        m_alpha <= ((4/3) pi sup h + 1) * m_gamma ^ ((alpha+3)/(gamma+3))

    (split the integral at R = m_gamma^(1/(gamma+3)) and bound each part).
    Returns (lhs, rhs, lhs <= rhs within 1e-9 relative slack).
    """
    if not 0 <= alpha < gamma:
        raise ValueError("need 0 <= alpha < gamma")
    lhs = h.moment(alpha)
    m_gamma = h.moment(gamma)
    rhs = (BALL_VOLUME_FACTOR * h.sup() + 1.0) * m_gamma ** ((alpha + 3.0) / (gamma + 3.0))
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-9)


@dataclass
class GronwallProblem:
    """Comparison problem z' = f(z), z(0) = z0.

    Without an explicit f, the power-law right-hand side a * z^(1+gamma) with
    z0 = a is used (the closed-form blow-up family).
    """

    a: float
    gamma: float
    f: Callable[[float], float] | None = None
    z0: float | None = None

    def __post_init__(self):
        if not (self.a > 0 and self.gamma > 0):
            raise ValueError("need a > 0 and gamma > 0")

    @property
    def initial(self) -> float:
        return self.a if self.z0 is None else self.z0

    def rhs(self, z: float) -> float:
        if self.f is not None:
            return self.f(z)
        return self.a * z ** (1.0 + self.gamma)


@dataclass
class GronwallResult:
    passed: bool
    t: np.ndarray
    bound: np.ndarray        # comparison solution z at the checked times
    blowup_reported: bool    # z left the sample range by blowing up
    checked: int             # how many sample points lay inside z's domain


def gronwall_compare(problem: GronwallProblem, t: np.ndarray,
                     a_values: np.ndarray, rtol: float = 1e-10) -> GronwallResult:
    """Check a(t) <= z(t) where z solves the comparison ODE.

    Any continuous a with a(t) <= z0 + int_0^t f(a) is dominated by z when f
    is convex non-decreasing; this evaluates the conclusion numerically on
    the sampled a.  If z blows up inside the sample range the comparison is
    reported on the surviving overlap (blowup_reported, not a failure).
    """
    t = np.asarray(t, dtype=float)
    a_values = np.asarray(a_values, dtype=float)
    if t.ndim != 1 or t.size != a_values.size or np.any(np.diff(t) < 0):
        raise ValueError("need matching, nondecreasing sample times")
    if t[0] < 0:
        raise ValueError("sample times must be nonnegative")
    big = 1e12
    blowup = solve_ivp(
        lambda s, y: [problem.rhs(float(y[0]))], (0.0, t[-1] + 1e-12),
        [problem.initial], method="DOP853", rtol=rtol, atol=1e-12,
        dense_output=True, events=_blowup_event(big),
    )
    t_end = blowup.t[-1]
    inside = t <= t_end
    z = np.full(t.shape, np.inf)
    z[inside] = blowup.sol(t[inside])[0]
    ok = bool(np.all(a_values[inside] <= z[inside] * (1.0 + 1e-8)))
    return GronwallResult(
        passed=ok,
        t=t,
        bound=z,
        blowup_reported=bool(t_end < t[-1]),
        checked=int(inside.sum()),
    )


def _blowup_event(threshold: float):
    def event(s, y):
        return y[0] - threshold
    event.terminal = True
    event.direction = 1.0
    return event


def blowup_time_bound(a: float, gamma: float) -> tuple[float, float]:
    """Guaranteed life span of z' = a z^(1+gamma), z(0) = a, vs. integration.

    The closed-form solution (a^-gamma - a gamma t)^(-1/gamma) lives on
    [0, 1/(gamma a^(gamma+1))); returns that bound and the adaptive
    integration time to reach z = 1e12, which can only exceed it.
    """
    if not (a > 0 and gamma > 0):
        raise ValueError("need a > 0 and gamma > 0")
    t_bound = 1.0 / (gamma * a ** (gamma + 1.0))
    horizon = 10.0 * t_bound
    sol = solve_ivp(
        lambda s, y: [a * y[0] ** (1.0 + gamma)], (0.0, horizon), [a],
        method="DOP853", rtol=1e-10, atol=1e-14, events=_blowup_event(1e12),
    )
    if sol.t_events[0].size:
        t_numeric = float(sol.t_events[0][0])
    else:
        t_numeric = float(sol.t[-1])
    return t_bound, t_numeric


def regularization_remainders(cloud: ParticleCloud, u: VectorField,
                              eps: float) -> tuple[float, float, float]:
    """Energy-budget defect terms introduced by the velocity cutoff and mollifier.

    r1 = (3/2) sum w |u(x)|^2 (1 - cutoff(xi))
    r2 = 2 sum w (xi . u(x)) (cutoff(xi) - 1)
    r3 = sum w xi . (mollified u - u)(x)

    All three vanish as eps -> 0 (the cutoff radius 1/eps swallows the
    sampled velocities and the mollifier tends to the identity).
    """
    if cloud.count == 0:
        return 0.0, 0.0, 0.0
    up = interpolate_velocity(u, cloud.x)
    up_moll = interpolate_velocity(mollify(u, eps), cloud.x)
    cut = velocity_cutoff(cloud.xi, eps)
    w = cloud.w
    r1 = 1.5 * float(np.sum(w * np.sum(up**2, axis=1) * (1.0 - cut)))
    r2 = 2.0 * float(np.sum(w * np.sum(cloud.xi * up, axis=1) * (cut - 1.0)))
    r3 = float(np.sum(w * np.sum(cloud.xi * (up_moll - up), axis=1)))
    return r1, r2, r3
