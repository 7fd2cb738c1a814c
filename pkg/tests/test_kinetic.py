import numpy as np
import pytest
from scipy.integrate import solve_ivp

from thinspray.grid import GridSpec, ScalarField, VectorField, integral
from thinspray.kinetic import (
    FRAGMENT_SPECIES,
    PARENT_SPECIES,
    ParticleCloud,
    TruncationSpec,
    absorb_and_fragment,
    absorb_to_density,
    advance_particles,
    characteristic_value_growth,
    deposit_moments,
    interpolate_velocity,
    merge_particles,
    sample_gaussian_spray,
    species_mass_factor,
    stokes_relax_time,
    velocity_cutoff,
)


def uniform_velocity(grid, vec):
    comps = [np.full(grid.shape, v) for v in vec]
    return VectorField.from_components(grid, *comps)


def random_cloud(rng, n, dim=3, species=None):
    return ParticleCloud(
        rng.uniform(0, 2 * np.pi, (n, dim)),
        rng.standard_normal((n, dim)),
        rng.uniform(0.1, 2.0, n),
        np.full(n, PARENT_SPECIES) if species is None else species,
    )


class TestStokesRelaxTime:
    def test_unit_radius(self):
        assert stokes_relax_time(1.0) == 1.0

    def test_half_radius(self):
        assert stokes_relax_time(0.5) == 0.25

    def test_vanishing_radius_monotone(self):
        radii = [0.4, 0.2, 0.1, 0.05]
        times = [stokes_relax_time(r) for r in radii]
        assert all(b < a for a, b in zip(times, times[1:]))
        assert times[-1] == pytest.approx(0.0025)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            stokes_relax_time(0.0)


class TestVelocityCutoff:
    def test_inside_ball_is_one(self):
        assert velocity_cutoff(np.array([0.5, 0.0, 0.0]), 1.0) == 1.0

    def test_outside_support_is_zero(self):
        assert velocity_cutoff(np.array([3.0, 0.0, 0.0]), 1.0) == 0.0

    def test_transition_monotone(self):
        eps = 0.5
        radii = np.linspace(1.0 / eps, 2.0 / eps, 30)
        vals = velocity_cutoff(np.stack([radii, 0 * radii, 0 * radii], axis=1), eps)
        assert vals[0] == pytest.approx(1.0)
        assert vals[-1] == pytest.approx(0.0)
        assert np.all(np.diff(vals) <= 1e-12)
        mid = velocity_cutoff(np.array([1.5 / eps, 0.0, 0.0]), eps)
        assert 0.0 < mid < 1.0

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            velocity_cutoff(np.zeros(3), 0.0)
        with pytest.raises(ValueError):
            TruncationSpec(-1.0)


class TestAdvanceParticles:
    def test_equilibrium_characteristic(self):
        g = GridSpec(3, 16)
        u = uniform_velocity(g, (0.3, -0.1, 0.2))
        x0 = np.array([[1.0, 2.0, 3.0]])
        cloud = ParticleCloud(x0, np.array([[0.3, -0.1, 0.2]]),
                              np.array([1.0]), np.array([PARENT_SPECIES]))
        out = advance_particles(cloud, u, 0.25)
        assert np.abs(out.xi[0] - cloud.xi[0]).max() < 1e-14
        assert np.abs(out.x[0] - (x0[0] + 0.25 * cloud.xi[0])).max() < 1e-13

    def test_full_relaxation_limit(self):
        g = GridSpec(3, 16)
        u = uniform_velocity(g, (1.0, 0.0, 0.0))
        cloud = ParticleCloud(np.array([[0.0, 0.0, 0.0]]), np.array([[5.0, 5.0, 5.0]]),
                              np.array([1.0]), np.array([FRAGMENT_SPECIES]))
        out = advance_particles(cloud, u, 1.0, r2=0.01)  # dt/r^2 = 1e4
        assert np.abs(out.xi[0] - np.array([1.0, 0.0, 0.0])).max() < 1e-12

    def test_matches_ode_oracle(self):
        # uniform u makes the frozen-velocity assumption exact
        g = GridSpec(3, 16)
        uvec = np.array([0.3, -0.2, 0.1])
        u = uniform_velocity(g, uvec)
        r = 0.3
        x0 = np.array([1.0, 2.0, 3.0])
        xi0 = np.array([0.5, -1.0, 2.0])
        cloud = ParticleCloud(x0[None], xi0[None], np.array([1.0]),
                              np.array([FRAGMENT_SPECIES]))
        out = advance_particles(cloud, u, 0.1, r2=r)

        def rhs(t, y):
            return np.concatenate([y[3:], (uvec - y[3:]) / r**2])

        sol = solve_ivp(rhs, (0.0, 0.1), np.concatenate([x0, xi0]),
                        method="DOP853", rtol=1e-12, atol=1e-14)
        assert np.abs(out.x[0] - sol.y[:3, -1]).max() < 1e-10
        assert np.abs(out.xi[0] - sol.y[3:, -1]).max() < 1e-10

    def test_positions_wrapped(self):
        g = GridSpec(2, 16)
        u = uniform_velocity(g, (10.0, 0.0))
        cloud = ParticleCloud(np.array([[6.0, 1.0]]), np.array([[10.0, 0.0]]),
                              np.array([1.0]), np.array([PARENT_SPECIES]))
        out = advance_particles(cloud, u, 0.1)
        assert 0 <= out.x[0, 0] < g.length


class TestFragmentation:
    def test_zero_dt_identity(self):
        rng = np.random.default_rng(0)
        cloud = random_cloud(rng, 10)
        out, spawned = absorb_and_fragment(cloud, 0.0, 1.0, 0.2)
        assert spawned.count == 0
        assert np.array_equal(out.w, cloud.w)

    def test_half_life_closed_form(self):
        cloud = ParticleCloud(np.zeros((1, 3)), np.zeros((1, 3)),
                              np.array([1.0]), np.array([PARENT_SPECIES]))
        tau, r2 = 0.7, 0.2
        out, spawned = absorb_and_fragment(cloud, tau * np.log(2.0), tau, r2)
        assert out.w[0] == pytest.approx(0.5, rel=1e-14)
        assert spawned.w[0] == pytest.approx(0.5 / r2**3, rel=1e-14)
        assert spawned.species[0] == FRAGMENT_SPECIES
        assert np.array_equal(spawned.x, cloud.x)
        assert np.array_equal(spawned.xi, cloud.xi)

    def test_liquid_volume_conserved(self):
        rng = np.random.default_rng(1)
        species = np.where(rng.uniform(size=500) < 0.7, PARENT_SPECIES,
                           FRAGMENT_SPECIES)
        cloud = random_cloud(rng, 500, species=species)
        r2 = 0.31
        before = np.sum(cloud.w * species_mass_factor(cloud.species, r2))
        out, spawned = absorb_and_fragment(cloud, 0.013, 0.4, r2)
        merged = ParticleCloud.concatenate([out, spawned])
        after = np.sum(merged.w * species_mass_factor(merged.species, r2))
        assert after == pytest.approx(before, rel=1e-14)

    def test_mass_weighted_momentum_conserved(self):
        rng = np.random.default_rng(2)
        cloud = random_cloud(rng, 300)
        r2 = 0.17
        before = np.sum(cloud.w[:, None] * cloud.xi, axis=0)
        out, spawned = absorb_and_fragment(cloud, 0.05, 0.5, r2)
        merged = ParticleCloud.concatenate([out, spawned])
        mass = species_mass_factor(merged.species, r2)
        after = np.sum((merged.w * mass)[:, None] * merged.xi, axis=0)
        assert np.abs(after - before).max() <= 1e-12 * np.abs(before).max()

    def test_bad_parameters(self):
        cloud = random_cloud(np.random.default_rng(3), 5)
        with pytest.raises(ValueError):
            absorb_and_fragment(cloud, 0.1, 0.0, 0.2)
        with pytest.raises(ValueError):
            absorb_and_fragment(cloud, 0.1, 1.0, 1.5)


class TestAbsorbToDensity:
    def test_zero_dt_identity(self):
        g = GridSpec(3, 16)
        cloud = random_cloud(np.random.default_rng(4), 20)
        out, released = absorb_to_density(cloud, g, 0.0)
        assert np.array_equal(out.w, cloud.w)
        assert np.abs(released.values).max() == 0.0

    def test_half_life_closed_form(self):
        g = GridSpec(3, 16)
        cloud = ParticleCloud(np.full((1, 3), 1.0), np.zeros((1, 3)),
                              np.array([1.0]), np.array([PARENT_SPECIES]))
        out, released = absorb_to_density(cloud, g, np.log(2.0))
        assert out.w[0] == pytest.approx(0.5, rel=1e-14)
        assert integral(released) == pytest.approx(0.5, rel=1e-12)

    def test_released_mass_matches_weight_loss(self):
        g = GridSpec(2, 32)
        rng = np.random.default_rng(5)
        cloud = random_cloud(rng, 5000, dim=2)
        out, released = absorb_to_density(cloud, g, 0.02)
        lost = cloud.w.sum() - out.w.sum()
        assert integral(released) == pytest.approx(lost, rel=1e-12)


class TestDepositMoments:
    def test_single_particle_on_node(self):
        g = GridSpec(3, 16)
        xi = np.array([[0.5, -1.0, 2.0]])
        cloud = ParticleCloud(np.array([[g.h, 2 * g.h, 3 * g.h]]), xi,
                              np.array([2.0]), np.array([PARENT_SPECIES]))
        drag = deposit_moments(cloud, g)
        assert integral(drag.m0) == pytest.approx(2.0, rel=1e-13)
        assert np.asarray(integral(drag.m1)) == pytest.approx(2.0 * xi[0], rel=1e-13)

    def test_truncation_scales_weight(self):
        g = GridSpec(3, 16)
        eps = 0.5
        xi = np.array([[1.5 / eps, 0.0, 0.0]])
        cloud = ParticleCloud(np.array([[1.0, 1.0, 1.0]]), xi,
                              np.array([1.0]), np.array([PARENT_SPECIES]))
        cut = velocity_cutoff(xi, eps)[0]
        assert 0.0 < cut < 1.0
        drag = deposit_moments(cloud, g, TruncationSpec(eps))
        assert integral(drag.m0) == pytest.approx(cut, rel=1e-12)

    def test_total_matches_weighted_sum(self):
        g = GridSpec(3, 16)
        rng = np.random.default_rng(6)
        cloud = random_cloud(rng, 20000)
        eps = 0.8
        drag = deposit_moments(cloud, g, TruncationSpec(eps))
        expected = np.sum(cloud.w * velocity_cutoff(cloud.xi, eps))
        assert integral(drag.m0) == pytest.approx(expected, rel=1e-12)

    def test_empty_cloud(self):
        g = GridSpec(2, 16)
        drag = deposit_moments(ParticleCloud.empty(2), g)
        assert np.abs(drag.m0.values).max() == 0.0


class TestInterpolateVelocity:
    def test_constant(self):
        g = GridSpec(2, 16)
        u = uniform_velocity(g, (1.5, -2.5))
        x = np.random.default_rng(7).uniform(0, g.length, (50, 2))
        out = interpolate_velocity(u, x)
        assert np.abs(out - np.array([1.5, -2.5])).max() < 1e-13

    def test_second_order(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 2 * np.pi, (400, 2))
        exact = np.sin(pts[:, 0])
        errs = []
        for n in (16, 32):
            g = GridSpec(2, n)
            u = VectorField.from_components(
                g, np.sin(g.meshgrid()[0]), np.zeros(g.shape))
            errs.append(np.abs(interpolate_velocity(u, pts)[:, 0] - exact).max())
        assert errs[0] / errs[1] > 3.0


class TestMerge:
    def test_under_budget_identity(self):
        cloud = random_cloud(np.random.default_rng(9), 50)
        out, err = merge_particles(cloud, 100)
        assert out.count == 50
        assert err == 0.0

    def test_two_equal_particles(self):
        cloud = ParticleCloud(
            np.array([[1.0, 1.0, 1.0], [1.1, 1.0, 1.0]]),
            np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            np.array([0.5, 0.5]),
            np.array([PARENT_SPECIES, PARENT_SPECIES]),
        )
        out, _ = merge_particles(cloud, 1)
        assert out.count == 1
        assert out.w[0] == pytest.approx(1.0, rel=1e-14)
        assert np.abs(out.xi[0] - np.array([0.5, 0.5, 0.0])).max() < 1e-14
        assert np.abs(out.x[0] - np.array([1.05, 1.0, 1.0])).max() < 1e-12

    def test_conserves_number_and_momentum(self):
        rng = np.random.default_rng(10)
        species = np.where(rng.uniform(size=4000) < 0.5, PARENT_SPECIES,
                           FRAGMENT_SPECIES)
        cloud = random_cloud(rng, 4000, species=species)
        w0 = cloud.w.sum()
        p0 = np.sum(cloud.w[:, None] * cloud.xi, axis=0)
        counts0 = {s: cloud.w[cloud.species == s].sum() for s in (1, 2)}
        out, err = merge_particles(cloud, 2500)
        assert out.count <= 2500
        assert out.w.sum() == pytest.approx(w0, rel=1e-13)
        assert np.abs(np.sum(out.w[:, None] * out.xi, axis=0) - p0).max() \
            <= 1e-12 * max(np.abs(p0).max(), 1.0)
        for s in (1, 2):  # merging never moves weight across species
            assert out.w[out.species == s].sum() == pytest.approx(counts0[s], rel=1e-13)
        assert err < 0.05

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            merge_particles(ParticleCloud.empty(3), 0)


class TestSampler:
    @pytest.mark.parametrize("mean", [(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)])
    def test_moments_match_exactly(self, mean):
        g = GridSpec(3, 16)
        cloud = sample_gaussian_spray(g, 5000, 0.3, mean, 0.6, seed=11)
        assert cloud.w.sum() == pytest.approx(0.3, rel=1e-13)
        m1 = np.sum(cloud.w[:, None] * cloud.xi, axis=0)
        assert np.abs(m1 - 0.3 * np.array(mean)).max() < 1e-13
        m2 = np.sum(cloud.w * np.sum(cloud.xi**2, axis=1))
        target = 0.3 * (3 * 0.6**2 + np.dot(mean, mean))
        assert m2 == pytest.approx(target, rel=1e-12)

    def test_deterministic(self):
        g = GridSpec(2, 16)
        a = sample_gaussian_spray(g, 1000, 1.0, (0.0, 0.0), 1.0, seed=12)
        b = sample_gaussian_spray(g, 1000, 1.0, (0.0, 0.0), 1.0, seed=12)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.xi, b.xi)

    def test_positions_inside_domain(self):
        g = GridSpec(2, 16)
        cloud = sample_gaussian_spray(g, 500, 1.0, (0.0, 0.0), 1.0, seed=13)
        assert np.all(cloud.x >= 0) and np.all(cloud.x < g.length)


class TestCharacteristicValue:
    def test_growth_three_dimensions(self):
        t, vals = characteristic_value_growth(1.0, dim=3)
        assert np.abs(vals - np.exp(2.0 * t)).max() < 1e-10

    def test_growth_two_dimensions(self):
        t, vals = characteristic_value_growth(1.0, dim=2)
        assert np.abs(vals - np.exp(t)).max() < 1e-10

    def test_supremum_bound(self):
        t, vals = characteristic_value_growth(0.7, dim=3)
        assert vals.max() <= np.exp(2.0 * 0.7) * (1 + 1e-12)
