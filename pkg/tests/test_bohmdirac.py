import numpy as np
import pytest

from pilotwave.bohmdirac import (
    DiracSpinor,
    dirac_energy,
    dirac_fields_fn,
    dirac_step,
    dirac_velocity,
    evolve_dirac_timeline,
    positive_energy_packet,
    positive_energy_plane_wave,
)
from pilotwave.equilibrium import sample_from_density
from pilotwave.errors import PreconditionError
from pilotwave.guidance import SnapshotVelocity, integrate_trajectories
from pilotwave.stats import density_cdf, ks_critical, ks_statistic
from pilotwave.wavecore import Grid1D


class TestDiracStep:
    def test_plane_wave_dispersion_per_step(self):
        grid = Grid1D(1024, -20.0, 20.0)
        p = 2 * np.pi * 8 / grid.length
        psi = positive_energy_plane_wave(grid, p, mass=1.0)
        dt = 1e-3
        out = dirac_step(psi, dt)
        phase = np.exp(-1j * dirac_energy(p, 1.0) * dt)
        assert np.max(np.abs(out.upper - phase * psi.upper)) < 1e-8
        assert np.max(np.abs(out.lower - phase * psi.lower)) < 1e-8

    def test_massless_chiral_transport_at_c(self):
        grid = Grid1D(512, -10.0, 10.0)
        x = grid.x
        env = np.exp(-(x**2)) * np.exp(2j * x)
        chi = env / np.sqrt(2)
        psi = DiracSpinor(grid, chi, chi.copy(), mass=0.0).normalized()
        dt = grid.dx  # c dt = dx: advance exactly one cell per step
        out = psi
        for _ in range(32):
            out = dirac_step(out, dt)
        assert np.max(np.abs(out.upper - np.roll(psi.upper, 32))) < 1e-12
        assert np.max(np.abs(out.lower - np.roll(psi.lower, 32))) < 1e-12

    def test_dt_zero_identity(self):
        grid = Grid1D(256, -10.0, 10.0)
        psi = positive_energy_packet(grid, 0.0, 1.0, 0.5, mass=1.0)
        out = dirac_step(psi, 0.0)
        assert np.array_equal(out.upper, psi.upper)

    def test_cfl_violation_rejected(self):
        grid = Grid1D(256, -10.0, 10.0)
        psi = positive_energy_packet(grid, 0.0, 1.0, 0.5, mass=1.0)
        with pytest.raises(PreconditionError):
            dirac_step(psi, 10.0 * grid.dx)

    def test_norm_drift_per_step(self):
        grid = Grid1D(512, -15.0, 15.0)
        psi = positive_energy_packet(grid, 0.0, 1.2, 0.9, mass=1.0)
        for _ in range(100):
            psi = dirac_step(psi, 0.02)
        assert abs(psi.norm_sq() - 1.0) < 1e-12

    def test_continuity_residual_refines(self):
        residuals = []
        for n, dt in [(512, 2e-2), (1024, 1e-2), (2048, 5e-3)]:
            grid = Grid1D(n, -15.0, 15.0)
            psi = positive_energy_packet(grid, 0.0, 1.2, 0.9, mass=1.0)
            nsteps = round(0.4 / dt)
            for _ in range(nsteps):
                psi = dirac_step(psi, dt)
            minus = psi
            mid = dirac_step(minus, dt)
            plus = dirac_step(mid, dt)
            drho = (plus.density() - minus.density()) / (2 * dt)
            cur = 2 * np.real(np.conj(mid.upper) * mid.lower)  # c = 1
            dj = (np.roll(cur, -1) - np.roll(cur, 1)) / (2 * grid.dx)
            residuals.append(np.max(np.abs(drho + dj)))
        assert residuals[0] > residuals[1] > residuals[2]


class TestDiracVelocity:
    def test_plane_wave_velocity_pc2_over_e(self):
        grid = Grid1D(1024, -20.0, 20.0)
        p = 2 * np.pi * 6 / grid.length
        psi = positive_energy_plane_wave(grid, p, mass=1.0)
        fld = dirac_velocity(psi)
        assert np.max(np.abs(fld.v - p / dirac_energy(p, 1.0))) < 1e-8

    def test_plane_wave_velocity_matches_spinor_algebra_oracle(self):
        # independent oracle: eigenvector of the 2x2 H(p) evaluated directly
        grid = Grid1D(512, -20.0, 20.0)
        p = 2 * np.pi * 5 / grid.length
        m, c = 1.3, 1.0
        h = np.array([[m * c**2, c * p], [c * p, -m * c**2]])
        vals, vecs = np.linalg.eigh(h)
        u = vecs[:, np.argmax(vals)]
        sigma1 = np.array([[0, 1], [1, 0]])
        v_expected = c * np.real(u.conj() @ sigma1 @ u) / np.real(u.conj() @ u)
        psi = positive_energy_plane_wave(grid, p, mass=m, c=c)
        fld = dirac_velocity(psi)
        assert np.max(np.abs(fld.v - v_expected)) < 1e-8

    def test_symmetric_superposition_zero_velocity(self):
        grid = Grid1D(512, -20.0, 20.0)
        p = 2 * np.pi * 4 / grid.length
        a = positive_energy_plane_wave(grid, +p, mass=1.0)
        b = positive_energy_plane_wave(grid, -p, mass=1.0)
        psi = DiracSpinor(grid, a.upper + b.upper, a.lower + b.lower, 1.0).normalized()
        fld = dirac_velocity(psi)
        imax = int(np.argmax(psi.density()))
        assert abs(fld.v[imax]) < 1e-12

    def test_speed_bound_random_fields_zero_tolerance(self):
        rng = np.random.default_rng(2718)
        grid = Grid1D(128, -5.0, 5.0)
        for _ in range(1000):
            u = rng.normal(size=128) + 1j * rng.normal(size=128)
            v = rng.normal(size=128) + 1j * rng.normal(size=128)
            psi = DiracSpinor(grid, u, v, mass=1.0).normalized()
            fld = dirac_velocity(psi)
            assert np.all(np.abs(fld.v) <= psi.c)


class TestDiracEquivariance:
    def test_packet_ensemble_stays_density_distributed(self):
        grid = Grid1D(1024, -25.0, 25.0)
        psi0 = positive_energy_packet(grid, -4.0, 1.5, 0.8, mass=1.0)
        tl = evolve_dirac_timeline(psi0, dt=0.02, n_steps=150, record_every=2)
        m = 2000
        samples = sample_from_density(grid, psi0.density(), m, seed=404)
        provider = SnapshotVelocity(tl, fields_fn=dirac_fields_fn())
        ens = integrate_trajectories(provider, samples.positions,
                                     t_grid=tl.times, substeps=2)
        pos = grid.wrap(ens.positions[:, -1])
        final = tl.states[-1]
        d = ks_statistic(pos, density_cdf(grid, final.density()))
        assert d < ks_critical(m, 0.01)
