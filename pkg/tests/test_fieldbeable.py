import numpy as np
import pytest

from pilotwave.errors import PreconditionError
from pilotwave.fieldbeable import (
    GaussianWavefunctional,
    LatticeField,
    classical_trajectory,
    coherent_state,
    evolve_wavefunctional,
    field_guidance_step,
    ground_state,
    guide_field_trajectory,
    guide_mode_ensemble,
    lattice_modes,
    mode_velocity,
    sample_mode_ensemble,
)
from pilotwave.guidance import integrate_trajectories
from pilotwave.stats import ks_critical, ks_statistic
from pilotwave.wavecore import Grid1D, GridWavefunction, analytic_timeline
from scipy.stats import norm


class TestLatticeModes:
    def test_single_site_reduces_to_one_oscillator(self):
        modes = lattice_modes(1, 1.0, 0.7)
        assert modes.omega.shape == (1,)
        assert modes.omega[0] == pytest.approx(0.7, abs=1e-15)

    def test_two_site_massless_dispersion(self):
        modes = lattice_modes(2, 0.5, 0.0)
        got = np.sort(modes.omega)
        assert got[0] == 0.0
        assert got[1] == pytest.approx(2.0 / 0.5, rel=1e-14)
        assert modes.frozen.sum() == 1

    @pytest.mark.parametrize("n", [1, 2, 5, 8, 16])
    def test_basis_orthogonality(self, n):
        modes = lattice_modes(n, 0.3, 1.0)
        eye = modes.basis @ modes.basis.T
        assert np.max(np.abs(eye - np.eye(n))) < 1e-12

    def test_dispersion_formula(self):
        n, dx, m0 = 8, 0.4, 0.6
        modes = lattice_modes(n, dx, m0)
        expected = np.sqrt(m0**2 + (2 / dx) ** 2 * np.sin(np.pi * modes.kappa / n) ** 2)
        assert np.allclose(modes.omega, expected, atol=1e-14)


class TestEvolveWavefunctional:
    def test_ground_state_stationary_up_to_phase(self):
        modes = lattice_modes(4, 0.5, 1.0)
        gs = ground_state(modes)
        ev = evolve_wavefunctional(gs, 2.3)
        assert np.allclose(ev.width, gs.width, atol=1e-12)
        assert np.allclose(ev.mean_q, 0.0, atol=1e-15)
        assert np.allclose(ev.mean_p, 0.0, atol=1e-15)
        # global phase advances by -(sum omega / 2) t
        expected_phase = -0.5 * np.sum(modes.omega) * 2.3
        assert ev.phase == pytest.approx(expected_phase, rel=1e-9)

    def test_coherent_displacement_rotates_exactly(self):
        modes = lattice_modes(3, 0.5, 0.8)
        q0 = np.array([0.7, -0.2, 0.1])
        p0 = np.array([0.0, 0.4, -0.3])
        st = coherent_state(modes, q0, p0)
        t = 1.9
        ev = evolve_wavefunctional(st, t)
        expected = st.alpha * np.exp(-1j * modes.omega * t)
        assert np.max(np.abs(ev.alpha - expected)) < 1e-12

    def test_squeezed_width_matches_grid_solver(self):
        # independent oracle: brute-force single-mode grid evolution
        from pilotwave.wavecore import Potential, SchrodingerStepper, density

        modes = lattice_modes(1, 1.0, 1.0)
        st = GaussianWavefunctional(modes, np.array([2.5 + 0j]),
                                    np.zeros(1), np.zeros(1))
        t_end = 0.8
        var_closed = 1.0 / (2.0 * evolve_wavefunctional(st, t_end).width.real[0])

        grid = Grid1D(1024, -12.0, 12.0)
        psi = GridWavefunction(grid, np.exp(-2.5 * grid.x**2 / 2).astype(complex)).normalized()
        stepper = SchrodingerStepper(grid, Potential.harmonic(grid), 5e-4)
        for _ in range(round(t_end / 5e-4)):
            psi = stepper.step(psi)
        var_grid = float(np.sum(grid.x**2 * density(psi)) * grid.dx)
        assert abs(var_grid - var_closed) < 1e-6

    def test_zero_duration_identity(self):
        modes = lattice_modes(2, 1.0, 1.0)
        st = coherent_state(modes, [0.3, 0.1], [0.0, 0.2])
        ev = evolve_wavefunctional(st, 0.0)
        assert np.array_equal(ev.mean_q, st.mean_q)
        assert ev.phase == st.phase


class TestFieldGuidance:
    def test_ground_state_beable_exactly_static(self):
        modes = lattice_modes(6, 0.5, 1.0)
        gs = ground_state(modes)
        rng = np.random.default_rng(3)
        beable = LatticeField(6, 0.5, 1.0, rng.normal(size=6))
        out = beable
        for _ in range(50):
            out = field_guidance_step(out, gs, 0.02)
        assert np.array_equal(out.phi, beable.phi)

    def test_coherent_center_beable_tracks_classical_lattice_solution(self):
        n, dx, m0 = 8, 0.5, 1.0
        modes = lattice_modes(n, dx, m0)
        rng = np.random.default_rng(21)
        phi0 = rng.normal(0, 0.5, n)
        pi0 = rng.normal(0, 0.5, n)
        st = coherent_state(modes, modes.to_modes(phi0), modes.to_modes(pi0))
        beable = LatticeField(n, dx, m0, phi0)
        dt, n_steps = 1e-3, 2000
        times, phis, _, _ = guide_field_trajectory(beable, st, dt, n_steps)
        oracle = classical_trajectory(modes, phi0, pi0, times)
        assert np.max(np.abs(phis - oracle)) < 1e-6

    def test_frozen_zero_mode_held_constant(self):
        modes = lattice_modes(2, 0.5, 0.0)  # zero mode + Nyquist mode
        st = ground_state(modes)
        beable = LatticeField(2, 0.5, 0.0, np.array([0.8, 0.1]))
        q0_zero_mode = modes.to_modes(beable.phi)[modes.frozen][0]
        out = beable
        for _ in range(100):
            out = field_guidance_step(out, st, 0.01)
        q_zero_mode = modes.to_modes(out.phi)[modes.frozen][0]
        assert q_zero_mode == pytest.approx(q0_zero_mode, abs=1e-14)

    def test_sampling_frozen_mode_rejected(self):
        modes = lattice_modes(2, 0.5, 0.0)
        st = ground_state(modes)
        frozen_idx = int(np.flatnonzero(modes.frozen)[0])
        with pytest.raises(PreconditionError):
            sample_mode_ensemble(st, frozen_idx, 10, seed=1)


class TestModeEquivariance:
    def test_squeezed_mode_ensemble_stays_distributed(self):
        modes = lattice_modes(1, 1.0, 1.0)
        st = GaussianWavefunctional(modes, np.array([2.5 + 0j]),
                                    np.array([0.6]), np.array([-0.2]))
        m = 10_000
        q0 = sample_mode_ensemble(st, 0, m, seed=55)
        dt, n_steps = 1e-3, 700
        q, st_end = guide_mode_ensemble(st, q0, dt, n_steps)
        mean = float(st_end.mean_q[0])
        sd = float(st_end.mode_std()[0])
        d = ks_statistic(q, norm(loc=mean, scale=sd).cdf)
        assert d < ks_critical(m, 0.01)


class TestSingleModeCorrespondence:
    def test_field_trajectory_matches_grid_oscillator_trajectory(self):
        # same coherent state guided through the grid route and the mode route
        modes = lattice_modes(1, 1.0, 1.0)
        q0, p0 = 1.0, 0.0
        st = coherent_state(modes, np.array([q0]), np.array([p0]))
        beable0 = 0.3

        dt, n_steps = 1e-3, 1000
        _, phis, _, _ = guide_field_trajectory(
            LatticeField(1, 1.0, 1.0, np.array([beable0])), st, dt, n_steps)
        q_field = phis[:, 0]  # dx = 1: mode coordinate equals site value

        # the grid route carries O((p dx)^2 / 6) velocity bias from the
        # centered-difference current, so the oracle needs a fine grid
        grid = Grid1D(16384, -10.0, 10.0)
        times = np.linspace(0.0, dt * n_steps, 2001)

        def state(t):
            qc = q0 * np.cos(t)
            pc = -q0 * np.sin(t)
            amp = np.exp(-((grid.x - qc) ** 2) / 2 + 1j * pc * (grid.x - qc))
            return GridWavefunction(grid, amp).normalized()

        tl = analytic_timeline(grid, times, state)
        ens = integrate_trajectories(tl, np.array([beable0]), substeps=1)
        q_grid = ens.positions[0, ::2]  # grid timeline is twice as dense
        assert len(q_grid) == len(q_field)
        assert np.max(np.abs(q_field - q_grid)) < 1e-6
