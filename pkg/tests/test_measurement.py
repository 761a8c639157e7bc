import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from pilotwave.errors import DomainError, PreconditionError
from pilotwave.measurement import (
    BranchedState,
    branch_overlap,
    branch_velocity,
    dynamical_irrelevance_check,
    evolve_measurement,
    make_ready_state,
    run_measurement_ensemble,
)
from pilotwave.wavecore import Grid1D, density, init_gaussian

GRID = Grid1D(2048, -16.0, 16.0)


def ready(c1, c2, g=1.0, sigma=1.0):
    return make_ready_state(GRID, sigma, c1, c2, g)


def two_gaussian_state(d, w1=0.5, sigma=1.0, grid=None):
    """Branches already separated by distance d, built analytically."""
    grid = grid or GRID
    chi1 = init_gaussian(grid, +d / 2, sigma).amplitudes
    chi2 = init_gaussian(grid, -d / 2, sigma).amplitudes
    return BranchedState(grid, chi1, chi2, np.sqrt(w1), np.sqrt(1 - w1), 1.0)


def min_overlap_oracle(d, sigma=1.0):
    """Quadrature of min of two unit-weight normal pdfs separated by d."""
    f1 = norm(loc=+d / 2, scale=sigma).pdf
    f2 = norm(loc=-d / 2, scale=sigma).pdf
    lo, hi = -d / 2 - 10 * sigma, d / 2 + 10 * sigma
    val, _ = quad(lambda y: min(f1(y), f2(y)), lo, hi, points=[0.0], limit=200)
    return val


class TestEvolveMeasurement:
    def test_single_branch_mean_drifts_to_gT(self):
        state = ready(1.0, 0.0, g=1.0)
        tl = evolve_measurement(state, duration=7.0, dt=0.02)
        final = tl.states[-1]
        rho = np.sum(final.branch_densities(), axis=0)
        mean = np.sum(GRID.x * rho) * GRID.dx
        assert abs(mean - 7.0) < 1e-6

    def test_initial_overlap_is_one(self):
        state = ready(1 / np.sqrt(2), 1 / np.sqrt(2))
        assert branch_overlap(state) == pytest.approx(1.0, abs=1e-10)

    def test_overlap_at_six_sigma_separation_matches_quadrature(self):
        state = ready(1 / np.sqrt(2), 1 / np.sqrt(2), g=1.0)
        tl = evolve_measurement(state, duration=3.0, dt=0.05)  # separation 6 sigma
        got = branch_overlap(tl.states[-1])
        oracle = min_overlap_oracle(6.0)
        # rectangle sum vs quadrature differs by the kink-cell error O(dx^2)
        assert got == pytest.approx(oracle, abs=1e-5)
        assert got < 1e-2

    def test_overlap_nonincreasing_under_separation(self):
        state = ready(np.sqrt(0.3), np.sqrt(0.7))
        tl = evolve_measurement(state, duration=6.0, dt=0.1)
        ovl = np.array([branch_overlap(st) for st in tl.states])
        assert np.all(np.diff(ovl) <= 1e-12)

    def test_clipping_raises_domain_error(self):
        state = ready(1.0, 0.0, g=1.0)
        with pytest.raises(DomainError):
            evolve_measurement(state, duration=14.0, dt=0.1)


class TestBranchOverlap:
    def test_identical_shapes(self):
        state = ready(np.sqrt(0.2), np.sqrt(0.8))
        assert branch_overlap(state) == pytest.approx(1.0, abs=1e-10)

    def test_disjoint_supports_exact_zero(self):
        chi1 = np.zeros(GRID.n_points, dtype=complex)
        chi2 = np.zeros(GRID.n_points, dtype=complex)
        chi1[100:200] = 1.0
        chi2[800:900] = 1.0
        chi1 /= np.sqrt(np.sum(np.abs(chi1) ** 2) * GRID.dx)
        chi2 /= np.sqrt(np.sum(np.abs(chi2) ** 2) * GRID.dx)
        state = BranchedState(GRID, chi1, chi2, 0.6, 0.8, 1.0)
        assert branch_overlap(state) == 0.0

    def test_unit_gaussians_two_apart_match_quadrature_oracle(self):
        grid = Grid1D(131072, -18.0, 18.0)
        state = two_gaussian_state(2.0, grid=grid)
        got = branch_overlap(state)
        oracle = min_overlap_oracle(2.0)  # erfc-based: 2 Phi(-1)
        assert oracle == pytest.approx(2 * norm.cdf(-1.0), abs=1e-10)
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_zero_coefficient_returns_zero(self):
        state = ready(1.0, 0.0)
        assert branch_overlap(state) == 0.0


class TestMeasurementEnsemble:
    def test_born_rule_frequency(self):
        state = ready(np.sqrt(0.3), np.sqrt(0.7))
        _, summary, _, _ = run_measurement_ensemble(
            state, duration=7.0, dt=0.02, m=2000, seed=31)
        assert summary.undecided_fraction < 0.005
        assert abs(summary.frequency_1 - 0.3) <= summary.band_3sigma
        assert summary.born_pass

    def test_all_outcomes_one_when_c2_zero(self):
        state = ready(1.0, 0.0)
        records, summary, _, _ = run_measurement_ensemble(
            state, duration=6.0, dt=0.05, m=300, seed=5)
        assert summary.counts[1] == 300
        assert all(r.outcome == 1 for r in records)

    def test_outcome_correlates_with_initial_side_for_symmetric_weights(self):
        # 1D no-crossing: the lower half of the ready packet must end in the
        # downward branch
        state = ready(1 / np.sqrt(2), 1 / np.sqrt(2))
        records, _, _, ens = run_measurement_ensemble(
            state, duration=7.0, dt=0.02, m=1000, seed=8)
        q0 = ens.positions[:, 0]
        outcomes = np.array([r.outcome for r in records])
        assert np.all(outcomes[q0 < -0.01] == 2)
        assert np.all(outcomes[q0 > 0.01] == 1)

    def test_effective_collapse_permanence(self):
        state = ready(np.sqrt(0.5), np.sqrt(0.5))
        records, _, tl, ens = run_measurement_ensemble(
            state, duration=7.0, dt=0.02, m=500, seed=13)
        k_dec = int(np.argmin(np.abs(tl.times - records[0].decided_at)))
        r1k = [st.branch_densities()[0] for st in tl.states]
        r2k = [st.branch_densities()[1] for st in tl.states]
        for i, rec in enumerate(records):
            for k in range(k_dec, len(tl)):
                idx = GRID.cell_index(ens.positions[i, k])
                dominant = 1 if r1k[k][idx] >= r2k[k][idx] else 2
                assert dominant == rec.outcome

    def test_seed_determinism(self):
        state = ready(np.sqrt(0.3), np.sqrt(0.7))
        ra, sa, _, _ = run_measurement_ensemble(state, 6.0, 0.05, 200, seed=77)
        rb, sb, _, _ = run_measurement_ensemble(state, 6.0, 0.05, 200, seed=77)
        assert sa.frequency_1 == sb.frequency_1
        assert all(x.final_pointer == y.final_pointer for x, y in zip(ra, rb))


class TestDynamicalIrrelevance:
    def test_separated_branches_deviation_below_contract(self):
        state = two_gaussian_state(14.0, w1=0.5)
        assert branch_overlap(state) < 1e-8
        # sampled beable positions across the occupied branch support
        for y in (7.0 - 2.5, 7.0, 7.0 + 2.5):
            dev = dynamical_irrelevance_check(state, y)
            assert dev < 1e-6

    def test_full_overlap_rejected(self):
        state = ready(1 / np.sqrt(2), 1 / np.sqrt(2))
        with pytest.raises(PreconditionError):
            dynamical_irrelevance_check(state, 0.0)

    def test_single_branch_deviation_exactly_zero(self):
        state = ready(1.0, 0.0)
        assert branch_overlap(state) == 0.0
        assert dynamical_irrelevance_check(state, 0.3) == 0.0

    def test_velocity_field_shape(self):
        # v = g tanh(g t y / sigma^2 + 0.5 ln(w1/w2)) for equal-width branches
        state = two_gaussian_state(6.0, w1=0.3)
        fld = branch_velocity(state)
        sel = np.abs(GRID.x) < 4.0
        expected = np.tanh(3.0 * GRID.x[sel] + 0.5 * np.log(0.3 / 0.7))
        assert np.max(np.abs(fld.v[sel] - expected)) < 1e-9
