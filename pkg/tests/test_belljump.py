import numpy as np
import pytest

from pilotwave.belljump import (
    EnsembleComparison,
    ExactEvolver,
    FockBasis,
    JumpTrajectory,
    QuantumState,
    current_J,
    ensemble_vs_marginal,
    jump_rates,
    marginal_P,
    simulate_jump_ensemble,
    simulate_jump_process,
    three_site_model,
    two_level_model,
)
from pilotwave.errors import PreconditionError


def brute_force_J(psi, h, basis):
    # literal double sum over all (q, p) basis-state pairs
    nb = basis.n_configs
    out = np.zeros((nb, nb))
    for a in range(basis.dim):
        for b in range(basis.dim):
            val = 2.0 * np.real(np.conj(psi[a]) * (-1j) * h[a, b] * psi[b])
            out[basis.block_id[a], basis.block_id[b]] += val
    return out


def random_partitioned_system(rng, dim=16, n_groups=5):
    group_of = rng.integers(0, n_groups, size=dim)
    labels = []
    q_count = {}
    for i in range(dim):
        g = int(group_of[i])
        q = q_count.get(g, 0)
        q_count[g] = q + 1
        labels.append(((g,), q))
    basis = FockBasis(labels)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi = psi / np.linalg.norm(psi)
    return QuantumState(psi, h), basis


class TestMarginal:
    def test_single_block_state(self):
        state, basis = two_level_model()
        p = marginal_P(state, basis)
        assert p[basis.config_index((0,))] == 1.0
        assert p[basis.config_index((1,))] == 0.0

    def test_two_level_cos_sin(self):
        state, basis = two_level_model()
        ev = ExactEvolver(state)
        for t in (0.3, 0.7, 1.4):
            p = marginal_P(ev.psi(t), basis)
            assert p[0] == pytest.approx(np.cos(t) ** 2, abs=1e-12)
            assert p[1] == pytest.approx(np.sin(t) ** 2, abs=1e-12)

    def test_uniform_split_between_two_blocks(self):
        labels = [((0,), q) for q in range(4)] + [((1,), q) for q in range(4)]
        basis = FockBasis(labels)
        psi = np.ones(8, dtype=complex) / np.sqrt(8)
        p = marginal_P(psi, basis)
        assert np.allclose(p, [0.5, 0.5], atol=1e-14)

    def test_normalization(self):
        rng = np.random.default_rng(12)
        state, basis = random_partitioned_system(rng)
        assert marginal_P(state, basis).sum() == pytest.approx(1.0, abs=1e-12)


class TestCurrent:
    def test_two_level_hand_value(self):
        state, basis = two_level_model()
        ev = ExactEvolver(state)
        for t in (0.4, np.pi / 4, 1.1):
            j = current_J(ev.psi(t), basis, state.hamiltonian)
            assert j[1, 0] == pytest.approx(np.sin(2 * t), abs=1e-12)
        j = current_J(ev.psi(np.pi / 4), basis, state.hamiltonian)
        assert j[1, 0] == pytest.approx(1.0, abs=1e-12)

    def test_eigenstate_zero_current(self):
        state, basis = two_level_model()
        vals, vecs = np.linalg.eigh(state.hamiltonian)
        stationary = QuantumState(vecs[:, 0], state.hamiltonian)
        j = current_J(stationary, basis)
        assert np.max(np.abs(j)) < 1e-14

    def test_matches_brute_force_double_sum(self):
        rng = np.random.default_rng(900)
        for _ in range(20):
            state, basis = random_partitioned_system(rng)
            j = current_J(state, basis)
            ref = brute_force_J(state.amplitudes, state.hamiltonian, basis)
            assert np.max(np.abs(j - ref)) < 1e-12

    def test_antisymmetry_random_states(self):
        rng = np.random.default_rng(901)
        for _ in range(20):
            state, basis = random_partitioned_system(rng)
            j = current_J(state, basis)
            assert np.max(np.abs(j + j.T)) < 1e-12

    def test_continuity_dP_dt_equals_row_sum(self):
        rng = np.random.default_rng(902)
        state, basis = random_partitioned_system(rng)
        ev = ExactEvolver(state)
        t, eps = 0.6, 1e-6
        j = current_J(ev.psi(t), basis, state.hamiltonian)
        dp = (marginal_P(ev.psi(t + eps), basis)
              - marginal_P(ev.psi(t - eps), basis)) / (2 * eps)
        assert np.max(np.abs(dp - j.sum(axis=1))) < 1e-5


class TestJumpRates:
    def test_two_level_rate_at_quarter_pi(self):
        state, basis = two_level_model()
        ev = ExactEvolver(state)
        t = jump_rates(ev.psi(np.pi / 4), basis, state.hamiltonian)
        assert t[1, 0] == pytest.approx(2.0, abs=1e-12)
        assert t[0, 1] == 0.0

    def test_stationary_state_no_rates(self):
        state, basis = two_level_model()
        vals, vecs = np.linalg.eigh(state.hamiltonian)
        stationary = QuantumState(vecs[:, 1], state.hamiltonian)
        assert np.max(jump_rates(stationary, basis)) == 0.0

    def test_flux_identity(self):
        rng = np.random.default_rng(903)
        for _ in range(20):
            state, basis = random_partitioned_system(rng)
            p = marginal_P(state, basis)
            j = current_J(state, basis)
            t = jump_rates(state, basis)
            flux = t * p[None, :] - t.T * p[:, None]
            ok = (p[None, :] > 1e-12) & (p[:, None] > 1e-12)
            assert np.max(np.abs((flux - j)[ok])) < 1e-10


class TestSimulateJumpProcess:
    def test_stationary_state_never_jumps(self):
        state, basis = two_level_model()
        vals, vecs = np.linalg.eigh(state.hamiltonian)
        stationary = QuantumState(vecs[:, 0].astype(complex), state.hamiltonian)
        trajs = simulate_jump_ensemble(stationary, basis, 1000, 1.0, seed=7)
        assert all(t.n_jumps == 0 for t in trajs)

    def test_two_level_occupation_matches_cos_squared(self):
        state, basis = two_level_model()
        trajs = simulate_jump_ensemble(state, basis, 2000, 2.0, seed=91, n0=(0,))
        cmp_ = ensemble_vs_marginal(trajs, state, basis, np.linspace(0.2, 2.0, 10))
        assert cmp_.passed
        assert np.allclose(cmp_.exact[:, 0],
                           np.cos(cmp_.times) ** 2, atol=1e-12)

    def test_seed_determinism_bit_exact(self):
        state, basis = two_level_model()
        a = simulate_jump_process(state, basis, (0,), 2.0, seed=5)
        b = simulate_jump_process(state, basis, (0,), 2.0, seed=5)
        assert a.events == b.events

    def test_zero_probability_start_rejected(self):
        state, basis = two_level_model()
        with pytest.raises(PreconditionError):
            simulate_jump_process(state, basis, (1,), 1.0, seed=1)

    def test_empirical_frequencies_sum_to_one(self):
        state, basis = two_level_model()
        trajs = simulate_jump_ensemble(state, basis, 500, 1.0, seed=3, n0=(0,))
        cmp_ = ensemble_vs_marginal(trajs, state, basis, [0.5, 1.0])
        assert np.allclose(cmp_.empirical.sum(axis=1), 1.0, atol=0)


class TestThreeSiteModel:
    def test_hamiltonian_hermitian_and_number_changing(self):
        state, basis = three_site_model()
        h = state.hamiltonian
        assert np.max(np.abs(h - h.conj().T)) < 1e-14
        # pair term couples the vacuum to doubly-occupied configurations
        vac = basis.config_index((0, 0, 0))
        pair = basis.config_index((1, 1, 0))
        blk_v = basis.block_id == vac
        blk_p = basis.block_id == pair
        assert np.max(np.abs(h[np.ix_(blk_p, blk_v)])) > 0

    def test_ensemble_tracks_exact_diagonalization(self):
        state, basis = three_site_model()
        trajs = simulate_jump_ensemble(state, basis, 2000, 2.0, seed=18,
                                       n0=(0, 0, 0), dt_max=0.01)
        cmp_ = ensemble_vs_marginal(trajs, state, basis, np.linspace(0.2, 2.0, 10))
        assert cmp_.passed
        # jumps really change particle number
        assert any(sum(t.events[0][2]) != 0 for t in trajs if t.n_jumps > 0)


class TestValidation:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(PreconditionError):
            FockBasis([((0,), 0), ((0,), 0)])

    def test_occupation_range_check(self):
        basis = FockBasis([((0,), 0), ((5,), 0)])
        with pytest.raises(PreconditionError):
            basis.validate_occupations(4)

    def test_non_hermitian_rejected(self):
        with pytest.raises(PreconditionError):
            QuantumState(np.array([1.0, 0.0]), np.array([[0, 1j], [1j, 0]]))

    def test_unnormalized_rejected(self):
        with pytest.raises(PreconditionError):
            QuantumState(np.array([1.0, 1.0]), np.eye(2))

    def test_trajectory_event_chain_validated(self):
        with pytest.raises(PreconditionError):
            JumpTrajectory((0,), [(0.5, (1,), (0,))], seed=1)
        with pytest.raises(PreconditionError):
            JumpTrajectory((0,), [(0.5, (0,), (1,)), (0.4, (1,), (0,))], seed=1)
