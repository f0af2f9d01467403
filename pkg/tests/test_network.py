"""Multiport model: partitioning, reductions, terminated solves, S/Z maps."""

import numpy as np
import pytest

from risopt.errors import NetworkError
from risopt.network import (
    OPEN_REACTANCE,
    ROLE_RX,
    ROLE_TX,
    ImpedanceMatrix,
    SurfaceConfig,
    assemble,
    cluster_state,
    loaded_solve,
    merge_parallel,
    partition,
    pte,
    random_passive_network,
    reduce_open,
    reduce_short,
    s_to_z,
    surface_role,
    z_to_s,
)


def link_matrix(entries, n_surface):
    roles = (ROLE_TX,) + tuple(surface_role(i) for i in range(n_surface)) + (ROLE_RX,)
    return ImpedanceMatrix(np.asarray(entries, dtype=complex), roles, 1e9)


def simple_link(n_surface=1, seed=0, coupling=1.0):
    return random_passive_network(n_surface, seed=seed, coupling=coupling)


class TestImpedanceMatrix:
    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.4, 1.0]])
        with pytest.raises(NetworkError, match="symmetric"):
            ImpedanceMatrix(m, (ROLE_TX, ROLE_RX), 1e9)

    def test_role_multiplicity_enforced(self):
        with pytest.raises(NetworkError, match="exactly one"):
            ImpedanceMatrix(np.eye(2), (ROLE_TX, ROLE_TX), 1e9)

    def test_passivity_check(self):
        z = link_matrix([[1.0, 2.0], [2.0, 1.0]], 0)
        with pytest.raises(NetworkError, match="positive semidefinite"):
            z.check_passivity()
        simple_link().check_passivity()


class TestPartition:
    def test_three_port_blocks_are_scalars(self):
        z = simple_link(1)
        p = partition(z)
        assert p.z_s.shape == (1, 1)
        assert p.z_ts.shape == (1,)
        assert isinstance(p.z_t, complex)

    def test_assemble_is_inverse(self):
        z = simple_link(4)
        back = assemble(partition(z), frequency=z.frequency)
        assert np.array_equal(back.entries, z.entries)
        assert back.roles == z.roles

    def test_default_surface_block_dimension(self):
        z = simple_link(100)
        assert partition(z).z_s.shape == (100, 100)


class TestReduceOpen:
    def test_open_none_identity(self):
        z = simple_link(2)
        assert np.array_equal(reduce_open(z, []).entries, z.entries)

    def test_diagonal_unaffected(self):
        m = np.diag([50.0, 60.0, 70.0, 80.0])
        z = link_matrix(m, 2)
        red = reduce_open(z, [1])
        assert np.array_equal(red.entries, np.diag([50.0, 70.0, 80.0]))

    def test_open_tx_rejected(self):
        with pytest.raises(NetworkError, match="only surface ports"):
            reduce_open(simple_link(2), [0])

    def test_equivalent_to_forced_zero_current(self):
        z = simple_link(3, seed=5)
        red = reduce_open(z, [2])  # drop surface element index 1
        cfg_red = SurfaceConfig(states=("tunable", "tunable"))
        cfg_full = SurfaceConfig(states=("tunable", "open", "tunable"))
        x = [17.0, -4.0]
        eta_red = loaded_solve(red, cfg_red, x).eta
        eta_full = loaded_solve(z, cfg_full, x).eta
        assert eta_red == pytest.approx(eta_full, rel=1e-9)


class TestReduceShort:
    def test_hand_computed_schur(self):
        m = np.array([[2.0, 1.0, 0.1], [1.0, 2.0, 0.0], [0.1, 0.0, 2.0]])
        z = link_matrix(m, 1)
        red = reduce_short(z, [1])
        # Schur complement of the [[2]] block at position 1.
        expected = m[np.ix_([0, 2], [0, 2])] - np.outer(m[[0, 2], 1], m[1, [0, 2]]) / 2.0
        assert np.allclose(red.entries, expected, rtol=1e-14)
        assert red.entries[0, 0] == pytest.approx(1.5)

    def test_short_none_identity(self):
        z = simple_link(2)
        assert np.array_equal(reduce_short(z, []).entries, z.entries)

    def test_decoupled_port_leaves_rest(self):
        m = np.diag([50.0, 60.0, 70.0, 80.0]).astype(complex)
        z = link_matrix(m, 2)
        red = reduce_short(z, [2])
        assert np.allclose(red.entries, np.diag([50.0, 60.0, 80.0]))

    def test_equivalent_to_shorted_termination(self):
        z = simple_link(3, seed=8)
        red = reduce_short(z, [1])  # drop surface element index 0
        cfg_red = SurfaceConfig(states=("tunable", "tunable"))
        cfg_full = SurfaceConfig(states=("short", "tunable", "tunable"))
        x = [3.0, -11.0]
        assert loaded_solve(red, cfg_red, x).eta == pytest.approx(
            loaded_solve(z, cfg_full, x).eta, rel=1e-9
        )

    def test_singular_block_rejected(self):
        m = np.full((4, 4), 1.0) + np.diag([50.0, 0.0, 0.0, 50.0])
        z = link_matrix(m, 2)
        with pytest.raises(NetworkError, match="singular"):
            reduce_short(z, [1, 2])


class TestMergeParallel:
    def test_parallel_admittances_add(self):
        m = np.diag([50.0, 20.0, 20.0, 50.0]).astype(complex)
        z = link_matrix(m, 2)
        merged = merge_parallel(z, {0: [1, 2]})
        assert merged.n_ports == 3
        assert merged.entries[1, 1] == pytest.approx(10.0)  # y doubles, z halves

    def test_singleton_clusters_are_permutation(self):
        z = simple_link(2, seed=3)
        merged = merge_parallel(z, {0: [1], 1: [2]})
        assert np.allclose(merged.entries, z.entries, rtol=1e-9)

    def test_grid_cluster_count(self):
        z = simple_link(100)
        clusters = {cid: [1 + 4 * cid + k for k in range(4)] for cid in range(25)}
        merged = merge_parallel(z, clusters)
        assert merged.n_ports == 27

    def test_equivalent_to_cluster_termination(self):
        z = simple_link(4, seed=11)
        merged = merge_parallel(z, {0: [1, 2], 1: [3, 4]})
        cfg_m = SurfaceConfig(states=("tunable", "tunable"))
        cfg_full = SurfaceConfig(
            states=(cluster_state(0), cluster_state(0), cluster_state(1), cluster_state(1))
        )
        x = [9.0, -25.0]
        assert loaded_solve(merged, cfg_m, x).eta == pytest.approx(
            loaded_solve(z, cfg_full, x).eta, rel=1e-9
        )

    def test_overlapping_clusters_rejected(self):
        with pytest.raises(NetworkError, match="overlap"):
            merge_parallel(simple_link(3), {0: [1, 2], 1: [2, 3]})


class TestLoadedSolve:
    def test_no_path_means_zero_eta(self):
        m = np.diag([50.0, 40.0, 60.0]).astype(complex)
        z = link_matrix(m, 1)
        out = loaded_solve(z, SurfaceConfig(states=("tunable",)), [5.0])
        assert out.eta == 0.0

    def test_kvl_residual_small(self):
        z = simple_link(3, seed=2)
        out = loaded_solve(z, SurfaceConfig(states=("tunable",) * 3), [1.0, -2.0, 3.0])
        resid = np.linalg.norm(out.port_voltages - z.entries @ out.currents)
        assert resid <= 1e-9 * np.linalg.norm(out.port_voltages)

    def test_open_sentinel_matches_open_state(self):
        z = simple_link(2, seed=4)
        a = loaded_solve(z, SurfaceConfig(states=("tunable", "tunable")), [7.0, OPEN_REACTANCE])
        b = loaded_solve(z, SurfaceConfig(states=("tunable", "open")), [7.0])
        assert a.eta == pytest.approx(b.eta, rel=1e-12)
        assert abs(a.currents[2]) < 1e-12

    def test_eta_bounded_by_one(self):
        for seed in range(5):
            z = simple_link(2, seed=seed)
            out = loaded_solve(z, SurfaceConfig(states=("tunable", "tunable")), [0.0, 0.0])
            assert 0.0 <= out.eta <= 1.0


class TestPte:
    def test_direct_two_port_value(self):
        z = link_matrix(np.eye(2), 0)
        assert pte([1.0, 1.0], z) == pytest.approx(0.5)

    def test_zero_receive_current(self):
        z = link_matrix(np.eye(2), 0)
        assert pte([1.0, 0.0], z) == 0.0

    def test_scale_invariance(self):
        z = simple_link(2, seed=6)
        i = np.array([1.0, 0.3 - 0.2j, -0.1j, 0.05 + 0.4j])
        assert pte(i, z) == pytest.approx(pte(3.7j * i, z), rel=1e-12)

    def test_active_network_rejected(self):
        z = link_matrix([[-1.0, 0.0], [0.0, 1.0]], 0)
        with pytest.raises(NetworkError, match="passivity"):
            pte([1.0, 0.0], z)


class TestScatteringMaps:
    def test_matched_network(self):
        assert np.allclose(s_to_z(np.zeros((3, 3)), 50.0), 50.0 * np.eye(3))

    def test_one_port_short(self):
        assert abs(s_to_z(np.array([[-1.0]]), 50.0)[0, 0]) < 1e-9

    def test_round_trip_random_passive(self):
        rng = np.random.default_rng(12)
        for n in (2, 5, 30):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            s = 0.9 * a / np.linalg.norm(a, 2)
            assert np.allclose(z_to_s(s_to_z(s, 50.0), 50.0), s, rtol=0, atol=1e-10)

    def test_active_scattering_rejected(self):
        with pytest.raises(NetworkError, match="active"):
            s_to_z(np.array([[1.2]]), 50.0)

    def test_perfect_reflection_rejected(self):
        with pytest.raises(NetworkError, match="reflects perfectly"):
            s_to_z(np.array([[1.0]]), 50.0)
