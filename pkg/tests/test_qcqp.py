"""Real lift, power forms and constraint assembly of the nonconvex program."""

import numpy as np
import pytest

from risopt.errors import QcqpError
from risopt.network import (
    SurfaceConfig,
    cluster_state,
    loaded_solve,
    partition,
    random_passive_network,
)
from risopt.qcqp import (
    AffineConstraints,
    assemble_qcqp,
    build_config_constraints,
    build_port_power_form,
    build_receiver_constraints,
    lift_hermitian,
    real_lift,
    real_unlift,
)


def random_complex(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


class TestRealLift:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        i = random_complex(rng, 7)
        assert np.array_equal(real_unlift(real_lift(i)), i)

    def test_odd_length_rejected(self):
        with pytest.raises(QcqpError, match="even"):
            real_unlift(np.ones(5))

    def test_hermitian_lift_preserves_quadratic_value(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            m = a + a.conj().T
            i = random_complex(rng, 4)
            c = real_lift(i)
            assert c @ lift_hermitian(m) @ c == pytest.approx(
                np.real(i.conj() @ m @ i), rel=1e-12
            )


class TestPortPowerForm:
    def test_defining_property_bulk(self):
        # c^T Q_n c = Re(v_n conj(i_n)) / 2 against the complex oracle.
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            z = a + a.T  # symmetric, as any reciprocal network
            port = int(rng.integers(0, n))
            q = build_port_power_form(z, port).matrix
            i = random_complex(rng, n)
            v = z @ i
            lifted = real_lift(i) @ q @ real_lift(i)
            direct = 0.5 * np.real(v[port] * np.conj(i[port]))
            worst = max(worst, abs(lifted - direct) / max(abs(direct), 1e-30))
        assert worst <= 1e-12

    def test_sum_is_real_part_lift(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        z = a + a.T
        total = sum(build_port_power_form(z, p).matrix for p in range(6))
        sym_re = (z.real + z.real.T) / 2.0
        assert np.allclose(total, lift_hermitian(sym_re) / 2.0, rtol=0, atol=1e-12)

    def test_port_out_of_range(self):
        with pytest.raises(QcqpError, match="out of range"):
            build_port_power_form(np.eye(3, dtype=complex), 3)


class TestReceiverConstraints:
    def test_solved_currents_satisfy_rows(self):
        z = random_passive_network(3, seed=4)
        out = loaded_solve(z, SurfaceConfig(states=("tunable",) * 3), [1.0, 2.0, -3.0])
        # Normalize the solve to the constraint convention: Im i_r = 0,
        # Re i_r = sqrt(2 / Re z_r)  (pins received power at one watt).
        i = out.currents
        r = z.rx_index
        i = i * np.exp(-1j * np.angle(i[r]))
        i = i * np.sqrt(2.0 / z.entries[r, r].real) / np.abs(i[r])
        rows = build_receiver_constraints(partition(z))
        resid = rows.a @ real_lift(i) - rows.b
        assert np.max(np.abs(resid)) < 1e-9

    def test_nonpositive_receiver_resistance_rejected(self):
        z = random_passive_network(2, seed=5)
        p = partition(z)
        bad = type(p)(
            z_t=p.z_t, z_ts=p.z_ts, z_tr=p.z_tr, z_s=p.z_s, z_sr=p.z_sr, z_r=-1.0 + 0j
        )
        with pytest.raises(QcqpError, match="positive"):
            build_receiver_constraints(bad)


class TestConfigConstraints:
    def test_tunable_elements_get_power_forms(self):
        z = random_passive_network(3, seed=6)
        forms, labels, a, b = build_config_constraints(
            z, SurfaceConfig(states=("tunable", "open", "short"))
        )
        assert len(forms) == 1
        assert labels == ["P[s0] = 0"]
        # Open contributes two rows (Re, Im); short contributes two KVL rows.
        assert a.shape == (4, 2 * z.n_ports)
        assert np.array_equal(b, np.zeros(4))

    def test_cluster_rows_and_summed_form(self):
        z = random_passive_network(4, seed=7)
        states = (cluster_state(0),) * 3 + ("tunable",)
        forms, labels, a, b = build_config_constraints(z, SurfaceConfig(states=states))
        assert len(forms) == 2  # element form + cluster form
        assert a.shape[0] == 4  # two voltage-equality complex rows

    def test_solved_cluster_satisfies_constraints(self):
        z = random_passive_network(3, seed=8)
        states = (cluster_state(0), cluster_state(0), "tunable")
        cfg = SurfaceConfig(states=states)
        out = loaded_solve(z, cfg, [5.0, -2.0])
        c = real_lift(out.currents)
        forms, _, a, b = build_config_constraints(z, cfg)
        assert np.max(np.abs(a @ c - b)) < 1e-9
        for form in forms:
            assert c @ form.matrix @ c == pytest.approx(0.0, abs=1e-9)


class TestAssemble:
    def test_objective_value_is_transmit_power(self):
        z = random_passive_network(2, seed=9)
        cfg = SurfaceConfig(states=("tunable", "tunable"))
        problem = assemble_qcqp(z, cfg)
        out = loaded_solve(z, cfg, [4.0, -6.0])
        i = out.currents
        r = z.rx_index
        i = i * np.exp(-1j * np.angle(i[r]))
        i = i * np.sqrt(2.0 / z.entries[r, r].real) / np.abs(i[r])
        c = real_lift(i) * np.sqrt(problem.scale)
        p_t = c @ problem.objective @ c
        # With P_r pinned at 1 W the objective equals 1/eta.
        assert p_t == pytest.approx(1.0 / out.eta, rel=1e-9)

    def test_affine_rows_independent(self):
        z = random_passive_network(4, seed=10)
        problem = assemble_qcqp(z, SurfaceConfig(states=("tunable", "open", "short", "tunable")))
        problem.affine.check_rank()  # should not raise

    def test_dependent_rows_detected(self):
        a = np.array([[1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(QcqpError, match="dependent"):
            AffineConstraints(a=a, b=np.zeros(2)).check_rank()

    def test_non_canonical_order_rejected(self):
        z = random_passive_network(2, seed=11)
        swapped = type(z)(
            entries=z.entries[np.ix_([3, 1, 2, 0], [3, 1, 2, 0])],
            roles=(z.roles[3], z.roles[1], z.roles[2], z.roles[0]),
            frequency=z.frequency,
        )
        with pytest.raises(QcqpError, match="ordered"):
            assemble_qcqp(swapped, SurfaceConfig(states=("tunable", "tunable")))
