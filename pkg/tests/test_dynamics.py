import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import docksim as ds
from docksim.dynamics import (
    DelayLine,
    _lerp_history,
    extract_events,
    integrate_dde,
    step,
    write_trajectory_csv,
)

from conftest import JX_RECOVERED, approach_config, table1_body, table1_contact


class TestDelayLine:
    def test_constant_prehistory(self):
        line = DelayLine(np.array([1.0, 2.0]), dt=0.1, h=0.3)
        assert np.array_equal(line.sample(-5.0), [1.0, 2.0])
        assert np.array_equal(line.sample(0.0), [1.0, 2.0])

    def test_linear_ramp_interpolates_exactly(self):
        line = DelayLine(np.array([0.0]), dt=0.1, h=0.5)
        for i in range(1, 8):
            line.push(i * 0.1, np.array([2.0 * i * 0.1]))
        # a linear signal is reproduced exactly by linear interpolation
        for t in (0.05, 0.12, 0.33, 0.61):
            assert line.sample(t)[0] == pytest.approx(2.0 * t, abs=1e-15)

    def test_rejects_off_grid_push(self):
        line = DelayLine(np.array([0.0]), dt=0.1, h=0.2)
        with pytest.raises(ValueError, match="off-grid"):
            line.push(0.15, np.array([1.0]))

    def test_rejects_future_sample(self):
        line = DelayLine(np.array([0.0]), dt=0.1, h=0.2)
        line.push(0.1, np.array([1.0]))
        with pytest.raises(ValueError, match="ahead"):
            line.sample(0.3)

    def test_capacity_covers_delay_window(self):
        line = DelayLine(np.array([0.0]), dt=1e-4, h=0.016)
        assert line.capacity >= math.ceil(0.016 / 1e-4) + 2

    def test_matches_engine_interpolation(self):
        rng = np.random.default_rng(7)
        Y = rng.normal(size=(30, 3))
        line = DelayLine(Y[0], dt=0.01, h=0.29)  # window covers the whole run
        for i in range(1, 30):
            line.push(i * 0.01, Y[i])
        for q in (0.0, 3.4, 7.0, 28.9):
            assert np.allclose(line.sample(q * 0.01), _lerp_history(Y, 29, q), atol=1e-15)


class TestRhs2D:
    def test_ballistic_coast(self, body, contact):
        s = ds.ChaserState2D(z=-0.10, v_z=-0.02, theta=1.0, omega=0.0, y=0.0, v_y=0.01)
        dy = ds.rhs_2d(s, s, body, contact)
        assert np.allclose(dy, [-0.02, 0.0, 0.0, 0.0, 0.01, 0.0])

    def test_force_and_torque_substitution(self, body):
        # d = -0.001 at 60 deg: f = 3 N, v_z' = 0.05 m/s^2, omega' = -a f sin(60)/J_x
        contact = table1_contact()
        s = ds.ChaserState2D(z=-0.151, v_z=0.0, theta=math.radians(60), omega=0.0)
        dy = ds.rhs_2d(s, s, body, contact)
        assert dy[1] == pytest.approx(3.0 / 60.0, rel=1e-9)
        assert dy[3] == pytest.approx(-0.3 * 3.0 * math.sin(math.radians(60)) / JX_RECOVERED, rel=1e-9)

    @given(st.floats(-0.3, 0.0), st.floats(-0.05, 0.05), st.floats(0.2, 2.0), st.floats(-1, 1))
    def test_wall_parallel_velocity_never_accelerates(self, z, vz, th, om):
        body, contact = table1_body(), table1_contact(b_v=30.0)
        s = ds.ChaserState2D(z=z, v_z=vz, theta=th, omega=om, y=0.3, v_y=0.2)
        assert ds.rhs_2d(s, s, body, contact)[5] == 0.0

    def test_spring_set_uses_delayed_attitude(self):
        # a probe-aligned spring projects on the wall normal via cos(theta(t-h))
        body = table1_body()
        contact = ds.ContactParams(k_v=0.0, b_v=0.0, alpha=math.radians(30),
                                   springs=((2000.0, [0.0, 0.0, 1.0]),))
        now = ds.ChaserState2D(z=-0.151, v_z=0.0, theta=math.radians(60), omega=0.0)
        delayed = ds.ChaserState2D(z=-0.151, v_z=0.0, theta=math.radians(65), omega=0.0)
        dy = ds.rhs_2d(now, delayed, body, contact)
        d_del = -0.151 + 0.3 * math.cos(math.radians(65))
        assert d_del < 0.0
        k_phi = 2000.0 * math.cos(math.radians(65)) ** 2
        assert dy[1] == pytest.approx(-k_phi * d_del / 60.0, rel=1e-12)


class TestRhs3D:
    def test_gyroscopic_oracle(self):
        body = ds.BodyParams(m=1.0, J=np.diag([1.0, 2.0, 3.0]), a_B=[0, 0, 1])
        contact = ds.ContactParams(k_v=0.0, b_v=0.0, alpha=0.5)
        s = ds.ChaserState3D(r=[0, 0, 1], v=[0, 0, 0], d_c3=[0, 0, 1], omega=[1.0, 1.0, 1.0])
        dy = ds.rhs_3d(s, s, body, contact)
        assert np.allclose(dy[9:12], [-1.0, 1.0, -1.0 / 3.0], atol=1e-12)

    def test_zero_force_regime(self):
        body, contact = table1_body(), table1_contact()
        s = ds.ChaserState3D(r=[0, 0, 0.1], v=[0, 0.01, -0.02], d_c3=[0, 0, 1], omega=[0, 0, 0])
        dy = ds.rhs_3d(s, s, body, contact)
        assert np.allclose(dy[3:6], 0.0) and np.allclose(dy[9:12], 0.0)

    @settings(max_examples=100, deadline=None)
    @given(z=st.floats(-0.2, -0.05), vz=st.floats(-0.05, 0.05),
           th=st.floats(0.2, 1.4), om=st.floats(-0.5, 0.5))
    def test_planar_embedding_matches_rhs_2d(self, z, vz, th, om):
        body, contact = table1_body(), table1_contact(b_v=20.0)
        s2 = ds.ChaserState2D(z=z, v_z=vz, theta=th, omega=om)
        d2 = ds.ChaserState2D(z=z - 0.001, v_z=vz, theta=th + 0.01, omega=om)
        dy2 = ds.rhs_2d(s2, d2, body, contact)
        dy3 = ds.rhs_3d(s2.embed_3d(), d2.embed_3d(), body, contact)
        assert abs(dy3[5] - dy2[1]) < 1e-12   # v_z'
        assert abs(dy3[9] - dy2[3]) < 1e-12   # omega_x'
        assert abs(dy3[3]) < 1e-12 and abs(dy3[6]) < 1e-12  # stays planar


class TestStep:
    def test_drift_is_exact(self):
        line = DelayLine(np.array([0.0, 0.5]), dt=0.1, h=0.0)
        out = step(np.array([0.0, 0.5]), 0.0, line, 0.1, lambda y, yd: np.array([y[1], 0.0]))
        assert out[0] == pytest.approx(0.05, abs=1e-18)

    def test_harmonic_phase_error(self):
        # undelayed, undamped 1D contact: z'' = -(k/m) z, one full period
        k_over_m = 3000.0 / 60.0
        omega = math.sqrt(k_over_m)
        dt = 1e-4
        rhs = lambda y, yd: np.array([y[1], -k_over_m * y[0]])
        n = int(round(2 * math.pi / omega / dt))
        _, Y = integrate_dde(rhs, np.array([1.0, 0.0]), dt, n * dt, 0.0)
        t_end = n * dt
        phase = math.atan2(-Y[-1, 1] / omega, Y[-1, 0]) - (omega * t_end) % (2 * math.pi)
        phase = (phase + math.pi) % (2 * math.pi) - math.pi
        assert abs(phase) < 1e-6

    def test_attitude_stays_unit_over_many_steps(self):
        # pure rotation, renormalized every step; the norm is pinned to one
        # ulp of 1 after every single step, so the bound cannot drift no
        # matter how long the run is
        rhs = lambda y, yd: np.array([y[1] * 0.7 - y[2] * 0.3,
                                      y[2] * 0.5 - y[0] * 0.7,
                                      y[0] * 0.3 - y[1] * 0.5])
        _, Y = integrate_dde(rhs, np.array([0.0, 0.0, 1.0]), 1e-3, 100_000 * 1e-3, 0.0,
                             unit_slice=slice(0, 3))
        norms = np.linalg.norm(Y, axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-9)

    def test_rejects_non_finite(self):
        line = DelayLine(np.array([1.0]), dt=0.1, h=0.0)
        with pytest.raises(ds.DivergenceError, match="non-finite"):
            step(np.array([1.0]), 0.0, line, 0.1, lambda y, yd: np.array([float("inf")]))


class TestSimulate:
    def test_no_contact_before_arrival(self, body, contact):
        cfg = approach_config(t_end=0.3)  # approach takes 0.5 s
        traj, events = ds.simulate(cfg, body, contact, mode="2d")
        assert events == []
        assert not traj.in_contact.any()
        assert traj.f.max() == 0.0

    def test_approach_is_pure_drift(self, body, contact):
        cfg = approach_config(t_end=0.4)
        traj, _ = ds.simulate(cfg, body, contact, mode="2d")
        # RK4 is exact for constant-velocity drift
        assert traj.states[-1, 0] == pytest.approx(-0.14 - 0.02 * 0.4, abs=1e-12)
        assert traj.states[-1, 2] == pytest.approx(math.radians(60), abs=1e-15)

    def test_divergence_guard_trips(self, body):
        contact = table1_contact(b_v=0.0, activation="bilateral")
        cfg = approach_config(t_end=30.0)
        with pytest.raises(ds.DivergenceError, match="divergence bound"):
            ds.simulate(cfg, body, contact, mode="2d", divergence_factor=1.2)

    def test_record_every_decimates_uniformly(self, body, contact):
        cfg = ds.SimConfig(h=0.016, dt=1e-4, t_end=0.2, initial=approach_config().initial,
                           record_every=10)
        traj, _ = ds.simulate(cfg, body, contact, mode="2d")
        assert len(traj.times) == 201
        assert np.allclose(np.diff(traj.times), 1e-3)

    def test_planar_3d_matches_2d_run(self, body):
        contact = table1_contact(b_v=50.0)
        cfg = approach_config(t_end=1.0)
        t2, _ = ds.simulate(cfg, body, contact, mode="2d")
        t3, _ = ds.simulate(cfg, body, contact, mode="3d")
        assert np.abs(t3.states[:, 2] - t2.states[:, 0]).max() < 1e-9   # z
        assert np.abs(t3.states[:, 9] - t2.states[:, 3]).max() < 1e-9   # omega_x
        assert np.abs(t3.d - t2.d).max() < 1e-9

    def test_elastic_zero_delay_restitution(self, body):
        # near-linear elastic regime: slow approach keeps the attitude drift
        # during contact (the only nonlinear effect) negligible
        contact = table1_contact(b_v=0.0)
        cfg = approach_config(h=0.0, t_end=1.0, v0=0.001, clearance=0.00025)
        _, events = ds.simulate(cfg, body, contact, mode="2d", event_window=0.0)
        eps = ds.restitution(events[0]).epsilon
        assert eps == pytest.approx(1.0, abs=1e-3)

    def test_off_grid_delay_interpolates(self, body):
        # h need not be a multiple of dt: the off-grid value must land
        # strictly between its on-grid neighbours
        contact = table1_contact(b_v=50.0)
        eps = {}
        for h in (0.016, 0.0163, 0.017):
            cfg = approach_config(h=h)
            _, events = ds.simulate(cfg, body, contact, mode="2d", event_window=0.004)
            eps[h] = ds.restitution(events[0]).epsilon
        assert eps[0.016] < eps[0.0163] < eps[0.017]

    def test_delay_monotonicity_of_restitution(self, body):
        contact = table1_contact(b_v=50.0)
        eps = []
        for h in (0.0, 0.008, 0.016, 0.024):
            cfg = approach_config(h=h)
            _, events = ds.simulate(cfg, body, contact, mode="2d", event_window=0.004)
            eps.append(ds.restitution(events[0]).epsilon)
        assert all(a < b for a, b in zip(eps, eps[1:]))

    def test_grid_convergence_of_restitution(self, body):
        contact = table1_contact(b_v=50.0)
        eps = {}
        for dt in (1e-4, 5e-5):
            cfg = approach_config(dt=dt)
            _, events = ds.simulate(cfg, body, contact, mode="2d", event_window=0.004)
            eps[dt] = ds.restitution(events[0]).epsilon
        assert abs(eps[1e-4] - eps[5e-5]) / eps[5e-5] < 0.005


class TestExtractEvents:
    def test_interpolated_crossings(self):
        t = np.arange(0.0, 1.0, 0.01)
        d = 0.1 - 0.3 * t            # crosses zero at t = 1/3
        d_dot = np.full_like(t, -0.3)
        events = extract_events(t, d, d_dot, window=0.05)
        assert events == []          # never comes back out: open event dropped
        d2 = np.abs(t - 0.5) - 0.2   # inside (0.3, 0.7)
        dd2 = np.sign(t - 0.5) * 1.0
        (ev,) = extract_events(t, d2, dd2, window=0.05)
        assert ev.t_in == pytest.approx(0.3, abs=1e-9)
        assert ev.t_out == pytest.approx(0.7, abs=1e-9)
        assert ev.v_minus == pytest.approx(-1.0)
        assert ev.v_plus == pytest.approx(1.0)
        assert ev.max_depth == pytest.approx(0.2, abs=0.01)

    def test_window_zero_takes_bracketing_samples(self):
        t = np.arange(0.0, 1.0, 0.1)
        d = np.array([0.2, 0.1, -0.1, -0.2, -0.1, 0.05, 0.1, 0.2, 0.3, 0.4])
        dd = np.linspace(-1.0, 1.0, 10)
        (ev,) = extract_events(t, d, dd, window=0.0)
        assert ev.v_minus == dd[1]
        assert ev.v_plus == dd[5]


def test_trajectory_csv_round_trip(tmp_path, body, contact):
    cfg = approach_config(t_end=0.2)
    traj, _ = ds.simulate(cfg, body, contact, mode="2d")
    path = tmp_path / "run.traj.csv"
    write_trajectory_csv(traj, path)
    header = path.read_text().splitlines()[0]
    assert header == "t,z,v_z,theta,omega,d,d_dot,f,tau"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(traj.times), 9)
    assert data[0, 1] == pytest.approx(traj.states[0, 0], rel=1e-8)
