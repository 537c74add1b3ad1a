import numpy as np
import pytest
from scipy.linalg import expm

from workagent.hilbert import AgentBasis, coherent_state, product_state
from workagent.model import ModelParams, adiabatic_levels, total_hamiltonian
from workagent.propagate import (
    DriveProtocol,
    LeakageError,
    PropagationError,
    classical_drive,
    evolve_autonomous,
    evolve_driven,
    lanczos_expv,
)


class TestClassicalDrive:
    def test_endpoints_and_midpoint(self):
        X0, om = 1.2, 0.05
        assert classical_drive(0.0, X0, om) == pytest.approx(-X0)
        assert classical_drive(np.pi / om, X0, om) == pytest.approx(X0)
        assert classical_drive(0.5 * np.pi / om, X0, om) == pytest.approx(0.0, abs=1e-12)

    def test_peak_velocity(self):
        # dX/dt = X0 omega sin(omega t) peaks at v0 = X0 omega mid-sweep
        X0, om = 1.0606, 0.02
        h = 1e-6
        tm = 0.5 * np.pi / om
        v = (classical_drive(tm + h, X0, om) - classical_drive(tm - h, X0, om)) / (2 * h)
        assert v == pytest.approx(X0 * om, rel=1e-8)

    def test_domain_guard(self):
        with pytest.raises(ValueError):
            classical_drive(-1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            classical_drive(np.pi / 0.1 + 1.0, 1.0, 0.1)


class TestDriveProtocol:
    def test_cosine_requires_params(self):
        with pytest.raises(ValueError):
            DriveProtocol("classical_cosine")

    def test_recorded_interpolates(self):
        tab = np.array([[0.0, -1.0], [1.0, 0.0], [2.0, 1.0]])
        d = DriveProtocol("recorded_trajectory", samples=tab)
        assert d(0.5) == pytest.approx(-0.5)
        assert np.allclose(d([0.0, 2.0]), [-1.0, 1.0])

    def test_recorded_validation(self):
        with pytest.raises(ValueError):
            DriveProtocol("recorded_trajectory", samples=[[0.0, 1.0], [0.0, 2.0]])
        with pytest.raises(ValueError):
            DriveProtocol("bogus")

    def test_recorded_domain(self):
        d = DriveProtocol("recorded_trajectory", samples=[[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(ValueError):
            d(1.5)


def _random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (A + A.conj().T)


class TestLanczosExpv:
    def test_matches_dense_expm(self):
        H = _random_hermitian(60, 11)
        rng = np.random.default_rng(12)
        v = rng.normal(size=60) + 1j * rng.normal(size=60)
        v /= np.linalg.norm(v)
        got = lanczos_expv(lambda x: H @ x, v, 0.35)
        want = expm(-0.35j * H) @ v
        assert np.linalg.norm(got - want) < 1e-10

    def test_unitary(self):
        H = _random_hermitian(40, 13)
        v = np.ones(40, dtype=complex) / np.sqrt(40)
        out = lanczos_expv(lambda x: H @ x, v, 1.7)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)

    def test_eigenvector_phase(self):
        H = _random_hermitian(25, 14)
        w, Q = np.linalg.eigh(H)
        v = Q[:, 3].astype(complex)
        out = lanczos_expv(lambda x: H @ x, v, 0.9)
        assert np.allclose(out, np.exp(-0.9j * w[3]) * v, atol=1e-10)

    def test_zero_vector_passthrough(self):
        out = lanczos_expv(lambda x: x, np.zeros(5, dtype=complex), 1.0)
        assert np.allclose(out, 0.0)

    def test_nonconvergence_raises(self):
        H = _random_hermitian(80, 15)
        v = np.ones(80, dtype=complex) / np.sqrt(80)
        with pytest.raises(PropagationError):
            lanczos_expv(lambda x: (50 * H) @ x, v, 5.0, m_max=6)


class TestEvolveAutonomous:
    def setup_method(self):
        self.params = ModelParams(L=2, N=2, U=0.5)
        self.agent = AgentBasis(n_max=30, omega=0.4, ell=0.5)
        self.H = total_hamiltonian(self.params, self.agent)
        lev = adiabatic_levels(self.params, -0.8)
        agent_vec = coherent_state(self.agent, -0.8, 0.0)
        self.psi0 = product_state(
            lev.vectors[:, 0], agent_vec, self.H.system, self.agent
        )

    def test_matches_dense_oracle(self):
        T = 4.0
        traj = evolve_autonomous(self.H, self.psi0, T, checkpoints=8)
        exact = expm(-1j * T * self.H.as_matrix()) @ self.psi0.amplitudes
        err = np.linalg.norm(traj.final.amplitudes - exact)
        assert err < 1e-8

    def test_checkpoint_times(self):
        traj = evolve_autonomous(self.H, self.psi0, 2.0, checkpoints=5)
        assert np.allclose(traj.times, np.linspace(0, 2.0, 6))
        assert len(traj.states) == 6
        assert traj.agent_energy_hist.shape == (31, 6)

    def test_energy_conserved_along_run(self):
        traj = evolve_autonomous(self.H, self.psi0, 6.0, checkpoints=6)
        e = [self.H.expectation(s.amplitudes) for s in traj.states]
        assert np.max(np.abs(np.diff(e))) < 1e-8 * self.H.norm_estimate()

    def test_leakage_guard(self):
        # population parked on the top oscillator level must trip the guard
        top = np.zeros(self.agent.dim)
        top[-1] = 1.0
        lev = adiabatic_levels(self.params, -0.8)
        psi0 = product_state(lev.vectors[:, 0], top, self.H.system, self.agent)
        with pytest.raises(LeakageError):
            evolve_autonomous(self.H, psi0, 1.0, checkpoints=2)

    def test_callback_invoked(self):
        seen = []
        evolve_autonomous(
            self.H, self.psi0, 1.0, checkpoints=3, callback=lambda k, s: seen.append(k)
        )
        assert seen == [1, 2, 3]


class TestEvolveDriven:
    def setup_method(self):
        self.params = ModelParams(L=2, N=5, U=0.6)

    def test_adiabatic_limit(self):
        # very slow sweep keeps the state pinned to its adiabatic level
        om = 0.002
        drive = DriveProtocol("classical_cosine", X0=1.0, omega=om)
        traj = evolve_driven(self.params, drive, 0, np.pi / om, checkpoints=10)
        lev = adiabatic_levels(self.params, 1.0)
        p0 = abs(np.vdot(lev.vectors[:, 0], traj.final)) ** 2
        assert p0 > 0.999

    def test_norm_preserved(self):
        drive = DriveProtocol("classical_cosine", X0=1.0, omega=0.05)
        traj = evolve_driven(self.params, drive, 2, np.pi / 0.05, checkpoints=7)
        for psi in traj.states:
            assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)

    def test_vector_initial_state(self):
        lev = adiabatic_levels(self.params, -1.0)
        drive = DriveProtocol("classical_cosine", X0=1.0, omega=0.05)
        t1 = evolve_driven(self.params, drive, 1, 5.0, checkpoints=3)
        t2 = evolve_driven(self.params, drive, lev.vectors[:, 1], 5.0, checkpoints=3)
        assert np.allclose(t1.final, t2.final)

    def test_self_convergence_second_order(self):
        # midpoint stepping converges with order >= 2 in dt
        drive = DriveProtocol("classical_cosine", X0=1.0, omega=0.08)
        T = np.pi / 0.08
        finals = []
        for dt in [0.4, 0.2, 0.1]:
            traj = evolve_driven(self.params, drive, 0, T, dt=dt, checkpoints=1)
            finals.append(traj.final)
        e1 = np.linalg.norm(finals[0] - finals[2])
        e2 = np.linalg.norm(finals[1] - finals[2])
        assert e1 / e2 > 3.5
