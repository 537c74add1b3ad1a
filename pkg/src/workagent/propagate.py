"""Time evolution: Lanczos-exponential autonomous stepping and the
classically driven (Cl0 / Cl) reference engine.

The autonomous engine never forms the composite matrix; it only needs the
TotalHamiltonian matvec.  The driven engine works on the small system
sector and uses an exact midpoint exponential per step.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

from .hilbert import CompositeState
from .model import system_hamiltonian


class PropagationError(RuntimeError):
    pass


class LeakageError(PropagationError):
    """Population reached the top oscillator levels; raise n_max."""


def classical_drive(t, X0, omega):
    """Half-swing cosine drive X(t) = -X0 cos(omega t), t in [0, pi/omega]."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > np.pi / omega + 1e-9):
        raise ValueError("drive evaluated outside [0, pi/omega]")
    return -X0 * np.cos(omega * t)


@dataclass
class DriveProtocol:
    """Classical drive: either the cosine sweep or a recorded (t, X) table."""

    kind: str  # 'classical_cosine' | 'recorded_trajectory'
    X0: float = None
    omega: float = None
    samples: np.ndarray = None  # (n, 2) array of (t, X)

    def __post_init__(self):
        if self.kind == "classical_cosine":
            if self.X0 is None or self.omega is None:
                raise ValueError("cosine drive needs X0 and omega")
        elif self.kind == "recorded_trajectory":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 2 or s.shape[1] != 2 or np.any(np.diff(s[:, 0]) <= 0):
                raise ValueError("recorded samples must be (t, X) with strictly increasing t")
            self.samples = s
        else:
            raise ValueError(f"unknown drive kind {self.kind!r}")

    def __call__(self, t):
        if self.kind == "classical_cosine":
            return classical_drive(t, self.X0, self.omega)
        s = self.samples
        t = np.asarray(t, dtype=float)
        if np.any(t < s[0, 0] - 1e-9) or np.any(t > s[-1, 0] + 1e-9):
            raise ValueError("drive domain exceeded")
        return np.interp(t, s[:, 0], s[:, 1])


@dataclass
class Trajectory:
    times: np.ndarray
    states: list  # CompositeState (autonomous) or system vectors (driven)
    channel_snapshots: list = field(default_factory=list)
    agent_energy_hist: np.ndarray = None  # (agent_dim, n_checkpoints)
    meta: dict = field(default_factory=dict)

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]


def _subspace_exp(alpha, beta, dt, j):
    """Column 0 of exp(-i dt T) for the j-dim tridiagonal T."""
    if j == 1:
        return np.array([np.exp(-1j * dt * alpha[0])])
    evals, evecs = eigh_tridiagonal(alpha[:j], beta[1:j])
    return evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())


def lanczos_expv(matvec, v, dt, m_max=40, tol=1e-12):
    """exp(-i dt H) v by an adaptively sized Lanczos subspace.

    Fully reorthogonalized, so unitarity holds at machine precision.
    Raises PropagationError when the residual estimate has not converged
    by m_max subspace vectors.
    """
    norm0 = np.linalg.norm(v)
    if norm0 == 0:
        return v
    V = np.empty((m_max, v.shape[0]), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = v / norm0
    w = matvec(V[0])
    alpha[0] = np.real(np.vdot(V[0], w))
    w = w - alpha[0] * V[0]
    for j in range(1, m_max):
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14:
            # invariant subspace: the j-dim result is exact
            small = _subspace_exp(alpha, beta, dt, j)
            return norm0 * (small @ V[:j])
        small = _subspace_exp(alpha, beta, dt, j)
        # standard a-posteriori estimate: weight leaking out of the subspace
        err = beta[j] * abs(small[-1]) * abs(dt)
        if err < tol:
            return norm0 * (small @ V[:j])
        V[j] = w / beta[j]
        w = matvec(V[j]) - beta[j] * V[j - 1]
        alpha[j] = np.real(np.vdot(V[j], w))
        w = w - alpha[j] * V[j]
        w = w - V[: j + 1].T @ (V[: j + 1].conj() @ w)
    raise PropagationError("Lanczos step did not converge; reduce dt or raise m_max")


def evolve_autonomous(
    H,
    psi0,
    t_final,
    dt=None,
    checkpoints=200,
    leak_tol=1e-6,
    krylov_dim=None,
    callback=None,
):
    """Unitary autonomous evolution of a CompositeState under TotalHamiltonian.

    dt defaults to 0.5 / ||H||_est; krylov_dim defaults to 20 and grows
    automatically via the adaptive Lanczos step.
    """
    hnorm = H.norm_estimate()
    if dt is None:
        dt = 0.5 / hnorm
    m_max = krylov_dim or max(20, int(2.5 * dt * hnorm) + 15)
    times = np.linspace(0.0, t_final, checkpoints + 1)
    psi = psi0.amplitudes.copy()
    e0 = H.expectation(psi)
    span = max(abs(hnorm), 1e-30)
    states = [CompositeState(psi.copy(), psi0.system, psi0.agent, 0.0)]
    hist = np.empty((psi0.agent.dim, checkpoints + 1))
    hist[:, 0] = states[0].agent_marginal()
    t = 0.0
    for k in range(1, checkpoints + 1):
        t_target = times[k]
        while t < t_target - 1e-12:
            step = min(dt, t_target - t)
            psi = lanczos_expv(H.matvec, psi, step, m_max=m_max)
            t += step
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-10:
            raise PropagationError(f"norm drift {abs(norm - 1):.2e} at t={t:.3f}")
        psi /= norm
        state = CompositeState(psi.copy(), psi0.system, psi0.agent, t)
        leak = state.top_level_population()
        if leak > leak_tol:
            raise LeakageError(
                f"top-5 oscillator population {leak:.2e} > {leak_tol:.0e} at t={t:.3f}"
            )
        e = H.expectation(psi)
        if abs(e - e0) / span > 1e-8:
            raise PropagationError(
                f"energy drift {(abs(e - e0) / span):.2e} at t={t:.3f}"
            )
        states.append(state)
        hist[:, k] = state.agent_marginal()
        if callback is not None:
            callback(k, state)
    return Trajectory(times, states, agent_energy_hist=hist, meta={"dt": dt, "engine": "autonomous"})


def evolve_driven(params, drive, psi0, t_final, dt=None, checkpoints=200):
    """System-only evolution under H(sys; X(t)), midpoint exponential steps.

    psi0 may be a system vector or a channel index (int) understood as the
    adiabatic level at X(0).
    """
    from .model import adiabatic_levels, sector

    basis = sector(params)
    if np.isscalar(psi0):
        levels = adiabatic_levels(params, float(drive(0.0)))
        psi = levels.vectors[:, int(psi0)].astype(complex)
    else:
        psi = np.asarray(psi0, dtype=complex)
        psi = psi / np.linalg.norm(psi)
    if dt is None:
        scale = abs(params.U) * params.N**2 + params.K * params.N + params.X_c * params.N
        dt = 0.1 / max(scale, 1e-12)
    n_steps_total = max(1, int(np.ceil(t_final / dt)))
    steps_per_chk = max(1, int(np.ceil(n_steps_total / checkpoints)))
    times = [0.0]
    states = [psi.copy()]
    t = 0.0
    chk_times = np.linspace(0.0, t_final, checkpoints + 1)
    for k in range(1, checkpoints + 1):
        t_target = chk_times[k]
        n_sub = max(1, int(np.ceil((t_target - t) / dt)))
        h = (t_target - t) / n_sub
        for _ in range(n_sub):
            Hm = system_hamiltonian(params, float(drive(t + 0.5 * h)))
            w, Q = np.linalg.eigh(Hm)
            psi = Q @ (np.exp(-1j * h * w) * (Q.conj().T @ psi))
            t += h
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-10:
            raise PropagationError(f"driven-engine norm drift {abs(norm-1):.2e}")
        psi /= norm
        times.append(t)
        states.append(psi.copy())
    return Trajectory(
        np.array(times), states, meta={"dt": dt, "engine": "driven", "basis": basis}
    )
