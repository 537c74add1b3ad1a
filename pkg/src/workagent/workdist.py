"""Work observables: system-side P(W), agent-side P_n and spectral P(w),
fidelity amplitude F(tau), and the ancilla readout probability.

Sign conventions: W is the energy gained by the system; the spectral
variable w = -W is the energy change of the agent, discretized in units
of omega.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class WorkDistribution:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < -1e-12):
            raise ValueError("negative probability")
        total = self.probs.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def mean(self):
        return float(np.sum(self.support * self.probs))

    @property
    def width(self):
        """max - min of the participating support (the W0 scale of a run)."""
        live = self.probs > 1e-9
        if not np.any(live):
            return 0.0
        s = self.support[live]
        return float(s.max() - s.min())


@dataclass
class FidelitySeries:
    taus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if abs(self.values[0] - 1.0) > 1e-10 and self.taus[0] == 0.0:
            raise ValueError("F(0) != 1")
        if np.any(np.abs(self.values) > 1.0 + 1e-10):
            raise ValueError("|F| exceeds 1")


def work_system(final_snapshots, initial_snapshot):
    """System-side work points W_nu = E_nu(X_nu(t)) - E_nu0(X_nu0(0))."""
    e0 = initial_snapshot.E_nu
    support = np.array([s.E_nu - e0 for s in final_snapshots])
    probs = np.array([s.p_nu for s in final_snapshots])
    return WorkDistribution(support, probs / probs.sum())


def agent_occupation(state):
    """Marginal P_n of the composite state over the agent occupation index."""
    return state.agent_marginal()


def occupation_from_channels(decomposition):
    """P_n = sum_nu p_nu |<n|psi_nu>|^2.

    Exact in the position representation; in the occupation basis it drops
    inter-channel coherence, which dies out once the channel wavepackets
    separate in position.
    """
    fam = decomposition.family
    pn = np.zeros(fam.agent.dim)
    for nu in range(fam.n_channels):
        p = decomposition.p[nu]
        if p < 1e-12:
            continue
        psi_n = fam.V @ decomposition.wavepackets_x[nu]
        pn += p * np.abs(psi_n) ** 2
    return pn


def work_spectral(p_n_final, agent_psi0, omega):
    """Spectral work distribution P(w) on the lattice w = omega * m.

    Convolution of the final occupation marginal with the initial coherent
    occupation weights: P(omega*m) = sum_n P_n Q_{n-m}.
    Returns (w_values, probabilities).
    """
    p_n = np.asarray(p_n_final, dtype=float)
    q = np.abs(np.asarray(agent_psi0)) ** 2
    d = len(p_n)
    # full convolution index m = n - n0 runs over [-(d-1), d-1]
    probs = np.convolve(p_n, q[::-1])
    m = np.arange(-(d - 1), d)
    probs = probs / probs.sum()
    return m * omega, probs


def fidelity_amplitude(H, psi0, sweep, taus):
    """F(tau) = <U_A U psi0 | U U_A psi0> with U_A = exp(-i tau H_A).

    sweep(state) must apply the full evolution U and return the final
    CompositeState; it is re-run per tau because U_A rotates the launch
    state.  H supplies the agent frequency.
    """
    from .hilbert import CompositeState

    agent = psi0.agent
    n = np.arange(agent.dim)
    psi_f = sweep(psi0).amplitudes
    d_sys = psi0.system.dim
    values = []
    for tau in taus:
        phase = np.exp(-1j * tau * agent.omega * n)
        bra = (psi_f.reshape(d_sys, agent.dim) * phase[None, :]).reshape(-1)
        rotated = psi0.as_matrix() * phase[None, :]
        rotated = rotated.reshape(-1)
        rotated = rotated / np.linalg.norm(rotated)
        ket = sweep(CompositeState(rotated, psi0.system, agent, 0.0)).amplitudes
        values.append(np.vdot(bra, ket))
    return FidelitySeries(np.asarray(taus, dtype=float), np.array(values))


def fidelity_to_spectrum(series, omega, m_values):
    """Discrete Fourier reconstruction of P(w) from F over one agent period."""
    taus = series.taus
    out = np.empty(len(m_values))
    for i, m in enumerate(m_values):
        out[i] = np.real(np.mean(series.values * np.exp(-1j * omega * m * taus)))
    return out


def ancilla_probability(F, phi):
    """Ramsey readout: P(up) = (1 + Re[F e^{i phi}]) / 2."""
    if np.any(np.abs(F) > 1 + 1e-10):
        raise ValueError("|F| > 1")
    return 0.5 * (1.0 + np.real(F * np.exp(1j * phi)))


def mean_work(trajectory, H):
    """System-energy gain over an autonomous trajectory and its first-law residual.

    Returns (mean_W, residual) where residual = |dE_sys + dE_agent|; both
    follow from <H_total> and <H_agent> at the endpoints.
    """
    psi_i = trajectory.initial.amplitudes
    psi_f = trajectory.final.amplitudes
    agent_diag = H._h_agent_diag
    d_sys = H.system.dim

    def e_agent(psi):
        p = np.sum(np.abs(psi.reshape(d_sys, -1)) ** 2, axis=0)
        return float(np.sum(agent_diag * p))

    e_sys_i = H.expectation(psi_i) - e_agent(psi_i)
    e_sys_f = H.expectation(psi_f) - e_agent(psi_f)
    d_sys_e = e_sys_f - e_sys_i
    d_agent_e = e_agent(psi_f) - e_agent(psi_i)
    return d_sys_e, abs(d_sys_e + d_agent_e)
