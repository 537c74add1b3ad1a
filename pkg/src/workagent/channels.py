"""Adiabatic-channel decomposition of the entangled composite state.

The composite state is expanded on the eigenbasis {x_k} of the truncated
agent position operator; at each x_k the system factor is projected onto
the continued adiabatic basis |nu(x_k)>.  Channel labels are anchored on
the preparation side (x ~ -X0) and ordered by energy there.
"""

from dataclasses import dataclass

import numpy as np

from .model import adiabatic_levels, position_eigensystem, sector, system_hamiltonian


@dataclass
class ChannelSnapshot:
    nu: int
    p_nu: float
    X_nu: float
    v_nu: float
    E_nu: float
    t: float


class AdiabaticFamily:
    """Continued adiabatic eigenbasis over the agent position grid."""

    def __init__(self, params, agent, anchor_x=None):
        self.params = params
        self.agent = agent
        self.x, self.V = position_eigensystem(agent)
        self.sys_basis = sector(params)
        d = self.sys_basis.dim
        k0 = 0 if anchor_x is None else int(np.argmin(np.abs(self.x - anchor_x)))
        self.anchor_index = k0
        nx = len(self.x)
        self.energies = np.empty((nx, d))
        self.vectors = np.empty((nx, d, d), dtype=complex)
        ref = adiabatic_levels(params, self.x[k0])
        self.energies[k0] = ref.energies
        self.vectors[k0] = ref.vectors
        lev = ref
        for k in range(k0 + 1, nx):
            lev = adiabatic_levels(params, self.x[k], prev=lev)
            self.energies[k] = lev.energies
            self.vectors[k] = lev.vectors
        lev = ref
        for k in range(k0 - 1, -1, -1):
            lev = adiabatic_levels(params, self.x[k], prev=lev)
            self.energies[k] = lev.energies
            self.vectors[k] = lev.vectors

    @property
    def n_channels(self):
        return self.sys_basis.dim

    def energy_at(self, nu, X):
        """E_nu(X) by interpolation along the continued label curve."""
        return float(np.interp(X, self.x, self.energies[:, nu]))

    def at(self, X):
        """Continued levels at an arbitrary X, labels from the nearest grid point."""
        from .model import AdiabaticLevels

        k = int(np.argmin(np.abs(self.x - X)))
        ref = AdiabaticLevels(
            self.x[k], self.energies[k], self.vectors[k], np.arange(self.n_channels)
        )
        return adiabatic_levels(self.params, X, prev=ref)


@dataclass
class ChannelDecomposition:
    p: np.ndarray  # per-channel probability
    wavepackets_x: np.ndarray  # (n_channels, n_x): phi_nu(x_k)/sqrt(p_nu), null rows for empty
    family: AdiabaticFamily
    t: float

    def wavepacket_n(self, nu):
        """Channel-nu agent wavepacket back in the occupation basis."""
        return self.family.V @ self.wavepackets_x[nu]


def decompose(state, family, p_floor=1e-12):
    """Split a CompositeState into adiabatic channels.

    Returns a ChannelDecomposition with sum(p) = 1 to 1e-10; channels with
    probability below p_floor keep a null wavepacket.
    """
    psi = state.as_matrix()  # (sys, agent_n)
    psi_x = psi @ np.conj(family.V)  # (sys, x_k)
    # phi[nu, k] = sum_s conj(W_k[s, nu]) psi_x[s, k]
    phi = np.einsum("ksn,sk->nk", np.conj(family.vectors), psi_x)
    p = np.sum(np.abs(phi) ** 2, axis=1)
    packets = np.zeros_like(phi)
    live = p >= p_floor
    packets[live] = phi[live] / np.sqrt(p[live])[:, None]
    return ChannelDecomposition(p=p, wavepackets_x=packets, family=family, t=state.time)


def reassemble(decomposition):
    """Inverse of decompose, for completeness checks."""
    fam = decomposition.family
    phi = decomposition.wavepackets_x * np.sqrt(decomposition.p)[:, None]
    psi_x = np.einsum("ksn,nk->sk", fam.vectors, phi)
    return psi_x @ fam.V.T  # undoes psi @ conj(V) for unitary V


def channel_observables(decomposition, p_floor=1e-12):
    """Per-channel ChannelSnapshots: probability, position, velocity, energy."""
    fam = decomposition.family
    agent = fam.agent
    from .hilbert import oscillator_operators

    P = oscillator_operators(agent)["P"]
    M = agent.mass
    out = []
    for nu in range(fam.n_channels):
        p = float(decomposition.p[nu])
        if p < p_floor:
            continue
        phi = decomposition.wavepackets_x[nu]
        X_nu = float(np.sum(fam.x * np.abs(phi) ** 2))
        psi_n = fam.V @ phi
        P_nu = float(np.real(np.vdot(psi_n, P @ psi_n)))
        out.append(
            ChannelSnapshot(
                nu=nu,
                p_nu=p,
                X_nu=X_nu,
                v_nu=P_nu / M,
                E_nu=fam.energy_at(nu, X_nu),
                t=decomposition.t,
            )
        )
    return out


def x_qc(snapshots):
    """Probability-weighted mean position over channels at one time."""
    if not snapshots:
        return 0.0
    p = np.array([s.p_nu for s in snapshots])
    X = np.array([s.X_nu for s in snapshots])
    return float(np.sum(p * X) / np.sum(p))


def driven_channel_probabilities(params, trajectory, drive):
    """Channel probabilities along a driven (system-only) run.

    Labels are continued in time from the initial drive position, matching
    the anchoring convention of the autonomous decomposition.
    """
    lev = adiabatic_levels(params, float(drive(trajectory.times[0])))
    rows = []
    for t, psi in zip(trajectory.times, trajectory.states):
        lev = adiabatic_levels(params, float(drive(t)), prev=lev)
        amps = lev.vectors.conj().T @ psi
        rows.append(np.abs(amps) ** 2)
    return np.array(rows), lev
