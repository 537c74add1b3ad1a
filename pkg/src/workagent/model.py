"""Hamiltonians: driven system, oscillator agent, and the autonomous total.

System Hamiltonian (K = 1 sets the energy unit):

    H(sys; X) = (U/2)(n_1^2 + n_L^2) - (K/2) sum_{j<L} (a†_{j+1} a_j + h.c.)
                + (X_c/2) tanh((X - X_a)/X_c) n_1
                - (X_c/2) tanh((X + X_a)/X_c) n_L

The bias saturates to +-X_c/2 outside the scattering region |X| < X_c, so
the agent decouples there.  In the autonomous total Hamiltonian X becomes
the agent position operator; tanh of the operator is evaluated through the
(cached) eigendecomposition of the tridiagonal X matrix.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .hilbert import AgentBasis, bose_operators, enumerate_fock, oscillator_operators


@dataclass(frozen=True)
class ModelParams:
    L: int
    N: int
    U: float
    K: float = 1.0
    X_c: float = 1.0
    X_a: float = 0.0

    def __post_init__(self):
        if self.K <= 0 or self.X_c <= 0:
            raise ValueError("K and X_c must be positive")
        if self.L == 2 and self.X_a != 0.0:
            raise ValueError("dimer requires X_a = 0")

    @classmethod
    def from_u(cls, L, N, u, K=1.0, X_c=1.0, X_a=None):
        """Convenience parameter u = N U / K (our convention, see configs)."""
        if X_a is None:
            X_a = X_c / 4.0 if L == 3 else 0.0
        return cls(L=L, N=N, U=u * K / N, K=K, X_c=X_c, X_a=X_a)

    @property
    def u(self):
        return self.N * self.U / self.K


@lru_cache(maxsize=32)
def _sector_operators(L, N):
    basis = enumerate_fock(L, N)
    ops = bose_operators(basis)
    n1 = ops["n"][0].toarray()
    nL = ops["n"][-1].toarray()
    hop = sum(h.toarray() for h in ops["hop"])
    hop = hop + hop.conj().T
    occ = np.array(basis.states, dtype=float)
    inter = 0.5 * np.diag(np.sum(occ**2, axis=1))
    return basis, n1, nL, hop, inter


def sector(params):
    """System basis for the params' (L, N) sector."""
    return _sector_operators(params.L, params.N)[0]


def _static_part(params):
    _, _, _, hop, inter = _sector_operators(params.L, params.N)
    return params.U * inter - 0.5 * params.K * hop


def bias_coefficients(params, X):
    """Coefficients of n_1 and n_L at agent position X (scalar or array)."""
    c1 = 0.5 * params.X_c * np.tanh((X - params.X_a) / params.X_c)
    cL = -0.5 * params.X_c * np.tanh((X + params.X_a) / params.X_c)
    return c1, cL


def system_hamiltonian(params, X):
    """Dense Hermitian system Hamiltonian at a fixed agent position X."""
    _, n1, nL, _, _ = _sector_operators(params.L, params.N)
    c1, cL = bias_coefficients(params, X)
    return _static_part(params) + c1 * n1 + cL * nL


@dataclass
class AdiabaticLevels:
    """Instantaneous spectrum at one X with continuation bookkeeping."""

    X: float
    energies: np.ndarray
    vectors: np.ndarray  # columns, ordered by channel label
    labels: np.ndarray
    degenerate: bool = False


def _fix_gauge(vectors):
    """Largest-magnitude component real positive, column by column."""
    idx = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[idx, np.arange(vectors.shape[1])]
    phases = phases / np.abs(phases)
    return vectors / phases[np.newaxis, :]


def adiabatic_levels(params, X, prev=None, degeneracy_tol=1e-12):
    """Sorted eigensystem of H(sys; X), labels continued from prev if given."""
    H = system_hamiltonian(params, X)
    energies, vectors = np.linalg.eigh(H)
    degenerate = bool(np.any(np.diff(energies) < degeneracy_tol))

    if prev is None:
        vectors = _fix_gauge(vectors)
        labels = np.arange(len(energies))
        return AdiabaticLevels(X, energies, vectors, labels, degenerate)

    # maximal-overlap assignment against the previous point
    overlap = prev.vectors.conj().T @ vectors
    from scipy.optimize import linear_sum_assignment

    row, col = linear_sum_assignment(-np.abs(overlap))
    if degenerate:
        # ambiguous continuation: fall back to energy order
        col = np.arange(len(energies))
    order = np.empty_like(col)
    order[row] = col
    energies = energies[order]
    vectors = vectors[:, order]
    # align phases so the diagonal overlap is real positive
    diag = np.einsum("ij,ij->j", prev.vectors.conj(), vectors)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(np.maximum(np.abs(diag), 1e-300)), 1.0)
    vectors = vectors * np.conj(phases)[np.newaxis, :]
    return AdiabaticLevels(X, energies, vectors, prev.labels.copy(), degenerate)


def agent_hamiltonian(agent):
    """Free agent Hamiltonian omega * n, diagonal."""
    return np.diag(agent.omega * np.arange(agent.dim, dtype=float))


@lru_cache(maxsize=8)
def position_eigensystem(agent):
    """Eigendecomposition X = V diag(x) V†  of the truncated position matrix."""
    X = oscillator_operators(agent)["X"]
    x, V = np.linalg.eigh(X)
    return x, V


@dataclass
class TotalHamiltonian:
    """Autonomous H_total = H_sys(X) + omega b†b, in tensor-contraction form.

    matvec cost is O(sys_dim * agent_dim^2); an explicit sparse/dense matrix
    is only assembled on demand for small problems.
    """

    params: ModelParams
    agent: AgentBasis
    system: "object"
    _h_static: np.ndarray
    _n1_diag: np.ndarray
    _nL_diag: np.ndarray
    _G1: np.ndarray  # (X_c/2) tanh((X-X_a)/X_c) as an agent-space matrix
    _GL: np.ndarray
    _h_agent_diag: np.ndarray

    @property
    def dim(self):
        return self.system.dim * self.agent.dim

    @property
    def x_grid(self):
        return position_eigensystem(self.agent)[0]

    def matvec(self, psi):
        mat = psi.reshape(self.system.dim, self.agent.dim)
        out = self._h_static @ mat
        out += self._n1_diag[:, None] * (mat @ self._G1)
        out += self._nL_diag[:, None] * (mat @ self._GL)
        out += mat * self._h_agent_diag[None, :]
        return out.reshape(-1)

    def expectation(self, psi):
        return float(np.real(np.vdot(psi, self.matvec(psi))))

    def norm_estimate(self):
        h_sys_scale = np.linalg.norm(self._h_static, 2)
        bias = 0.5 * self.params.X_c * (self.params.N)
        return h_sys_scale + 2 * bias + self._h_agent_diag[-1]

    def as_matrix(self):
        """Explicit dense matrix; intended for small dims (oracle tests)."""
        d = self.dim
        if d > 6000:
            raise MemoryError(f"refusing to densify dim={d}")
        Ia = np.eye(self.agent.dim)
        Is = np.eye(self.system.dim)
        H = np.kron(self._h_static, Ia)
        H += np.kron(np.diag(self._n1_diag), self._G1)
        H += np.kron(np.diag(self._nL_diag), self._GL)
        H += np.kron(Is, np.diag(self._h_agent_diag))
        return H

    def as_sparse(self):
        Ia = sp.identity(self.agent.dim, format="csr")
        Is = sp.identity(self.system.dim, format="csr")
        H = sp.kron(sp.csr_matrix(self._h_static), Ia)
        H = H + sp.kron(sp.diags(self._n1_diag), sp.csr_matrix(self._G1))
        H = H + sp.kron(sp.diags(self._nL_diag), sp.csr_matrix(self._GL))
        H = H + sp.kron(Is, sp.diags(self._h_agent_diag))
        return H.tocsr()


def total_hamiltonian(params, agent, X_extent_required=None):
    """Assemble the autonomous Hamiltonian on the composite space.

    X_extent_required: largest |X| a scenario will sweep to; warns when the
    truncated position grid cannot represent it.
    """
    basis, n1, nL, _, _ = _sector_operators(params.L, params.N)
    x, V = position_eigensystem(agent)
    if X_extent_required is not None and np.max(np.abs(x)) < X_extent_required:
        import warnings

        warnings.warn(
            f"position grid reaches |x|={np.max(np.abs(x)):.2f} < required "
            f"{X_extent_required:.2f}; raise n_max",
            stacklevel=2,
        )
    c1, cL = bias_coefficients(params, x)
    G1 = (V * c1[None, :]) @ V.conj().T
    GL = (V * cL[None, :]) @ V.conj().T
    return TotalHamiltonian(
        params=params,
        agent=agent,
        system=basis,
        _h_static=_static_part(params),
        _n1_diag=np.diag(n1).copy(),
        _nL_diag=np.diag(nL).copy(),
        _G1=0.5 * (G1 + G1.conj().T),
        _GL=0.5 * (GL + GL.conj().T),
        _h_agent_diag=agent.omega * np.arange(agent.dim, dtype=float),
    )
