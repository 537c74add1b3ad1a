"""Fock bases, ladder operators, coherent states, tensor embeddings.

Composite index layout is system-major: the agent occupation index is the
fastest varying one, so amplitudes reshape to (sys_dim, n_max+1) and every
channel slice is a contiguous agent block.

Units: hbar = 1 everywhere; energies in units of the hopping K, time in 1/K.
"""

from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np
import scipy.sparse as sp


class TruncationError(RuntimeError):
    """Oscillator truncation cannot hold the requested state."""


@dataclass(frozen=True)
class SystemBasis:
    """Fixed-number Fock basis for L sites and N bosons, lexicographic order."""

    L: int
    N: int
    states: tuple = field(repr=False)
    index: dict = field(repr=False)

    @property
    def dim(self):
        return len(self.states)

    def index_of(self, occ):
        return self.index[tuple(occ)]


def enumerate_fock(L, N):
    """All occupation tuples (n_1..n_L) with sum N, deterministic order."""
    if L < 1:
        raise ValueError(f"need at least one site, got L={L}")
    if N < 0:
        raise ValueError(f"negative boson number N={N}")
    states = tuple(occ for occ in product(range(N + 1), repeat=L) if sum(occ) == N)
    basis = SystemBasis(L, N, states, {occ: i for i, occ in enumerate(states)})
    assert basis.dim == comb(N + L - 1, L - 1)
    return basis


def lowering_operator(basis, j):
    """a_j as a rectangular map from the N sector to the (N-1) sector.

    Returns (a_j, lower_basis).  a†_j is the conjugate transpose.
    """
    lower = enumerate_fock(basis.L, basis.N - 1) if basis.N > 0 else None
    if lower is None:
        return sp.csr_matrix((0, basis.dim)), None
    rows, cols, vals = [], [], []
    for i, occ in enumerate(basis.states):
        n = occ[j]
        if n == 0:
            continue
        dst = list(occ)
        dst[j] = n - 1
        rows.append(lower.index_of(dst))
        cols.append(i)
        vals.append(np.sqrt(n))
    a = sp.csr_matrix((vals, (rows, cols)), shape=(lower.dim, basis.dim))
    return a, lower


def bose_operators(basis):
    """Number and hopping matrices within the fixed-N sector.

    Returns a dict with:
      'n'    : list of diagonal occupation matrices n_j
      'hop'  : list of a†_{j+1} a_j matrices, j = 0..L-2 (real)
      'a'    : list of rectangular lowering maps to the (N-1) sector
    """
    n_ops = []
    occ = np.array(basis.states, dtype=float).reshape(basis.dim, basis.L)
    for j in range(basis.L):
        n_ops.append(sp.diags(occ[:, j]).tocsr())

    a_ops = [lowering_operator(basis, j)[0] for j in range(basis.L)]
    hops = []
    for j in range(basis.L - 1):
        hops.append((a_ops[j + 1].conj().T @ a_ops[j]).tocsr())
    return {"n": n_ops, "hop": hops, "a": a_ops}


@dataclass(frozen=True)
class AgentBasis:
    """Truncated oscillator: levels n = 0..n_max, frequency omega, length ell."""

    n_max: int
    omega: float
    ell: float

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.omega <= 0 or self.ell <= 0:
            raise ValueError("omega and ell must be positive")

    @property
    def dim(self):
        return self.n_max + 1

    @property
    def mass(self):
        return 1.0 / (self.ell**2 * self.omega)


def oscillator_operators(basis):
    """Ladder, number, position and momentum matrices on the truncated space.

    X = (ell/sqrt2)(b + b†), P = (i/(sqrt2 ell))(b† - b).  The canonical
    commutator only fails on the last row/column of the truncation.
    """
    d = basis.dim
    sq = np.sqrt(np.arange(1, d))
    b = np.diag(sq, k=1)
    bdag = b.T.copy()
    nmat = np.diag(np.arange(d, dtype=float))
    X = (basis.ell / np.sqrt(2.0)) * (b + bdag)
    P = (1j / (np.sqrt(2.0) * basis.ell)) * (bdag - b)
    return {"b": b, "bdag": bdag, "n": nmat, "X": X, "P": P}


def coherent_state(basis, X0, P0):
    """Truncated coherent state with means (X0, P0); alpha = (X0/ell + i ell P0)/sqrt2."""
    alpha = (X0 / basis.ell + 1j * basis.ell * P0) / np.sqrt(2.0)
    nbar = abs(alpha) ** 2
    required = nbar + 10.0 * np.sqrt(nbar + 1.0)
    if basis.n_max < required:
        raise TruncationError(
            f"n_max={basis.n_max} too small for |alpha|^2={nbar:.2f} "
            f"(need >= {required:.0f})"
        )
    n = np.arange(basis.dim)
    # log-space Poisson amplitudes, phase applied separately
    from scipy.special import gammaln

    logmag = -0.5 * nbar + 0.5 * (n * np.log(nbar) - gammaln(n + 1)) if nbar > 0 else None
    if nbar == 0:
        psi = np.zeros(basis.dim, dtype=complex)
        psi[0] = 1.0
        return psi
    phase = np.exp(1j * n * np.angle(alpha))
    psi = np.exp(logmag) * phase
    leak = 1.0 - np.sum(np.abs(psi) ** 2)
    if leak > 1e-10:
        raise TruncationError(f"Poisson tail beyond n_max carries {leak:.2e} > 1e-10")
    return psi / np.linalg.norm(psi)


def tensor_embed(op, sys_dim=None, agent_dim=None):
    """Embed a one-factor operator in the composite space (system-major layout).

    Exactly one of sys_dim / agent_dim gives the other factor's dimension:
    pass agent_dim to embed a system operator, sys_dim for an agent operator.
    """
    op = sp.csr_matrix(op)
    if (agent_dim is None) == (sys_dim is None):
        raise ValueError("pass exactly one of sys_dim / agent_dim")
    if agent_dim is not None:
        return sp.kron(op, sp.identity(agent_dim, format="csr"), format="csr")
    return sp.kron(sp.identity(sys_dim, format="csr"), op, format="csr")


@dataclass
class CompositeState:
    """Normalized amplitudes on system x agent, agent index fastest."""

    amplitudes: np.ndarray
    system: SystemBasis
    agent: AgentBasis
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        expect = self.system.dim * self.agent.dim
        if self.amplitudes.shape != (expect,):
            raise ValueError(
                f"amplitude length {self.amplitudes.shape} != {expect}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: |norm-1|={abs(norm-1):.2e}")

    def as_matrix(self):
        """View amplitudes as (sys_dim, agent_dim)."""
        return self.amplitudes.reshape(self.system.dim, self.agent.dim)

    def agent_marginal(self):
        """Probability over the agent occupation index."""
        return np.sum(np.abs(self.as_matrix()) ** 2, axis=0)

    def top_level_population(self, k=5):
        """Population of the top k oscillator levels (truncation monitor)."""
        return float(np.sum(self.agent_marginal()[-k:]))


def product_state(sys_vec, agent_vec, system, agent, time=0.0):
    amps = np.kron(np.asarray(sys_vec, dtype=complex), np.asarray(agent_vec, dtype=complex))
    amps = amps / np.linalg.norm(amps)
    return CompositeState(amps, system, agent, time)
