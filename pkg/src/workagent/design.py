"""Agent design-constraint algebra: UC/BR/Res borders, the design diagram,
the interference-resolution condition, and Landau-Zener fit helpers.

Piston parameters are (M, ell); oscillator parameters are (omega, ell)
with implied mass M = 1/(ell^2 omega), launch photon number
n_ph = (X0/ell)^2 = (v0/(omega ell))^2, and the two velocity scales

    dv_uc = ell * omega            (= v0 / sqrt(n_ph))
    dv_br = (W0/v0) * ell^2 omega  (= (W0/omega) / n_ph)
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AgentDesign:
    flavor: str  # 'piston' | 'oscillator'
    ell: float
    M: float = None  # piston
    omega: float = None  # oscillator

    def __post_init__(self):
        if self.ell <= 0:
            raise ValueError("ell must be positive")
        if self.flavor == "piston":
            if self.M is None or self.M <= 0:
                raise ValueError("piston needs M > 0")
        elif self.flavor == "oscillator":
            if self.omega is None or self.omega <= 0:
                raise ValueError("oscillator needs omega > 0")
        else:
            raise ValueError(f"unknown flavor {self.flavor!r}")

    @property
    def mass(self):
        if self.flavor == "piston":
            return self.M
        return 1.0 / (self.ell**2 * self.omega)

    def dv_uc(self):
        if self.flavor == "oscillator":
            return self.ell * self.omega
        return 1.0 / (self.M * self.ell)

    def dv_br(self, W0, v0):
        return (W0 / v0) / self.mass

    def n_ph(self, v0):
        if self.flavor != "oscillator":
            raise ValueError("n_ph is an oscillator quantity")
        return (v0 / (self.omega * self.ell)) ** 2

    def X0(self, v0):
        if self.flavor != "oscillator":
            raise ValueError("X0 is an oscillator quantity")
        return v0 / self.omega


@dataclass
class DesignReport:
    goal: tuple  # (W0, v0, dv0)
    margins: dict  # name -> LHS/RHS ratio; pass iff margin < 1
    strong_threshold: float = 0.1

    @property
    def checks(self):
        return {k: m < 1.0 for k, m in self.margins.items()}

    def strongly(self, name):
        """'Much smaller' reading of an inequality (margin below threshold)."""
        return self.margins[name] < self.strong_threshold

    @property
    def all_pass(self):
        return all(self.checks.values())


def evaluate_design(design, goal):
    """Margins of a design against a (W0, v0, dv0) measurement goal.

    UC:  dv_uc < dv0
    BR:  dv_br < dv0
    Res: dv_uc < dv_br  (agent-energy resolution)
    Interference margin is added separately when (dX0, dW0) are known.
    """
    W0, v0, dv0 = goal
    if min(W0, v0, dv0) <= 0:
        raise ValueError("goal parameters must be positive")
    dv_uc = design.dv_uc()
    dv_br = design.dv_br(W0, v0)
    margins = {
        "UC": dv_uc / dv0,
        "BR": dv_br / dv0,
        "Res": dv_uc / dv_br,
    }
    return DesignReport(goal=goal, margins=margins)


def interference_resolution(v0, dX0, dW0):
    """Two-crossing interference phase and the velocity resolution it demands.

    delta_phi = (dX0 / v0) * dW0;  dv0_required = v0^2 / (dX0 * dW0).
    """
    if v0 <= 0 or dX0 <= 0 or dW0 < 0:
        raise ValueError("inputs must be positive (dW0 may be zero)")
    delta_phi = (dX0 / v0) * dW0
    dv0_required = np.inf if dW0 == 0 else v0**2 / (dX0 * dW0)
    return delta_phi, dv0_required


def design_diagram(goal, omega_grid=None, M_grid=None, n_points=200):
    """Border curves of the design diagram.

    Oscillator plane (omega, n_ph): returns for each omega the UC border
    n_ph = (v0/dv0)^2 (constant), the BR border n_ph = (v0/dv0)(W0/omega),
    and the Res border n_ph = (W0/omega)^2.  Piston plane (M, ell): for
    each M the UC border ell = 1/(M dv0) and the BR border mass
    M = W0/(v0 dv0) (constant), plus the dv_uc ~ dv_br line ell = v0/W0.
    """
    W0, v0, dv0 = goal
    out = {"goal": goal}
    if omega_grid is None:
        omega_grid = np.geomspace(1e-3 * W0, 10 * W0, n_points)
    omega_grid = np.asarray(omega_grid, dtype=float)
    out["oscillator"] = {
        "omega": omega_grid,
        "UC": np.full_like(omega_grid, (v0 / dv0) ** 2),
        "BR": (v0 / dv0) * (W0 / omega_grid),
        "Res": (W0 / omega_grid) ** 2,
    }
    if M_grid is None:
        M_grid = np.geomspace(1e-2, 1e6, n_points)
    M_grid = np.asarray(M_grid, dtype=float)
    out["piston"] = {
        "M": M_grid,
        "UC": 1.0 / (M_grid * dv0),
        "BR_mass": W0 / (v0 * dv0),
        "Res": np.full_like(M_grid, v0 / W0),
    }
    return out


def contour_constant_dv_uc(omega_grid, dv_uc, v0):
    """n_ph(omega) along an ell*omega = const path."""
    return (v0 / dv_uc) ** 2 * np.ones_like(np.asarray(omega_grid, dtype=float))


def contour_constant_dv_br(omega_grid, ell2omega, W0, v0):
    """n_ph(omega) along an ell^2*omega = const path."""
    omega = np.asarray(omega_grid, dtype=float)
    return (v0 / omega) ** 2 / (ell2omega / omega)


def lz_fit(xdot, p_lz, q=2.0):
    """Least-squares fit of log P_LZ = -c / xdot^q.

    Returns (c, q, rms_residual) with the residual taken on the
    probability scale.  q is held fixed (2 matches the observed scaling;
    pass q=1 for the single-crossing textbook form).
    """
    xdot = np.asarray(xdot, dtype=float)
    p_lz = np.asarray(p_lz, dtype=float)
    if len(xdot) < 3:
        raise ValueError("need at least 3 samples")
    if np.any((p_lz <= 0) | (p_lz >= 1)):
        raise ValueError("P_LZ samples must lie strictly inside (0, 1)")
    x = xdot ** (-q)
    y = np.log(p_lz)
    c = -float(np.dot(x, y) / np.dot(x, x))
    if c <= 0:
        raise ValueError("degenerate samples: fitted constant not positive")
    resid = float(np.sqrt(np.mean((np.exp(-c * x) - p_lz) ** 2)))
    return c, q, resid


def lz_half_velocity(c, q=2.0):
    """Sweep rate giving P_LZ = 1/2 for the fitted exp(-c/xdot^q)."""
    return (c / np.log(2.0)) ** (1.0 / q)


def two_path_probability(p_lz, delta_phi):
    """Survival probability after two identical LZ crossings.

    Returns (coherent, dephased):
      coherent = |(1-P) + P e^{i delta_phi}|^2
      dephased = P^2 + (1-P)^2
    """
    p_lz = np.asarray(p_lz, dtype=float)
    if np.any((p_lz < 0) | (p_lz > 1)):
        raise ValueError("P_LZ must lie in [0, 1]")
    amp = (1.0 - p_lz) + p_lz * np.exp(1j * np.asarray(delta_phi))
    coherent = np.abs(amp) ** 2
    dephased = p_lz**2 + (1.0 - p_lz) ** 2
    return coherent, dephased
