"""The six figure builders.

f1  agent design diagram (border curves over frequency)
f2  sweep portrait: channel trajectories and the agent energy histogram
f3  work distribution with its mean
f4  mean work vs sweep rate for several launch amplitudes
f5  quantum vs classical mean work along a design-diagram path
f6  two-crossing interference: classical curve, envelope, quantum agents

Every builder takes the list of run directories and returns a Figure;
rendering is deterministic so repeated invocations are byte-identical.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import load, load_optional


def fig_design(runs):
    osc = load(runs, "design_oscillator.csv")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(osc["omega"], osc["n_ph_UC"], "-", color="C0", label="UC border")
    ax.loglog(osc["omega"], osc["n_ph_BR"], "-", color="C1", label="BR border")
    ax.loglog(osc["omega"], osc["n_ph_Res"], "--", color="C2", label="resolution")
    ax.set_xlabel(r"$\omega$")
    ax.set_ylabel(r"$n_{ph}$")
    ax.set_title("Agent design diagram")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def fig_sweep_portrait(runs):
    ch = load(runs, "channels.csv")
    hist = load(runs, "agent_hist.csv")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))

    for nu in np.unique(ch["nu"]).astype(int):
        sel = ch["nu"] == nu
        t, x, p = ch["t"][sel], ch["X_nu"][sel], ch["p_nu"][sel]
        order = np.argsort(t)
        ax1.scatter(t[order], x[order], s=4, c=p[order], cmap="viridis",
                    vmin=0, vmax=1, rasterized=True)
    ax1.set_xlabel("t")
    ax1.set_ylabel(r"$X_\nu$")
    ax1.set_title("channel positions (shade = population)")

    times = np.unique(hist["t"])
    n_max = int(hist["n"].max())
    img = np.zeros((n_max + 1, len(times)))
    col = {t: k for k, t in enumerate(times)}
    for t, n, p in zip(hist["t"], hist["n"], hist["P_n"]):
        img[int(n), col[t]] = p
    ax2.imshow(img, origin="lower", aspect="auto", cmap="magma",
               extent=(times[0], times[-1], 0, n_max + 1))
    ax2.set_xlabel("t")
    ax2.set_ylabel("agent level n")
    ax2.set_title("agent energy histogram")
    fig.tight_layout()
    return fig


def fig_work_distribution(runs):
    qm = load(runs, "work_qm.csv")
    cl = load_optional(runs, "work_cl0.csv")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.vlines(qm["W"], 0, qm["P"], color="C0", lw=2)
    ax.plot(qm["W"], qm["P"], "o", color="C0", ms=5, label="quantum agent")
    if cl is not None:
        ax.plot(cl["W"], cl["P"], "s", mfc="none", color="C3", ms=7,
                label="classical drive")
    mean = float(np.sum(qm["W"] * qm["P"]))
    ax.axvline(mean, color="k", ls="--", lw=1, label=rf"$\langle W\rangle$ = {mean:.3f}")
    ax.set_xlabel("W")
    ax.set_ylabel("P(W)")
    ax.set_ylim(bottom=0)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def fig_amplitude_sweep(runs):
    tab = load(runs, "sweep_x0.csv")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for k, X0 in enumerate(np.unique(tab["X0"])):
        sel = tab["X0"] == X0
        order = np.argsort(tab["v0"][sel])
        ax.plot(tab["v0"][sel][order], tab["W_mean"][sel][order],
                "o-", color=f"C{k}", ms=4, label=rf"$X_0$ = {X0:g}")
    ax.set_xlabel(r"$v_0$")
    ax.set_ylabel(r"$\langle W\rangle$")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def fig_path_comparison(runs):
    tab = load(runs, "sweep_omega.csv")
    order = np.argsort(tab["omega"])
    om = tab["omega"][order]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.0, 5.0), sharex=True)
    ax1.plot(om, tab["W_qm"][order], "o-", color="C0", label="quantum agent")
    ax1.plot(om, tab["W_cl0"][order], "s--", color="C1", label="cosine drive")
    ax1.plot(om, tab["W_cl"][order], "^:", color="C2", label="recorded drive")
    ax1.set_ylabel(r"$\langle W\rangle$")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(om, tab["gap_qm_cl"][order], "o-", color="k")
    ax2.set_xlabel(r"$\omega$")
    ax2.set_ylabel("|quantum - recorded|")
    fig.tight_layout()
    return fig


def fig_interference(runs):
    """Survival probability vs sweep velocity.

    Exactly three curve families: magenta for the classically driven
    system, gray for the incoherent references (envelope and dephased
    average), green for the quantum agents (one alpha level per packet
    width ell).
    """
    cl = load(runs, "survival_classical.csv")
    qm = load_optional(runs, "survival_quantum.csv")
    order = np.argsort(cl["v0"])
    v0 = cl["v0"][order]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(v0, cl["env_lo"][order], "--", color="gray", lw=1)
    ax.plot(v0, cl["env_hi"][order], "--", color="gray", lw=1)
    ax.plot(v0, cl["p_dephased"][order], "-", color="gray", lw=1,
            label="dephased")
    ax.plot(v0, cl["p_survival"][order], "o-", color="magenta",
            label="classical driving")
    if qm is not None:
        ells = sorted(np.unique(qm["ell"]))
        for k, ell in enumerate(ells):
            sel = qm["ell"] == ell
            o = np.argsort(qm["v0"][sel])
            ax.plot(qm["v0"][sel][o], qm["p_survival"][sel][o], "s-",
                    color="green", alpha=1.0 - 0.6 * k / max(1, len(ells) - 1),
                    label=rf"quantum, $\ell$ = {ell:g}")
    ax.set_xlabel(r"$v_0$")
    ax.set_ylabel("survival probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


FIGURES = {
    "f1": fig_design,
    "f2": fig_sweep_portrait,
    "f3": fig_work_distribution,
    "f4": fig_amplitude_sweep,
    "f5": fig_path_comparison,
    "f6": fig_interference,
}


def build_figure(name, runs):
    return FIGURES[name](runs)
