"""Named experiment runners: autonomous/driven comparison, parameter
sweeps, interference scans, fidelity spectroscopy, and the heavy-agent
convergence check.  Each runner writes a self-contained run directory

    <out>/<name>/<timestamp>/
        manifest.json
        *.csv

with fixed column orders and deterministic formatting, so the figure
layer can consume the CSVs blindly and identical configs give identical
bytes.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channels import AdiabaticFamily, channel_observables, decompose, x_qc
from .design import (
    AgentDesign,
    design_diagram,
    evaluate_design,
    interference_resolution,
    lz_fit,
    two_path_probability,
)
from .hilbert import AgentBasis, coherent_state, product_state
from .model import ModelParams, adiabatic_levels, total_hamiltonian
from .propagate import (
    DriveProtocol,
    PropagationError,
    evolve_autonomous,
    evolve_driven,
)
from .workdist import (
    WorkDistribution,
    ancilla_probability,
    fidelity_amplitude,
    fidelity_to_spectrum,
    mean_work,
    work_spectral,
    work_system,
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated experiment description; serialized verbatim into manifests.

    model: L, N, (u | U), K, X_c, X_a
    agent: omega, ell, (X0 | n_ph), n_max
    preparation: nu0
    numerics: dt, checkpoints, leak_tol
    """

    name: str
    model: dict
    agent: dict
    preparation: dict = field(default_factory=lambda: {"nu0": 0})
    protocol: str = "quantum"
    numerics: dict = field(default_factory=dict)
    compare_classical: bool = False
    sweep: dict = None

    PROTOCOLS = ("quantum", "classical_cosine", "recorded_qc")

    def __post_init__(self):
        if self.protocol not in self.PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if ("u" in self.model) == ("U" in self.model):
            raise ConfigError("model needs exactly one of 'u' or 'U'")
        if ("X0" in self.agent) == ("n_ph" in self.agent):
            raise ConfigError("agent needs exactly one of 'X0' or 'n_ph'")
        for key in ("omega", "ell", "n_max"):
            if key not in self.agent:
                raise ConfigError(f"agent is missing {key!r}")
        # construct the pieces once so bad configs fail before any output
        p = self.params()
        if not 0 <= self.nu0 < _sector_dim(p):
            raise ConfigError(f"nu0={self.nu0} outside the system sector")
        self.agent_basis()

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib

            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "name": self.name,
            "model": dict(self.model),
            "agent": dict(self.agent),
            "preparation": dict(self.preparation),
            "protocol": self.protocol,
            "numerics": dict(self.numerics),
            "compare_classical": self.compare_classical,
            "sweep": None if self.sweep is None else dict(self.sweep),
        }

    def params(self):
        m = self.model
        kw = {k: m[k] for k in ("K", "X_c", "X_a") if k in m}
        if "u" in m:
            return ModelParams.from_u(m["L"], m["N"], m["u"], **kw)
        return ModelParams(L=m["L"], N=m["N"], U=m["U"], **kw)

    def agent_basis(self):
        a = self.agent
        return AgentBasis(n_max=a["n_max"], omega=a["omega"], ell=a["ell"])

    @property
    def X0(self):
        a = self.agent
        if "X0" in a:
            return float(a["X0"])
        return a["ell"] * np.sqrt(a["n_ph"])

    @property
    def omega(self):
        return self.agent["omega"]

    @property
    def v0(self):
        return self.X0 * self.omega

    @property
    def nu0(self):
        return self.preparation.get("nu0", 0)

    @property
    def checkpoints(self):
        return self.numerics.get("checkpoints", 200)

    def design(self):
        return AgentDesign("oscillator", ell=self.agent["ell"], omega=self.omega)

    def derived(self):
        d = self.design()
        return {
            "v0": self.v0,
            "X0": self.X0,
            "n_ph": d.n_ph(self.v0),
            "dv_uc": d.dv_uc(),
            "M": d.mass,
            "u": self.params().u,
        }

    def replace(self, **patches):
        """New config with updated sub-dicts (model/agent/... merged)."""
        d = self.to_dict()
        for key, val in patches.items():
            if isinstance(val, dict) and isinstance(d.get(key), dict):
                d[key] = {**d[key], **val}
            else:
                d[key] = val
        return RunConfig.from_dict(d)


def _sector_dim(params):
    from .model import sector

    return sector(params).dim


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_csv(path):
    """Header list and float column arrays of a run CSV."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, {name: data[:, i] for i, name in enumerate(header)}


def new_run_dir(out_dir, name):
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = Path(out_dir) / name
    run = base / stamp
    k = 1
    while run.exists():
        run = base / f"{stamp}-{k}"
        k += 1
    run.mkdir(parents=True)
    return run


class RunManifest:
    """Collects config echo, derived numbers, file inventory, and the
    invariant-check results; written as manifest.json."""

    def __init__(self, run_dir, config):
        self.run_dir = Path(run_dir)
        self.data = {
            "version": __version__,
            "schema": 1,
            "config": config.to_dict(),
            "derived": {k: float(v) for k, v in config.derived().items()},
            "status": "running",
            "files": [],
            "invariants": {},
            "results": {},
        }
        self._t0 = time.monotonic()

    def add_file(self, name):
        self.data["files"].append(name)

    def check(self, name, ok, detail=None):
        entry = {"pass": bool(ok)}
        if detail is not None:
            entry["detail"] = detail
        self.data["invariants"][name] = entry

    @property
    def all_pass(self):
        return all(v["pass"] for v in self.data["invariants"].values())

    def finish(self, status="ok", error=None):
        self.data["status"] = status
        if error is not None:
            self.data["error"] = str(error)
        self.data["wall_seconds"] = round(time.monotonic() - self._t0, 3)
        path = self.run_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def launch_state(config):
    """Composite launch state |nu0(-X0)> x |alpha(-X0, 0)> and its family."""
    params = config.params()
    agent = config.agent_basis()
    family = AdiabaticFamily(params, agent, anchor_x=-config.X0)
    lev = family.at(-config.X0)
    agent_vec = coherent_state(agent, -config.X0, 0.0)
    psi0 = product_state(lev.vectors[:, config.nu0], agent_vec, family.sys_basis, agent)
    return psi0, family


def autonomous_run(config, t_final=None, checkpoints=None):
    """Full autonomous evolution of a config over the half-swing."""
    psi0, family = launch_state(config)
    params = config.params()
    H = total_hamiltonian(params, psi0.agent, X_extent_required=config.X0)
    if t_final is None:
        t_final = np.pi / config.omega
    # the adaptive Krylov step stays accurate at large dt * ||H||; the
    # library default is far more conservative than scenario runs need
    dt = config.numerics.get("dt", 20.0 / H.norm_estimate())
    traj = evolve_autonomous(
        H,
        psi0,
        t_final,
        dt=dt,
        checkpoints=checkpoints or config.checkpoints,
        leak_tol=config.numerics.get("leak_tol", 1e-6),
    )
    return traj, family, H


def channel_table(traj, family, p_floor=1e-12):
    """Per-checkpoint channel snapshots for the whole trajectory."""
    snapshots = []
    for state in traj.states:
        snaps = channel_observables(decompose(state, family), p_floor=p_floor)
        snapshots.append(snaps)
    return snapshots


def _channel_rows(snapshots):
    rows = []
    for snaps in snapshots:
        for s in snaps:
            rows.append((s.t, s.nu, s.p_nu, s.X_nu, s.v_nu, s.E_nu))
    return rows


def driven_work(params, drive, nu0, t_final, checkpoints=200, dt=None):
    """Mean work and distribution for a classically driven run."""
    from .channels import driven_channel_probabilities

    traj = evolve_driven(params, drive, nu0, t_final, dt=dt, checkpoints=checkpoints)
    probs, lev_final = driven_channel_probabilities(params, traj, drive)
    lev0 = adiabatic_levels(params, float(drive(0.0)))
    e0 = lev0.energies[nu0]
    support = lev_final.energies - e0
    dist = WorkDistribution(support, probs[-1] / probs[-1].sum())
    return dist, probs, traj


CHANNEL_HEADER = ("t", "nu", "p_nu", "X_nu", "v_nu", "E_nu")
WORK_HEADER = ("W", "P")


def _work_rows(dist):
    order = np.argsort(dist.support)
    return [(dist.support[i], dist.probs[i]) for i in order]


def _conservation_checks(manifest, traj, H, snapshots=None):
    e = [H.expectation(s.amplitudes) for s in traj.states]
    span = max(abs(H.norm_estimate()), 1e-30)
    drift = float(np.max(np.abs(np.array(e) - e[0])) / span)
    manifest.check("energy_drift", drift < 1e-8, drift)
    norms = [abs(np.linalg.norm(s.amplitudes) - 1.0) for s in traj.states]
    manifest.check("norm_drift", max(norms) < 1e-10, float(max(norms)))
    pn = traj.final.agent_marginal()
    manifest.check("occupation_sum", abs(pn.sum() - 1) < 1e-8, float(pn.sum()))
    if snapshots is not None:
        ptot = sum(s.p_nu for s in snapshots[-1])
        manifest.check("channel_sum", abs(ptot - 1) < 1e-8, float(ptot))
    dW, resid = mean_work(traj, H)
    manifest.check("first_law_residual", resid < 1e-6 * span, float(resid))
    manifest.data["results"]["mean_work_energetic"] = float(dW)


def run_simulate(config, out_dir="runs"):
    """Autonomous run with channel tables, plus Cl0/Cl references.

    Emits channels.csv, xqc.csv, agent_hist.csv, work_qm.csv and, when
    compare_classical is set, work_cl0.csv / work_cl.csv from the cosine
    drive and from the recorded X_qc drive.
    """
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    try:
        traj, family, H = autonomous_run(config)
        snapshots = channel_table(traj, family)
        write_csv(run_dir / "channels.csv", CHANNEL_HEADER, _channel_rows(snapshots))
        manifest.add_file("channels.csv")

        xqc_series = [(t, x_qc(s)) for t, s in zip(traj.times, snapshots)]
        write_csv(run_dir / "xqc.csv", ("t", "X_qc"), xqc_series)
        manifest.add_file("xqc.csv")

        hist_rows = []
        for k, t in enumerate(traj.times):
            col = traj.agent_energy_hist[:, k]
            for n in np.nonzero(col > 1e-12)[0]:
                hist_rows.append((t, int(n), col[n]))
        write_csv(run_dir / "agent_hist.csv", ("t", "n", "P_n"), hist_rows)
        manifest.add_file("agent_hist.csv")

        init = [s for s in snapshots[0] if s.nu == config.nu0][0]
        dist_qm = work_system(snapshots[-1], init)
        write_csv(run_dir / "work_qm.csv", WORK_HEADER, _work_rows(dist_qm))
        manifest.add_file("work_qm.csv")
        manifest.data["results"]["mean_work_qm"] = dist_qm.mean
        manifest.data["results"]["W0_width"] = dist_qm.width

        _conservation_checks(manifest, traj, H, snapshots)

        if config.compare_classical:
            params = config.params()
            t_final = np.pi / config.omega
            cosine = DriveProtocol(
                "classical_cosine", X0=config.X0, omega=config.omega
            )
            dist_cl0, _, _ = driven_work(
                params, cosine, config.nu0, t_final, config.checkpoints
            )
            write_csv(run_dir / "work_cl0.csv", WORK_HEADER, _work_rows(dist_cl0))
            manifest.add_file("work_cl0.csv")
            manifest.data["results"]["mean_work_cl0"] = dist_cl0.mean

            samples = np.array(xqc_series)
            recorded = DriveProtocol("recorded_trajectory", samples=samples)
            dist_cl, _, _ = driven_work(
                params, recorded, config.nu0, t_final, config.checkpoints
            )
            write_csv(run_dir / "work_cl.csv", WORK_HEADER, _work_rows(dist_cl))
            manifest.add_file("work_cl.csv")
            manifest.data["results"]["mean_work_cl"] = dist_cl.mean
    except Exception as err:
        manifest.finish(status="failed", error=err)
        raise
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def _sweep_x0_point(args):
    config, X0, v0 = args
    params = config.params()
    omega = v0 / X0
    t_final = np.pi / omega
    drive = DriveProtocol("classical_cosine", X0=X0, omega=omega)
    dist, _, _ = driven_work(
        params, drive, config.nu0, t_final, config.checkpoints
    )
    return (X0, v0, omega, dist.mean)


def run_sweep_x0(config, X0_list, v0_list=None, out_dir="runs", jobs=1):
    """Mean work vs sweep rate for several launch amplitudes X0.

    Classical cosine drive per point (the drive-shape sensitivity being
    probed is a property of the system trajectory X(t)).  Flags the X0
    threshold beyond which successive curves differ by less than 1%.
    """
    if v0_list is None:
        v0_list = (config.sweep or {}).get("v0", [config.v0])
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    tasks = [(config, X0, v0) for X0 in X0_list for v0 in v0_list]
    rows, failures = _map_jobs(_sweep_x0_point, tasks, jobs)
    write_csv(run_dir / "sweep_x0.csv", ("X0", "v0", "omega", "W_mean"), rows)
    manifest.add_file("sweep_x0.csv")
    for task, err in failures:
        manifest.check(f"point_X0={task[1]}_v0={task[2]}", False, str(err))

    # insensitivity threshold: first X0 whose curve matches the next one
    # within 1% relative over the common v0 grid
    by_x0 = {X0: {} for X0 in X0_list}
    for X0, v0, _, w in rows:
        by_x0[X0][v0] = w
    threshold = None
    x0s = sorted(by_x0)
    for a, b in zip(x0s, x0s[1:]):
        diffs = [
            abs(by_x0[a][v] - by_x0[b][v]) / max(abs(by_x0[b][v]), 1e-12)
            for v in by_x0[a]
            if v in by_x0[b]
        ]
        if diffs and max(diffs) < 0.01:
            threshold = a
            break
    manifest.data["results"]["insensitivity_threshold_X0"] = threshold
    manifest.check("no_point_failures", not failures, len(failures))
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def _auto_n_max(X0, ell, omega, W_margin=1.2):
    """Truncation that holds the launch packet plus work exchange.

    The coherent packet sits at nbar = (X0/ell)^2 / 2 with width sqrt(nbar);
    energy exchanged with the system moves it by up to W_margin / omega.
    """
    nbar = 0.5 * (X0 / ell) ** 2
    return int(nbar + W_margin / omega + 12 * np.sqrt(nbar + 1)) + 10


def _sweep_omega_point(args):
    config, omega, ell, n_max = args
    v0 = config.v0
    X0 = v0 / omega
    point = config.replace(
        name=f"{config.name}-om{omega:g}",
        agent={"omega": omega, "ell": ell, "X0": X0, "n_max": n_max},
    )
    traj, family, H = autonomous_run(point)
    snaps0 = channel_observables(decompose(traj.initial, family))
    snapsT = channel_observables(decompose(traj.final, family))
    init = [s for s in snaps0 if s.nu == point.nu0][0]
    w_qm = work_system(snapsT, init).mean

    params = point.params()
    t_final = np.pi / omega
    cosine = DriveProtocol("classical_cosine", X0=X0, omega=omega)
    w_cl0 = driven_work(params, cosine, point.nu0, t_final, point.checkpoints)[0].mean

    xqc_series = []
    for t, state in zip(traj.times, traj.states):
        xqc_series.append((t, x_qc(channel_observables(decompose(state, family)))))
    recorded = DriveProtocol("recorded_trajectory", samples=np.array(xqc_series))
    w_cl = driven_work(params, recorded, point.nu0, t_final, point.checkpoints)[0].mean
    return (omega, ell, X0, w_qm, w_cl0, w_cl, abs(w_qm - w_cl))


def run_sweep_omega(config, path, omega_list, out_dir="runs", jobs=1):
    """Mean-work comparison along a constant-dv_br or constant-dv_uc path.

    v0 is held fixed (X0 = v0/omega per point); ell follows the path rule
    ell^2 omega = const (constant_dvbr) or ell omega = const (constant_dvuc).
    Points with X0 < 1.5 X_c violate the design rules and are skipped.
    """
    if path not in ("constant_dvbr", "constant_dvuc"):
        raise ConfigError(f"unknown path {path!r}")
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    ell_ref, om_ref = config.agent["ell"], config.omega
    params = config.params()
    tasks, skipped = [], []
    for omega in omega_list:
        if path == "constant_dvbr":
            ell = ell_ref * np.sqrt(om_ref / omega)
        else:
            ell = ell_ref * om_ref / omega
        X0 = config.v0 / omega
        if X0 < 1.5 * params.X_c:
            skipped.append((omega, "X0 below 1.5 X_c"))
            continue
        n_max = _auto_n_max(
            X0, ell, omega, config.numerics.get("W_margin", 1.2)
        )
        tasks.append((config, omega, ell, n_max))
    rows, failures = _map_jobs(_sweep_omega_point, tasks, jobs)
    rows.sort(key=lambda r: r[0])
    write_csv(
        run_dir / "sweep_omega.csv",
        ("omega", "ell", "X0", "W_qm", "W_cl0", "W_cl", "gap_qm_cl"),
        rows,
    )
    manifest.add_file("sweep_omega.csv")
    manifest.data["results"]["path"] = path
    manifest.data["results"]["skipped"] = [
        {"omega": om, "reason": why} for om, why in skipped
    ]
    for task, err in failures:
        manifest.check(f"point_omega={task[1]}", False, str(err))
    manifest.check("no_point_failures", not failures, len(failures))
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def _first_crossing_survival(params, X0, omega, nu0, X_stop=-0.1, checkpoints=50):
    """Adiabatic survival just past the first crossing (at X = X_stop)."""
    t_final = np.arccos(-X_stop / X0) / omega
    drive = DriveProtocol("classical_cosine", X0=X0, omega=omega)
    from .channels import driven_channel_probabilities

    traj = evolve_driven(params, drive, nu0, t_final, checkpoints=checkpoints)
    probs, _ = driven_channel_probabilities(params, traj, drive)
    return probs[-1][nu0]


def _full_sweep_survival(params, X0, omega, nu0, checkpoints=100):
    drive = DriveProtocol("classical_cosine", X0=X0, omega=omega)
    from .channels import driven_channel_probabilities

    traj = evolve_driven(params, drive, nu0, np.pi / omega, checkpoints=checkpoints)
    probs, _ = driven_channel_probabilities(params, traj, drive)
    return probs[-1][nu0]


def _interference_quantum_point(args):
    config, omega, ell = args
    X0 = config.X0
    n_max = _auto_n_max(X0, ell, omega, config.numerics.get("W_margin", 1.2))
    point = config.replace(
        name=f"{config.name}-qm",
        agent={"omega": omega, "ell": ell, "X0": X0, "n_max": n_max},
    )
    traj, family, _ = autonomous_run(point, checkpoints=4)
    dec = decompose(traj.final, family)
    return (omega, ell, X0 * omega, float(dec.p[point.nu0]))


def run_interference(config, omega_list, ell_list, out_dir="runs", jobs=1):
    """Two-crossing interference scan at fixed X0.

    Emits the classical-drive first-crossing curve with its LZ fit, the
    full-sweep classical survival with coherent/dephased references, and
    the quantum-agent survival per ell.
    """
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    params = config.params()
    X0, nu0 = config.X0, config.nu0
    omega_list = sorted(omega_list)

    first_rows = []
    for omega in omega_list:
        p_surv = _first_crossing_survival(params, X0, omega, nu0)
        first_rows.append((omega, X0 * omega, 1.0 - p_surv, p_surv))
    write_csv(
        run_dir / "first_crossing.csv",
        ("omega", "v0", "P_lz", "p_survival"),
        first_rows,
    )
    manifest.add_file("first_crossing.csv")

    v0s = np.array([r[1] for r in first_rows])
    p_lz = np.array([r[2] for r in first_rows])
    usable = (p_lz > 0) & (p_lz < 1)
    fits = {}
    for q in (1.0, 2.0):
        try:
            c, _, resid = lz_fit(v0s[usable], p_lz[usable], q=q)
            fits[q] = {"c": c, "residual": resid}
        except ValueError as err:
            fits[q] = {"error": str(err)}
    q_best = min(
        (q for q in fits if "residual" in fits[q]),
        key=lambda q: fits[q]["residual"],
        default=None,
    )
    manifest.data["results"]["lz_fit"] = {str(q): f for q, f in fits.items()}
    manifest.data["results"]["lz_fit_q_best"] = q_best

    # 50/50 velocity from the measured curve (monotone in v0)
    v50 = None
    if np.any(p_lz >= 0.5) and np.any(p_lz <= 0.5):
        v50 = float(np.interp(0.5, p_lz, v0s))
    manifest.data["results"]["v50"] = v50

    full_rows = []
    for omega, v0, p, _ in first_rows:
        p_full = _full_sweep_survival(params, X0, omega, nu0)
        coh_lo = (1.0 - 2.0 * p) ** 2
        _, deph = two_path_probability(p, 0.0)
        full_rows.append((omega, v0, p_full, coh_lo, 1.0, deph))
    write_csv(
        run_dir / "survival_classical.csv",
        ("omega", "v0", "p_survival", "env_lo", "env_hi", "p_dephased"),
        full_rows,
    )
    manifest.add_file("survival_classical.csv")
    within = all(
        lo - 0.05 <= p <= hi + 0.05 for _, _, p, lo, hi, _ in full_rows
    )
    manifest.check("classical_survival_within_envelope", within)

    if ell_list:
        tasks = [(config, omega, ell) for ell in ell_list for omega in omega_list]
        rows, failures = _map_jobs(_interference_quantum_point, tasks, jobs)
        rows.sort(key=lambda r: (r[1], r[0]))
        write_csv(
            run_dir / "survival_quantum.csv",
            ("omega", "ell", "v0", "p_survival"),
            rows,
        )
        manifest.add_file("survival_quantum.csv")
        contrast = {}
        for ell in ell_list:
            ps = [r[3] for r in rows if r[1] == ell]
            if ps:
                contrast[ell] = float(max(ps) - min(ps))
        manifest.data["results"]["fringe_contrast"] = {
            str(k): v for k, v in contrast.items()
        }
        for task, err in failures:
            manifest.check(f"point_om={task[1]}_ell={task[2]}", False, str(err))
        manifest.check("no_point_failures", not failures, len(failures))

    dphi, dv0_req = interference_resolution(
        v0=config.v0, dX0=2 * 0.458, dW0=0.306
    )
    manifest.data["results"]["interference_resolution"] = {
        "delta_phi": float(dphi),
        "dv0_required": float(dv0_req),
    }
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def run_fidelity(config, taus=None, out_dir="runs", phis=None):
    """Fidelity series F(tau), its Fourier spectrum, and the direct P(w).

    Each tau requires a full re-propagation of the free-rotated launch
    state, so keep configs small.
    """
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    try:
        omega = config.omega
        if taus is None:
            n_tau = config.numerics.get("n_tau", 256)
            taus = 2 * np.pi / omega * np.arange(n_tau) / n_tau
        psi0, family = launch_state(config)
        params = config.params()
        H = total_hamiltonian(params, psi0.agent, X_extent_required=config.X0)
        t_final = np.pi / omega
        dt = config.numerics.get("dt", 20.0 / H.norm_estimate())

        def sweep(state):
            traj = evolve_autonomous(
                H, state, t_final, dt=dt, checkpoints=1,
                leak_tol=config.numerics.get("leak_tol", 1e-6),
            )
            return traj.final

        series = fidelity_amplitude(H, psi0, sweep, taus)
        write_csv(
            run_dir / "fidelity.csv",
            ("tau", "re_F", "im_F", "abs_F"),
            [
                (t, v.real, v.imag, abs(v))
                for t, v in zip(series.taus, series.values)
            ],
        )
        manifest.add_file("fidelity.csv")

        final = sweep(psi0)
        p_n = final.agent_marginal()
        alpha0 = coherent_state(psi0.agent, -config.X0, 0.0)
        w_direct, p_direct = work_spectral(p_n, alpha0, omega)
        m_values = np.rint(w_direct / omega).astype(int)
        p_rec = fidelity_to_spectrum(series, omega, m_values)
        write_csv(
            run_dir / "work_spectrum.csv",
            ("w", "m", "P_direct", "P_reconstructed"),
            list(zip(w_direct, m_values, p_direct, p_rec)),
        )
        manifest.add_file("work_spectrum.csv")
        max_err = float(np.max(np.abs(p_rec - p_direct)))
        manifest.data["results"]["spectrum_max_error"] = max_err
        manifest.check("spectrum_consistency", max_err < 1e-6, max_err)
        manifest.check(
            "fidelity_bounded", bool(np.all(np.abs(series.values) <= 1 + 1e-10))
        )

        if phis is None:
            phis = np.linspace(0, 2 * np.pi, 25)
        F_T = series.values[0]
        write_csv(
            run_dir / "ancilla.csv",
            ("phi", "p_up"),
            [(phi, ancilla_probability(F_T, phi)) for phi in phis],
        )
        manifest.add_file("ancilla.csv")
    except Exception as err:
        manifest.finish(status="failed", error=err)
        raise
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def run_ideal_agent(config, factors=(1, 4, 16), out_dir="runs", jobs=1):
    """Heavy-agent convergence: quantum channel probabilities vs the
    classical drive as the mass is scaled up at fixed omega and v0.

    M x f is realized by ell -> ell / sqrt(f); n_max grows accordingly.
    """
    if len(factors) < 3:
        raise ConfigError("need at least 3 mass factors")
    run_dir = new_run_dir(out_dir, config.name)
    manifest = RunManifest(run_dir, config)
    params = config.params()
    omega, X0, nu0 = config.omega, config.X0, config.nu0

    drive = DriveProtocol("classical_cosine", X0=X0, omega=omega)
    from .channels import driven_channel_probabilities

    t_final = np.pi / omega
    traj_cl = evolve_driven(params, drive, nu0, t_final, checkpoints=config.checkpoints)
    probs_cl, lev_final = driven_channel_probabilities(params, traj_cl, drive)
    p_cl = probs_cl[-1]
    lev0 = adiabatic_levels(params, -X0)
    dE = lev_final.energies - lev0.energies[nu0]

    # the momentum kick delivered at the crossing rotates in the agent's
    # phase space afterwards; de-rotate the final (dX, dP) deviation by the
    # phase accumulated since the crossing to recover the kick itself
    X_cross = config.preparation.get("X_cross", 0.0)
    dtheta = np.pi - np.arccos(-X_cross / X0)
    cosd, sind = np.cos(dtheta), np.sin(dtheta)

    rows, channel_rows = [], []
    try:
        for f in factors:
            ell = config.agent["ell"] / np.sqrt(f)
            n_max = _auto_n_max(
                X0, ell, omega, config.numerics.get("W_margin", 1.2)
            )
            point = config.replace(
                name=f"{config.name}-M{f}",
                agent={"omega": omega, "ell": ell, "X0": X0, "n_max": n_max},
            )
            traj, family, H = autonomous_run(point, checkpoints=2)
            dec = decompose(traj.final, family)
            tv = 0.5 * float(np.sum(np.abs(dec.p - p_cl)))
            M = point.design().mass
            rows.append((f, M, ell, n_max, tv))
            for s in channel_observables(dec):
                dX = s.X_nu - X0  # classical endpoint is (X0, P=0)
                dP_kick = M * s.v_nu * cosd + M * omega * dX * sind
                channel_rows.append(
                    (f, s.nu, s.p_nu, dP_kick, -dE[s.nu] / config.v0)
                )
    except Exception as err:
        manifest.finish(status="failed", error=err)
        raise
    write_csv(
        run_dir / "convergence.csv",
        ("factor", "M", "ell", "n_max", "tv_distance"),
        rows,
    )
    manifest.add_file("convergence.csv")
    write_csv(
        run_dir / "momentum_kick.csv",
        ("factor", "nu", "p_nu", "dP_measured", "dP_predicted"),
        channel_rows,
    )
    manifest.add_file("momentum_kick.csv")
    tvs = [r[4] for r in rows]
    manifest.check("tv_decreasing", all(a > b for a, b in zip(tvs, tvs[1:])), tvs)
    manifest.check("tv_final_small", tvs[-1] < 0.01, tvs[-1])
    manifest.finish(status="ok" if manifest.all_pass else "invariant_failure")
    return run_dir


def run_design(goal, config=None, out_dir="runs", name="design"):
    """Design diagram border tables plus a report for a named config."""
    run_dir = new_run_dir(out_dir, name)
    diagram = design_diagram(goal)
    osc = diagram["oscillator"]
    write_csv(
        run_dir / "design_oscillator.csv",
        ("omega", "n_ph_UC", "n_ph_BR", "n_ph_Res"),
        list(zip(osc["omega"], osc["UC"], osc["BR"], osc["Res"])),
    )
    pis = diagram["piston"]
    write_csv(
        run_dir / "design_piston.csv",
        ("M", "ell_UC", "ell_Res"),
        list(zip(pis["M"], pis["UC"], pis["Res"])),
    )
    payload = {
        "goal": {"W0": goal[0], "v0": goal[1], "dv0": goal[2]},
        "BR_mass": float(pis["BR_mass"]),
        "files": ["design_oscillator.csv", "design_piston.csv"],
    }
    if config is not None:
        report = evaluate_design(config.design(), goal)
        payload["report"] = {
            "margins": {k: float(v) for k, v in report.margins.items()},
            "checks": report.checks,
            "all_pass": report.all_pass,
        }
    (run_dir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    return run_dir


def _map_jobs(fn, tasks, jobs):
    """Run tasks serially or in a process pool; returns (rows, failures).

    Output order follows task order regardless of completion order.
    """
    rows, failures = [], []
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, t) for t in tasks]
            for task, fut in zip(tasks, futures):
                try:
                    rows.append(fut.result())
                except Exception as err:
                    failures.append((task, err))
    else:
        for task in tasks:
            try:
                rows.append(fn(task))
            except Exception as err:
                failures.append((task, err))
    return rows, failures
