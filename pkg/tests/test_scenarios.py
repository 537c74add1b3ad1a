import json

import numpy as np
import pytest

from workagent import cli
from workagent.scenarios import (
    ConfigError,
    RunConfig,
    RunManifest,
    _auto_n_max,
    new_run_dir,
    read_csv,
    run_fidelity,
    run_simulate,
    run_sweep_x0,
    write_csv,
)


def smoke_config(**patches):
    base = dict(
        name="smoke",
        model={"L": 2, "N": 2, "u": 1.0},
        agent={"omega": 0.5, "ell": 0.4, "X0": 1.2, "n_max": 48},
        preparation={"nu0": 0},
        protocol="quantum",
        numerics={"checkpoints": 5},
    )
    base.update(patches)
    return RunConfig(**base)


class TestRunConfig:
    def test_valid(self):
        cfg = smoke_config()
        assert cfg.v0 == pytest.approx(0.6)
        assert cfg.X0 == pytest.approx(1.2)
        assert cfg.params().U == pytest.approx(0.5)

    def test_n_ph_form(self):
        cfg = smoke_config(agent={"omega": 0.5, "ell": 0.4, "n_ph": 9.0, "n_max": 48})
        assert cfg.X0 == pytest.approx(0.4 * 3.0)

    def test_rejects_unknown_protocol(self):
        with pytest.raises(ConfigError):
            smoke_config(protocol="adiabatic")

    def test_rejects_u_and_U(self):
        with pytest.raises(ConfigError):
            smoke_config(model={"L": 2, "N": 2, "u": 1.0, "U": 0.5})

    def test_rejects_X0_and_n_ph(self):
        with pytest.raises(ConfigError):
            smoke_config(
                agent={"omega": 0.5, "ell": 0.4, "X0": 1.2, "n_ph": 9, "n_max": 48}
            )

    def test_rejects_missing_agent_key(self):
        with pytest.raises(ConfigError):
            smoke_config(agent={"omega": 0.5, "X0": 1.2, "n_max": 48})

    def test_rejects_nu0_out_of_sector(self):
        with pytest.raises(ConfigError):
            smoke_config(preparation={"nu0": 3})

    def test_from_file_json_and_toml(self, tmp_path):
        cfg = smoke_config()
        p_json = tmp_path / "c.json"
        p_json.write_text(json.dumps(cfg.to_dict()))
        assert RunConfig.from_file(p_json).to_dict() == cfg.to_dict()

        p_toml = tmp_path / "c.toml"
        p_toml.write_text(
            "name = 'smoke'\nprotocol = 'quantum'\n"
            "[model]\nL = 2\nN = 2\nu = 1.0\n"
            "[agent]\nomega = 0.5\nell = 0.4\nX0 = 1.2\nn_max = 48\n"
        )
        cfg2 = RunConfig.from_file(p_toml)
        assert cfg2.v0 == pytest.approx(0.6)

    def test_replace_merges_subdicts(self):
        cfg = smoke_config()
        cfg2 = cfg.replace(agent={"ell": 0.2}, name="other")
        assert cfg2.agent["ell"] == 0.2
        assert cfg2.agent["omega"] == 0.5
        assert cfg2.name == "other"
        # original untouched
        assert cfg.agent["ell"] == 0.4


class TestCsvRoundtrip:
    def test_roundtrip_and_determinism(self, tmp_path):
        header = ("a", "b")
        rows = [(1, 0.1), (2, 1.0 / 3.0)]
        p1, p2 = tmp_path / "x1.csv", tmp_path / "x2.csv"
        write_csv(p1, header, rows)
        write_csv(p2, header, rows)
        assert p1.read_bytes() == p2.read_bytes()
        got_header, cols = read_csv(p1)
        assert got_header == list(header)
        assert np.allclose(cols["b"], [0.1, 1.0 / 3.0])


class TestRunDirAndManifest:
    def test_run_dirs_never_collide(self, tmp_path):
        d1 = new_run_dir(tmp_path, "x")
        d2 = new_run_dir(tmp_path, "x")
        assert d1 != d2 and d1.exists() and d2.exists()

    def test_manifest_records_checks(self, tmp_path):
        run = new_run_dir(tmp_path, "m")
        man = RunManifest(run, smoke_config())
        man.check("good", True)
        man.check("bad", False, "detail text")
        assert not man.all_pass
        man.finish(status="invariant_failure")
        data = json.loads((run / "manifest.json").read_text())
        assert data["invariants"]["bad"] == {"pass": False, "detail": "detail text"}
        assert data["status"] == "invariant_failure"
        assert data["config"]["name"] == "smoke"


class TestAutoNMax:
    def test_covers_packet_and_work(self):
        n = _auto_n_max(X0=1.0, ell=0.1, omega=0.02)
        nbar = 0.5 * (1.0 / 0.1) ** 2
        assert n > nbar + 1.2 / 0.02
        # monotone in the work margin
        assert _auto_n_max(1.0, 0.1, 0.02, W_margin=2.4) > n


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = smoke_config(compare_classical=True)
    return run_simulate(cfg, out_dir=out)


class TestRunSimulate:
    def test_files_and_status(self, run_dir):
        data = json.loads((run_dir / "manifest.json").read_text())
        for name in data["files"]:
            assert (run_dir / name).exists()
        assert {"channels.csv", "xqc.csv", "work_qm.csv", "work_cl0.csv"} <= set(
            data["files"]
        )
        assert data["status"] == "ok"
        assert all(v["pass"] for v in data["invariants"].values())

    def test_work_distribution_normalized(self, run_dir):
        _, cols = read_csv(run_dir / "work_qm.csv")
        assert cols["P"].sum() == pytest.approx(1.0, abs=1e-8)
        assert np.all(np.diff(cols["W"]) >= 0)

    def test_xqc_starts_at_launch(self, run_dir):
        _, cols = read_csv(run_dir / "xqc.csv")
        assert cols["X_qc"][0] == pytest.approx(-1.2, abs=5e-3)

    def test_deterministic_output(self, run_dir, tmp_path):
        again = run_simulate(smoke_config(compare_classical=True), out_dir=tmp_path)
        for name in ("channels.csv", "work_qm.csv", "work_cl0.csv"):
            assert (again / name).read_bytes() == (run_dir / name).read_bytes()


class TestRunSweepX0:
    def test_table_and_threshold_field(self, tmp_path):
        cfg = smoke_config(protocol="classical_cosine")
        run = run_sweep_x0(cfg, [1.0, 1.2], v0_list=[0.4, 0.6], out_dir=tmp_path)
        _, cols = read_csv(run / "sweep_x0.csv")
        assert len(cols["W_mean"]) == 4
        data = json.loads((run / "manifest.json").read_text())
        assert "insensitivity_threshold_X0" in data["results"]
        assert data["invariants"]["no_point_failures"]["pass"]


class TestRunFidelity:
    def test_mechanics_and_honest_checks(self, tmp_path):
        cfg = smoke_config(numerics={"checkpoints": 2})
        taus = 2 * np.pi / cfg.omega * np.arange(8) / 8
        run = run_fidelity(cfg, taus=taus, out_dir=tmp_path)
        _, cols = read_csv(run / "fidelity.csv")
        assert cols["abs_F"][0] == pytest.approx(1.0, abs=1e-10)
        assert np.all(cols["abs_F"] <= 1 + 1e-10)
        data = json.loads((run / "manifest.json").read_text())
        assert data["invariants"]["fidelity_bounded"]["pass"]
        # the spectral reconstruction error is recorded, pass or fail
        assert "spectrum_max_error" in data["results"]
        _, spec = read_csv(run / "work_spectrum.csv")
        assert spec["P_direct"].sum() == pytest.approx(1.0, abs=1e-8)


class TestCli:
    def test_config_error_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        cfg = smoke_config().to_dict()
        cfg["protocol"] = "bogus"
        bad.write_text(json.dumps(cfg))
        code = cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path)])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path):
        code = cli.main(
            ["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_simulate_exits_0(self, tmp_path, capsys):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(smoke_config().to_dict()))
        code = cli.main(["simulate", "--config", str(p), "--out", str(tmp_path / "r")])
        assert code == 0
        out = capsys.readouterr().out.strip()
        assert (tmp_path / "r").as_posix() in out

    def test_design_exits_0(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(smoke_config().to_dict()))
        code = cli.main(
            [
                "design",
                "--config",
                str(p),
                "--out",
                str(tmp_path / "r"),
                "--goal",
                "0.5",
                "0.0212",
                "0.001",
            ]
        )
        assert code == 0

    def test_checkpoints_override(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(smoke_config().to_dict()))
        code = cli.main(
            [
                "simulate",
                "--config",
                str(p),
                "--out",
                str(tmp_path / "r"),
                "--checkpoints",
                "3",
            ]
        )
        assert code == 0
        run = next((tmp_path / "r" / "smoke").iterdir())
        data = json.loads((run / "manifest.json").read_text())
        assert data["config"]["numerics"]["checkpoints"] == 3
