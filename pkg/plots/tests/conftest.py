import json
import subprocess

import pytest


def run_svw(*args):
    """Drive the simulation package through its CLI, the only coupling
    allowed between the plot package and the solver."""
    proc = subprocess.run(["svw", *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def reference_outputs(tmp_path_factory):
    """Small but complete set of run/preset outputs for figure rendering."""
    root = tmp_path_factory.mktemp("reference")
    config = {
        "grid": {"n": 64},
        "run": {"t_end": 0.2, "cfl": 0.5, "mode": "regularized", "epsilon": 0.1,
                "output_stride": 4},
        "init": {"kind": "fourier", "u_amp": 0.2, "v_amp": 0.3},
        "noise": {"pairs": 4, "amplitude": 0.25, "seed": 21},
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))

    run_dir = root / "run"
    ens_dir = root / "ensemble"
    blow_dir = root / "blowup"
    conv_dir = root / "converge"
    run_svw("run", "--config", str(cfg_path), "--out", str(run_dir))
    run_svw("ensemble", "--config", str(cfg_path), "--out", str(ens_dir),
            "--paths", "3")
    run_svw("blowup", "--config", str(cfg_path), "--out", str(blow_dir),
            "--eps", "0.6,0.5", "--paths", "4", "--maxn", "128")
    run_svw("converge", "--config", str(cfg_path), "--out", str(conv_dir),
            "--eps", "0.2,0.1")
    return {"root": root, "config": cfg_path, "run": run_dir,
            "ensemble": ens_dir, "blowup": blow_dir, "converge": conv_dir}
