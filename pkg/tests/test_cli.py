import io
import subprocess
import sys

import numpy as np
import pytest

from cloudmatch import read_cloud, write_cloud, PointCloud
from cloudmatch.cli import run


def invoke(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def parse_kv(text):
    pairs = {}
    for line in text.strip().splitlines():
        k, _, v = line.partition(": ")
        pairs[k] = v
    return pairs


@pytest.fixture()
def clouds(tmp_path):
    a = tmp_path / "a.xyz"
    b = tmp_path / "b.xyz"
    single_a = tmp_path / "pa.xyz"
    single_b = tmp_path / "pb.xyz"
    code, _, _ = invoke(["gen", "uniform-box", "--n", "32", "--seed", "1", "-o", str(a)])
    assert code == 0
    code, _, _ = invoke(["gen", "uniform-box", "--n", "32", "--seed", "2", "-o", str(b)])
    assert code == 0
    write_cloud(PointCloud([[0, 0, 0]]), single_a)
    write_cloud(PointCloud([[1, 0, 0]]), single_b)
    return {"a": a, "b": b, "pa": single_a, "pb": single_b, "dir": tmp_path}


def test_gen_two_density(tmp_path):
    out_path = tmp_path / "td.xyz"
    code, out, _ = invoke(
        ["gen", "two-density", "--n-left", "200", "--n-right", "400", "-o", str(out_path)]
    )
    assert code == 0
    assert parse_kv(out)["n"] == "600"
    cloud = read_cloud(out_path)
    assert int((cloud.points[:, 1] >= 0.5).sum()) == 400


def test_emd_identity_within_epsilon(clouds):
    code, out, _ = invoke(["emd", str(clouds["a"]), str(clouds["a"])])
    assert code == 0
    kv = parse_kv(out)
    assert float(kv["mean_cost"]) <= float(kv["epsilon"])
    assert kv["converged"] == "true"


def test_emd_exact_flag(clouds):
    code, out, _ = invoke(["emd", str(clouds["a"]), str(clouds["b"]), "--exact"])
    assert code == 0
    kv = parse_kv(out)
    assert kv["method"] == "exact"
    code2, out2, _ = invoke(["emd", str(clouds["a"]), str(clouds["b"])])
    assert float(parse_kv(out2)["mean_cost"]) <= float(kv["mean_cost"]) + float(
        parse_kv(out2)["epsilon"]
    )


def test_emd_flags(clouds):
    code, out, _ = invoke(
        ["emd", str(clouds["a"]), str(clouds["b"]), "--epsilon", "0.01",
         "--max-iters", "5", "--no-scaling"]
    )
    assert code == 0
    kv = parse_kv(out)
    assert kv["epsilon"] == "0.01"
    assert kv["converged"] == "false"


def test_chamfer_hand_value(clouds):
    code, out, _ = invoke(["chamfer", str(clouds["pa"]), str(clouds["pb"])])
    assert code == 0
    assert parse_kv(out)["chamfer"] == "1.0"


def test_emd_size_mismatch_exit_1(clouds, tmp_path):
    small = tmp_path / "small.xyz"
    write_cloud(PointCloud([[0, 0, 0], [1, 1, 1]]), small)
    code, out, err = invoke(["emd", str(clouds["a"]), str(small)])
    assert code == 1
    assert "size" in err.lower()
    assert out == ""


def test_missing_file_exit_2(clouds):
    code, _, err = invoke(["chamfer", str(clouds["a"]), "/nonexistent/x.xyz"])
    assert code == 2
    assert err


def test_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.xyz"
    bad.write_text("1 2\n")
    code, _, err = invoke(["chamfer", str(bad), str(bad)])
    assert code == 2


def test_validation_in_file_exit_1(tmp_path):
    bad = tmp_path / "nan.xyz"
    bad.write_text("0 0 nan\n")
    code, _, _ = invoke(["chamfer", str(bad), str(bad)])
    assert code == 1


def test_unknown_flag_exit_1(clouds):
    code, _, err = invoke(["chamfer", str(clouds["a"]), str(clouds["b"]), "--bogus"])
    assert code == 1
    assert "bogus" in err


def test_expansion_subcommand(tmp_path):
    cloud_path = tmp_path / "e.xyz"
    write_cloud(PointCloud([[0, 0, 0], [1, 0, 0], [4, 0, 0]]), cloud_path)
    grad_path = tmp_path / "g.xyz"
    code, out, _ = invoke(
        ["expansion", str(cloud_path), "--k", "1", "--n", "3",
         "--lambda", "1.5", "--gradients-out", str(grad_path)]
    )
    assert code == 0
    kv = parse_kv(out)
    assert kv["value"] == "1.0"
    assert kv["active_edges"] == "1"
    grads = np.loadtxt(grad_path)
    assert grads.shape == (3, 3)
    assert abs(grads[2, 0] - 1.0 / 3.0) <= 1e-9


def test_expansion_bad_partition_exit_1(tmp_path):
    cloud_path = tmp_path / "e.xyz"
    write_cloud(PointCloud([[0, 0, 0], [1, 0, 0], [4, 0, 0]]), cloud_path)
    code, _, err = invoke(["expansion", str(cloud_path), "--k", "2", "--n", "3"])
    assert code == 1


def test_sample_subcommand_with_report(tmp_path):
    src = tmp_path / "td.xyz"
    invoke(["gen", "two-density", "--n-left", "200", "--n-right", "400", "-o", str(src)])
    out_path = tmp_path / "sel.xyz"
    code, out, _ = invoke(
        ["sample", str(src), "--method", "mds", "--count", "400",
         "--sigma", "0.05", "--report", "-o", str(out_path)]
    )
    assert code == 0
    kv = parse_kv(out)
    assert int(kv["left_count"]) + int(kv["right_count"]) == 400
    assert float(kv["density_cv"]) > 0
    assert len(read_cloud(out_path)) == 400

    for method in ("fps", "pds"):
        code, out, _ = invoke(
            ["sample", str(src), "--method", method, "--count", "50", "--seed", "4"]
        )
        assert code == 0
        assert parse_kv(out)["count"] == "50"


def test_merge_subcommand(clouds, tmp_path):
    out_path = tmp_path / "m.xyzl"
    code, out, _ = invoke(
        ["merge", str(clouds["a"]), str(clouds["b"]), "-o", str(out_path)]
    )
    assert code == 0
    kv = parse_kv(out)
    assert kv["n_merged"] == "64"
    assert kv["n_label0"] == "32"
    merged = read_cloud(out_path)
    assert merged.labels[:32].sum() == 0

    code, out, _ = invoke(
        ["merge", str(clouds["a"]), str(clouds["b"]), "--subsample", "40",
         "--sigma", "0.2", "-o", str(tmp_path / "ms.xyzl")]
    )
    assert parse_kv(out)["n_merged"] == "40"


def test_loss_subcommand(tmp_path):
    rng = np.random.default_rng(0)
    paths = {}
    for name in ("coarse", "final", "gt"):
        p = tmp_path / f"{name}.xyz"
        write_cloud(PointCloud(rng.random((12, 3))), p)
        paths[name] = str(p)
    code, out, _ = invoke(
        ["loss", paths["coarse"], paths["final"], paths["gt"],
         "--k", "3", "--n", "4", "--alpha", "0.1", "--beta", "1.0"]
    )
    assert code == 0
    kv = parse_kv(out)
    total = float(kv["emd_coarse"]) + 0.1 * float(kv["expansion"]) + float(kv["emd_final"])
    assert abs(float(kv["total"]) - total) <= 1e-12


def test_every_subcommand_reachable():
    code, _, err = invoke([])
    assert code == 1
    from cloudmatch.cli import _COMMANDS

    assert set(_COMMANDS) == {"gen", "chamfer", "emd", "expansion", "sample", "merge", "loss"}


def test_cli_determinism_across_runs_and_threads(clouds):
    baseline = None
    for threads in ("1", "4"):
        for _ in range(3):
            code, out, _ = invoke(
                ["emd", str(clouds["a"]), str(clouds["b"]), "--seed", "0",
                 "--threads", threads]
            )
            assert code == 0
            if baseline is None:
                baseline = out
            assert out == baseline


def test_console_script_subprocess(clouds):
    result = subprocess.run(
        [sys.executable, "-m", "cloudmatch.cli", "chamfer", str(clouds["pa"]), str(clouds["pb"])],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "chamfer: 1.0" in result.stdout
