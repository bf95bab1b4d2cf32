import math

import numpy as np
import pytest

from rotset import io
from rotset.cli import main
from rotset.evolve import BoxSet, RotationApprox
from rotset.geometry import convex_hull, distance_to_polygon, rectangle


def _run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, io.parse_report(out.out), out.err


@pytest.fixture(scope="module")
def compute_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("compute")
    assert main(["compute", "--map", "fab:1:1", "--k", "8", "--n", "25",
                 "--out-prefix", str(d / "f11")]) == 0
    return d


def test_compute_files(compute_dir):
    for s in ("_boxes.csv", ".pgm", "_hull.csv", "_meta.txt"):
        assert (compute_dir / f"f11{s}").exists()
    hull = io.read_polygon(compute_dir / "f11_hull.csv")
    assert np.all(np.abs(hull.vertices) <= 4)


def test_box_csv_header(compute_dir):
    head = (compute_dir / "f11_boxes.csv").read_text().splitlines()[0]
    assert head.startswith("# k=8, n=25, R=")
    meta = io.parse_header(head)
    assert meta["map"] == "fab:1:1" and meta["sound"] == "True"
    assert float(meta["R"]) == math.sqrt(2) / 8 and meta["m"] == "55"


def test_compute_deterministic(compute_dir, tmp_path):
    assert main(["compute", "--map", "fab:1:1", "--k", "8", "--n", "25", "--threads", "2",
                 "--out-prefix", str(tmp_path / "again")]) == 0
    for s in ("_boxes.csv", "_hull.csv"):
        assert (tmp_path / f"again{s}").read_bytes() == (compute_dir / f"f11{s}").read_bytes()


def test_pgm_matches_boxes(compute_dir):
    A = io.read_boxes(compute_dir / "f11_boxes.csv")
    img = io.read_pgm(compute_dir / "f11.pgm")
    b = A.boxes.trimmed()
    assert img.shape == (b.occ.shape[1], b.occ.shape[0])
    assert int((img == 0).sum()) == A.boxes.count
    i0, _, _, j1 = b.window
    rows, cols = np.nonzero(img == 0)
    assert np.all(b.contains(np.stack([i0 + cols, j1 - rows], 1)))


def test_translation_compute(tmp_path, capsys):
    rc, rep, _ = _run(capsys, "compute", "--map", "trans:0.5:0", "--k", "4", "--n", "10",
                      "--out-prefix", str(tmp_path / "t"))
    assert rc == 0
    hull = io.read_polygon(tmp_path / "t_hull.csv")
    sq = rectangle(0.5, 0.6, 0, 0.1)
    eps = math.sqrt(2) / 4
    # every layer is a 2 eps pseudo-orbit step, so Q_n* sits within 2 eps of the square
    assert distance_to_polygon(hull.vertices, sq).max() <= 2 * eps + 1e-12
    assert distance_to_polygon(sq.vertices, hull).max() == 0


def test_box_csv_round_trip(tmp_path, rng):
    boxes = rng.integers(-50, 50, (300, 2))
    A = RotationApprox("hshear:0.5:1;trans:1,2", 5, 7, 0.25, 9, 3.5, False,
                       BoxSet.from_boxes(boxes, 5))
    io.write_boxes(tmp_path / "b.csv", A)
    B = io.read_boxes(tmp_path / "b.csv")
    assert B.boxes == A.boxes
    assert (B.label, B.k, B.n, B.R, B.m, B.L, B.sound) == ("hshear:0.5:1;trans:1,2", 5, 7, 0.25, 9, 3.5, False)


def test_polygon_csv_round_trip(tmp_path, rng):
    P = convex_hull(rng.normal(size=(200, 2)))
    io.write_polygon(tmp_path / "p.csv", P)
    assert io.read_polygon(tmp_path / "p.csv") == P


def test_parse_error_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# k=1, n=1\n0,0\n1,x\n")
    with pytest.raises(io.FormatError, match=":3:"):
        io.read_boxes(p)


def test_hausdorff_bad_file_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("0.5,0.5\nnope\n")
    rc, _, err = _run(capsys, "hausdorff", str(p), "rect:0:1:0:1")
    assert rc == 2 and ":2:" in err


def test_no_partial_files(tmp_path):
    target = tmp_path / "x.csv"
    with pytest.raises(RuntimeError):
        with io.atomic_write(target) as fh:
            fh.write("half")
            raise RuntimeError
    assert list(tmp_path.iterdir()) == []


def test_direct_identity(tmp_path, capsys):
    rc, rep, _ = _run(capsys, "direct", "--map", "identity", "--n", "3", "--grid", "5",
                      "--out-prefix", str(tmp_path / "d"))
    assert rc == 0 and rep["vectors"] == "25"
    assert np.all(io.read_points(tmp_path / "d_direct.csv") == 0)


def test_direct_f11_vertex_row(tmp_path):
    assert main(["direct", "--map", "fab:1:1", "--n", "1", "--grid", "100",
                 "--out-prefix", str(tmp_path / "d")]) == 0
    rows = (tmp_path / "d_direct.csv").read_text().splitlines()
    assert "1,1" in rows and "-1,-1" in rows


def test_direct_with_noise_seeded(tmp_path):
    args = ["direct", "--map", "g", "--n", "4", "--grid", "6", "--eps", "0.01", "--seed", "9"]
    assert main(args + ["--out-prefix", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-prefix", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a_direct.csv").read_bytes()
    assert a == (tmp_path / "b_direct.csv").read_bytes()
    assert b"seed=9" in a


def test_bounds_eps_zero(capsys):
    rc, rep, _ = _run(capsys, "bounds", "--map", "fab:1:1", "--eps", "0", "--c", "1", "--n", "100")
    assert rc == 0
    assert float(rep["gamma"]) == 0.01
    assert float(rep["total"]) == max(2 * math.sqrt(2) / 100, math.sqrt(2) / 100 + 0.01)
    assert float(rep["shadow"]) == pytest.approx((math.sqrt(2) + 2) / 100)


def test_bounds_without_c(capsys):
    rc, rep, _ = _run(capsys, "bounds", "--L", "2", "--M", "1", "--k", "8", "--n", "10")
    assert rc == 0
    assert "gamma" not in rep and "shadow" not in rep and "note" in rep
    assert float(rep["eps"]) == math.sqrt(2) / 8


def test_bounds_rejects_L(capsys):
    rc, _, _ = _run(capsys, "bounds", "--L", "1", "--M", "1", "--eps", "0.1", "--n", "10")
    assert rc == 2


def test_hausdorff_commands(compute_dir, tmp_path, capsys):
    unit = RotationApprox("u", 1, 1, 0.0, 2, 2.0, True, BoxSet.from_boxes([(0, 0)], 1))
    io.write_boxes(tmp_path / "u.csv", unit)
    rc, rep, _ = _run(capsys, "hausdorff", str(tmp_path / "u.csv"), str(tmp_path / "u.csv"))
    assert rc == 0 and float(rep["hausdorff"]) == 0
    rc, rep, _ = _run(capsys, "hausdorff", str(tmp_path / "u.csv"), "rect:0:2:0:1")
    assert abs(float(rep["hausdorff"]) - 1) <= float(rep["uncertainty"])
    boxes = str(compute_dir / "f11_boxes.csv")
    rc, rep, _ = _run(capsys, "hausdorff", boxes, boxes)
    assert float(rep["hausdorff"]) == 0


def test_exit_codes(tmp_path, capsys):
    assert _run(capsys, "compute", "--map", "nonsense", "--k", "4", "--n", "2")[0] == 2
    assert _run(capsys, "compute", "--map", "fab:1:1", "--k", "4")[0] == 2
    assert _run(capsys, "compute", "--map", "fab:1:1", "--k", "4", "--n", "2",
                "--out-prefix", str(tmp_path / "missing" / "x"))[0] == 3
    rc, _, err = _run(capsys, "compute", "--map", "fab:1:1", "--k", "4", "--n", "2", "--m", "3",
                      "--strict", "--out-prefix", str(tmp_path / "s"))
    assert rc == 4 and "unsound" in err
    assert not list(tmp_path.glob("s*"))
    assert _run(capsys, "hausdorff", str(tmp_path / "nope.csv"), "rect:0:1:0:1")[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--k", "x"])
    assert exc.value.code == 2


def test_unsound_recorded_without_strict(tmp_path, capsys):
    rc, rep, err = _run(capsys, "compute", "--map", "fab:1:1", "--k", "4", "--n", "2", "--m", "3",
                        "--out-prefix", str(tmp_path / "s"))
    assert rc == 0 and rep["sound"] == "False" and "warning" in err
    assert io.read_boxes(tmp_path / "s_boxes.csv").sound is False


def test_perturb_flag(tmp_path, capsys):
    rc, rep, _ = _run(capsys, "compute", "--map", "fab:0.5:0.5", "--perturb", "0.01:0", "--k", "4",
                      "--n", "2", "--out-prefix", str(tmp_path / "p"))
    assert rc == 0 and rep["map"].endswith("+trans:0.01:0.0")
