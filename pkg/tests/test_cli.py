import json

import numpy as np
import pytest

from geokernel import testbeds
from geokernel.cli import main
from geokernel.io import read_cloud, write_cloud


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return _run


def _table(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


# -------------------------------------------------------------------- sample

def test_sample_sphere(run, tmp_path):
    code, out, _ = run("sample", "sphere:r=1", "--m", 64, "--sampler", "fibonacci")
    assert code == 0
    path = tmp_path / "s.csv"
    path.write_text(out)
    X, y = read_cloud(path)
    assert X.shape == (64, 3) and y is None
    np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-15)


def test_sample_is_byte_identical(run, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        code, _, _ = run("sample", "torus:R1=2,R2=0.5", "--m", 256, "--sampler", "rejection",
                         "--seed", 7, "--out", p)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    X, _ = read_cloud(a)
    assert np.max(np.abs(testbeds.torus_residual(X, 2.0, 0.5))) <= 1e-12


def test_sample_bad_descriptor(run):
    code, _, err = run("sample", "torus:R1=0.5,R2=2", "--m", 10)
    assert code == 2
    assert "R1 > R2" in err


def test_unknown_command_and_bad_flag(run):
    assert run("frobnicate")[0] == 2
    assert run("sample", "sphere", "--m", "many")[0] == 2


def test_unwritable_output(run, tmp_path):
    code, _, _ = run("sample", "sphere", "--m", 8, "--out", tmp_path / "missing" / "x.csv")
    assert code == 3


def test_missing_input_is_io_error(run, tmp_path):
    assert run("fit", tmp_path / "nope.csv", "--ones")[0] == 3


# ----------------------------------------------------------------------- fit

def _fit_ones(run, tmp_path, X, alpha=0.0, kernel="laplace:eps=1"):
    cloud, model = tmp_path / "cloud.csv", tmp_path / "model.json"
    write_cloud(cloud, X)
    code, _, err = run("fit", cloud, "--ones", "--kernel", kernel, "--alpha", alpha,
                       "--out", model)
    assert code == 0, err
    return cloud, model, err


def test_fit_ones_interpolates(run, tmp_path):
    X = testbeds.curve_sample(testbeds.Ellipse(1.0, 0.5), 32)
    _, model, err = _fit_ones(run, tmp_path, X)
    from geokernel import deserialize, predict
    m = deserialize(model.read_bytes())
    assert np.max(np.abs(predict(m, X) - 1.0)) <= 1e-8
    assert "residual=" in err and "jitter=" in err
    assert json.loads(model.read_text())


def test_fit_noisy_ellipse_reports_shrunk_mean(run, tmp_path):
    X = testbeds.perturb(testbeds.curve_sample(testbeds.Ellipse(1.0, 0.5), 32), 0.1, seed=0)
    _, _, err = _fit_ones(run, tmp_path, X, alpha=0.1)
    ubar = float(err.split("mean_level=")[1].split()[0])
    assert 0 < ubar < 1


def test_fit_value_count_mismatch(run, tmp_path):
    X = testbeds.fibonacci_sphere(10)
    cloud, vals = tmp_path / "c.csv", tmp_path / "v.csv"
    write_cloud(cloud, X)
    write_cloud(vals, X[:9], X[:9, 0])
    assert run("fit", cloud, "--values", vals)[0] == 2
    assert run("fit", cloud)[0] == 2


def test_fit_duplicate_points(run, tmp_path):
    cloud = tmp_path / "c.csv"
    write_cloud(cloud, [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    assert run("fit", cloud, "--ones")[0] == 2


# ------------------------------------------------------------------ geometry

def test_geometry_on_patches(run, tmp_path):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.quadratic_patch_grid(1, 2, 0.5, 16),
                            alpha=1e-10, kernel="gauss:l=1")
    pts = tmp_path / "q.csv"
    write_cloud(pts, np.zeros((1, 3)))
    code, out, _ = run("geometry", model, pts)
    assert code == 0
    _, rows = _table(out)
    kappa = sorted(abs(float(rows[0][k])) for k in ("kappa1", "kappa2"))
    np.testing.assert_allclose(kappa, [1.0, 2.0], rtol=5e-2)
    assert rows[0]["status"] == "OK"

    sub = tmp_path / "flat"
    sub.mkdir()
    _, flat, _ = _fit_ones(run, sub, testbeds.quadratic_patch_grid(1, 1, 0.5, 16), alpha=1e-10)
    write_cloud(pts, [[0.0, 0.0, 0.0], [0.3, 0.1, 0.04]])
    code, out, _ = run("geometry", flat, pts)
    assert code == 0
    _, rows = _table(out)
    assert rows[0]["status"] == "DEGENERATE" and rows[1]["status"] == "OK"


def test_geometry_sphere_unit_normals(run, tmp_path):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.fibonacci_sphere(256))
    pts = tmp_path / "q.csv"
    write_cloud(pts, testbeds.sphere_uniform(32, seed=1))
    code, out, _ = run("geometry", model, pts)
    assert code == 0
    _, rows = _table(out)
    assert len(rows) == 32
    for r in rows:
        nu = np.array([float(r[f"nu{i}"]) for i in (1, 2, 3)])
        assert abs(np.linalg.norm(nu) - 1) <= 1e-12


def test_geometry_plain_laplace_is_numerical_failure(run, tmp_path):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.fibonacci_sphere(32), kernel="laplace")
    pts = tmp_path / "q.csv"
    write_cloud(pts, [[0.0, 0.0, 1.1]])
    assert run("geometry", model, pts)[0] == 4


def test_geometry_dimension_mismatch(run, tmp_path):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.fibonacci_sphere(32))
    pts = tmp_path / "q.csv"
    write_cloud(pts, [[0.0, 1.0]])
    assert run("geometry", model, pts)[0] == 2


def test_malformed_model_file(run, tmp_path):
    bad, pts = tmp_path / "m.json", tmp_path / "q.csv"
    bad.write_text("{not json")
    write_cloud(pts, [[0.0, 1.0]])
    assert run("geometry", bad, pts)[0] == 2


# ------------------------------------------------------------------ operator

@pytest.fixture
def sphere_files(tmp_path):
    X = testbeds.fibonacci_sphere(256)
    f, _, _ = testbeds.sphere_test_function(X)
    Q = testbeds.sphere_uniform(32, seed=3)
    cloud, ev = tmp_path / "cloud.csv", tmp_path / "eval.csv"
    write_cloud(cloud, X, f)
    write_cloud(ev, Q)
    return cloud, ev, X, f, Q


def test_operator_apply_matches_exact(run, sphere_files, tmp_path):
    cloud, ev, _, _, Q = sphere_files
    out = tmp_path / "lb.csv"
    assert run("operator", cloud, "--eval", ev, "--kind", "lb", "--apply", "--out", out)[0] == 0
    P, lb = read_cloud(out)
    np.testing.assert_array_equal(P, Q)
    _, _, lb0 = testbeds.sphere_test_function(Q)
    assert np.max(np.abs(lb - lb0)) / np.max(np.abs(lb0)) <= 1e-3


def test_operator_assemble_then_multiply(run, sphere_files, tmp_path):
    cloud, ev, _, f, _ = sphere_files
    for kind in ("lb", "grad1"):
        mat, app = tmp_path / f"{kind}.mat", tmp_path / f"{kind}.csv"
        assert run("operator", cloud, "--eval", ev, "--kind", kind, "--assemble",
                   "--out", mat)[0] == 0
        assert run("operator", cloud, "--eval", ev, "--kind", kind, "--out", app)[0] == 0
        M = np.loadtxt(mat, delimiter=",", comments="#")
        assert M.shape == (32, 256)
        _, applied = read_cloud(app)
        assert np.max(np.abs(M @ f - applied)) <= 1e-10 * np.max(np.abs(applied))


def test_operator_constant_values(run, sphere_files, tmp_path):
    cloud, ev, X, _, _ = sphere_files
    const = tmp_path / "const.csv"
    write_cloud(const, X, np.full(len(X), 2.0))
    for i in (1, 2, 3):
        code, out, _ = run("operator", const, "--eval", ev, "--kind", f"grad{i}")
        assert code == 0
        _, rows = _table(out)
        assert max(abs(float(r["y"])) for r in rows) <= 1e-10


def test_operator_degenerate_point(run, tmp_path):
    X = testbeds.quadratic_patch_grid(1, 1, 0.5, 16)
    cloud, ev = tmp_path / "c.csv", tmp_path / "e.csv"
    write_cloud(cloud, X, X[:, 0])
    write_cloud(ev, [[0.3, 0.1, 0.04], [0.0, 0.0, 0.0]])
    code, _, err = run("operator", cloud, "--eval", ev, "--kind", "grad1", "--alpha", 1e-10)
    assert code == 4
    assert "1" in err


def test_operator_bad_kind(run, sphere_files):
    cloud, ev, _, _, _ = sphere_files
    assert run("operator", cloud, "--eval", ev, "--kind", "grad9")[0] == 2


# ------------------------------------------------------------------- contour

def test_contour_ellipse(run, tmp_path):
    X = testbeds.curve_sample(testbeds.Ellipse(1.0, 0.5), 32)
    _, model, _ = _fit_ones(run, tmp_path, X)
    grid, lines = tmp_path / "g.csv", tmp_path / "l.csv"
    code, _, err = run("contour", model, "--resolution", 120, "--level", 1,
                       "--out", grid, "--polylines", lines)
    assert code == 0
    G, u = read_cloud(grid)
    assert G.shape == (120 * 120, 2) and u.shape == (120 * 120,)
    data = np.loadtxt(lines, delimiter=",", comments="#", skiprows=2)
    pts = data[:, 2:]
    assert "polylines=1 closed=1" in err
    spacing = max(np.ptp(G[:, 0]), np.ptp(G[:, 1])) / 119
    dist = np.min(np.linalg.norm(X[:, None] - pts[None], axis=2), axis=1)
    assert np.all(dist <= 2 * spacing)


def test_contour_mean_level_on_noisy_ellipse(run, tmp_path):
    X = testbeds.perturb(testbeds.curve_sample(testbeds.Ellipse(1.0, 0.5), 32), 0.1, seed=0)
    _, model, _ = _fit_ones(run, tmp_path, X, alpha=0.1)
    code, _, err = run("contour", model, "--level", "mean", "--out", tmp_path / "g.csv")
    assert code == 0
    assert "polylines=1 closed=1" in err


@pytest.mark.parametrize("box", ["0,1,0", "1,0,0,1", "a,b,c,d"])
def test_contour_bad_box(run, tmp_path, box):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.curve_sample(testbeds.Ellipse(), 16))
    assert run("contour", model, "--box", box, "--out", tmp_path / "g.csv")[0] == 2


def test_contour_three_dimensional_grid(run, tmp_path):
    _, model, _ = _fit_ones(run, tmp_path, testbeds.fibonacci_sphere(32))
    code, out, _ = run("contour", model, "--resolution", 5)
    assert code == 0
    _, rows = _table(out)
    assert len(rows) == 125
    assert run("contour", model, "--polylines", tmp_path / "p.csv", "--out",
               tmp_path / "g.csv")[0] == 2


# ---------------------------------------------------------------- experiment

def test_experiment_quad_curvatures(run, tmp_path):
    csv = tmp_path / "r.csv"
    code, out, _ = run("experiment", "quad-curvatures", "--csv", csv)
    assert code == 0
    assert "PASS" in out and "FAIL" not in out
    assert csv.read_text().count("\n") >= 3


def test_experiment_sphere_256(run):
    code, out, _ = run("experiment", "sphere-lb", "--m", 256)
    assert code == 0
    assert out.count("PASS") >= 3


def test_experiment_torus_fibonacci_256(run):
    assert run("experiment", "torus-fibonacci", "--m", 256)[0] == 0


def test_experiment_failure_exit_code(run):
    # heavy regularization smooths the data far beyond the error threshold
    code, out, _ = run("experiment", "sphere-lb", "--m", 256, "--alpha", 1.0)
    assert code == 5
    assert "FAIL" in out


def test_experiment_unknown_name(run):
    assert run("experiment", "cube")[0] == 2
